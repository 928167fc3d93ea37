#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "sylva/errors.hpp"
#include "sylva/plot_assembly.hpp"

using namespace sylva;

namespace {

std::vector<TreeModel> small_db() {
    static std::vector<TreeModel> db =
        build_model_database(default_archetypes(), 4, 32, 4, 1, 1234);
    return db;
}

}  // namespace

TEST_CASE("sample_tree_count bounds and moments") {
    PlotStatistics easy = plot_stats_for(Complexity::easy);

    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        int c = sample_tree_count(easy, 0.04, rng);
        CHECK(c >= 16);  // round((592-189)*0.04)
        CHECK(c <= 31);  // round((592+189)*0.04)
    }

    PlotStatistics fixed{600, 0, 15, 0, 0.2, 0};
    Rng rng2(2);
    for (int i = 0; i < 10; ++i) CHECK(sample_tree_count(fixed, 0.04, rng2) == 24);

    // Monte-Carlo mean of the uniform law for the difficult row
    PlotStatistics hard = plot_stats_for(Complexity::difficult);
    Rng rng3(3);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_tree_count(hard, 0.04, rng3);
    double mean = sum / n;
    CHECK(std::abs(mean - 80.8) / 80.8 < 0.02);
}

TEST_CASE("sample_heights law") {
    Rng rng(4);
    auto h0 = sample_heights(100, 12.0, 0.0, rng);
    for (double h : h0) CHECK(h == doctest::Approx(12.0));

    auto hs = sample_heights(100000, 18.4, 6.4, rng);
    double lo = 18.4 - std::sqrt(3.0) * 6.4, hi = 18.4 + std::sqrt(3.0) * 6.4;
    CHECK(lo == doctest::Approx(7.31).epsilon(1e-3));
    CHECK(hi == doctest::Approx(29.48).epsilon(1e-3));
    double sum = 0, sum2 = 0;
    for (double h : hs) {
        CHECK(h >= lo - 1e-9);
        CHECK(h <= hi + 1e-9);
        sum += h;
        sum2 += h * h;
    }
    double mean = sum / hs.size();
    double sd = std::sqrt(sum2 / hs.size() - mean * mean);
    CHECK(std::abs(sd - 6.4) / 6.4 < 0.03);

    // clipping to the database range
    auto tall = sample_heights(1000, 34.0, 6.0, rng);
    for (double h : tall) CHECK(h <= 35.0);
}

TEST_CASE("canopy_overlap") {
    PlacedTree a, b;
    a.crown_radius = b.crown_radius = 2.0;
    a.x = 0; a.y = 0;
    b.x = 10; b.y = 0;
    CHECK(canopy_overlap(a, b) == doctest::Approx(0.0));
    b.x = 0;
    CHECK(canopy_overlap(a, b) == doctest::Approx(1.0));
    b.x = 2;
    CHECK(canopy_overlap(a, b) == doctest::Approx(0.3910).epsilon(1e-3));
}

TEST_CASE("assemble_plot easy: overlap rule, ids, draping, determinism") {
    auto db = small_db();
    Terrain terrain = generate_terrain(Complexity::easy, 20, 20, 0.2, 11);
    PlotSpec spec;
    spec.complexity = Complexity::easy;
    spec.stats = plot_stats_for(Complexity::easy);
    UnderstoryConfig ucfg;
    ucfg.cover_fraction = 0.05;

    PlotInstance plot = assemble_plot(spec, db, terrain, ucfg, 11);
    REQUIRE(!plot.trees.empty());

    // exhaustive pairwise overlap recheck
    for (std::size_t i = 0; i < plot.trees.size(); ++i)
        for (std::size_t j = i + 1; j < plot.trees.size(); ++j)
            CHECK(canopy_overlap(plot.trees[i], plot.trees[j]) <= 0.05 + 1e-9);

    // contiguous instance ids from 1, positions inside, exact drape
    for (std::size_t i = 0; i < plot.trees.size(); ++i) {
        const auto& t = plot.trees[i];
        CHECK(t.instance_id == static_cast<int>(i) + 1);
        CHECK(t.x >= 0.0);
        CHECK(t.x <= 20.0);
        CHECK(t.y >= 0.0);
        CHECK(t.y <= 20.0);
        CHECK(std::abs(t.base_z - height_at(terrain, t.x, t.y)) <= 1e-6);
        CHECK(t.scale >= 0.9);
        CHECK(t.scale <= 1.1);
        CHECK(t.layer == 0);
    }

    PlotInstance again = assemble_plot(spec, db, terrain, ucfg, 11);
    REQUIRE(again.trees.size() == plot.trees.size());
    for (std::size_t i = 0; i < plot.trees.size(); ++i) {
        CHECK(again.trees[i].model_id == plot.trees[i].model_id);
        CHECK(again.trees[i].x == plot.trees[i].x);
        CHECK(again.trees[i].y == plot.trees[i].y);
        CHECK(again.trees[i].rotation_z == plot.trees[i].rotation_z);
    }
}

TEST_CASE("difficult plots use two layers with intra-layer overlap rule") {
    auto db = small_db();
    Terrain terrain = generate_terrain(Complexity::difficult, 20, 20, 0.2, 13);
    PlotSpec spec;
    spec.complexity = Complexity::difficult;
    spec.stats = plot_stats_for(Complexity::difficult);
    UnderstoryConfig ucfg;
    ucfg.cover_fraction = 0.05;

    PlotInstance plot = assemble_plot(spec, db, terrain, ucfg, 13);
    std::set<int> layers;
    for (const auto& t : plot.trees) layers.insert(t.layer);
    CHECK(layers == std::set<int>{0, 1});

    // the rule binds only within a layer
    for (std::size_t i = 0; i < plot.trees.size(); ++i)
        for (std::size_t j = i + 1; j < plot.trees.size(); ++j)
            if (plot.trees[i].layer == plot.trees[j].layer)
                CHECK(canopy_overlap(plot.trees[i], plot.trees[j]) <= 0.05 + 1e-9);

    // tall layer really is taller on average
    double tall = 0, small = 0;
    int nt = 0, ns = 0;
    for (const auto& t : plot.trees) {
        if (t.layer == 0) {
            tall += t.attributes.height;
            ++nt;
        } else {
            small += t.attributes.height;
            ++ns;
        }
    }
    REQUIRE(nt > 0);
    REQUIRE(ns > 0);
    CHECK(tall / nt > small / ns);
}

TEST_CASE("species balance over a batch") {
    auto db = small_db();
    int counts[3] = {0, 0, 0};
    int total = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Terrain terrain = generate_terrain(Complexity::medium, 20, 20, 0.2, seed + 500);
        PlotSpec spec;
        spec.complexity = Complexity::medium;
        spec.stats = plot_stats_for(Complexity::medium);
        UnderstoryConfig ucfg;
        ucfg.cover_fraction = 0.0;
        PlotInstance plot = assemble_plot(spec, db, terrain, ucfg, seed);
        for (const auto& t : plot.trees) {
            counts[static_cast<int>(t.species)]++;
            ++total;
        }
    }
    REQUIRE(total > 500);
    for (int c : counts) {
        double f = static_cast<double>(c) / total;
        CHECK(f >= 0.25);
        CHECK(f <= 0.42);
    }
}

TEST_CASE("over-dense spec raises an assembly error") {
    auto db = small_db();
    Terrain terrain = generate_terrain(Complexity::easy, 20, 20, 0.2, 3);
    PlotSpec spec;
    spec.complexity = Complexity::easy;
    spec.stats = {250000, 0, 25, 0, 0.2, 0};  // 1000 huge trees on 0.04 ha
    spec.max_attempts = 50;
    UnderstoryConfig ucfg;
    ucfg.cover_fraction = 0.0;
    CHECK_THROWS_AS(assemble_plot(spec, db, terrain, ucfg, 1), AssemblyError);
}

TEST_CASE("plot bundle round-trip") {
    auto db = small_db();
    Terrain terrain = generate_terrain(Complexity::easy, 20, 20, 0.2, 8);
    PlotSpec spec;
    spec.complexity = Complexity::easy;
    spec.stats = plot_stats_for(Complexity::easy);
    UnderstoryConfig ucfg;
    ucfg.cover_fraction = 0.05;
    PlotInstance plot = assemble_plot(spec, db, terrain, ucfg, 8);
    plot.plot_id = "rt_test";

    auto dir = std::filesystem::temp_directory_path() / "sylva_plot_rt";
    std::filesystem::remove_all(dir);
    write_plot_bundle(plot, dir.string());
    PlotInstance back = read_plot_bundle(dir.string());

    CHECK(back.plot_id == plot.plot_id);
    CHECK(back.complexity == plot.complexity);
    REQUIRE(back.trees.size() == plot.trees.size());
    for (std::size_t i = 0; i < plot.trees.size(); ++i) {
        CHECK(back.trees[i].instance_id == plot.trees[i].instance_id);
        CHECK(back.trees[i].model_id == plot.trees[i].model_id);
        CHECK(back.trees[i].x == doctest::Approx(plot.trees[i].x).epsilon(1e-12));
        CHECK(back.trees[i].layer == plot.trees[i].layer);
        CHECK(back.trees[i].attributes.dbh ==
              doctest::Approx(plot.trees[i].attributes.dbh).epsilon(1e-12));
    }
    REQUIRE(back.understory.size() == plot.understory.size());
    for (std::size_t i = 0; i < plot.understory.size(); ++i) {
        CHECK(back.understory[i].x == plot.understory[i].x);
        CHECK(back.understory[i].z == plot.understory[i].z);
    }
    // terrain grid within ASCII precision
    for (int k = 0; k < back.terrain.nx * back.terrain.ny; ++k)
        CHECK(back.terrain.heights[k] == doctest::Approx(plot.terrain.heights[k]).epsilon(1e-6));
    std::filesystem::remove_all(dir);
}
