#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sylva/dataset_io.hpp"
#include "sylva/errors.hpp"
#include "sylva/lidar_sim.hpp"

using namespace sylva;

namespace {

std::vector<TreeModel> tiny_db() {
    static std::vector<TreeModel> db = [] {
        auto all = default_archetypes();
        return build_model_database({all[0]}, 12, 12, 1, 1, 77);
    }();
    return db;
}

// flat-ground plot with a single placed tree at the center
PlotInstance flat_plot(bool with_tree, double understory_cover = 0.0) {
    PlotInstance plot;
    plot.plot_id = "flat";
    plot.complexity = Complexity::easy;
    plot.extent_x = plot.extent_y = 20;
    plot.terrain = generate_terrain(TerrainClassParams{0.0, 0.0}, Complexity::easy, 20, 20, 0.2, 1);
    if (understory_cover > 0) plot.understory = generate_understory(plot.terrain, understory_cover, 9);
    if (with_tree) {
        const auto db = tiny_db();
        const auto& model = db[0];
        PlacedTree t;
        t.instance_id = 5;
        t.model_id = model.model_id;
        t.species = model.species;
        t.x = 10;
        t.y = 10;
        t.base_z = 0;
        t.rotation_z = 0;
        t.scale = 1.0;
        t.attributes = compute_attributes(model, 1.0);
        t.crown_radius = t.attributes.crown_width / 2;
        plot.trees.push_back(t);
    }
    return plot;
}

}  // namespace

TEST_CASE("default scanners validate and carry the expected patterns") {
    for (Platform p : {Platform::TLS, Platform::MLS, Platform::ULS, Platform::ALS}) {
        ScannerModel s = default_scanner(p);
        CHECK_NOTHROW(s.validate());
        CHECK(s.platform == p);
    }
    CHECK(default_scanner(Platform::TLS).pattern == PatternType::spherical_grid);
    CHECK(default_scanner(Platform::MLS).pattern == PatternType::multi_channel_spinner);
    CHECK(default_scanner(Platform::ULS).pattern == PatternType::across_track_line);
    CHECK(default_scanner(Platform::ALS).pattern == PatternType::across_track_line);

    ScannerModel bad = default_scanner(Platform::MLS);
    bad.channels_deg.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = default_scanner(Platform::TLS);
    bad.v_res_deg = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = default_scanner(Platform::ALS);
    bad.max_range = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scanner JSON round-trip") {
    for (Platform p : {Platform::TLS, Platform::MLS, Platform::ULS, Platform::ALS}) {
        ScannerModel s = default_scanner(p);
        auto path = std::filesystem::temp_directory_path() /
                    ("sylva_scanner_rt_" + platform_name(p) + ".json");
        write_scanner(s, path.string());
        ScannerModel back = load_scanner(path.string());
        CHECK(back.name == s.name);
        CHECK(back.platform == s.platform);
        CHECK(back.pattern == s.pattern);
        CHECK(back.max_range == doctest::Approx(s.max_range));
        CHECK(back.channels_deg == s.channels_deg);
        CHECK(back.h_res_deg == doctest::Approx(s.h_res_deg));
        CHECK(back.fov_deg == doctest::Approx(s.fov_deg));
        std::filesystem::remove(path);
    }
}

TEST_CASE("shipped scanner configs equal the built-in defaults") {
    const char* files[4] = {"tls_default.json", "mls_default.json", "uls_default.json",
                            "als_default.json"};
    const Platform plats[4] = {Platform::TLS, Platform::MLS, Platform::ULS, Platform::ALS};
    for (int i = 0; i < 4; ++i) {
        std::string path = std::string(SYLVA_SOURCE_DIR) + "/data/scanners/" + files[i];
        ScannerModel shipped = load_scanner(path);
        ScannerModel builtin = default_scanner(plats[i]);
        CHECK(shipped.name == builtin.name);
        CHECK(shipped.platform == builtin.platform);
        CHECK(shipped.pattern == builtin.pattern);
        CHECK(shipped.max_range == doctest::Approx(builtin.max_range));
        CHECK(shipped.channels_deg == builtin.channels_deg);
        CHECK(shipped.h_res_deg == doctest::Approx(builtin.h_res_deg));
        CHECK(shipped.v_res_deg == doctest::Approx(builtin.v_res_deg));
        CHECK(shipped.v_fov_deg == doctest::Approx(builtin.v_fov_deg));
        CHECK(shipped.v_min_deg == doctest::Approx(builtin.v_min_deg));
        CHECK(shipped.rotation_hz == doctest::Approx(builtin.rotation_hz));
        CHECK(shipped.pulses_per_rotation == builtin.pulses_per_rotation);
        CHECK(shipped.fov_deg == doctest::Approx(builtin.fov_deg));
        CHECK(shipped.line_rate_hz == doctest::Approx(builtin.line_rate_hz));
        CHECK(shipped.pulses_per_line == builtin.pulses_per_line);
    }
}

TEST_CASE("TLS pulse stream: count and geometry") {
    PlotInstance plot = flat_plot(false);
    ScanPlan plan = plan_tls(plot);
    ScannerModel s = default_scanner(Platform::TLS);
    PulseStream ps(s, plan);

    // 5 stations x (360/0.04) azimuths x (100/0.04 + 1) elevations
    CHECK(ps.size() == 5ull * 9000ull * 2501ull);

    for (std::uint64_t i : {std::uint64_t{0}, std::uint64_t{12345}, ps.size() / 2, ps.size() - 1}) {
        Pulse p = ps.at(i);
        CHECK(p.dir.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.viewpoint >= 1);
        CHECK(p.viewpoint <= 5);
        // origin is one of the stations
        double best = 1e18;
        for (const auto& st : plan.stations) best = std::min(best, (p.origin - st).norm());
        CHECK(best <= 1e-12);
    }
    // elevation sweep spans [-40, 60] degrees at the first station
    CHECK(std::asin(ps.at(0).dir.z) == doctest::Approx(-40.0 * M_PI / 180).epsilon(1e-9));
    CHECK(std::asin(ps.at(2500).dir.z) == doctest::Approx(60.0 * M_PI / 180).epsilon(1e-9));
}

TEST_CASE("MLS pulse stream: duration tracks the path length") {
    PlotInstance plot = flat_plot(false);
    ScanPlan plan = plan_mls(plot);
    ScannerModel s = default_scanner(Platform::MLS);
    PulseStream ps(s, plan);

    double length = 0;
    for (std::size_t i = 1; i < plan.path.size(); ++i)
        length += (plan.path[i].position - plan.path[i - 1].position).norm();
    double duration = length / plan.speed;
    double step_rate = s.rotation_hz * s.pulses_per_rotation;

    CHECK(ps.size() % s.channels_deg.size() == 0);
    Pulse last = ps.at(ps.size() - 1);
    CHECK(last.time <= duration + 1e-12);
    CHECK(last.time >= duration - 1.0 / step_rate - 1e-12);
    CHECK(last.dir.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // origins stay on the walked path at walking height
    for (std::uint64_t i : {std::uint64_t{0}, ps.size() / 3, ps.size() - 1}) {
        Pulse p = ps.at(i);
        CHECK(p.origin.z == doctest::Approx(1.8).epsilon(1e-9));  // flat ground
        CHECK(p.viewpoint >= 1);
    }
}

TEST_CASE("ULS/ALS pulse streams point downward from the line altitude") {
    PlotInstance plot = flat_plot(false);
    for (Platform p : {Platform::ULS, Platform::ALS}) {
        ScanPlan plan = plan_for(plot, p);
        ScannerModel s = default_scanner(p);
        PulseStream ps(s, plan);
        REQUIRE(ps.size() > 0);
        double alt = p == Platform::ULS ? 50.0 : 800.0;
        for (std::uint64_t i : {std::uint64_t{0}, ps.size() / 2, ps.size() - 1}) {
            Pulse pu = ps.at(i);
            CHECK(pu.dir.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(pu.dir.z < 0);
            CHECK(pu.origin.z == doctest::Approx(alt).epsilon(1e-9));  // flat terrain mean = 0
            CHECK(pu.viewpoint >= 1);
            CHECK(pu.viewpoint <= plan.flight_lines.size());
        }
    }
}

TEST_CASE("scene index conserves primitive counts") {
    auto db = tiny_db();
    PlotInstance plot = flat_plot(true, 0.2);
    SceneIndex scene = build_scene_index(plot, db);

    std::size_t terrain_tris = 2ull * 100 * 100;  // 20 m / 0.2 m grid
    std::size_t tree_tris = db[0].wood_mesh.triangles.size() + db[0].foliage_mesh.triangles.size();
    CHECK(scene.primitive_count() == terrain_tris + tree_tris + plot.understory.size());

    // unknown model id is a configuration error
    PlotInstance broken = plot;
    broken.trees[0].model_id = "no_such_model";
    CHECK_THROWS_AS(build_scene_index(broken, db), ConfigError);
}

TEST_CASE("trace: terrain, tree labels, and point-on-ray") {
    auto db = tiny_db();
    PlotInstance plot = flat_plot(true);
    SceneIndex scene = build_scene_index(plot, db);

    SUBCASE("downward ray onto open ground") {
        Pulse p;
        p.origin = {3, 3, 5};
        p.dir = {0, 0, -1};
        p.viewpoint = 2;
        auto hit = trace(scene, p, 600);
        REQUIRE(hit);
        CHECK(hit->z == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(hit->semantic == SemanticClass::terrain);
        CHECK(hit->instance == 0);
        CHECK(hit->viewpoint == 2);
        CHECK(hit->range == doctest::Approx(5.0).epsilon(1e-6));
    }

    SUBCASE("downward ray through the tree crown") {
        Pulse p;
        p.origin = {10, 10, 30};
        p.dir = {0, 0, -1};
        auto hit = trace(scene, p, 600);
        REQUIRE(hit);
        CHECK((hit->semantic == SemanticClass::wood || hit->semantic == SemanticClass::leaf));
        CHECK(hit->instance == 5);
        CHECK(hit->z > 0.5);  // first return is near the treetop, not the ground
        // hit point lies on the ray at distance `range`
        Vec3 expect = p.origin + hit->range * p.dir;
        CHECK(std::abs(hit->x - expect.x) <= 1e-6);
        CHECK(std::abs(hit->y - expect.y) <= 1e-6);
        CHECK(std::abs(hit->z - expect.z) <= 1e-6);
    }

    SUBCASE("max range cuts the return") {
        Pulse p;
        p.origin = {3, 3, 50};
        p.dir = {0, 0, -1};
        CHECK(!trace(scene, p, 10));
        CHECK(trace(scene, p, 60));
    }
}

TEST_CASE("hand-built scene index keeps labels through trace") {
    std::vector<Primitive> prims(1);
    Primitive& tr = prims[0];
    tr.v0[0] = -1; tr.v0[1] = -1; tr.v0[2] = 4;
    tr.v1[0] = 3;  tr.v1[1] = -1; tr.v1[2] = 4;
    tr.v2[0] = -1; tr.v2[1] = 3;  tr.v2[2] = 4;
    tr.semantic = SemanticClass::wood;
    tr.instance = 7;
    SceneIndex scene;
    scene.bvh = std::make_unique<Bvh>(std::move(prims));

    Pulse p;
    p.origin = {0, 0, 0};
    p.dir = {0, 0, 1};
    auto hit = trace(scene, p, 100);
    REQUIRE(hit);
    CHECK(hit->semantic == SemanticClass::wood);
    CHECK(hit->instance == 7);
    CHECK(hit->range == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("simulate is deterministic across worker counts and labels are consistent") {
    auto db = tiny_db();
    PlotInstance plot = flat_plot(true, 0.1);
    SceneIndex scene = build_scene_index(plot, db);

    // coarsened TLS keeps this fast: 5 x 180 x 51 pulses
    ScannerModel s = default_scanner(Platform::TLS);
    s.h_res_deg = 2.0;
    s.v_res_deg = 2.0;
    ScanPlan plan = plan_tls(plot);

    PointCloud c1 = simulate_cloud(scene, s, plan, 1);
    PointCloud c4 = simulate_cloud(scene, s, plan, 4);
    REQUIRE(!c1.points.empty());
    REQUIRE(c1.points.size() == c4.points.size());
    for (std::size_t i = 0; i < c1.points.size(); ++i) {
        CHECK(c1.points[i].x == c4.points[i].x);
        CHECK(c1.points[i].y == c4.points[i].y);
        CHECK(c1.points[i].z == c4.points[i].z);
        CHECK(c1.points[i].semantic == c4.points[i].semantic);
        CHECK(c1.points[i].instance == c4.points[i].instance);
        CHECK(c1.points[i].viewpoint == c4.points[i].viewpoint);
    }

    bool saw_terrain = false, saw_tree = false;
    for (const auto& pt : c1.points) {
        CHECK(pt.range > 0);
        CHECK(pt.range <= s.max_range + 1e-9);
        bool ground_like =
            pt.semantic == SemanticClass::terrain || pt.semantic == SemanticClass::understory;
        CHECK(ground_like == (pt.instance == 0));
        if (pt.semantic == SemanticClass::terrain) saw_terrain = true;
        if (pt.instance == 5) saw_tree = true;
    }
    CHECK(saw_terrain);
    CHECK(saw_tree);
}

TEST_CASE("benchmark harness produces a finite positive rate") {
    double rate = benchmark_trace(2000, 5000, 42);
    CHECK(std::isfinite(rate));
    CHECK(rate > 0);
}
