#include "sylva/plot_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "sylva/errors.hpp"

namespace sylva {

namespace fs = std::filesystem;
using nlohmann::json;

void PlotStatistics::validate() const {
    if (!(stem_density_mean > 0 && height_mean > 0))
        throw ParameterError("plot statistics means must be > 0");
    if (stem_density_sd < 0 || height_sd < 0 || dbh_sd < 0)
        throw ParameterError("plot statistics sds must be >= 0");
}

PlotStatistics plot_stats_for(Complexity c) {
    // EuroSDR reference rows: density (stems/ha), height (m), DBH (m).
    switch (c) {
        case Complexity::easy: return {592, 189, 18.4, 6.4, 0.207, 0.085};
        case Complexity::medium: return {968, 370, 16.2, 7.3, 0.172, 0.107};
        case Complexity::difficult: return {2021, 553, 13.2, 5.9, 0.123, 0.072};
    }
    throw ParameterError("unknown complexity id");
}

int sample_tree_count(const PlotStatistics& stats, double plot_area_ha, Rng& rng) {
    if (!(plot_area_ha > 0)) throw ParameterError("plot_area_ha must be > 0");
    stats.validate();
    long lo = std::lround((stats.stem_density_mean - stats.stem_density_sd) * plot_area_ha);
    long hi = std::lround((stats.stem_density_mean + stats.stem_density_sd) * plot_area_ha);
    if (lo < 1) lo = 1;
    if (hi < lo) hi = lo;
    return static_cast<int>(rng.uniform_int(lo, hi));
}

std::vector<double> sample_heights(int count, double height_mean, double height_sd, Rng& rng) {
    if (count < 0) throw ParameterError("count must be >= 0");
    // Moment-matched uniform support [mu - sqrt(3) sd, mu + sqrt(3) sd],
    // clipped to the model-database height range.
    double half = std::sqrt(3.0) * height_sd;
    std::vector<double> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        double h = rng.uniform(height_mean - half, height_mean + half);
        out.push_back(std::clamp(h, 2.0, 35.0));
    }
    return out;
}

double canopy_overlap(const PlacedTree& a, const PlacedTree& b) {
    if (!(a.crown_radius > 0 && b.crown_radius > 0))
        throw ParameterError("canopy_overlap requires positive crown radii");
    return disc_overlap_ratio({a.x, a.y}, a.crown_radius, {b.x, b.y}, b.crown_radius);
}

namespace {

struct ModelRef {
    const TreeModel* model;
    TreeAttributes base_attrs;
};

TreeAttributes scale_attributes(const TreeAttributes& base, double s) {
    TreeAttributes a;
    a.height = base.height * s;
    a.dbh = base.dbh * s;
    a.crown_width = base.crown_width * s;
    a.crown_area = base.crown_area * s * s;
    a.leaf_area = base.leaf_area * s * s;
    a.wood_volume = base.wood_volume * s * s * s;
    a.dbh_at_half_height = base.dbh_at_half_height;
    return a;
}

}  // namespace

PlotInstance assemble_plot(const PlotSpec& spec, const std::vector<TreeModel>& db,
                           const Terrain& terrain, const UnderstoryConfig& understory_cfg,
                           std::uint64_t seed) {
    if (db.empty()) throw ParameterError("model database is empty");
    spec.stats.validate();

    // Species pools sorted by (nominal_height, model_id) for deterministic
    // nearest-height lookup with smaller-id tie-break.
    std::map<Species, std::vector<ModelRef>> pools;
    for (const auto& m : db) pools[m.species].push_back({&m, compute_attributes(m, 1.0)});
    std::vector<Species> species_list;
    for (auto& [sp, pool] : pools) {
        std::sort(pool.begin(), pool.end(), [](const ModelRef& a, const ModelRef& b) {
            if (a.model->nominal_height != b.model->nominal_height)
                return a.model->nominal_height < b.model->nominal_height;
            return a.model->model_id < b.model->model_id;
        });
        species_list.push_back(sp);
    }

    PlotInstance plot;
    plot.complexity = spec.complexity;
    plot.extent_x = spec.extent_x;
    plot.extent_y = spec.extent_y;
    plot.terrain = terrain;
    plot.seed = seed;

    Rng rng = Rng(seed).derive("assemble");
    double area_ha = spec.extent_x * spec.extent_y / 10000.0;
    int count = sample_tree_count(spec.stats, area_ha, rng);
    std::vector<double> heights =
        sample_heights(count, spec.stats.height_mean, spec.stats.height_sd, rng);

    // Difficult plots: split at the median into a tall layer (placed first,
    // constrained pairwise) and a small layer (constrained only within the
    // small layer so it can slot under the tall canopy).
    std::vector<std::pair<double, int>> order;  // (height, layer)
    if (spec.complexity == Complexity::difficult && count > 1) {
        std::vector<double> sorted = heights;
        std::sort(sorted.begin(), sorted.end());
        double median = sorted[sorted.size() / 2];
        for (double h : heights) order.push_back({h, h >= median ? 0 : 1});
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.second < b.second; });
    } else {
        for (double h : heights) order.push_back({h, 0});
    }

    for (std::size_t i = 0; i < order.size(); ++i) {
        auto [h, layer] = order[i];
        Species sp = species_list[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(species_list.size()) - 1))];
        const auto& pool = pools[sp];
        const ModelRef* best = &pool.front();
        double best_d = std::abs(best->model->nominal_height - h);
        for (const auto& mr : pool) {
            double d = std::abs(mr.model->nominal_height - h);
            if (d < best_d - 1e-12) {
                best = &mr;
                best_d = d;
            }
        }

        PlacedTree tree;
        tree.instance_id = static_cast<int>(i) + 1;
        tree.layer = layer;
        tree.model_id = best->model->model_id;
        tree.species = sp;
        tree.scale = rng.uniform(spec.scale_min, spec.scale_max);
        tree.rotation_z = rng.uniform(0, 2.0 * M_PI);
        tree.attributes = scale_attributes(best->base_attrs, tree.scale);
        tree.crown_radius = tree.attributes.crown_width / 2.0;

        bool placed = false;
        for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
            tree.x = rng.uniform(0, spec.extent_x);
            tree.y = rng.uniform(0, spec.extent_y);
            bool ok = true;
            for (std::size_t j = 0; j < plot.trees.size() && ok; ++j) {
                int other_layer = order[j].second;
                if (other_layer != layer) continue;  // inter-layer overlap unconstrained
                if (canopy_overlap(tree, plot.trees[j]) > spec.max_overlap) ok = false;
            }
            if (ok) {
                placed = true;
                break;
            }
        }
        if (!placed)
            throw AssemblyError("placement failed after " + std::to_string(spec.max_attempts) +
                                " attempts for tree index " + std::to_string(i));
        tree.base_z = height_at(terrain, tree.x, tree.y);
        plot.trees.push_back(std::move(tree));
    }

    plot.understory =
        generate_understory(terrain, understory_cfg, Rng(seed).derive("understory").next_u64());
    return plot;
}

void write_plot_bundle(const PlotInstance& plot, const std::string& dir) {
    fs::create_directories(dir);
    write_terrain_asc(plot.terrain, (fs::path(dir) / "terrain.asc").string());

    std::ofstream ub(fs::path(dir) / "understory.bin", std::ios::binary);
    if (!ub) throw IoError("cannot write understory.bin in: " + dir);
    for (const auto& p : plot.understory) {
        float v[3] = {p.x, p.y, p.z};
        ub.write(reinterpret_cast<const char*>(v), 12);
    }
    ub.close();

    json doc;
    doc["plot_id"] = plot.plot_id;
    doc["complexity"] = complexity_name(plot.complexity);
    doc["extent_x_m"] = plot.extent_x;
    doc["extent_y_m"] = plot.extent_y;
    doc["seed"] = plot.seed;
    doc["trees"] = json::array();
    for (const auto& t : plot.trees) {
        doc["trees"].push_back({{"instance_id", t.instance_id},
                                {"model_id", t.model_id},
                                {"species", species_name(t.species)},
                                {"x", t.x},
                                {"y", t.y},
                                {"base_z", t.base_z},
                                {"rotation_z", t.rotation_z},
                                {"scale", t.scale},
                                {"crown_radius", t.crown_radius},
                                {"layer", t.layer},
                                {"height_m", t.attributes.height},
                                {"dbh_m", t.attributes.dbh},
                                {"crown_width_m", t.attributes.crown_width},
                                {"crown_area_m2", t.attributes.crown_area},
                                {"leaf_area_m2", t.attributes.leaf_area},
                                {"wood_volume_m3", t.attributes.wood_volume},
                                {"dbh_at_half_height", t.attributes.dbh_at_half_height}});
    }
    std::ofstream f(fs::path(dir) / "plot.json");
    if (!f) throw IoError("cannot write plot.json in: " + dir);
    f << doc.dump(2) << "\n";
}

PlotInstance read_plot_bundle(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "plot.json");
    if (!f) throw IoError("cannot open plot.json in: " + dir);
    json doc = json::parse(f);

    PlotInstance plot;
    plot.plot_id = doc.at("plot_id").get<std::string>();
    plot.complexity = complexity_from_name(doc.at("complexity").get<std::string>());
    plot.extent_x = doc.at("extent_x_m").get<double>();
    plot.extent_y = doc.at("extent_y_m").get<double>();
    plot.seed = doc.at("seed").get<std::uint64_t>();
    plot.terrain = read_terrain_asc((fs::path(dir) / "terrain.asc").string(), plot.complexity);

    for (const auto& e : doc.at("trees")) {
        PlacedTree t;
        t.instance_id = e.at("instance_id").get<int>();
        t.model_id = e.at("model_id").get<std::string>();
        t.species = species_from_name(e.at("species").get<std::string>());
        t.x = e.at("x").get<double>();
        t.y = e.at("y").get<double>();
        t.base_z = e.at("base_z").get<double>();
        t.rotation_z = e.at("rotation_z").get<double>();
        t.scale = e.at("scale").get<double>();
        t.crown_radius = e.at("crown_radius").get<double>();
        t.layer = e.value("layer", 0);
        t.attributes.height = e.at("height_m").get<double>();
        t.attributes.dbh = e.at("dbh_m").get<double>();
        t.attributes.crown_width = e.at("crown_width_m").get<double>();
        t.attributes.crown_area = e.at("crown_area_m2").get<double>();
        t.attributes.leaf_area = e.at("leaf_area_m2").get<double>();
        t.attributes.wood_volume = e.at("wood_volume_m3").get<double>();
        t.attributes.dbh_at_half_height = e.at("dbh_at_half_height").get<bool>();
        plot.trees.push_back(std::move(t));
    }

    std::ifstream ub(fs::path(dir) / "understory.bin", std::ios::binary);
    if (ub) {
        float v[3];
        while (ub.read(reinterpret_cast<char*>(v), 12))
            plot.understory.push_back({v[0], v[1], v[2]});
    }
    return plot;
}

}  // namespace sylva
