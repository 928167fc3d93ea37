// sylvagen: procedural forest-plot laser-scanning dataset pipeline.
//
// Subcommands: gen-db, gen-plot, plan, simulate, attrs, stats, split, eval,
// bench. All randomness flows from a single --seed via named substreams, so
// every artifact is independently reproducible.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sylva/dataset_io.hpp"
#include "sylva/errors.hpp"
#include "sylva/eval_metrics.hpp"
#include "sylva/lidar_sim.hpp"
#include "sylva/plot_assembly.hpp"
#include "sylva/rng.hpp"
#include "sylva/scan_planning.hpp"
#include "sylva/scene_gen.hpp"
#include "sylva/tree_models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sylva;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string config_hash(const json& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.dump())));
    return buf;
}

// Every artifact directory gets a manifest naming the config hash and tool
// version (no timestamps: reruns are byte-identical).
void write_run_manifest(const fs::path& dir, const std::string& command, const json& cfg,
                        std::uint64_t seed) {
    json doc;
    doc["tool"] = "sylvagen";
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["seed"] = seed;
    doc["config"] = cfg;
    doc["config_hash"] = config_hash(cfg);
    std::ofstream f(dir / "run_manifest.json");
    if (!f) throw IoError("cannot write run manifest in " + dir.string());
    f << doc.dump(2) << "\n";
}

double understory_cover_for(Complexity c) {
    switch (c) {
        case Complexity::easy: return 0.05;
        case Complexity::medium: return 0.15;
        case Complexity::difficult: return 0.30;
    }
    return 0.15;
}

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("SYLVAGEN_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 0;  // let the library pick hardware concurrency
}

// ---- subcommand implementations ----

int cmd_gen_db(const std::string& out, std::uint64_t seed, const std::string& archetypes_path,
               double h_min, double h_max, double h_step, int variants) {
    auto archetypes =
        archetypes_path.empty() ? default_archetypes() : load_archetypes(archetypes_path);
    auto models = build_model_database(archetypes, h_min, h_max, h_step, variants, seed);
    fs::create_directories(out);
    write_model_database(models, out);
    json cfg{{"archetypes", archetypes_path.empty() ? "default" : archetypes_path},
             {"height_min", h_min}, {"height_max", h_max}, {"height_step", h_step},
             {"variants", variants}};
    write_run_manifest(out, "gen-db", cfg, seed);
    std::cout << "wrote " << models.size() << " tree models to " << out << "\n";
    return 0;
}

int cmd_gen_plot(const std::string& db_dir, const std::string& out, const std::string& plot_id,
                 Complexity complexity, std::uint64_t seed, std::uint64_t index, double extent,
                 double cover) {
    // per-plot seed: batch seed xor a hash of the plot index, so each plot is
    // independently reproducible
    std::uint64_t plot_seed = seed ^ fnv1a64("plot:" + std::to_string(index));

    auto db = read_model_database(db_dir);
    Terrain terrain = generate_terrain(complexity, extent, extent, 0.2,
                                       Rng(plot_seed).derive("terrain").next_u64());
    PlotSpec spec;
    spec.complexity = complexity;
    spec.stats = plot_stats_for(complexity);
    spec.extent_x = spec.extent_y = extent;
    UnderstoryConfig ucfg;
    ucfg.cover_fraction = cover >= 0 ? cover : understory_cover_for(complexity);

    PlotInstance plot = assemble_plot(spec, db, terrain, ucfg, plot_seed);
    plot.plot_id = plot_id.empty() ? ("plot_" + std::to_string(index)) : plot_id;

    fs::create_directories(out);
    write_plot_bundle(plot, out);
    json cfg{{"complexity", complexity_name(complexity)}, {"extent", extent},
             {"understory_cover", ucfg.cover_fraction}, {"index", index}, {"db", db_dir}};
    write_run_manifest(out, "gen-plot", cfg, seed);
    std::cout << "assembled " << plot.plot_id << ": " << plot.trees.size() << " trees, "
              << plot.understory.size() << " understory points\n";
    return 0;
}

int cmd_plan(const std::string& plot_dir, Platform platform, const std::string& out) {
    PlotInstance plot = read_plot_bundle(plot_dir);
    ScanPlan plan = plan_for(plot, platform);
    write_scan_plan(plan, out);
    std::cout << "wrote " << platform_name(platform) << " plan to " << out << "\n";
    return 0;
}

int cmd_simulate(const std::string& plot_dir, const std::string& db_dir, Platform platform,
                 const std::string& scanner_path, const std::string& plan_path,
                 const std::string& out, int workers) {
    PlotInstance plot = read_plot_bundle(plot_dir);
    auto db = read_model_database(db_dir);
    ScannerModel scanner =
        scanner_path.empty() || scanner_path == "default" ? default_scanner(platform)
                                                          : load_scanner(scanner_path);
    ScanPlan plan = plan_path.empty() ? plan_for(plot, platform) : read_scan_plan(plan_path);

    SceneIndex scene = build_scene_index(plot, db);
    PointCloud cloud = simulate_cloud(scene, scanner, plan, resolve_workers(workers));
    cloud.plot_id = plot.plot_id;
    write_las(cloud, out);
    std::cout << "simulated " << cloud.points.size() << " points (" << platform_name(platform)
              << ") -> " << out << "\n";
    return 0;
}

int cmd_attrs(const std::string& plot_dir, const std::string& out) {
    PlotInstance plot = read_plot_bundle(plot_dir);
    export_tree_attributes(plot, out);
    std::cout << "wrote " << plot.trees.size() << " attribute rows to " << out << "\n";
    return 0;
}

int cmd_stats(const std::string& manifest_path, const std::string& plots_dir,
              const std::string& out) {
    DatasetManifest manifest = read_manifest(manifest_path);
    fs::path root = fs::path(manifest_path).parent_path();

    std::vector<PlotInstance> plots;
    std::vector<PointCloud> clouds;
    for (const auto& entry : manifest.plots) {
        fs::path bundle = plots_dir.empty() ? root / "plots" / entry.plot_id
                                            : fs::path(plots_dir) / entry.plot_id;
        if (fs::exists(bundle / "plot.json")) plots.push_back(read_plot_bundle(bundle.string()));
        for (const auto& [platform, file] : entry.point_files) {
            fs::path p = fs::path(file).is_absolute() ? fs::path(file) : root / file;
            if (fs::exists(p)) clouds.push_back(read_las(p.string()));
        }
    }
    std::string doc = dataset_stats(manifest, plots, clouds);
    if (out.empty()) {
        std::cout << doc;
    } else {
        std::ofstream f(out);
        if (!f) throw IoError("cannot write stats: " + out);
        f << doc;
        std::cout << "wrote stats to " << out << "\n";
    }
    return 0;
}

int cmd_split(const std::string& manifest_path, const std::string& out,
              const std::vector<double>& ratios, std::uint64_t seed) {
    if (ratios.size() != 3) throw ConfigError("--ratios takes exactly three values");
    DatasetManifest manifest = read_manifest(manifest_path);
    DatasetManifest split = split_dataset(manifest, {ratios[0], ratios[1], ratios[2]}, seed);
    split.tool_version = kVersion;
    write_manifest(split, out);
    int counts[3] = {0, 0, 0};
    for (const auto& p : split.plots) counts[static_cast<int>(p.split)]++;
    std::cout << "split " << split.plots.size() << " plots: train " << counts[0] << ", val "
              << counts[1] << ", test " << counts[2] << " -> " << out << "\n";
    return 0;
}

int cmd_eval(const std::string& task, const std::string& gt_path, const std::string& pred_path,
             const std::string& out) {
    PointCloud gt = read_las(gt_path);
    PointCloud pred = read_las(pred_path);
    if (gt.points.size() != pred.points.size())
        throw InputError("gt and pred clouds differ in point count");

    json doc;
    doc["task"] = task;
    if (task == "semantic") {
        std::vector<int> g(gt.points.size()), p(pred.points.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = static_cast<int>(gt.points[i].semantic);
            p[i] = static_cast<int>(pred.points[i].semantic);
        }
        auto m = semantic_metrics(confusion(g, p, 4));
        doc["oa"] = m.oa;
        doc["macc"] = m.macc;
        doc["miou"] = m.miou;
        doc["kappa"] = m.kappa;
        static const char* names[4] = {"terrain", "understory", "wood", "leaf"};
        for (int i = 0; i < 4; ++i) {
            json c;
            c["iou"] = m.per_class_iou[i];
            c["precision"] = m.per_class_precision[i];
            c["recall"] = m.per_class_recall[i];
            c["f1"] = m.per_class_f1[i];
            c["ovr_accuracy"] = m.per_class_accuracy[i];
            c["ovr_kappa"] = m.per_class_kappa[i];
            c["zero_support"] = static_cast<bool>(m.zero_support[i]);
            doc["per_class"][names[i]] = c;
        }
    } else if (task == "instance") {
        std::vector<std::uint32_t> g(gt.points.size()), p(pred.points.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = gt.points[i].instance;
            p[i] = pred.points[i].instance;
        }
        auto r = match_instances(g, p, 0.5);
        auto d = detection_metrics(r);
        doc["tp"] = r.tp;
        doc["fp"] = r.fp;
        doc["fn"] = r.fn;
        doc["completeness"] = d.completeness;
        doc["omission_error"] = d.omission_error;
        doc["commission_error"] = d.commission_error;
        doc["f1"] = d.f1;
    } else {
        throw ConfigError("--task must be semantic or instance");
    }

    std::string text = doc.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out);
        if (!f) throw IoError("cannot write report: " + out);
        f << text;
        std::cout << "wrote metrics to " << out << "\n";
    }
    return 0;
}

int cmd_bench(std::size_t triangles, std::size_t rays, std::uint64_t seed) {
    double rps = benchmark_trace(triangles, rays, seed);
    std::printf("traced %zu rays against %zu triangles: %.3g rays/s\n", rays, triangles, rps);
    const double soft_target = 5e5;
    if (rps < soft_target)
        std::cerr << "warning: throughput below soft target of " << soft_target
                  << " rays/s per worker\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sylvagen: procedural forest laser-scanning dataset pipeline"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string out, db_dir = "db", plot_dir, plot_id, archetypes_path, scanner_path, plan_path;
    std::string manifest_path, plots_dir, task = "semantic", gt_path, pred_path;
    std::string complexity_str = "easy", platform_str = "tls";
    std::uint64_t index = 0;
    double extent = 20, cover = -1;
    double h_min = 2, h_max = 35, h_step = 1;
    int variants = 3, workers = 0;
    std::size_t bench_triangles = 100000, bench_rays = 1000000;
    std::vector<double> ratios{6, 2, 2};

    auto* gen_db = app.add_subcommand("gen-db", "generate the tree model database");
    gen_db->add_option("--out", out, "output directory")->required();
    gen_db->add_option("--seed", seed, "master seed");
    gen_db->add_option("--archetypes", archetypes_path, "species archetype JSON (default built-in)");
    gen_db->add_option("--height-min", h_min, "minimum nominal height, m");
    gen_db->add_option("--height-max", h_max, "maximum nominal height, m");
    gen_db->add_option("--height-step", h_step, "height step, m");
    gen_db->add_option("--variants", variants, "variants per species/height");

    auto* gen_plot = app.add_subcommand("gen-plot", "assemble one labeled plot");
    gen_plot->add_option("--db", db_dir, "tree model database directory");
    gen_plot->add_option("--out", out, "output bundle directory")->required();
    gen_plot->add_option("--complexity", complexity_str, "easy|medium|difficult");
    gen_plot->add_option("--seed", seed, "master seed");
    gen_plot->add_option("--index", index, "plot index within the batch");
    gen_plot->add_option("--plot-id", plot_id, "plot identifier (default plot_<index>)");
    gen_plot->add_option("--extent", extent, "square plot edge, m");
    gen_plot->add_option("--understory-cover", cover, "cover fraction (default per complexity)");

    auto* plan = app.add_subcommand("plan", "compute a scan plan for a plot");
    plan->add_option("--plot", plot_dir, "plot bundle directory")->required();
    plan->add_option("--platform", platform_str, "tls|mls|uls|als");
    plan->add_option("--out", out, "output plan JSON")->required();

    auto* simulate = app.add_subcommand("simulate", "ray-trace a scan into a labeled LAS file");
    simulate->add_option("--plot", plot_dir, "plot bundle directory")->required();
    simulate->add_option("--db", db_dir, "tree model database directory");
    simulate->add_option("--platform", platform_str, "tls|mls|uls|als");
    simulate->add_option("--scanner", scanner_path, "scanner JSON or 'default'");
    simulate->add_option("--plan", plan_path, "scan plan JSON (default: plan on the fly)");
    simulate->add_option("--out", out, "output LAS path")->required();
    simulate->add_option("--workers", workers, "worker threads (default SYLVAGEN_WORKERS or all)");

    auto* attrs = app.add_subcommand("attrs", "export per-tree attribute CSV");
    attrs->add_option("--plot", plot_dir, "plot bundle directory")->required();
    attrs->add_option("--out", out, "output CSV path")->required();

    auto* stats = app.add_subcommand("stats", "dataset statistics document");
    stats->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
    stats->add_option("--plots-dir", plots_dir, "plots root (default <manifest dir>/plots)");
    stats->add_option("--out", out, "output JSON (default stdout)");

    auto* split = app.add_subcommand("split", "stratified train/val/test split");
    split->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
    split->add_option("--out", out, "output manifest JSON")->required();
    split->add_option("--ratios", ratios, "train val test ratios")->expected(3);
    split->add_option("--seed", seed, "shuffle seed");

    auto* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval->add_option("--task", task, "semantic|instance");
    eval->add_option("--gt", gt_path, "ground-truth LAS")->required();
    eval->add_option("--pred", pred_path, "predicted LAS")->required();
    eval->add_option("--out", out, "output JSON (default stdout)");

    auto* bench = app.add_subcommand("bench", "trace throughput benchmark");
    bench->add_option("--triangles", bench_triangles, "scene triangle count");
    bench->add_option("--rays", bench_rays, "ray count");
    bench->add_option("--seed", seed, "scene seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_db->parsed())
            return cmd_gen_db(out, seed, archetypes_path, h_min, h_max, h_step, variants);
        if (gen_plot->parsed())
            return cmd_gen_plot(db_dir, out, plot_id, complexity_from_name(complexity_str), seed,
                                index, extent, cover);
        if (plan->parsed()) return cmd_plan(plot_dir, platform_from_name(platform_str), out);
        if (simulate->parsed())
            return cmd_simulate(plot_dir, db_dir, platform_from_name(platform_str), scanner_path,
                                plan_path, out, workers);
        if (attrs->parsed()) return cmd_attrs(plot_dir, out);
        if (stats->parsed()) return cmd_stats(manifest_path, plots_dir, out);
        if (split->parsed()) return cmd_split(manifest_path, out, ratios, seed);
        if (eval->parsed()) return cmd_eval(task, gt_path, pred_path, out);
        if (bench->parsed()) return cmd_bench(bench_triangles, bench_rays, seed);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
