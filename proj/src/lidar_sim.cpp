#include "sylva/lidar_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "sylva/errors.hpp"
#include "sylva/rng.hpp"

namespace sylva {

using nlohmann::json;

void ScannerModel::validate() const {
    if (!(max_range > 0)) throw ConfigError("scanner max_range must be > 0");
    switch (pattern) {
        case PatternType::spherical_grid:
            if (!(h_res_deg > 0 && v_res_deg > 0 && v_fov_deg > 0))
                throw ConfigError("spherical_grid resolutions must be > 0");
            break;
        case PatternType::multi_channel_spinner:
            if (channels_deg.empty()) throw ConfigError("spinner needs at least one channel");
            if (!std::is_sorted(channels_deg.begin(), channels_deg.end()))
                throw ConfigError("spinner channels must be sorted ascending");
            if (!(rotation_hz > 0 && pulses_per_rotation > 0))
                throw ConfigError("spinner rates must be > 0");
            break;
        case PatternType::across_track_line:
            if (!(fov_deg > 0 && line_rate_hz > 0 && pulses_per_line > 0))
                throw ConfigError("across_track_line parameters must be > 0");
            break;
    }
}

ScannerModel default_scanner(Platform platform) {
    ScannerModel s;
    s.platform = platform;
    switch (platform) {
        case Platform::TLS:
            s.name = "tls_default";
            s.pattern = PatternType::spherical_grid;
            s.h_res_deg = 0.04;
            s.v_res_deg = 0.04;
            s.v_fov_deg = 100;
            s.v_min_deg = -40;
            s.max_range = 600;
            break;
        case Platform::MLS:
            s.name = "mls_default";
            s.pattern = PatternType::multi_channel_spinner;
            s.channels_deg.clear();
            for (int c = 0; c < 32; ++c) s.channels_deg.push_back(-15.5 + c);
            s.rotation_hz = 10;
            s.pulses_per_rotation = 9000;
            s.max_range = 100;
            break;
        case Platform::ULS:
            s.name = "uls_default";
            s.pattern = PatternType::across_track_line;
            s.fov_deg = 75;
            s.line_rate_hz = 100;
            s.pulses_per_line = 1000;
            s.max_range = 200;
            break;
        case Platform::ALS:
            s.name = "als_default";
            s.pattern = PatternType::across_track_line;
            s.fov_deg = 60;
            s.line_rate_hz = 50;
            s.pulses_per_line = 1000;
            s.max_range = 1500;
            break;
    }
    return s;
}

namespace {

std::string pattern_name(PatternType p) {
    switch (p) {
        case PatternType::spherical_grid: return "spherical_grid";
        case PatternType::multi_channel_spinner: return "multi_channel_spinner";
        case PatternType::across_track_line: return "across_track_line";
    }
    throw ConfigError("unknown pattern id");
}

PatternType pattern_from_name(const std::string& s) {
    if (s == "spherical_grid") return PatternType::spherical_grid;
    if (s == "multi_channel_spinner") return PatternType::multi_channel_spinner;
    if (s == "across_track_line") return PatternType::across_track_line;
    throw ConfigError("unknown pattern name: " + s);
}

}  // namespace

ScannerModel load_scanner(const std::string& json_path) {
    std::ifstream f(json_path);
    if (!f) throw IoError("cannot open scanner config: " + json_path);
    json doc = json::parse(f);
    ScannerModel s;
    s.name = doc.at("name").get<std::string>();
    s.platform = platform_from_name(doc.at("platform").get<std::string>());
    s.pattern = pattern_from_name(doc.at("pattern").get<std::string>());
    s.max_range = doc.at("max_range_m").get<double>();
    s.mount_offset = doc.value("mount_offset_m", 0.0);
    switch (s.pattern) {
        case PatternType::spherical_grid:
            s.h_res_deg = doc.at("h_res_deg").get<double>();
            s.v_res_deg = doc.at("v_res_deg").get<double>();
            s.v_fov_deg = doc.at("v_fov_deg").get<double>();
            s.v_min_deg = doc.at("v_min_deg").get<double>();
            break;
        case PatternType::multi_channel_spinner:
            s.channels_deg = doc.at("channels_deg").get<std::vector<double>>();
            s.rotation_hz = doc.at("rotation_hz").get<double>();
            s.pulses_per_rotation = doc.at("pulses_per_rotation").get<int>();
            break;
        case PatternType::across_track_line:
            s.fov_deg = doc.at("fov_deg").get<double>();
            s.line_rate_hz = doc.at("line_rate_hz").get<double>();
            s.pulses_per_line = doc.at("pulses_per_line").get<int>();
            break;
    }
    s.validate();
    return s;
}

void write_scanner(const ScannerModel& s, const std::string& json_path) {
    json doc;
    doc["name"] = s.name;
    doc["platform"] = platform_name(s.platform);
    doc["pattern"] = pattern_name(s.pattern);
    doc["max_range_m"] = s.max_range;
    doc["mount_offset_m"] = s.mount_offset;
    switch (s.pattern) {
        case PatternType::spherical_grid:
            doc["h_res_deg"] = s.h_res_deg;
            doc["v_res_deg"] = s.v_res_deg;
            doc["v_fov_deg"] = s.v_fov_deg;
            doc["v_min_deg"] = s.v_min_deg;
            break;
        case PatternType::multi_channel_spinner:
            doc["channels_deg"] = s.channels_deg;
            doc["rotation_hz"] = s.rotation_hz;
            doc["pulses_per_rotation"] = s.pulses_per_rotation;
            break;
        case PatternType::across_track_line:
            doc["fov_deg"] = s.fov_deg;
            doc["line_rate_hz"] = s.line_rate_hz;
            doc["pulses_per_line"] = s.pulses_per_line;
            break;
    }
    std::ofstream f(json_path);
    if (!f) throw IoError("cannot write scanner config: " + json_path);
    f << doc.dump(2) << "\n";
}

PulseStream::PulseStream(const ScannerModel& scanner, const ScanPlan& plan)
    : scanner_(scanner), plan_(plan) {
    scanner.validate();
    if (scanner.platform != plan.platform)
        throw ConfigError("scanner platform " + platform_name(scanner.platform) +
                          " does not match plan platform " + platform_name(plan.platform));
    switch (scanner.pattern) {
        case PatternType::spherical_grid: {
            if (plan.stations.empty()) throw ConfigError("TLS plan has no stations");
            n_az_ = static_cast<std::uint64_t>(std::llround(360.0 / scanner.h_res_deg));
            n_el_ = static_cast<std::uint64_t>(std::llround(scanner.v_fov_deg / scanner.v_res_deg)) + 1;
            count_ = plan.stations.size() * n_az_ * n_el_;
            break;
        }
        case PatternType::multi_channel_spinner: {
            if (plan.path.size() < 2) throw ConfigError("MLS plan path is too short");
            path_cum_.push_back(0);
            for (std::size_t i = 1; i < plan.path.size(); ++i) {
                path_length_ += (plan.path[i].position - plan.path[i - 1].position).norm();
                path_cum_.push_back(path_length_);
            }
            double duration = path_length_ / plan.speed;
            double step_rate = scanner.rotation_hz * scanner.pulses_per_rotation;
            n_steps_ = static_cast<std::uint64_t>(std::floor(duration * step_rate)) + 1;
            count_ = n_steps_ * scanner.channels_deg.size();
            break;
        }
        case PatternType::across_track_line: {
            if (plan.flight_lines.empty()) throw ConfigError("flight plan has no lines");
            std::uint64_t off = 0;
            for (const auto& line : plan.flight_lines) {
                double len = (line.end - line.start).norm();
                std::uint64_t scans =
                    static_cast<std::uint64_t>(std::floor(len / plan.speed * scanner.line_rate_hz)) + 1;
                line_scan_counts_.push_back(scans);
                line_scan_offsets_.push_back(off);
                off += scans * scanner.pulses_per_line;
            }
            count_ = off;
            break;
        }
    }
}

Pulse PulseStream::at(std::uint64_t i) const {
    Pulse p;
    const double deg = M_PI / 180.0;
    switch (scanner_.pattern) {
        case PatternType::spherical_grid: {
            std::uint64_t per_station = n_az_ * n_el_;
            std::uint64_t st = i / per_station;
            std::uint64_t r = i % per_station;
            std::uint64_t ia = r / n_el_;
            std::uint64_t ie = r % n_el_;
            double az = ia * scanner_.h_res_deg * deg;
            double el = (scanner_.v_min_deg + ie * scanner_.v_res_deg) * deg;
            p.origin = plan_.stations[st];
            p.dir = {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
            p.time = static_cast<double>(i);
            p.viewpoint = static_cast<std::uint16_t>(st + 1);
            break;
        }
        case PatternType::multi_channel_spinner: {
            std::uint64_t nch = scanner_.channels_deg.size();
            std::uint64_t step = i / nch;
            std::uint64_t ch = i % nch;
            double step_rate = scanner_.rotation_hz * scanner_.pulses_per_rotation;
            double t = step / step_rate;
            double s = std::min(t * plan_.speed, path_length_);
            // segment lookup
            auto it = std::upper_bound(path_cum_.begin(), path_cum_.end(), s);
            std::size_t seg = std::min(static_cast<std::size_t>(it - path_cum_.begin()),
                                       path_cum_.size() - 1);
            if (seg == 0) seg = 1;
            const auto& a = plan_.path[seg - 1];
            const auto& b = plan_.path[seg];
            double seg_len = path_cum_[seg] - path_cum_[seg - 1];
            double f = seg_len > 0 ? (s - path_cum_[seg - 1]) / seg_len : 0.0;
            p.origin = a.position + f * (b.position - a.position);
            double az = 2.0 * M_PI * (step % static_cast<std::uint64_t>(scanner_.pulses_per_rotation)) /
                        scanner_.pulses_per_rotation;
            double el = scanner_.channels_deg[ch] * deg;
            p.dir = {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
            p.time = t;
            p.viewpoint = static_cast<std::uint16_t>(b.leg);
            break;
        }
        case PatternType::across_track_line: {
            // locate line by offset table
            std::size_t li = line_scan_offsets_.size() - 1;
            while (li > 0 && i < line_scan_offsets_[li]) --li;
            std::uint64_t r = i - line_scan_offsets_[li];
            std::uint64_t ppl = static_cast<std::uint64_t>(scanner_.pulses_per_line);
            std::uint64_t scan = r / ppl;
            std::uint64_t k = r % ppl;
            const auto& line = plan_.flight_lines[li];
            Vec3 along = (line.end - line.start).normalized();
            double t = scan / scanner_.line_rate_hz;
            p.origin = line.start + along * std::min(t * plan_.speed,
                                                     (line.end - line.start).norm());
            double half = scanner_.fov_deg / 2.0 * deg;
            double chi = ppl > 1 ? -half + 2.0 * half * k / (ppl - 1) : 0.0;
            Vec3 across = along.cross(Vec3{0, 0, 1});
            double an = across.norm();
            across = an > 1e-12 ? across * (1.0 / an) : Vec3{0, 1, 0};
            p.dir = (std::sin(chi) * across + Vec3{0, 0, -std::cos(chi)}).normalized();
            p.time = t;
            p.viewpoint = static_cast<std::uint16_t>(line.index);
            break;
        }
    }
    return p;
}

SceneIndex build_scene_index(const PlotInstance& plot, const std::vector<TreeModel>& db,
                             double understory_point_radius) {
    std::vector<Primitive> prims;

    auto push_tri = [&prims](const Vec3& a, const Vec3& b, const Vec3& c, SemanticClass sem,
                             std::uint32_t inst) {
        Primitive p;
        p.v0[0] = static_cast<float>(a.x); p.v0[1] = static_cast<float>(a.y); p.v0[2] = static_cast<float>(a.z);
        p.v1[0] = static_cast<float>(b.x); p.v1[1] = static_cast<float>(b.y); p.v1[2] = static_cast<float>(b.z);
        p.v2[0] = static_cast<float>(c.x); p.v2[1] = static_cast<float>(c.y); p.v2[2] = static_cast<float>(c.z);
        p.radius = 0;
        p.semantic = sem;
        p.instance = inst;
        prims.push_back(p);
    };

    // terrain: two triangles per grid cell, split along the same diagonal
    const Terrain& t = plot.terrain;
    auto node = [&](int ix, int iy) {
        return Vec3{t.origin_x + ix * t.cell_size, t.origin_y + iy * t.cell_size, t.at(ix, iy)};
    };
    for (int iy = 0; iy + 1 < t.ny; ++iy)
        for (int ix = 0; ix + 1 < t.nx; ++ix) {
            Vec3 a = node(ix, iy), b = node(ix + 1, iy), c = node(ix + 1, iy + 1), d = node(ix, iy + 1);
            push_tri(a, b, c, SemanticClass::terrain, 0);
            push_tri(a, c, d, SemanticClass::terrain, 0);
        }

    // placed trees: scale, rotate about z, translate into the plot frame
    std::map<std::string, const TreeModel*> by_id;
    for (const auto& m : db) by_id[m.model_id] = &m;

    for (const auto& tree : plot.trees) {
        auto it = by_id.find(tree.model_id);
        if (it == by_id.end())
            throw ConfigError("plot references model not in database: " + tree.model_id);
        const TreeModel& model = *it->second;
        double cr = std::cos(tree.rotation_z), sr = std::sin(tree.rotation_z);
        auto xform = [&](const std::array<float, 3>& v) {
            double x = v[0] * tree.scale, y = v[1] * tree.scale, z = v[2] * tree.scale;
            return Vec3{tree.x + x * cr - y * sr, tree.y + x * sr + y * cr, tree.base_z + z};
        };
        std::uint32_t inst = static_cast<std::uint32_t>(tree.instance_id);
        for (const auto& tri : model.wood_mesh.triangles)
            push_tri(xform(model.wood_mesh.vertices[tri[0]]), xform(model.wood_mesh.vertices[tri[1]]),
                     xform(model.wood_mesh.vertices[tri[2]]), SemanticClass::wood, inst);
        for (const auto& tri : model.foliage_mesh.triangles)
            push_tri(xform(model.foliage_mesh.vertices[tri[0]]),
                     xform(model.foliage_mesh.vertices[tri[1]]),
                     xform(model.foliage_mesh.vertices[tri[2]]), SemanticClass::leaf, inst);
    }

    // understory points as small spheres
    for (const auto& p : plot.understory) {
        Primitive s{};
        s.v0[0] = p.x; s.v0[1] = p.y; s.v0[2] = p.z;
        s.radius = static_cast<float>(understory_point_radius);
        s.semantic = SemanticClass::understory;
        s.instance = 0;
        prims.push_back(s);
    }

    SceneIndex index;
    index.bvh = std::make_unique<Bvh>(std::move(prims));
    return index;
}

std::optional<LabeledPoint> trace(const SceneIndex& scene, const Pulse& pulse, double max_range) {
    Ray ray{pulse.origin, pulse.dir, max_range};
    auto hit = scene.bvh->nearest(ray);
    if (!hit) return std::nullopt;
    const Primitive& prim = scene.bvh->primitives()[hit->prim];
    LabeledPoint pt;
    Vec3 pos = pulse.origin + hit->t * pulse.dir;
    pt.x = pos.x; pt.y = pos.y; pt.z = pos.z;
    pt.semantic = prim.semantic;
    pt.instance = prim.instance;
    pt.viewpoint = pulse.viewpoint;
    pt.range = hit->t;
    return pt;
}

namespace {

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("SYLVAGEN_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

void simulate(const SceneIndex& scene, const ScannerModel& scanner, const ScanPlan& plan,
              const PointSink& sink, int workers) {
    PulseStream stream(scanner, plan);
    const std::uint64_t total = stream.size();
    const int nthreads = resolve_workers(workers);
    const std::uint64_t chunk = 1u << 20;

    std::vector<std::vector<LabeledPoint>> buffers(nthreads);
    std::vector<std::thread> pool;

    for (std::uint64_t base = 0; base < total; base += chunk * nthreads) {
        // trace up to nthreads chunks in parallel, then drain them in order
        int active = static_cast<int>(std::min<std::uint64_t>(
            nthreads, (total - base + chunk - 1) / chunk));
        pool.clear();
        for (int w = 0; w < active; ++w) {
            buffers[w].clear();
            pool.emplace_back([&, w]() {
                std::uint64_t lo = base + static_cast<std::uint64_t>(w) * chunk;
                std::uint64_t hi = std::min(lo + chunk, total);
                for (std::uint64_t i = lo; i < hi; ++i) {
                    auto pt = trace(scene, stream.at(i), scanner.max_range);
                    if (pt) buffers[w].push_back(*pt);
                }
            });
        }
        for (auto& th : pool) th.join();
        for (int w = 0; w < active; ++w)
            for (const auto& pt : buffers[w]) sink(pt);
    }
}

PointCloud simulate_cloud(const SceneIndex& scene, const ScannerModel& scanner,
                          const ScanPlan& plan, int workers) {
    PointCloud cloud;
    cloud.platform = plan.platform;
    simulate(scene, scanner, plan, [&cloud](const LabeledPoint& p) { cloud.points.push_back(p); },
             workers);
    return cloud;
}

double benchmark_trace(std::size_t triangle_count, std::size_t ray_count, std::uint64_t seed) {
    // synthetic scene: random small triangles inside a 20 m cube above a floor
    Rng rng(seed);
    std::vector<Primitive> prims;
    prims.reserve(triangle_count);
    for (std::size_t i = 0; i < triangle_count; ++i) {
        Primitive p{};
        double cx = rng.uniform(-10, 10), cy = rng.uniform(-10, 10), cz = rng.uniform(0, 20);
        for (int k = 0; k < 3; ++k) {
            double x = cx + rng.uniform(-0.1, 0.1);
            double y = cy + rng.uniform(-0.1, 0.1);
            double z = cz + rng.uniform(-0.1, 0.1);
            float* v = k == 0 ? p.v0 : (k == 1 ? p.v1 : p.v2);
            v[0] = static_cast<float>(x);
            v[1] = static_cast<float>(y);
            v[2] = static_cast<float>(z);
        }
        p.semantic = SemanticClass::wood;
        p.instance = 1;
        prims.push_back(p);
    }
    Bvh bvh(std::move(prims));

    std::vector<Ray> rays(ray_count);
    Rng rr = rng.derive("rays", 0);
    for (auto& r : rays) {
        r.origin = {rr.uniform(-12, 12), rr.uniform(-12, 12), rr.uniform(0, 22)};
        double az = rr.uniform(0, 2 * M_PI);
        double el = rr.uniform(-M_PI / 2, M_PI / 2);
        r.dir = {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
        r.t_max = 100;
    }

    auto t0 = std::chrono::steady_clock::now();
    std::size_t hits = 0;
    for (const auto& r : rays)
        if (bvh.nearest(r)) ++hits;
    auto t1 = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    volatile std::size_t guard = hits;
    (void)guard;
    return secs > 0 ? static_cast<double>(ray_count) / secs : 0.0;
}

}  // namespace sylva
