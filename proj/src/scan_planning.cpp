#include "sylva/scan_planning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include <json.hpp>

#include "sylva/errors.hpp"

namespace sylva {

using nlohmann::json;

std::string platform_name(Platform p) {
    switch (p) {
        case Platform::TLS: return "TLS";
        case Platform::MLS: return "MLS";
        case Platform::ULS: return "ULS";
        case Platform::ALS: return "ALS";
    }
    throw ParameterError("unknown platform id");
}

Platform platform_from_name(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), ::toupper);
    if (up == "TLS") return Platform::TLS;
    if (up == "MLS") return Platform::MLS;
    if (up == "ULS") return Platform::ULS;
    if (up == "ALS") return Platform::ALS;
    throw ParameterError("unknown platform name: " + name);
}

namespace {

double stem_radius(const PlacedTree& t) { return t.attributes.dbh / 2.0; }

bool station_feasible(const PlotInstance& plot, double x, double y, double clearance) {
    if (x < 0 || y < 0 || x > plot.extent_x || y > plot.extent_y) return false;
    for (const auto& t : plot.trees) {
        double dx = x - t.x, dy = y - t.y;
        double d = std::sqrt(dx * dx + dy * dy);
        if (d < clearance + stem_radius(t)) return false;
    }
    return true;
}

}  // namespace

ScanPlan plan_tls(const PlotInstance& plot, double clearance) {
    if (!(clearance > 0)) throw ParameterError("clearance must be > 0");
    constexpr double kLattice = 0.25;
    constexpr double kSearchRadius = 5.0;
    constexpr double kMountHeight = 1.5;
    constexpr double kInset = 1.0;

    const double ex = plot.extent_x, ey = plot.extent_y;
    std::vector<Vec2> anchors = {{ex / 2, ey / 2},
                                 {kInset, kInset},
                                 {ex - kInset, kInset},
                                 {ex - kInset, ey - kInset},
                                 {kInset, ey - kInset}};

    // Lattice offsets sorted by (distance, i, j) so the grid search expands
    // deterministically from the anchor.
    static const std::vector<std::array<int, 2>> offsets = [] {
        std::vector<std::array<int, 2>> offs;
        int n = static_cast<int>(kSearchRadius / kLattice);
        for (int i = -n; i <= n; ++i)
            for (int j = -n; j <= n; ++j)
                if (i * i + j * j <= n * n) offs.push_back({i, j});
        std::sort(offs.begin(), offs.end(), [](const auto& a, const auto& b) {
            int da = a[0] * a[0] + a[1] * a[1], db = b[0] * b[0] + b[1] * b[1];
            if (da != db) return da < db;
            return a < b;
        });
        return offs;
    }();

    ScanPlan plan;
    plan.platform = Platform::TLS;
    plan.mount_height_or_altitude = kMountHeight;
    for (const auto& a : anchors) {
        bool found = false;
        for (const auto& off : offsets) {
            double x = a.x + off[0] * kLattice;
            double y = a.y + off[1] * kLattice;
            if (station_feasible(plot, x, y, clearance)) {
                plan.stations.push_back({x, y, height_at(plot.terrain, x, y) + kMountHeight});
                found = true;
                break;
            }
        }
        if (!found)
            throw PlanningError("no feasible TLS station within 5 m of anchor (" +
                                std::to_string(a.x) + ", " + std::to_string(a.y) + ")");
    }
    return plan;
}

namespace {

struct MlsGrid {
    int nx = 0, ny = 0;
    double step = 0.1;
    std::vector<std::uint8_t> blocked;

    bool is_blocked(int ix, int iy) const {
        return blocked[static_cast<std::size_t>(iy) * nx + ix] != 0;
    }
    int idx(int ix, int iy) const { return iy * nx + ix; }
};

MlsGrid build_occupancy(const PlotInstance& plot, double buffer, double grid_step) {
    MlsGrid g;
    g.step = grid_step;
    g.nx = static_cast<int>(std::floor(plot.extent_x / grid_step + 1e-9)) + 1;
    g.ny = static_cast<int>(std::floor(plot.extent_y / grid_step + 1e-9)) + 1;
    g.blocked.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
    for (const auto& t : plot.trees) {
        double r = buffer + stem_radius(t);
        int ix0 = std::max(0, static_cast<int>(std::floor((t.x - r) / grid_step)));
        int ix1 = std::min(g.nx - 1, static_cast<int>(std::ceil((t.x + r) / grid_step)));
        int iy0 = std::max(0, static_cast<int>(std::floor((t.y - r) / grid_step)));
        int iy1 = std::min(g.ny - 1, static_cast<int>(std::ceil((t.y + r) / grid_step)));
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix) {
                double dx = ix * grid_step - t.x, dy = iy * grid_step - t.y;
                if (dx * dx + dy * dy < r * r) g.blocked[static_cast<std::size_t>(iy) * g.nx + ix] = 1;
            }
    }
    return g;
}

int snap_to_free(const MlsGrid& g, int ix, int iy) {
    if (!g.is_blocked(ix, iy)) return g.idx(ix, iy);
    // BFS ring search for the nearest free cell, deterministic scan order.
    for (int r = 1; r < std::max(g.nx, g.ny); ++r) {
        int best = -1;
        double best_d = 1e18;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                int x = ix + dx, y = iy + dy;
                if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) continue;
                if (g.is_blocked(x, y)) continue;
                double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = g.idx(x, y);
                }
            }
        if (best >= 0) return best;
    }
    return -1;
}

// Dijkstra over 8-connected free cells with Euclidean edge weights.
std::vector<int> grid_shortest_path(const MlsGrid& g, int start, int goal) {
    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.blocked.size(), kInf);
    std::vector<int> prev(g.blocked.size(), -1);
    using QNode = std::pair<double, int>;
    std::priority_queue<QNode, std::vector<QNode>, std::greater<>> q;
    dist[start] = 0;
    q.push({0, start});
    const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!q.empty()) {
        auto [d, u] = q.top();
        q.pop();
        if (d > dist[u]) continue;
        if (u == goal) break;
        int ux = u % g.nx, uy = u / g.nx;
        for (int k = 0; k < 8; ++k) {
            int vx = ux + dx8[k], vy = uy + dy8[k];
            if (vx < 0 || vy < 0 || vx >= g.nx || vy >= g.ny) continue;
            if (g.is_blocked(vx, vy)) continue;
            int v = g.idx(vx, vy);
            double w = k < 4 ? g.step : g.step * M_SQRT2;
            double nd = d + w;
            if (nd < dist[v] - 1e-15) {
                dist[v] = nd;
                prev[v] = u;
                q.push({nd, v});
            }
        }
    }
    if (dist[goal] == kInf) return {};
    std::vector<int> path;
    for (int v = goal; v != -1; v = prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

ScanPlan plan_mls(const PlotInstance& plot, double buffer, double grid_step) {
    if (!(buffer > 0)) throw ParameterError("buffer must be > 0");
    if (!(grid_step > 0)) throw ParameterError("grid_step must be > 0");
    constexpr double kMountHeight = 1.8;
    constexpr double kInset = 1.0;

    const double ex = plot.extent_x, ey = plot.extent_y;
    // 8 border anchors in perimeter order, then a center crossing back to
    // the start for loop closure.
    std::vector<Vec2> anchors = {{kInset, kInset},     {ex / 2, kInset},
                                 {ex - kInset, kInset}, {ex - kInset, ey / 2},
                                 {ex - kInset, ey - kInset}, {ex / 2, ey - kInset},
                                 {kInset, ey - kInset}, {kInset, ey / 2},
                                 {ex / 2, ey / 2},     {kInset, kInset}};

    MlsGrid grid = build_occupancy(plot, buffer, grid_step);

    std::vector<int> anchor_cells;
    for (const auto& a : anchors) {
        int ix = static_cast<int>(std::lround(a.x / grid_step));
        int iy = static_cast<int>(std::lround(a.y / grid_step));
        ix = std::clamp(ix, 0, grid.nx - 1);
        iy = std::clamp(iy, 0, grid.ny - 1);
        int cell = snap_to_free(grid, ix, iy);
        if (cell < 0) throw PlanningError("no free cell near MLS turning point");
        anchor_cells.push_back(cell);
    }
    anchor_cells.back() = anchor_cells.front();  // exact closure

    ScanPlan plan;
    plan.platform = Platform::MLS;
    plan.mount_height_or_altitude = kMountHeight;
    plan.speed = 1.3;

    auto push_vertex = [&](int cell, int leg) {
        double x = (cell % grid.nx) * grid_step;
        double y = (cell / grid.nx) * grid_step;
        plan.path.push_back({{x, y, height_at(plot.terrain, x, y) + kMountHeight}, leg});
    };

    for (std::size_t leg = 0; leg + 1 < anchor_cells.size(); ++leg) {
        auto cells = grid_shortest_path(grid, anchor_cells[leg], anchor_cells[leg + 1]);
        if (cells.empty())
            throw PlanningError("MLS turning points disconnected in the free grid (leg " +
                                std::to_string(leg + 1) + ")");
        std::size_t start = plan.path.empty() ? 0 : 1;  // avoid duplicating shared anchor
        for (std::size_t i = start; i < cells.size(); ++i)
            push_vertex(cells[i], static_cast<int>(leg) + 1);
        if (plan.path.empty()) push_vertex(cells[0], 1);
    }
    return plan;
}

ScanPlan plan_uls(const PlotInstance& plot, double altitude, double spacing) {
    if (!(spacing > 0)) throw ParameterError("spacing must be > 0");
    constexpr double kMargin = 10.0;
    const double z = plot.terrain.mean_height() + altitude;

    ScanPlan plan;
    plan.platform = Platform::ULS;
    plan.mount_height_or_altitude = altitude;
    plan.speed = 5.0;

    int index = 1;
    // x-direction lines (varying y), then the orthogonal set
    for (double y = -kMargin; y <= plot.extent_y + kMargin + 1e-9; y += spacing)
        plan.flight_lines.push_back({{-kMargin, y, z}, {plot.extent_x + kMargin, y, z}, index++});
    for (double x = -kMargin; x <= plot.extent_x + kMargin + 1e-9; x += spacing)
        plan.flight_lines.push_back({{x, -kMargin, z}, {x, plot.extent_y + kMargin, z}, index++});
    return plan;
}

ScanPlan plan_als(const PlotInstance& plot) {
    constexpr double kMargin = 200.0;
    constexpr double kSeparation = 60.0;
    constexpr double kAltitude = 800.0;
    const double z = plot.terrain.mean_height() + kAltitude;
    const double cy = plot.extent_y / 2;

    ScanPlan plan;
    plan.platform = Platform::ALS;
    plan.mount_height_or_altitude = kAltitude;
    plan.speed = 45.0;
    plan.flight_lines.push_back(
        {{-kMargin, cy - kSeparation / 2, z}, {plot.extent_x + kMargin, cy - kSeparation / 2, z}, 1});
    plan.flight_lines.push_back(
        {{-kMargin, cy + kSeparation / 2, z}, {plot.extent_x + kMargin, cy + kSeparation / 2, z}, 2});
    return plan;
}

ScanPlan plan_for(const PlotInstance& plot, Platform platform) {
    switch (platform) {
        case Platform::TLS: return plan_tls(plot);
        case Platform::MLS: return plan_mls(plot);
        case Platform::ULS: return plan_uls(plot);
        case Platform::ALS: return plan_als(plot);
    }
    throw ParameterError("unknown platform id");
}

void write_scan_plan(const ScanPlan& plan, const std::string& path) {
    json doc;
    doc["platform"] = platform_name(plan.platform);
    doc["mount_height_or_altitude_m"] = plan.mount_height_or_altitude;
    doc["speed_mps"] = plan.speed;
    doc["stations"] = json::array();
    for (const auto& s : plan.stations) doc["stations"].push_back({s.x, s.y, s.z});
    doc["path"] = json::array();
    for (const auto& v : plan.path)
        doc["path"].push_back({{"xyz", {v.position.x, v.position.y, v.position.z}}, {"leg", v.leg}});
    doc["flight_lines"] = json::array();
    for (const auto& l : plan.flight_lines)
        doc["flight_lines"].push_back({{"start", {l.start.x, l.start.y, l.start.z}},
                                       {"end", {l.end.x, l.end.y, l.end.z}},
                                       {"index", l.index}});
    std::ofstream f(path);
    if (!f) throw IoError("cannot write scan plan: " + path);
    f << doc.dump(2) << "\n";
}

ScanPlan read_scan_plan(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scan plan: " + path);
    json doc = json::parse(f);
    ScanPlan plan;
    plan.platform = platform_from_name(doc.at("platform").get<std::string>());
    plan.mount_height_or_altitude = doc.at("mount_height_or_altitude_m").get<double>();
    plan.speed = doc.at("speed_mps").get<double>();
    for (const auto& s : doc.at("stations"))
        plan.stations.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<double>()});
    for (const auto& v : doc.at("path")) {
        const auto& p = v.at("xyz");
        plan.path.push_back(
            {{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}, v.at("leg").get<int>()});
    }
    for (const auto& l : doc.at("flight_lines")) {
        const auto& a = l.at("start");
        const auto& b = l.at("end");
        plan.flight_lines.push_back({{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()},
                                     {b[0].get<double>(), b[1].get<double>(), b[2].get<double>()},
                                     l.at("index").get<int>()});
    }
    return plan;
}

}  // namespace sylva
