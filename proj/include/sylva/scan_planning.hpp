#ifndef SYLVA_SCAN_PLANNING_HPP
#define SYLVA_SCAN_PLANNING_HPP

#include <string>
#include <vector>

#include "sylva/geom.hpp"
#include "sylva/plot_assembly.hpp"

namespace sylva {

enum class Platform : int { TLS = 0, MLS = 1, ULS = 2, ALS = 3 };

std::string platform_name(Platform p);
Platform platform_from_name(const std::string& name);

struct PathVertex {
    Vec3 position;
    int leg = 0;  // monotonically increasing leg index, 1-based
};

struct FlightLine {
    Vec3 start;
    Vec3 end;
    int index = 0;  // 1-based
};

struct ScanPlan {
    Platform platform = Platform::TLS;
    std::vector<Vec3> stations;       // TLS
    std::vector<PathVertex> path;     // MLS
    std::vector<FlightLine> flight_lines;  // ULS/ALS
    double mount_height_or_altitude = 0;   // m above ground (TLS/MLS) or mean terrain (ULS/ALS)
    double speed = 0;                 // m/s, mobile platforms
};

// 5 stations (center + 4 corners inset 1 m), moved by expanding grid search
// on a 0.25 m lattice to clear stems, z = ground + 1.5 m.
ScanPlan plan_tls(const PlotInstance& plot, double clearance = 0.6);

// Occupancy-grid shortest-path walking route over 8 border anchors plus a
// center crossing, closed loop, z = ground + 1.8 m, 1.3 m/s.
ScanPlan plan_mls(const PlotInstance& plot, double buffer = 0.5, double grid_step = 0.1);

// Tic-tac-toe flight lines, plot + 10 m margin, z = mean terrain + altitude.
ScanPlan plan_uls(const PlotInstance& plot, double altitude = 50, double spacing = 15);

// Two parallel strips 60 m apart, plot + 200 m margin, z = mean terrain + 800 m.
ScanPlan plan_als(const PlotInstance& plot);

ScanPlan plan_for(const PlotInstance& plot, Platform platform);

void write_scan_plan(const ScanPlan& plan, const std::string& path);
ScanPlan read_scan_plan(const std::string& path);

}  // namespace sylva

#endif
