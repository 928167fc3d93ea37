#ifndef SYLVA_LIDAR_SIM_HPP
#define SYLVA_LIDAR_SIM_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sylva/bvh.hpp"
#include "sylva/plot_assembly.hpp"
#include "sylva/scan_planning.hpp"

namespace sylva {

enum class PatternType : int { spherical_grid = 0, multi_channel_spinner = 1, across_track_line = 2 };

struct ScannerModel {
    std::string name;
    Platform platform = Platform::TLS;
    PatternType pattern = PatternType::spherical_grid;

    // spherical_grid (TLS)
    double h_res_deg = 0.04;
    double v_res_deg = 0.04;
    double v_fov_deg = 100;
    double v_min_deg = -40;

    // multi_channel_spinner (MLS)
    std::vector<double> channels_deg;  // sorted ascending
    double rotation_hz = 10;
    int pulses_per_rotation = 9000;

    // across_track_line (ULS/ALS)
    double fov_deg = 75;
    double line_rate_hz = 100;
    int pulses_per_line = 1000;

    double max_range = 600;
    double mount_offset = 0;

    void validate() const;
};

// The four shipped defaults.
ScannerModel default_scanner(Platform platform);
ScannerModel load_scanner(const std::string& json_path);
void write_scanner(const ScannerModel& scanner, const std::string& json_path);

struct Pulse {
    Vec3 origin;
    Vec3 dir;       // unit
    double time = 0;
    std::uint16_t viewpoint = 0;
};

// Random-access pulse stream: pulse i is a pure function of (scanner, plan,
// i), so chunked parallel tracing stays deterministic.
class PulseStream {
public:
    PulseStream(const ScannerModel& scanner, const ScanPlan& plan);

    std::uint64_t size() const { return count_; }
    Pulse at(std::uint64_t i) const;

private:
    ScannerModel scanner_;
    ScanPlan plan_;
    std::uint64_t count_ = 0;
    // per-platform precomputed helpers
    std::uint64_t n_az_ = 0, n_el_ = 0;                  // TLS
    std::vector<double> path_cum_;                        // MLS cumulative arclength
    double path_length_ = 0;
    std::uint64_t n_steps_ = 0;                           // MLS rotation steps
    std::vector<std::uint64_t> line_scan_counts_;         // ULS/ALS scans per line
    std::vector<std::uint64_t> line_scan_offsets_;
};

struct LabeledPoint {
    double x = 0, y = 0, z = 0;
    SemanticClass semantic = SemanticClass::terrain;
    std::uint32_t instance = 0;
    std::uint16_t viewpoint = 0;
    double range = 0;
};

struct SceneIndex {
    std::unique_ptr<Bvh> bvh;

    std::size_t primitive_count() const { return bvh->primitives().size(); }
};

SceneIndex build_scene_index(const PlotInstance& plot, const std::vector<TreeModel>& db,
                             double understory_point_radius = 0.02);

std::optional<LabeledPoint> trace(const SceneIndex& scene, const Pulse& pulse, double max_range);

// Streaming sink; points arrive in pulse emission order.
using PointSink = std::function<void(const LabeledPoint&)>;

// Deterministic multithreaded first-return simulation. workers <= 0 reads
// SYLVAGEN_WORKERS, falling back to hardware concurrency.
void simulate(const SceneIndex& scene, const ScannerModel& scanner, const ScanPlan& plan,
              const PointSink& sink, int workers = 0);

struct PointCloud {
    std::vector<LabeledPoint> points;
    Platform platform = Platform::TLS;
    std::string plot_id;
    std::string crs_note = "local plot frame, meters";
};

PointCloud simulate_cloud(const SceneIndex& scene, const ScannerModel& scanner,
                          const ScanPlan& plan, int workers = 0);

// Trace-throughput benchmark on a synthetic scene; returns rays per second.
double benchmark_trace(std::size_t triangle_count, std::size_t ray_count, std::uint64_t seed);

}  // namespace sylva

#endif
