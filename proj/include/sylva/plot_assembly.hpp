#ifndef SYLVA_PLOT_ASSEMBLY_HPP
#define SYLVA_PLOT_ASSEMBLY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sylva/rng.hpp"
#include "sylva/scene_gen.hpp"
#include "sylva/tree_models.hpp"

namespace sylva {

struct PlotStatistics {
    double stem_density_mean = 0, stem_density_sd = 0;  // stems per hectare
    double height_mean = 0, height_sd = 0;              // meters
    double dbh_mean = 0, dbh_sd = 0;                    // meters, informational

    void validate() const;
};

// Per-complexity defaults from the EuroSDR reference plots.
PlotStatistics plot_stats_for(Complexity c);

struct PlacedTree {
    int instance_id = 0;       // unique within a plot, contiguous from 1
    std::string model_id;
    Species species = Species::pine;
    double x = 0, y = 0;
    double base_z = 0;
    double rotation_z = 0;     // radians
    double scale = 1;
    double crown_radius = 0;   // m, from scaled crown width
    int layer = 0;             // 0 = canopy/tall; 1 = understory layer of difficult plots
    TreeAttributes attributes;
};

struct PlotInstance {
    std::string plot_id;
    Complexity complexity = Complexity::easy;
    double extent_x = 20, extent_y = 20;
    Terrain terrain;
    std::vector<PlacedTree> trees;
    std::vector<UnderstoryPoint> understory;
    std::uint64_t seed = 0;
};

struct PlotSpec {
    Complexity complexity = Complexity::easy;
    PlotStatistics stats;
    double extent_x = 20, extent_y = 20;
    double scale_min = 0.9, scale_max = 1.1;
    double max_overlap = 0.05;
    int max_attempts = 10000;
};

int sample_tree_count(const PlotStatistics& stats, double plot_area_ha, Rng& rng);
std::vector<double> sample_heights(int count, double height_mean, double height_sd, Rng& rng);
double canopy_overlap(const PlacedTree& a, const PlacedTree& b);

PlotInstance assemble_plot(const PlotSpec& spec, const std::vector<TreeModel>& db,
                           const Terrain& terrain, const UnderstoryConfig& understory_cfg,
                           std::uint64_t seed);

// Bundle layout: <dir>/plot.json + terrain.asc + understory.bin (f32 xyz).
void write_plot_bundle(const PlotInstance& plot, const std::string& dir);
PlotInstance read_plot_bundle(const std::string& dir);

}  // namespace sylva

#endif
