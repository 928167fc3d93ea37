#ifndef SYLVA_SCENE_GEN_HPP
#define SYLVA_SCENE_GEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sylva/geom.hpp"

namespace sylva {

enum class Complexity : int { easy = 0, medium = 1, difficult = 2 };

std::string complexity_name(Complexity c);
Complexity complexity_from_name(const std::string& name);

struct Terrain {
    double origin_x = 0, origin_y = 0;
    double cell_size = 0.2;
    int nx = 0, ny = 0;                // node counts per axis
    std::vector<double> heights;       // row-major, ny rows of nx
    Complexity complexity = Complexity::easy;

    double extent_x() const { return (nx - 1) * cell_size; }
    double extent_y() const { return (ny - 1) * cell_size; }
    double at(int ix, int iy) const { return heights[static_cast<std::size_t>(iy) * nx + ix]; }
    double& at(int ix, int iy) { return heights[static_cast<std::size_t>(iy) * nx + ix]; }
    double mean_height() const;
};

struct TerrainClassParams {
    double slope_deg = 1.5;      // plane tilt
    double roughness_rms = 0.05; // RMS of residuals about the fitted plane, meters
};

// Per-complexity defaults: easy (1.5 deg, 0.05 m), medium (6, 0.2),
// difficult (12, 0.5).
TerrainClassParams terrain_params_for(Complexity c);

Terrain generate_terrain(Complexity complexity, double extent_x, double extent_y,
                         double cell_size, std::uint64_t seed);
Terrain generate_terrain(const TerrainClassParams& params, Complexity complexity, double extent_x,
                         double extent_y, double cell_size, std::uint64_t seed);

// Bilinear interpolation; throws DomainError outside the extent.
double height_at(const Terrain& terrain, double x, double y);

struct UnderstoryPoint {
    float x = 0, y = 0, z = 0;
};

struct UnderstoryConfig {
    double cover_fraction = 0.15;
    double max_patch_height = 1.5;  // shrub/grass cap before scaling
    double point_radius = 0.02;     // intersection proxy radius
};

std::vector<UnderstoryPoint> generate_understory(const Terrain& terrain, double cover_fraction,
                                                 std::uint64_t seed);
std::vector<UnderstoryPoint> generate_understory(const Terrain& terrain,
                                                 const UnderstoryConfig& cfg, std::uint64_t seed);

// ESRI ASCII grid round-trip.
void write_terrain_asc(const Terrain& terrain, const std::string& path);
Terrain read_terrain_asc(const std::string& path, Complexity complexity);

}  // namespace sylva

#endif
