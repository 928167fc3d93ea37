#ifndef SYLVA_TREE_MODELS_HPP
#define SYLVA_TREE_MODELS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sylva/mesh.hpp"

namespace sylva {

enum class Species : int { pine = 0, spruce = 1, birch = 2 };
enum class CrownShape : int { conical = 0, ellipsoidal = 1, spreading = 2 };

std::string species_name(Species s);
Species species_from_name(const std::string& name);
std::string crown_shape_name(CrownShape s);
CrownShape crown_shape_from_name(const std::string& name);

struct SpeciesArchetype {
    Species species = Species::pine;
    double trunk_taper = 0.9;            // fraction of base radius lost at the top
    int branch_levels = 2;
    double branch_angle_min_deg = 50.0;  // from the trunk axis
    double branch_angle_max_deg = 80.0;
    double crown_base_fraction = 0.45;
    CrownShape crown_shape = CrownShape::conical;
    double leaf_element_size = 0.06;     // meters
    double leaf_density = 18.0;          // elements per meter of terminal branch

    void validate() const;  // throws ParameterError
};

std::vector<SpeciesArchetype> default_archetypes();

struct TreeAttributes {
    double height = 0;        // m
    double dbh = 0;           // m
    double crown_width = 0;   // m
    double crown_area = 0;    // m^2
    double leaf_area = 0;     // m^2 (one-sided)
    double wood_volume = 0;   // m^3
    bool dbh_at_half_height = false;  // set when the scaled tree is shorter than 1.3 m
};

struct TreeModel {
    std::string model_id;
    Species species = Species::pine;
    double nominal_height = 0;
    TriMesh wood_mesh;
    TriMesh foliage_mesh;
    // Generation-time records: trunk radius profile (z, equivalent-circle
    // radius) and the exact signed volume of the wood mesh at scale 1.
    std::vector<std::array<double, 2>> trunk_rings;
    double wood_volume_base = 0;
};

// Builds a closed tube (stacked frusta with end caps) along the given center
// polyline. Ring vertices are placed so each polygonal cross-section has the
// area of the circle with the nominal radius, keeping recorded volumes and
// equivalent-area diameters consistent with the emitted mesh.
TriMesh make_tube(const std::vector<Vec3>& centers, const std::vector<double>& radii, int sides);

TreeModel generate_tree(const SpeciesArchetype& archetype, double target_height,
                        std::uint64_t variant_seed);

std::vector<TreeModel> build_model_database(const std::vector<SpeciesArchetype>& archetypes,
                                            double height_min, double height_max,
                                            double height_step, int variants_per_height,
                                            std::uint64_t seed);

TreeAttributes compute_attributes(const TreeModel& model, double scale);

// Database directory layout: index.json plus <model_id>_wood.bin /
// <model_id>_foliage.bin mesh files.
void write_model_database(const std::vector<TreeModel>& models, const std::string& dir);
std::vector<TreeModel> read_model_database(const std::string& dir);

std::vector<SpeciesArchetype> load_archetypes(const std::string& json_path);
void write_default_archetypes(const std::string& json_path);

}  // namespace sylva

#endif
