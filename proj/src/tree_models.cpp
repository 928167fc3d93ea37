#include "sylva/tree_models.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sylva/errors.hpp"
#include "sylva/rng.hpp"

namespace sylva {

namespace fs = std::filesystem;
using nlohmann::json;

std::string species_name(Species s) {
    switch (s) {
        case Species::pine: return "pine";
        case Species::spruce: return "spruce";
        case Species::birch: return "birch";
    }
    throw ParameterError("unknown species id");
}

Species species_from_name(const std::string& name) {
    if (name == "pine") return Species::pine;
    if (name == "spruce") return Species::spruce;
    if (name == "birch") return Species::birch;
    throw ParameterError("unknown species name: " + name);
}

std::string crown_shape_name(CrownShape s) {
    switch (s) {
        case CrownShape::conical: return "conical";
        case CrownShape::ellipsoidal: return "ellipsoidal";
        case CrownShape::spreading: return "spreading";
    }
    throw ParameterError("unknown crown shape id");
}

CrownShape crown_shape_from_name(const std::string& name) {
    if (name == "conical") return CrownShape::conical;
    if (name == "ellipsoidal") return CrownShape::ellipsoidal;
    if (name == "spreading") return CrownShape::spreading;
    throw ParameterError("unknown crown shape name: " + name);
}

void SpeciesArchetype::validate() const {
    if (!(crown_base_fraction > 0 && crown_base_fraction < 1))
        throw ParameterError("crown_base_fraction must be in (0, 1)");
    if (branch_levels < 1) throw ParameterError("branch_levels must be >= 1");
    if (!(leaf_element_size > 0)) throw ParameterError("leaf_element_size must be > 0");
    if (!(leaf_density > 0)) throw ParameterError("leaf_density must be > 0");
    if (!(trunk_taper >= 0 && trunk_taper <= 0.95))
        throw ParameterError("trunk_taper must be in [0, 0.95]");
    if (!(branch_angle_min_deg > 0 && branch_angle_max_deg <= 90 &&
          branch_angle_min_deg <= branch_angle_max_deg))
        throw ParameterError("branch angle range must satisfy 0 < min <= max <= 90");
}

std::vector<SpeciesArchetype> default_archetypes() {
    SpeciesArchetype pine;
    pine.species = Species::pine;
    pine.trunk_taper = 0.90;
    pine.branch_levels = 2;
    pine.branch_angle_min_deg = 55;
    pine.branch_angle_max_deg = 80;
    pine.crown_base_fraction = 0.45;
    pine.crown_shape = CrownShape::conical;
    pine.leaf_element_size = 0.06;
    pine.leaf_density = 18;

    SpeciesArchetype spruce;
    spruce.species = Species::spruce;
    spruce.trunk_taper = 0.92;
    spruce.branch_levels = 2;
    spruce.branch_angle_min_deg = 62;
    spruce.branch_angle_max_deg = 85;
    spruce.crown_base_fraction = 0.15;
    spruce.crown_shape = CrownShape::conical;
    spruce.leaf_element_size = 0.05;
    spruce.leaf_density = 22;

    SpeciesArchetype birch;
    birch.species = Species::birch;
    birch.trunk_taper = 0.88;
    birch.branch_levels = 2;
    birch.branch_angle_min_deg = 40;
    birch.branch_angle_max_deg = 70;
    birch.crown_base_fraction = 0.35;
    birch.crown_shape = CrownShape::ellipsoidal;
    birch.leaf_element_size = 0.07;
    birch.leaf_density = 14;

    return {pine, spruce, birch};
}

namespace {

// Scale factor from nominal radius to polygon vertex radius so the n-gon
// cross-section area equals pi * r^2.
double ring_vertex_scale(int sides) {
    double n = sides;
    return std::sqrt(2.0 * M_PI / (n * std::sin(2.0 * M_PI / n)));
}

// Orthonormal basis perpendicular to d.
void perp_frame(const Vec3& d, Vec3& u, Vec3& v) {
    Vec3 ref = std::abs(d.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    u = d.cross(ref).normalized();
    v = d.cross(u);
}

}  // namespace

TriMesh make_tube(const std::vector<Vec3>& centers, const std::vector<double>& radii, int sides) {
    if (centers.size() < 2 || centers.size() != radii.size())
        throw ParameterError("make_tube: need >= 2 rings with matching radii");
    TriMesh mesh;
    const double vscale = ring_vertex_scale(sides);
    const std::size_t n_rings = centers.size();
    const std::uint32_t n = static_cast<std::uint32_t>(sides);

    Vec3 axis = (centers.back() - centers.front()).normalized();
    Vec3 u, v;
    perp_frame(axis, u, v);

    for (std::size_t k = 0; k < n_rings; ++k) {
        double rv = radii[k] * vscale;
        for (std::uint32_t i = 0; i < n; ++i) {
            double a = 2.0 * M_PI * i / n;
            Vec3 p = centers[k] + rv * std::cos(a) * u + rv * std::sin(a) * v;
            mesh.vertices.push_back({static_cast<float>(p.x), static_cast<float>(p.y),
                                     static_cast<float>(p.z)});
        }
    }
    // side quads, outward winding
    for (std::uint32_t k = 0; k + 1 < n_rings; ++k) {
        std::uint32_t a0 = k * n, b0 = (k + 1) * n;
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uint32_t j = (i + 1) % n;
            mesh.triangles.push_back({a0 + i, a0 + j, b0 + j});
            mesh.triangles.push_back({a0 + i, b0 + j, b0 + i});
        }
    }
    // end caps
    std::uint32_t c_lo = static_cast<std::uint32_t>(mesh.vertices.size());
    const Vec3& lo = centers.front();
    mesh.vertices.push_back({static_cast<float>(lo.x), static_cast<float>(lo.y),
                             static_cast<float>(lo.z)});
    std::uint32_t c_hi = static_cast<std::uint32_t>(mesh.vertices.size());
    const Vec3& hi = centers.back();
    mesh.vertices.push_back({static_cast<float>(hi.x), static_cast<float>(hi.y),
                             static_cast<float>(hi.z)});
    std::uint32_t top0 = static_cast<std::uint32_t>(n_rings - 1) * n;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t j = (i + 1) % n;
        mesh.triangles.push_back({c_lo, j, i});
        mesh.triangles.push_back({c_hi, top0 + i, top0 + j});
    }
    return mesh;
}

namespace {

// Nominal DBH as a function of height, before per-variant jitter. Spans the
// 0.05-0.35 m envelope over the 2-35 m database range.
double nominal_dbh(double height) {
    double t = std::clamp((height - 2.0) / 33.0, 0.0, 1.2);
    return 0.05 + 0.30 * t;
}

struct BranchSegment {
    Vec3 start;
    Vec3 end;
};

void append_leaf_elements(TriMesh& foliage, const Vec3& a, const Vec3& b, double density,
                          double size, double max_center_z, Rng& rng) {
    double len = (b - a).norm();
    if (len <= 0) return;
    int count = std::max(1, static_cast<int>(std::lround(density * len)));
    Vec3 dir = (b - a) * (1.0 / len);
    Vec3 u, v;
    perp_frame(dir, u, v);
    for (int i = 0; i < count; ++i) {
        double t = rng.uniform(0.05, 1.0);
        Vec3 c = a + t * len * dir;
        if (c.z > max_center_z) continue;
        double roll = rng.uniform(0, 2.0 * M_PI);
        double s = size * rng.uniform(0.8, 1.2) * 0.5;
        Vec3 e1 = std::cos(roll) * u + std::sin(roll) * v;
        Vec3 e2 = dir;
        // two crossed quads sharing the long axis
        for (int q = 0; q < 2; ++q) {
            Vec3 w = q == 0 ? e1 : e1.cross(e2).normalized();
            Vec3 p0 = c - s * e2 - s * w;
            Vec3 p1 = c + s * e2 - s * w;
            Vec3 p2 = c + s * e2 + s * w;
            Vec3 p3 = c - s * e2 + s * w;
            std::uint32_t base = static_cast<std::uint32_t>(foliage.vertices.size());
            for (const Vec3& p : {p0, p1, p2, p3})
                foliage.vertices.push_back({static_cast<float>(p.x), static_cast<float>(p.y),
                                            static_cast<float>(p.z)});
            foliage.triangles.push_back({base, base + 1, base + 2});
            foliage.triangles.push_back({base, base + 2, base + 3});
        }
    }
}

}  // namespace

TreeModel generate_tree(const SpeciesArchetype& archetype, double target_height,
                        std::uint64_t variant_seed) {
    archetype.validate();
    if (!(target_height > 0)) throw ParameterError("target_height must be > 0");

    const double H = target_height;
    Rng rng(variant_seed);

    TreeModel model;
    model.species = archetype.species;
    model.nominal_height = H;

    // --- trunk ---
    const double taper = archetype.trunk_taper;
    double dbh = nominal_dbh(H) * rng.uniform(0.9, 1.1);
    double r0;
    if (H > 1.5) {
        r0 = (dbh / 2.0) / (1.0 - taper * 1.3 / H);
    } else {
        r0 = dbh / 2.0;
    }
    auto trunk_radius = [&](double z) { return std::max(r0 * (1.0 - taper * z / H), 0.004); };

    std::vector<double> ring_z;
    ring_z.push_back(0.0);
    if (H > 1.5) {
        ring_z.push_back(0.65);
        ring_z.push_back(1.3);
    }
    int upper_segments = std::clamp(static_cast<int>(std::lround(H / 2.5)), 3, 14);
    double z_lo = ring_z.back();
    for (int i = 1; i <= upper_segments; ++i)
        ring_z.push_back(z_lo + (H - z_lo) * i / upper_segments);

    std::vector<Vec3> centers;
    std::vector<double> radii;
    for (double z : ring_z) {
        centers.push_back({0, 0, z});
        radii.push_back(trunk_radius(z));
        model.trunk_rings.push_back({z, radii.back()});
    }
    const int trunk_sides = 16;
    model.wood_mesh = make_tube(centers, radii, trunk_sides);

    // --- branches ---
    const double leaf_size = archetype.leaf_element_size;
    const double crown_base = archetype.crown_base_fraction * H;
    const double crown_len = H - crown_base;
    const double crown_radius_target = 0.25 + 0.035 * H;
    const double max_foliage_center_z = H - leaf_size;

    int n_branches = std::clamp(
        static_cast<int>(std::lround(crown_len * 4.5 * rng.uniform(0.85, 1.15))), 3, 64);
    const double ang_min = archetype.branch_angle_min_deg * M_PI / 180.0;
    const double ang_max = archetype.branch_angle_max_deg * M_PI / 180.0;

    for (int b = 0; b < n_branches; ++b) {
        double u01 = (b + rng.uniform(0.2, 0.8)) / n_branches;
        double z_a = crown_base + leaf_size + u01 * std::max(crown_len - 2 * leaf_size, 0.0) * 0.95;
        z_a = std::min(z_a, H - 2 * leaf_size);
        double az = rng.uniform(0, 2.0 * M_PI);
        double phi = rng.uniform(ang_min, ang_max);

        double len;
        switch (archetype.crown_shape) {
            case CrownShape::conical: len = crown_radius_target * (1.0 - 0.85 * u01); break;
            case CrownShape::ellipsoidal:
                len = crown_radius_target * std::sqrt(std::max(0.08, 1.0 - (2 * u01 - 1) * (2 * u01 - 1)));
                break;
            case CrownShape::spreading:
            default: len = crown_radius_target * (0.55 + 0.45 * u01); break;
        }
        len = std::max(len * rng.uniform(0.85, 1.15), 0.12);

        double headroom = H - z_a - leaf_size;
        if (len * std::cos(phi) > 0.9 * headroom)
            phi = std::acos(std::clamp(0.9 * headroom / len, 0.0, 1.0));

        Vec3 dir{std::sin(phi) * std::cos(az), std::sin(phi) * std::sin(az), std::cos(phi)};
        Vec3 start{0, 0, z_a};
        double rb = std::min(0.35 * trunk_radius(z_a) + 0.004, 0.05);
        Vec3 mid = start + dir * (len * 0.55);
        Vec3 end = start + dir * len;
        model.wood_mesh.append(make_tube({start, mid, end}, {rb, rb * 0.6, rb * 0.25}, 6));

        std::vector<BranchSegment> terminal;
        if (archetype.branch_levels >= 2 && len > 0.25) {
            int n_twigs = 2 + static_cast<int>(rng.uniform_int(0, 2));
            for (int t = 0; t < n_twigs; ++t) {
                double tp = rng.uniform(0.3, 0.9);
                Vec3 ts = start + dir * (len * tp);
                double taz = rng.uniform(0, 2.0 * M_PI);
                Vec3 pu, pv;
                perp_frame(dir, pu, pv);
                double off = rng.uniform(0.5, 0.9);  // tilt away from the parent axis
                Vec3 tdir = (dir * std::cos(off) +
                             (std::cos(taz) * pu + std::sin(taz) * pv) * std::sin(off));
                if (tdir.z < 0) tdir.z = 0;
                tdir = tdir.normalized();
                double tlen = len * rng.uniform(0.3, 0.5);
                Vec3 te = ts + tdir * tlen;
                if (te.z > H - leaf_size) te.z = H - leaf_size;
                model.wood_mesh.append(make_tube({ts, te}, {rb * 0.4, rb * 0.15}, 6));
                terminal.push_back({ts, te});
            }
        }
        terminal.push_back({start, end});
        for (const auto& seg : terminal)
            append_leaf_elements(model.foliage_mesh, seg.start, seg.end, archetype.leaf_density,
                                 leaf_size, max_foliage_center_z, rng);
    }

    model.wood_volume_base = model.wood_mesh.signed_volume();
    return model;
}

std::vector<TreeModel> build_model_database(const std::vector<SpeciesArchetype>& archetypes,
                                            double height_min, double height_max,
                                            double height_step, int variants_per_height,
                                            std::uint64_t seed) {
    if (!(height_min < height_max) && height_min != height_max)
        throw ParameterError("height_min must be <= height_max");
    if (!(height_step > 0)) throw ParameterError("height_step must be > 0");
    if (variants_per_height < 1) throw ParameterError("variants_per_height must be >= 1");
    for (const auto& a : archetypes) a.validate();

    std::vector<TreeModel> models;
    Rng base(seed);
    for (const auto& arch : archetypes) {
        int n_heights = static_cast<int>(std::floor((height_max - height_min) / height_step + 1e-9)) + 1;
        for (int hi = 0; hi < n_heights; ++hi) {
            double h = height_min + hi * height_step;
            for (int v = 0; v < variants_per_height; ++v) {
                std::string id = species_name(arch.species) + "_h" + std::to_string(hi) + "_v" +
                                 std::to_string(v);
                Rng sub = base.derive(id);
                TreeModel m = generate_tree(arch, h, sub.next_u64());
                m.model_id = id;
                models.push_back(std::move(m));
            }
        }
    }
    return models;
}

TreeAttributes compute_attributes(const TreeModel& model, double scale) {
    if (!(scale > 0)) throw ParameterError("scale must be > 0");
    if (model.wood_mesh.empty()) throw ParameterError("wood_mesh is empty");

    TreeAttributes attr;
    double model_height = model.wood_mesh.max_z();
    if (!model.foliage_mesh.empty()) model_height = std::max(model_height, model.foliage_mesh.max_z());
    attr.height = scale * model_height;

    // DBH from the trunk radius profile: equivalent-area diameter of the
    // cross-section at breast height. The slice is taken at 1.3 m in the
    // model frame so DBH scales linearly with the scale factor; trees whose
    // scaled height falls below 1.3 m are measured at half tree height and
    // flagged.
    double slice_z = 1.3;
    if (attr.height < 1.3) {
        slice_z = model_height / 2.0;
        attr.dbh_at_half_height = true;
    }
    const auto& rings = model.trunk_rings;
    if (rings.empty()) throw ParameterError("model has no trunk ring record");
    double r = rings.back()[1];
    if (slice_z <= rings.front()[0]) {
        r = rings.front()[1];
    } else {
        for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
            if (slice_z <= rings[i + 1][0]) {
                double t = (slice_z - rings[i][0]) / (rings[i + 1][0] - rings[i][0]);
                r = rings[i][1] + t * (rings[i + 1][1] - rings[i][1]);
                break;
            }
        }
    }
    attr.dbh = 2.0 * r * scale;

    if (!model.foliage_mesh.empty()) {
        std::vector<Vec2> xy;
        xy.reserve(model.foliage_mesh.vertices.size());
        for (const auto& v : model.foliage_mesh.vertices)
            xy.push_back({v[0] * scale, v[1] * scale});
        attr.crown_area = convex_hull_area(xy);
        attr.crown_width = min_enclosing_circle_diameter(std::move(xy));
        attr.leaf_area = model.foliage_mesh.surface_area() * scale * scale;
    }
    attr.wood_volume = model.wood_volume_base * scale * scale * scale;
    return attr;
}

namespace {

json attributes_to_json(const TreeAttributes& a) {
    return json{{"height_m", a.height},       {"dbh_m", a.dbh},
                {"crown_width_m", a.crown_width}, {"crown_area_m2", a.crown_area},
                {"leaf_area_m2", a.leaf_area}, {"wood_volume_m3", a.wood_volume},
                {"dbh_at_half_height", a.dbh_at_half_height}};
}

}  // namespace

void write_model_database(const std::vector<TreeModel>& models, const std::string& dir) {
    fs::create_directories(dir);
    json index = json::array();
    for (const auto& m : models) {
        write_mesh(m.wood_mesh, (fs::path(dir) / (m.model_id + "_wood.bin")).string());
        write_mesh(m.foliage_mesh, (fs::path(dir) / (m.model_id + "_foliage.bin")).string());
        json rings = json::array();
        for (const auto& r : m.trunk_rings) rings.push_back({r[0], r[1]});
        index.push_back({{"model_id", m.model_id},
                         {"species", species_name(m.species)},
                         {"nominal_height_m", m.nominal_height},
                         {"trunk_rings", rings},
                         {"wood_volume_base_m3", m.wood_volume_base},
                         {"attributes", attributes_to_json(compute_attributes(m, 1.0))}});
    }
    std::ofstream f(fs::path(dir) / "index.json");
    if (!f) throw IoError("cannot write database index: " + dir);
    f << index.dump(2) << "\n";
}

std::vector<TreeModel> read_model_database(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "index.json");
    if (!f) throw IoError("cannot read database index in: " + dir);
    json index = json::parse(f);
    std::vector<TreeModel> models;
    for (const auto& e : index) {
        TreeModel m;
        m.model_id = e.at("model_id").get<std::string>();
        m.species = species_from_name(e.at("species").get<std::string>());
        m.nominal_height = e.at("nominal_height_m").get<double>();
        m.wood_volume_base = e.at("wood_volume_base_m3").get<double>();
        for (const auto& r : e.at("trunk_rings"))
            m.trunk_rings.push_back({r[0].get<double>(), r[1].get<double>()});
        m.wood_mesh = read_mesh((fs::path(dir) / (m.model_id + "_wood.bin")).string());
        m.foliage_mesh = read_mesh((fs::path(dir) / (m.model_id + "_foliage.bin")).string());
        models.push_back(std::move(m));
    }
    return models;
}

namespace {

SpeciesArchetype archetype_from_json(const json& j) {
    SpeciesArchetype a;
    a.species = species_from_name(j.at("species").get<std::string>());
    a.trunk_taper = j.at("trunk_taper").get<double>();
    a.branch_levels = j.at("branch_levels").get<int>();
    a.branch_angle_min_deg = j.at("branch_angle_min_deg").get<double>();
    a.branch_angle_max_deg = j.at("branch_angle_max_deg").get<double>();
    a.crown_base_fraction = j.at("crown_base_fraction").get<double>();
    a.crown_shape = crown_shape_from_name(j.at("crown_shape").get<std::string>());
    a.leaf_element_size = j.at("leaf_element_size_m").get<double>();
    a.leaf_density = j.at("leaf_density_per_m").get<double>();
    a.validate();
    return a;
}

json archetype_to_json(const SpeciesArchetype& a) {
    return json{{"species", species_name(a.species)},
                {"trunk_taper", a.trunk_taper},
                {"branch_levels", a.branch_levels},
                {"branch_angle_min_deg", a.branch_angle_min_deg},
                {"branch_angle_max_deg", a.branch_angle_max_deg},
                {"crown_base_fraction", a.crown_base_fraction},
                {"crown_shape", crown_shape_name(a.crown_shape)},
                {"leaf_element_size_m", a.leaf_element_size},
                {"leaf_density_per_m", a.leaf_density}};
}

}  // namespace

std::vector<SpeciesArchetype> load_archetypes(const std::string& json_path) {
    std::ifstream f(json_path);
    if (!f) throw IoError("cannot open archetype config: " + json_path);
    json doc = json::parse(f);
    std::vector<SpeciesArchetype> out;
    for (const auto& e : doc.at("archetypes")) out.push_back(archetype_from_json(e));
    if (out.empty()) throw ConfigError("archetype config lists no archetypes");
    return out;
}

void write_default_archetypes(const std::string& json_path) {
    json doc;
    doc["archetypes"] = json::array();
    for (const auto& a : default_archetypes()) doc["archetypes"].push_back(archetype_to_json(a));
    std::ofstream f(json_path);
    if (!f) throw IoError("cannot write archetype config: " + json_path);
    f << doc.dump(2) << "\n";
}

}  // namespace sylva
