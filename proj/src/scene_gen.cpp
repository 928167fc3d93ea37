#include "sylva/scene_gen.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sylva/errors.hpp"
#include "sylva/rng.hpp"

namespace sylva {

std::string complexity_name(Complexity c) {
    switch (c) {
        case Complexity::easy: return "easy";
        case Complexity::medium: return "medium";
        case Complexity::difficult: return "difficult";
    }
    throw ParameterError("unknown complexity id");
}

Complexity complexity_from_name(const std::string& name) {
    if (name == "easy") return Complexity::easy;
    if (name == "medium") return Complexity::medium;
    if (name == "difficult") return Complexity::difficult;
    throw ParameterError("unknown complexity name: " + name);
}

double Terrain::mean_height() const {
    if (heights.empty()) return 0;
    return std::accumulate(heights.begin(), heights.end(), 0.0) / heights.size();
}

TerrainClassParams terrain_params_for(Complexity c) {
    switch (c) {
        case Complexity::easy: return {1.5, 0.05};
        case Complexity::medium: return {6.0, 0.2};
        case Complexity::difficult: return {12.0, 0.5};
    }
    throw ParameterError("unknown complexity id");
}

namespace {

// Value noise on an integer lattice with smoothstep interpolation.
double lattice_value(std::uint64_t seed, int ix, int iy) {
    std::uint64_t h = seed;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) * 0x9e3779b97f4a7c15ull;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) * 0xc2b2ae3d27d4eb4full;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 32;
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double value_noise(std::uint64_t seed, double x, double y) {
    int ix = static_cast<int>(std::floor(x));
    int iy = static_cast<int>(std::floor(y));
    double fx = x - ix, fy = y - iy;
    double sx = fx * fx * (3 - 2 * fx);
    double sy = fy * fy * (3 - 2 * fy);
    double v00 = lattice_value(seed, ix, iy);
    double v10 = lattice_value(seed, ix + 1, iy);
    double v01 = lattice_value(seed, ix, iy + 1);
    double v11 = lattice_value(seed, ix + 1, iy + 1);
    double a = v00 + (v10 - v00) * sx;
    double b = v01 + (v11 - v01) * sx;
    return a + (b - a) * sy;
}

struct PlaneFit {
    double a = 0, b = 0, c = 0;  // z = a + b*x + c*y
    double rms = 0;
};

PlaneFit fit_plane(const Terrain& t) {
    // Normal equations over the regular grid.
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sz = 0, sxz = 0, syz = 0;
    double n = 0;
    for (int iy = 0; iy < t.ny; ++iy) {
        for (int ix = 0; ix < t.nx; ++ix) {
            double x = ix * t.cell_size, y = iy * t.cell_size, z = t.at(ix, iy);
            sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
            sz += z; sxz += x * z; syz += y * z;
            n += 1;
        }
    }
    // Solve the 3x3 system via Cramer.
    double m[3][3] = {{n, sx, sy}, {sx, sxx, sxy}, {sy, sxy, syy}};
    double rhs[3] = {sz, sxz, syz};
    auto det3 = [](double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double d = det3(m);
    PlaneFit fit;
    if (std::abs(d) < 1e-30) return fit;
    double sol[3];
    for (int k = 0; k < 3; ++k) {
        double mk[3][3];
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) mk[r][col] = col == k ? rhs[r] : m[r][col];
        sol[k] = det3(mk) / d;
    }
    fit.a = sol[0]; fit.b = sol[1]; fit.c = sol[2];
    double ss = 0;
    for (int iy = 0; iy < t.ny; ++iy)
        for (int ix = 0; ix < t.nx; ++ix) {
            double r = t.at(ix, iy) - (fit.a + fit.b * ix * t.cell_size + fit.c * iy * t.cell_size);
            ss += r * r;
        }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

}  // namespace

Terrain generate_terrain(Complexity complexity, double extent_x, double extent_y, double cell_size,
                         std::uint64_t seed) {
    return generate_terrain(terrain_params_for(complexity), complexity, extent_x, extent_y,
                            cell_size, seed);
}

Terrain generate_terrain(const TerrainClassParams& params, Complexity complexity, double extent_x,
                         double extent_y, double cell_size, std::uint64_t seed) {
    if (!(extent_x > 0 && extent_y > 0)) throw ParameterError("terrain extents must be > 0");
    if (!(cell_size > 0)) throw ParameterError("cell_size must be > 0");

    Terrain t;
    t.cell_size = cell_size;
    t.complexity = complexity;
    t.nx = static_cast<int>(std::floor(extent_x / cell_size + 1e-9)) + 1;
    t.ny = static_cast<int>(std::floor(extent_y / cell_size + 1e-9)) + 1;
    t.heights.assign(static_cast<std::size_t>(t.nx) * t.ny, 0.0);

    Rng rng(seed);
    std::uint64_t noise_seed = rng.next_u64();
    double azimuth = rng.uniform(0, 2.0 * M_PI);

    if (params.roughness_rms > 0) {
        // Multi-octave value noise, base wavelength ~ a quarter of the extent.
        double base_freq = 4.0 / std::max(extent_x, extent_y);
        for (int iy = 0; iy < t.ny; ++iy)
            for (int ix = 0; ix < t.nx; ++ix) {
                double x = ix * cell_size, y = iy * cell_size;
                double v = 0, amp = 1, freq = base_freq;
                for (int o = 0; o < 5; ++o) {
                    v += amp * value_noise(noise_seed + o, x * freq + 13.7, y * freq + 7.3);
                    amp *= 0.5;
                    freq *= 2.0;
                }
                t.at(ix, iy) = v;
            }
        // Detrend against the noise's own LS plane, then scale residuals to
        // the target RMS so the configured roughness holds exactly.
        PlaneFit f = fit_plane(t);
        if (f.rms > 1e-12) {
            double gain = params.roughness_rms / f.rms;
            for (int iy = 0; iy < t.ny; ++iy)
                for (int ix = 0; ix < t.nx; ++ix)
                    t.at(ix, iy) = gain * (t.at(ix, iy) -
                                           (f.a + f.b * ix * cell_size + f.c * iy * cell_size));
        }
    }
    // Tilted plane at the configured slope, random azimuth.
    double g = std::tan(params.slope_deg * M_PI / 180.0);
    double gx = g * std::cos(azimuth), gy = g * std::sin(azimuth);
    for (int iy = 0; iy < t.ny; ++iy)
        for (int ix = 0; ix < t.nx; ++ix)
            t.at(ix, iy) += gx * ix * cell_size + gy * iy * cell_size;
    return t;
}

double height_at(const Terrain& terrain, double x, double y) {
    double lx = x - terrain.origin_x;
    double ly = y - terrain.origin_y;
    double ex = terrain.extent_x(), ey = terrain.extent_y();
    const double eps = 1e-9;
    if (lx < -eps || ly < -eps || lx > ex + eps || ly > ey + eps)
        throw DomainError("height_at query outside terrain extent");
    lx = std::clamp(lx, 0.0, ex);
    ly = std::clamp(ly, 0.0, ey);
    double fx = lx / terrain.cell_size;
    double fy = ly / terrain.cell_size;
    int ix = std::min(static_cast<int>(fx), terrain.nx - 2);
    int iy = std::min(static_cast<int>(fy), terrain.ny - 2);
    double tx = fx - ix, ty = fy - iy;
    double h00 = terrain.at(ix, iy), h10 = terrain.at(ix + 1, iy);
    double h01 = terrain.at(ix, iy + 1), h11 = terrain.at(ix + 1, iy + 1);
    double a = h00 + (h10 - h00) * tx;
    double b = h01 + (h11 - h01) * tx;
    return a + (b - a) * ty;
}

std::vector<UnderstoryPoint> generate_understory(const Terrain& terrain, double cover_fraction,
                                                 std::uint64_t seed) {
    UnderstoryConfig cfg;
    cfg.cover_fraction = cover_fraction;
    return generate_understory(terrain, cfg, seed);
}

std::vector<UnderstoryPoint> generate_understory(const Terrain& terrain,
                                                 const UnderstoryConfig& cfg, std::uint64_t seed) {
    if (!(cfg.cover_fraction >= 0 && cfg.cover_fraction <= 1))
        throw ParameterError("cover_fraction must be in [0, 1]");
    std::vector<UnderstoryPoint> out;
    if (cfg.cover_fraction <= 0) return out;

    Rng rng(seed);
    double ex = terrain.extent_x(), ey = terrain.extent_y();
    double plot_area = ex * ey;
    double target_area = cfg.cover_fraction * plot_area;
    double covered = 0;

    while (covered < target_area) {
        double cx = terrain.origin_x + rng.uniform(0, ex);
        double cy = terrain.origin_y + rng.uniform(0, ey);
        bool shrub = rng.uniform() < 0.4;
        double scale = rng.uniform(0.5, 1.5);
        double rot = rng.uniform(0, 2.0 * M_PI);
        double patch_extent = (shrub ? 0.8 : 1.6) * scale;
        covered += M_PI * patch_extent * patch_extent * 0.25;

        int n_pts = shrub ? 180 : 120;
        for (int i = 0; i < n_pts; ++i) {
            double px, py, pz;
            if (shrub) {
                // points near an ellipsoidal shell
                double az = rng.uniform(0, 2.0 * M_PI);
                double el = rng.uniform(0, M_PI / 2);
                double rr = rng.uniform(0.8, 1.0);
                double a = patch_extent * 0.5, c = std::min(0.9 * scale, cfg.max_patch_height);
                px = a * rr * std::cos(el) * std::cos(az);
                py = a * rr * std::cos(el) * std::sin(az);
                pz = c * rr * std::sin(el);
            } else {
                // low turbulent grass sheet
                double u = rng.uniform(-0.5, 0.5), v = rng.uniform(-0.5, 0.5);
                px = u * patch_extent;
                py = v * patch_extent;
                pz = rng.uniform(0.0, 0.35) * scale;
            }
            pz = std::clamp(pz, 0.0, cfg.max_patch_height * scale);
            // rotate about z, then drape onto the terrain
            double wx = cx + px * std::cos(rot) - py * std::sin(rot);
            double wy = cy + px * std::sin(rot) + py * std::cos(rot);
            if (wx < terrain.origin_x || wy < terrain.origin_y ||
                wx > terrain.origin_x + ex || wy > terrain.origin_y + ey)
                continue;  // cropped
            double wz = height_at(terrain, wx, wy) + pz;
            out.push_back({static_cast<float>(wx), static_cast<float>(wy),
                           static_cast<float>(wz)});
        }
    }
    return out;
}

void write_terrain_asc(const Terrain& terrain, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write terrain file: " + path);
    f << "ncols " << terrain.nx << "\n";
    f << "nrows " << terrain.ny << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", terrain.origin_x);
    f << "xllcorner " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.6f", terrain.origin_y);
    f << "yllcorner " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.6f", terrain.cell_size);
    f << "cellsize " << buf << "\n";
    f << "NODATA_value -9999\n";
    // ESRI convention: first row is the northernmost (max y).
    for (int iy = terrain.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < terrain.nx; ++ix) {
            std::snprintf(buf, sizeof(buf), "%.6f", terrain.at(ix, iy));
            f << buf << (ix + 1 < terrain.nx ? " " : "\n");
        }
    }
    if (!f) throw IoError("failed writing terrain file: " + path);
}

Terrain read_terrain_asc(const std::string& path, Complexity complexity) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open terrain file: " + path);
    Terrain t;
    t.complexity = complexity;
    std::string key;
    double nodata;
    f >> key >> t.nx >> key >> t.ny >> key >> t.origin_x >> key >> t.origin_y >> key >>
        t.cell_size >> key >> nodata;
    if (!f || t.nx < 2 || t.ny < 2) throw FormatError("malformed terrain header: " + path);
    t.heights.assign(static_cast<std::size_t>(t.nx) * t.ny, 0.0);
    for (int iy = t.ny - 1; iy >= 0; --iy)
        for (int ix = 0; ix < t.nx; ++ix) {
            if (!(f >> t.at(ix, iy))) throw FormatError("truncated terrain grid: " + path);
        }
    return t;
}

}  // namespace sylva
