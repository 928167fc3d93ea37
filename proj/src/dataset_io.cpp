#include "sylva/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sylva/errors.hpp"
#include "sylva/rng.hpp"

namespace sylva {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "LAS writer assumes a little-endian host");

namespace {

constexpr std::uint16_t kHeaderSize = 375;
constexpr std::uint16_t kPointRecordLength = 37;  // PDRF 6 (30) + 7 extra bytes
constexpr double kScale = 0.001;

struct ByteWriter {
    std::vector<std::uint8_t> buf;

    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::uint8_t tmp[sizeof(T)];
        std::memcpy(tmp, &v, sizeof(T));
        buf.insert(buf.end(), tmp, tmp + sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void put_string(const std::string& s, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i)
            buf.push_back(i < s.size() ? static_cast<std::uint8_t>(s[i]) : 0);
    }
    void pad(std::size_t n) { buf.insert(buf.end(), n, 0); }
};

struct ByteReader {
    const std::uint8_t* p;
    std::size_t size;
    std::size_t pos = 0;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > size) throw FormatError("LAS file truncated");
        T v;
        std::memcpy(&v, p + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    void skip(std::size_t n) {
        if (pos + n > size) throw FormatError("LAS file truncated");
        pos += n;
    }
    std::string get_string(std::size_t width) {
        if (pos + width > size) throw FormatError("LAS file truncated");
        const char* c = reinterpret_cast<const char*>(p + pos);
        std::size_t len = 0;
        while (len < width && c[len] != 0) ++len;
        pos += width;
        return std::string(c, len);
    }
};

// One 192-byte Extra Bytes descriptor (LAS 1.4 spec, user "LASF_Spec",
// record id 4).
void put_extra_descriptor(ByteWriter& w, std::uint8_t data_type, const std::string& name,
                          const std::string& description) {
    w.pad(2);             // reserved
    w.put(data_type);
    w.put<std::uint8_t>(0);  // options: no no_data/min/max/scale/offset
    w.put_string(name, 32);
    w.pad(4);             // unused
    w.pad(24 * 3);        // no_data, min, max
    w.pad(24 * 2);        // scale, offset
    w.put_string(description, 32);
}

// ASPRS-style classification codes so the file is legible in stock viewers;
// the authoritative labels live in the extra bytes.
std::uint8_t asprs_class(SemanticClass s) {
    switch (s) {
        case SemanticClass::terrain: return 2;     // ground
        case SemanticClass::understory: return 3;  // low vegetation
        case SemanticClass::wood: return 4;        // medium vegetation
        case SemanticClass::leaf: return 5;        // high vegetation
    }
    return 1;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0;
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0;
    double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace

void write_las(const PointCloud& cloud, const std::string& path) {
    const auto& pts = cloud.points;

    double min_x = 0, min_y = 0, min_z = 0, max_x = 0, max_y = 0, max_z = 0;
    if (!pts.empty()) {
        min_x = max_x = pts[0].x;
        min_y = max_y = pts[0].y;
        min_z = max_z = pts[0].z;
        for (const auto& p : pts) {
            min_x = std::min(min_x, p.x); max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y); max_y = std::max(max_y, p.y);
            min_z = std::min(min_z, p.z); max_z = std::max(max_z, p.z);
        }
    }
    double off_x = std::floor(min_x), off_y = std::floor(min_y), off_z = std::floor(min_z);

    auto quantize = [](double v, double off) {
        double q = std::round((v - off) / kScale);
        if (q < -2147483648.0 || q > 2147483647.0)
            throw FormatError("coordinate overflow at LAS scale 0.001");
        return static_cast<std::int32_t>(q);
    };

    ByteWriter w;
    // --- public header block ---
    w.put_bytes("LASF", 4);
    w.put<std::uint16_t>(0);          // file source id
    w.put<std::uint16_t>(1);          // global encoding: GPS standard time
    w.pad(16);                        // project GUID
    w.put<std::uint8_t>(1);           // version major
    w.put<std::uint8_t>(4);           // version minor
    w.put_string("sylvagen", 32);
    w.put_string("sylvagen lidar simulator", 32);
    w.put<std::uint16_t>(0);          // creation day (fixed for determinism)
    w.put<std::uint16_t>(0);          // creation year
    w.put<std::uint16_t>(kHeaderSize);

    const std::uint32_t vlr_payload = 3 * 192;
    const std::uint32_t offset_to_points = kHeaderSize + 54 + vlr_payload;
    w.put<std::uint32_t>(offset_to_points);
    w.put<std::uint32_t>(1);          // number of VLRs
    w.put<std::uint8_t>(6);           // point data record format
    w.put<std::uint16_t>(kPointRecordLength);
    w.put<std::uint32_t>(0);          // legacy point count (must be 0 for PDRF 6)
    w.pad(4 * 5);                     // legacy points by return
    w.put<double>(kScale); w.put<double>(kScale); w.put<double>(kScale);
    w.put<double>(off_x); w.put<double>(off_y); w.put<double>(off_z);
    w.put<double>(max_x); w.put<double>(min_x);
    w.put<double>(max_y); w.put<double>(min_y);
    w.put<double>(max_z); w.put<double>(min_z);
    w.put<std::uint64_t>(0);          // start of waveform data
    w.put<std::uint64_t>(0);          // start of first EVLR
    w.put<std::uint32_t>(0);          // number of EVLRs
    w.put<std::uint64_t>(pts.size());
    w.put<std::uint64_t>(pts.size()); // points by return: all first returns
    for (int i = 1; i < 15; ++i) w.put<std::uint64_t>(0);
    if (w.buf.size() != kHeaderSize) throw FormatError("internal: LAS header size mismatch");

    // --- Extra Bytes VLR ---
    w.put<std::uint16_t>(0);          // reserved
    w.put_string("LASF_Spec", 16);
    w.put<std::uint16_t>(4);          // record id: Extra Bytes
    w.put<std::uint16_t>(vlr_payload);
    w.put_string("per-point labels", 32);
    put_extra_descriptor(w, 1, "semantic", "0 terrain 1 understory 2 wood 3 leaf");
    put_extra_descriptor(w, 5, "instance", "tree id, 0 = no instance");
    put_extra_descriptor(w, 3, "viewpoint", "station / leg / flight line");
    if (w.buf.size() != offset_to_points) throw FormatError("internal: LAS VLR size mismatch");

    // --- point records ---
    w.buf.reserve(w.buf.size() + pts.size() * kPointRecordLength);
    for (const auto& p : pts) {
        w.put(quantize(p.x, off_x));
        w.put(quantize(p.y, off_y));
        w.put(quantize(p.z, off_z));
        w.put<std::uint16_t>(0);      // intensity
        w.put<std::uint8_t>(0x11);    // return 1 of 1
        w.put<std::uint8_t>(0);       // flags / channel / direction / edge
        w.put(asprs_class(p.semantic));
        w.put<std::uint8_t>(0);       // user data
        w.put<std::int16_t>(0);       // scan angle
        w.put<std::uint16_t>(p.viewpoint);  // point source id
        w.put<double>(0);             // GPS time (fixed for determinism)
        w.put(static_cast<std::uint8_t>(p.semantic));
        w.put<std::uint32_t>(p.instance);
        w.put<std::uint16_t>(p.viewpoint);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write LAS file: " + path);
    f.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw IoError("write failed: " + path);
}

PointCloud read_las(const std::string& path, bool* labels_missing) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open LAS file: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    ByteReader r{data.data(), data.size()};

    char sig[4];
    std::memcpy(sig, data.data(), std::min<std::size_t>(4, data.size()));
    if (data.size() < kHeaderSize || std::memcmp(sig, "LASF", 4) != 0)
        throw FormatError("not a LAS file: " + path);
    r.pos = 24;
    std::uint8_t ver_major = r.get<std::uint8_t>();
    std::uint8_t ver_minor = r.get<std::uint8_t>();
    if (ver_major != 1 || ver_minor != 4) throw FormatError("unsupported LAS version");
    r.pos = 94;
    std::uint16_t header_size = r.get<std::uint16_t>();
    std::uint32_t offset_to_points = r.get<std::uint32_t>();
    std::uint32_t n_vlrs = r.get<std::uint32_t>();
    std::uint8_t pdrf = r.get<std::uint8_t>();
    std::uint16_t record_len = r.get<std::uint16_t>();
    if (pdrf != 6) throw FormatError("unsupported point data record format");
    r.pos = 131;
    double sx = r.get<double>(), sy = r.get<double>(), sz = r.get<double>();
    double ox = r.get<double>(), oy = r.get<double>(), oz = r.get<double>();
    r.pos = 247;
    std::uint64_t n_points = r.get<std::uint64_t>();

    // scan VLRs for the Extra Bytes record; record label field offsets
    int sem_off = -1, inst_off = -1, view_off = -1;
    r.pos = header_size;
    for (std::uint32_t v = 0; v < n_vlrs; ++v) {
        r.skip(2);
        std::string user_id = r.get_string(16);
        std::uint16_t record_id = r.get<std::uint16_t>();
        std::uint16_t payload = r.get<std::uint16_t>();
        r.get_string(32);  // description
        if (user_id == "LASF_Spec" && record_id == 4) {
            int cursor = 0;
            for (std::uint16_t d = 0; d + 192 <= payload; d += 192) {
                std::size_t base = r.pos + d;
                std::uint8_t data_type = data.at(base + 2);
                ByteReader nr{data.data(), data.size(), base + 4};
                std::string name = nr.get_string(32);
                int width = 0;
                switch (data_type) {
                    case 1: width = 1; break;   // u8
                    case 3: width = 2; break;   // u16
                    case 5: width = 4; break;   // u32
                    default: throw FormatError("unsupported extra-byte type");
                }
                if (name == "semantic" && data_type == 1) sem_off = cursor;
                if (name == "instance" && data_type == 5) inst_off = cursor;
                if (name == "viewpoint" && data_type == 3) view_off = cursor;
                cursor += width;
            }
        }
        r.skip(payload);
    }

    bool have_labels = sem_off >= 0 && inst_off >= 0 && view_off >= 0;
    if (!have_labels) {
        if (!labels_missing) throw FormatError("LAS file lacks the label extra bytes: " + path);
        *labels_missing = true;
    } else if (labels_missing) {
        *labels_missing = false;
    }

    if (offset_to_points + n_points * record_len > data.size())
        throw FormatError("LAS point data truncated: " + path);

    PointCloud cloud;
    cloud.points.reserve(n_points);
    for (std::uint64_t i = 0; i < n_points; ++i) {
        std::size_t base = offset_to_points + i * record_len;
        ByteReader pr{data.data(), data.size(), base};
        LabeledPoint pt;
        pt.x = pr.get<std::int32_t>() * sx + ox;
        pt.y = pr.get<std::int32_t>() * sy + oy;
        pt.z = pr.get<std::int32_t>() * sz + oz;
        if (have_labels) {
            std::size_t extra = base + 30;
            std::uint8_t sem = data.at(extra + sem_off);
            if (sem > 3) throw FormatError("semantic code out of range");
            pt.semantic = static_cast<SemanticClass>(sem);
            std::memcpy(&pt.instance, data.data() + extra + inst_off, 4);
            std::memcpy(&pt.viewpoint, data.data() + extra + view_off, 2);
        }
        cloud.points.push_back(pt);
    }
    return cloud;
}

void export_tree_attributes(const PlotInstance& plot, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write attribute CSV: " + path);
    f << "plot_id,instance_id,species,x,y,height_m,dbh_m,crown_width_m,crown_area_m2,"
         "leaf_area_m2,wood_volume_m3\n";
    std::vector<const PlacedTree*> order;
    for (const auto& t : plot.trees) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const PlacedTree* a, const PlacedTree* b) { return a->instance_id < b->instance_id; });
    char line[512];
    for (const auto* t : order) {
        const auto& a = t->attributes;
        std::snprintf(line, sizeof line, "%s,%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      plot.plot_id.c_str(), t->instance_id, species_name(t->species).c_str(),
                      t->x, t->y, a.height, a.dbh, a.crown_width, a.crown_area, a.leaf_area,
                      a.wood_volume);
        f << line;
    }
}

std::string split_name(SplitSet s) {
    switch (s) {
        case SplitSet::train: return "train";
        case SplitSet::val: return "val";
        case SplitSet::test: return "test";
    }
    throw ConfigError("unknown split id");
}

SplitSet split_from_name(const std::string& name) {
    if (name == "train") return SplitSet::train;
    if (name == "val") return SplitSet::val;
    if (name == "test") return SplitSet::test;
    throw ConfigError("unknown split name: " + name);
}

void DatasetManifest::validate() const {
    for (const auto& p : plots)
        if (p.tree_count < 0) throw ConfigError("negative tree count in manifest");
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    json doc;
    doc["seed"] = manifest.seed;
    doc["config_hash"] = manifest.config_hash;
    doc["tool_version"] = manifest.tool_version;
    doc["plots"] = json::array();
    for (const auto& p : manifest.plots) {
        json e;
        e["plot_id"] = p.plot_id;
        e["complexity"] = complexity_name(p.complexity);
        e["tree_count"] = p.tree_count;
        e["point_files"] = p.point_files;
        e["split"] = split_name(p.split);
        doc["plots"].push_back(e);
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest: " + path);
    f << doc.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    json doc = json::parse(f);
    DatasetManifest m;
    m.seed = doc.value("seed", 0ull);
    m.config_hash = doc.value("config_hash", "");
    m.tool_version = doc.value("tool_version", "");
    for (const auto& e : doc.at("plots")) {
        PlotEntry p;
        p.plot_id = e.at("plot_id").get<std::string>();
        p.complexity = complexity_from_name(e.at("complexity").get<std::string>());
        p.tree_count = e.at("tree_count").get<int>();
        if (e.contains("point_files"))
            p.point_files = e.at("point_files").get<std::map<std::string, std::string>>();
        p.split = split_from_name(e.value("split", "train"));
        m.plots.push_back(p);
    }
    m.validate();
    return m;
}

std::string dataset_stats(const DatasetManifest& manifest, const std::vector<PlotInstance>& plots,
                          const std::vector<PointCloud>& clouds) {
    json doc;

    // per-platform per-semantic point counts
    static const char* kSemNames[4] = {"terrain", "understory", "wood", "leaf"};
    json platforms = json::object();
    for (const auto& c : clouds) {
        std::string pn = platform_name(c.platform);
        if (!platforms.contains(pn)) {
            platforms[pn]["total"] = 0;
            for (const char* s : kSemNames) platforms[pn]["by_class"][s] = 0;
        }
        std::array<std::uint64_t, 4> counts{};
        for (const auto& p : c.points) counts[static_cast<int>(p.semantic)]++;
        for (int i = 0; i < 4; ++i)
            platforms[pn]["by_class"][kSemNames[i]] =
                platforms[pn]["by_class"][kSemNames[i]].get<std::uint64_t>() + counts[i];
        platforms[pn]["total"] = platforms[pn]["total"].get<std::uint64_t>() + c.points.size();
    }
    doc["platforms"] = platforms;

    // per-species tree counts
    json species = json::object();
    species["pine"] = 0; species["spruce"] = 0; species["birch"] = 0;
    for (const auto& pl : plots)
        for (const auto& t : pl.trees)
            species[species_name(t.species)] = species[species_name(t.species)].get<int>() + 1;
    doc["species_counts"] = species;

    // per-complexity summaries: stem density per plot; dbh/height pooled
    json per_complexity = json::object();
    for (int c = 0; c < 3; ++c) {
        Complexity cx = static_cast<Complexity>(c);
        std::vector<double> density, dbh, height;
        int n_plots = 0;
        for (const auto& pl : plots) {
            if (pl.complexity != cx) continue;
            ++n_plots;
            double area_ha = pl.extent_x * pl.extent_y / 10000.0;
            density.push_back(area_ha > 0 ? pl.trees.size() / area_ha : 0);
            for (const auto& t : pl.trees) {
                dbh.push_back(t.attributes.dbh);
                height.push_back(t.attributes.height);
            }
        }
        json s;
        s["plot_count"] = n_plots;
        s["stem_density_mean"] = mean_of(density);
        s["stem_density_sd"] = sd_of(density);
        s["dbh_mean"] = mean_of(dbh);
        s["dbh_sd"] = sd_of(dbh);
        s["height_mean"] = mean_of(height);
        s["height_sd"] = sd_of(height);
        per_complexity[complexity_name(cx)] = s;
    }
    doc["per_complexity"] = per_complexity;
    doc["plot_count"] = manifest.plots.size();

    return doc.dump(2) + "\n";
}

std::array<int, 3> apportion_split(int n, const std::array<double, 3>& ratios) {
    double total = ratios[0] + ratios[1] + ratios[2];
    if (!(total > 0)) throw ConfigError("split ratios must sum to a positive value");
    std::array<double, 3> w{ratios[0] / total, ratios[1] / total, ratios[2] / total};
    // highest-averages (D'Hondt): award each seat to argmax w_i / (s_i + 1),
    // ties toward train, then val, then test
    std::array<int, 3> seats{0, 0, 0};
    for (int k = 0; k < n; ++k) {
        int best = -1;
        double best_q = -1;
        for (int i = 0; i < 3; ++i) {
            if (w[i] <= 0) continue;
            double q = w[i] / (seats[i] + 1);
            if (q > best_q + 1e-15) {
                best_q = q;
                best = i;
            }
        }
        if (best < 0) throw ConfigError("no positive split ratio");
        seats[best]++;
    }
    return seats;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
    DatasetManifest out = manifest;
    for (int c = 0; c < 3; ++c) {
        Complexity cx = static_cast<Complexity>(c);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.plots.size(); ++i)
            if (out.plots[i].complexity == cx) idx.push_back(i);
        if (idx.empty()) continue;

        Rng rng = Rng(seed).derive("split", static_cast<std::uint64_t>(c));
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)));
            std::swap(idx[i], idx[j]);
        }

        auto counts = apportion_split(static_cast<int>(idx.size()), ratios);
        std::size_t k = 0;
        for (int s = 0; s < 3; ++s)
            for (int c2 = 0; c2 < counts[s]; ++c2)
                out.plots[idx[k++]].split = static_cast<SplitSet>(s);
    }
    out.seed = seed;
    return out;
}

}  // namespace sylva
