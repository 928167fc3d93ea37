#ifndef SYLVA_DATASET_IO_HPP
#define SYLVA_DATASET_IO_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sylva/lidar_sim.hpp"
#include "sylva/plot_assembly.hpp"

namespace sylva {

// LAS 1.4, point data record format 6, with three extra-byte fields
// (semantic u8, instance u32, viewpoint u16) registered via an Extra Bytes
// VLR. Layout documented in docs/format.md.
void write_las(const PointCloud& cloud, const std::string& path);

// Inverse of write_las up to coordinate quantization (scale 0.001 m). If the
// label fields are missing: throws FormatError when labels_missing is null,
// otherwise sets *labels_missing and returns geometry-only points.
PointCloud read_las(const std::string& path, bool* labels_missing = nullptr);

// CSV, one row per placed tree ordered by instance_id, header:
// plot_id,instance_id,species,x,y,height_m,dbh_m,crown_width_m,crown_area_m2,
// leaf_area_m2,wood_volume_m3
void export_tree_attributes(const PlotInstance& plot, const std::string& path);

enum class SplitSet : int { train = 0, val = 1, test = 2 };

std::string split_name(SplitSet s);
SplitSet split_from_name(const std::string& name);

struct PlotEntry {
    std::string plot_id;
    Complexity complexity = Complexity::easy;
    int tree_count = 0;
    std::map<std::string, std::string> point_files;  // platform name -> path
    SplitSet split = SplitSet::train;
};

struct DatasetManifest {
    std::vector<PlotEntry> plots;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string tool_version;

    void validate() const;
};

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// JSON document (pretty-printed): per-platform per-semantic point counts,
// per-species tree counts, per-complexity attribute summaries.
std::string dataset_stats(const DatasetManifest& manifest, const std::vector<PlotInstance>& plots,
                          const std::vector<PointCloud>& clouds);

// Stratified by complexity; within each class the plots are shuffled by seed
// and split counts follow highest-averages apportionment of the ratios
// (ties toward train, then val, then test). Deterministic per seed.
DatasetManifest split_dataset(const DatasetManifest& manifest, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

// Per-class split counts for n plots, exposed for tests.
std::array<int, 3> apportion_split(int n, const std::array<double, 3>& ratios);

}  // namespace sylva

#endif
