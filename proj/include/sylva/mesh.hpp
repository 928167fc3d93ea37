#ifndef SYLVA_MESH_HPP
#define SYLVA_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sylva/geom.hpp"

namespace sylva {

// Triangle mesh with f32 vertices, matching the on-disk layout so attribute
// computations and serialized data agree bit for bit.
struct TriMesh {
    std::vector<std::array<float, 3>> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }

    Vec3 vertex(std::uint32_t i) const {
        return {vertices[i][0], vertices[i][1], vertices[i][2]};
    }

    // One-sided surface area, accumulated in double.
    double surface_area() const;

    // Signed volume via the divergence theorem; exact for closed, outward-
    // oriented meshes.
    double signed_volume() const;

    double max_z() const;
    double min_z() const;

    void append(const TriMesh& other);
};

// Binary layout: u32 vertex count, f32 xyz triples, u32 triangle count,
// u32 index triples; little-endian.
void write_mesh(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh(const std::string& path);
std::vector<std::uint8_t> mesh_to_bytes(const TriMesh& mesh);

}  // namespace sylva

#endif
