#include "sylva/mesh.hpp"

#include <cstring>
#include <fstream>

#include "sylva/errors.hpp"

namespace sylva {

double TriMesh::surface_area() const {
    double area = 0;
    for (const auto& t : triangles) {
        Vec3 a = vertex(t[0]), b = vertex(t[1]), c = vertex(t[2]);
        area += (b - a).cross(c - a).norm() * 0.5;
    }
    return area;
}

double TriMesh::signed_volume() const {
    double vol = 0;
    for (const auto& t : triangles) {
        Vec3 a = vertex(t[0]), b = vertex(t[1]), c = vertex(t[2]);
        vol += a.dot(b.cross(c)) / 6.0;
    }
    return vol;
}

double TriMesh::max_z() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) m = std::max(m, static_cast<double>(v[2]));
    return m;
}

double TriMesh::min_z() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) m = std::min(m, static_cast<double>(v[2]));
    return m;
}

void TriMesh::append(const TriMesh& other) {
    std::uint32_t base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& t : other.triangles)
        triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

std::vector<std::uint8_t> mesh_to_bytes(const TriMesh& mesh) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + mesh.vertices.size() * 12 + mesh.triangles.size() * 12);
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto put_f32 = [&put_u32](float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(bits);
    };
    put_u32(static_cast<std::uint32_t>(mesh.vertices.size()));
    for (const auto& v : mesh.vertices)
        for (float f : v) put_f32(f);
    put_u32(static_cast<std::uint32_t>(mesh.triangles.size()));
    for (const auto& t : mesh.triangles)
        for (std::uint32_t i : t) put_u32(i);
    return out;
}

void write_mesh(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open mesh file for writing: " + path);
    auto bytes = mesh_to_bytes(mesh);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing mesh file: " + path);
}

TriMesh read_mesh(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open mesh file: " + path);
    auto get_u32 = [&f, &path]() {
        std::uint8_t b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        if (!f) throw FormatError("truncated mesh file: " + path);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    auto get_f32 = [&get_u32]() {
        std::uint32_t bits = get_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    };
    TriMesh mesh;
    std::uint32_t nv = get_u32();
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) {
        v[0] = get_f32();
        v[1] = get_f32();
        v[2] = get_f32();
    }
    std::uint32_t nt = get_u32();
    mesh.triangles.resize(nt);
    for (auto& t : mesh.triangles) {
        t[0] = get_u32();
        t[1] = get_u32();
        t[2] = get_u32();
    }
    return mesh;
}

}  // namespace sylva
