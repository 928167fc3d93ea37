#ifndef SYLVA_BVH_HPP
#define SYLVA_BVH_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "sylva/geom.hpp"

namespace sylva {

enum class SemanticClass : std::uint8_t {
    terrain = 0,
    understory = 1,
    wood = 2,
    leaf = 3,
};

// Scene primitive: triangle or sphere, tagged with labels.
struct Primitive {
    // triangle vertices; for a sphere, v0 = center and radius > 0
    float v0[3], v1[3], v2[3];
    float radius = 0;  // > 0 means sphere
    SemanticClass semantic = SemanticClass::terrain;
    std::uint32_t instance = 0;
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    std::uint32_t prim = 0;
};

// Nearest intersection of a ray with one primitive; ties at identical t are
// broken toward the lower primitive index by the callers.
std::optional<double> intersect_primitive(const Primitive& p, const Ray& ray);

class Bvh {
public:
    explicit Bvh(std::vector<Primitive> prims);

    std::optional<Hit> nearest(const Ray& ray) const;

    const std::vector<Primitive>& primitives() const { return prims_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        float lo[3], hi[3];
        // leaf: first index into order_, count > 0; inner: left child is
        // index+1, right child is `right`
        std::uint32_t first = 0;
        std::uint32_t count = 0;
        std::uint32_t right = 0;
    };

    void build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
               std::vector<Aabb>& boxes, std::vector<Vec3>& centers);

    std::vector<Primitive> prims_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace sylva

#endif
