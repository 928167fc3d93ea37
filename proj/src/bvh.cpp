#include "sylva/bvh.hpp"

#include <algorithm>
#include <cmath>

#include "sylva/errors.hpp"

namespace sylva {

std::optional<double> intersect_primitive(const Primitive& p, const Ray& ray) {
    if (p.radius > 0) {
        // sphere
        Vec3 c{p.v0[0], p.v0[1], p.v0[2]};
        Vec3 oc = ray.origin - c;
        double b = oc.dot(ray.dir);
        double cc = oc.dot(oc) - static_cast<double>(p.radius) * p.radius;
        double disc = b * b - cc;
        if (disc < 0) return std::nullopt;
        double s = std::sqrt(disc);
        double t = -b - s;
        if (t < 1e-9) t = -b + s;
        if (t < 1e-9 || t > ray.t_max) return std::nullopt;
        return t;
    }
    // Moeller-Trumbore
    Vec3 a{p.v0[0], p.v0[1], p.v0[2]};
    Vec3 b{p.v1[0], p.v1[1], p.v1[2]};
    Vec3 c{p.v2[0], p.v2[1], p.v2[2]};
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = ray.dir.cross(e2);
    double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) return std::nullopt;
    double inv = 1.0 / det;
    Vec3 tv = ray.origin - a;
    double u = tv.dot(pv) * inv;
    if (u < 0 || u > 1) return std::nullopt;
    Vec3 qv = tv.cross(e1);
    double v = ray.dir.dot(qv) * inv;
    if (v < 0 || u + v > 1) return std::nullopt;
    double t = e2.dot(qv) * inv;
    if (t < 1e-9 || t > ray.t_max) return std::nullopt;
    return t;
}

namespace {

Aabb primitive_bounds(const Primitive& p) {
    Aabb box;
    if (p.radius > 0) {
        Vec3 c{p.v0[0], p.v0[1], p.v0[2]};
        double r = p.radius;
        box.expand(Vec3{c.x - r, c.y - r, c.z - r});
        box.expand(Vec3{c.x + r, c.y + r, c.z + r});
    } else {
        box.expand(Vec3{p.v0[0], p.v0[1], p.v0[2]});
        box.expand(Vec3{p.v1[0], p.v1[1], p.v1[2]});
        box.expand(Vec3{p.v2[0], p.v2[1], p.v2[2]});
    }
    return box;
}

inline bool box_hit(const float lo[3], const float hi[3], const Vec3& o, const Vec3& inv_dir,
                    double t_best, double& t_entry) {
    const double ov[3] = {o.x, o.y, o.z};
    const double iv[3] = {inv_dir.x, inv_dir.y, inv_dir.z};
    double t0 = 0, t1 = t_best;
    for (int k = 0; k < 3; ++k) {
        double ta = (lo[k] - ov[k]) * iv[k];
        double tb = (hi[k] - ov[k]) * iv[k];
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
    }
    t_entry = t0;
    return t0 <= t1;
}

// Hot-path intersection without the std::optional wrapper; returns a
// negative value on miss.
inline double intersect_fast(const Primitive& p, const Vec3& o, const Vec3& d, double t_max) {
    if (p.radius > 0) {
        Vec3 c{p.v0[0], p.v0[1], p.v0[2]};
        Vec3 oc = o - c;
        double b = oc.dot(d);
        double cc = oc.dot(oc) - static_cast<double>(p.radius) * p.radius;
        double disc = b * b - cc;
        if (disc < 0) return -1;
        double s = std::sqrt(disc);
        double t = -b - s;
        if (t < 1e-9) t = -b + s;
        if (t < 1e-9 || t > t_max) return -1;
        return t;
    }
    Vec3 a{p.v0[0], p.v0[1], p.v0[2]};
    Vec3 bb{p.v1[0], p.v1[1], p.v1[2]};
    Vec3 c{p.v2[0], p.v2[1], p.v2[2]};
    Vec3 e1 = bb - a, e2 = c - a;
    Vec3 pv = d.cross(e2);
    double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) return -1;
    double inv = 1.0 / det;
    Vec3 tv = o - a;
    double u = tv.dot(pv) * inv;
    if (u < 0 || u > 1) return -1;
    Vec3 qv = tv.cross(e1);
    double v = d.dot(qv) * inv;
    if (v < 0 || u + v > 1) return -1;
    double t = e2.dot(qv) * inv;
    if (t < 1e-9 || t > t_max) return -1;
    return t;
}

constexpr std::uint32_t kLeafSize = 4;

}  // namespace

Bvh::Bvh(std::vector<Primitive> prims) : prims_(std::move(prims)) {
    std::uint32_t n = static_cast<std::uint32_t>(prims_.size());
    order_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) order_[i] = i;
    if (n == 0) return;

    std::vector<Aabb> boxes(n);
    std::vector<Vec3> centers(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        boxes[i] = primitive_bounds(prims_[i]);
        centers[i] = boxes[i].center();
    }
    nodes_.reserve(2 * n);
    nodes_.emplace_back();
    build(0, 0, n, boxes, centers);
}

void Bvh::build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
                std::vector<Aabb>& boxes, std::vector<Vec3>& centers) {
    Aabb bounds;
    for (std::uint32_t i = begin; i < end; ++i) bounds.expand(boxes[order_[i]]);
    Node& nd = nodes_[node];
    nd.lo[0] = static_cast<float>(bounds.lo.x) - 1e-5f;
    nd.lo[1] = static_cast<float>(bounds.lo.y) - 1e-5f;
    nd.lo[2] = static_cast<float>(bounds.lo.z) - 1e-5f;
    nd.hi[0] = static_cast<float>(bounds.hi.x) + 1e-5f;
    nd.hi[1] = static_cast<float>(bounds.hi.y) + 1e-5f;
    nd.hi[2] = static_cast<float>(bounds.hi.z) + 1e-5f;

    if (end - begin <= kLeafSize) {
        nd.first = begin;
        nd.count = end - begin;
        return;
    }

    // binned surface-area-heuristic split along the longest centroid axis,
    // falling back to a median split when SAH finds no useful partition
    Aabb cb;
    for (std::uint32_t i = begin; i < end; ++i) cb.expand(centers[order_[i]]);
    Vec3 ext = cb.hi - cb.lo;
    int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    auto centroid = [&](std::uint32_t id) {
        return axis == 0 ? centers[id].x : (axis == 1 ? centers[id].y : centers[id].z);
    };
    double c_lo = axis == 0 ? cb.lo.x : (axis == 1 ? cb.lo.y : cb.lo.z);
    double c_ext = axis == 0 ? ext.x : (axis == 1 ? ext.y : ext.z);

    std::uint32_t mid = 0;
    bool have_split = false;
    if (c_ext > 1e-12) {
        constexpr int kBins = 16;
        struct Bin {
            Aabb box;
            std::uint32_t count = 0;
        } bins[kBins];
        auto bin_of = [&](std::uint32_t id) {
            int b = static_cast<int>(kBins * (centroid(id) - c_lo) / c_ext);
            return std::clamp(b, 0, kBins - 1);
        };
        for (std::uint32_t i = begin; i < end; ++i) {
            int b = bin_of(order_[i]);
            bins[b].box.expand(boxes[order_[i]]);
            bins[b].count++;
        }
        auto half_area = [](const Aabb& b) {
            if (b.lo.x > b.hi.x) return 0.0;
            Vec3 d = b.hi - b.lo;
            return d.x * d.y + d.y * d.z + d.z * d.x;
        };
        double left_area[kBins], right_area[kBins];
        std::uint32_t left_count[kBins], right_count[kBins];
        Aabb acc;
        std::uint32_t cnt = 0;
        for (int b = 0; b < kBins - 1; ++b) {
            acc.expand(bins[b].box);
            cnt += bins[b].count;
            left_area[b] = half_area(acc);
            left_count[b] = cnt;
        }
        acc = Aabb{};
        cnt = 0;
        for (int b = kBins - 1; b > 0; --b) {
            acc.expand(bins[b].box);
            cnt += bins[b].count;
            right_area[b - 1] = half_area(acc);
            right_count[b - 1] = cnt;
        }
        int best_split = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int b = 0; b < kBins - 1; ++b) {
            if (left_count[b] == 0 || right_count[b] == 0) continue;
            double cost = left_area[b] * left_count[b] + right_area[b] * right_count[b];
            if (cost < best_cost) {
                best_cost = cost;
                best_split = b;
            }
        }
        if (best_split >= 0) {
            // stable_partition keeps order_ deterministic across stdlib
            // implementations; both counts are nonzero so mid is interior
            auto it =
                std::stable_partition(order_.begin() + begin, order_.begin() + end,
                                      [&](std::uint32_t id) { return bin_of(id) <= best_split; });
            mid = static_cast<std::uint32_t>(it - order_.begin());
            have_split = true;
        }
    }
    if (!have_split) {
        mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             double ca = centroid(a), cbv = centroid(b);
                             if (ca != cbv) return ca < cbv;
                             return a < b;
                         });
    }

    std::uint32_t left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    build(left, begin, mid, boxes, centers);
    std::uint32_t right = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node].right = right;  // nd reference may be stale after push_back
    nodes_[node].count = 0;
    build(right, mid, end, boxes, centers);
}

std::optional<Hit> Bvh::nearest(const Ray& ray) const {
    if (nodes_.empty()) return std::nullopt;
    Vec3 inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};

    Hit best;
    best.t = ray.t_max;
    bool found = false;

    std::uint32_t stack[64];
    int sp = 0;
    double t_entry;
    if (!box_hit(nodes_[0].lo, nodes_[0].hi, ray.origin, inv, best.t, t_entry))
        return std::nullopt;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& nd = nodes_[stack[--sp]];
        if (nd.count > 0) {
            for (std::uint32_t i = nd.first; i < nd.first + nd.count; ++i) {
                std::uint32_t pid = order_[i];
                double t = intersect_fast(prims_[pid], ray.origin, ray.dir, ray.t_max);
                if (t < 0) continue;
                if (t < best.t || (t == best.t && found && pid < best.prim)) {
                    best.t = t;
                    best.prim = pid;
                    found = true;
                }
            }
        } else {
            // children are node+1 (left) and nd.right; visit the nearer first
            std::uint32_t ci[2] = {static_cast<std::uint32_t>(&nd - nodes_.data()) + 1, nd.right};
            double te[2];
            bool hit0 = box_hit(nodes_[ci[0]].lo, nodes_[ci[0]].hi, ray.origin, inv, best.t, te[0]);
            bool hit1 = box_hit(nodes_[ci[1]].lo, nodes_[ci[1]].hi, ray.origin, inv, best.t, te[1]);
            if (hit0 && hit1) {
                int near = te[0] <= te[1] ? 0 : 1;
                stack[sp++] = ci[1 - near];
                stack[sp++] = ci[near];
            } else if (hit0) {
                stack[sp++] = ci[0];
            } else if (hit1) {
                stack[sp++] = ci[1];
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

}  // namespace sylva
