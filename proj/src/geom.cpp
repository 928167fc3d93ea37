#include "sylva/geom.hpp"

#include <random>

namespace sylva {

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

struct Circle {
    Vec2 c;
    double r2;
    bool contains(const Vec2& p) const {
        double dx = p.x - c.x, dy = p.y - c.y;
        return dx * dx + dy * dy <= r2 * (1 + 1e-12) + 1e-18;
    }
};

Circle circle_from(const Vec2& a, const Vec2& b) {
    Vec2 c{(a.x + b.x) * 0.5, (a.y + b.y) * 0.5};
    double dx = a.x - c.x, dy = a.y - c.y;
    return {c, dx * dx + dy * dy};
}

Circle circle_from(const Vec2& a, const Vec2& b, const Vec2& c) {
    double bx = b.x - a.x, by = b.y - a.y;
    double cx = c.x - a.x, cy = c.y - a.y;
    double d = 2 * (bx * cy - by * cx);
    if (std::abs(d) < 1e-30) return {a, std::numeric_limits<double>::infinity()};
    double ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d;
    double uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d;
    Vec2 ctr{a.x + ux, a.y + uy};
    return {ctr, ux * ux + uy * uy};
}

}  // namespace

double convex_hull_area(std::vector<Vec2> pts) {
    if (pts.size() < 3) return 0.0;
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return 0.0;
    std::size_t n = pts.size();
    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double area = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2& a = hull[i];
        const Vec2& b = hull[(i + 1) % hull.size()];
        area += a.x * b.y - b.x * a.y;
    }
    return std::abs(area) * 0.5;
}

double min_enclosing_circle_diameter(std::vector<Vec2> pts) {
    if (pts.empty()) return 0.0;
    if (pts.size() == 1) return 0.0;
    // Deterministic shuffle keeps Welzl expected-linear without depending on input order.
    std::mt19937 shuffler(12345);
    std::shuffle(pts.begin(), pts.end(), shuffler);

    Circle c = circle_from(pts[0], pts[1]);
    for (std::size_t i = 2; i < pts.size(); ++i) {
        if (c.contains(pts[i])) continue;
        c = circle_from(pts[0], pts[i]);
        for (std::size_t j = 1; j < i; ++j) {
            if (c.contains(pts[j])) continue;
            c = circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (c.contains(pts[k])) continue;
                c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return 2.0 * std::sqrt(c.r2);
}

double disc_overlap_ratio(Vec2 c1, double r1, Vec2 c2, double r2) {
    double dx = c2.x - c1.x, dy = c2.y - c1.y;
    double d = std::sqrt(dx * dx + dy * dy);
    double rs = std::min(r1, r2);
    double rl = std::max(r1, r2);
    if (d >= r1 + r2) return 0.0;
    if (d <= rl - rs) return 1.0;  // smaller disc fully inside
    // circular lens area
    double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2 * d * r1), -1.0, 1.0));
    double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2 * d * r2), -1.0, 1.0));
    double lens = r1 * r1 * (a1 - std::sin(2 * a1) * 0.5) + r2 * r2 * (a2 - std::sin(2 * a2) * 0.5);
    double ratio = lens / (M_PI * rs * rs);
    return std::clamp(ratio, 0.0, 1.0);
}

}  // namespace sylva
