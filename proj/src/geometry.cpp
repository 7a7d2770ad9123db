#include "flexmap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace flexmap::geometry {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool between(double a, double b, double v) {
    return std::min(a, b) <= v && v <= std::max(a, b);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
    return cross(a, b, p) == 0.0 && between(a.x, b.x, p.x) && between(a.y, b.y, p.y);
}

// Proper crossing: interiors intersect. Collinear overlap of positive length
// also counts; touching at endpoints does not.
bool segments_conflict(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    if (d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0) {
        // Collinear: conflict when the overlap has positive length.
        const double lo = std::max(std::min(a.x, b.x), std::min(c.x, d.x));
        const double hi = std::min(std::max(a.x, b.x), std::max(c.x, d.x));
        const double lo_y = std::max(std::min(a.y, b.y), std::min(c.y, d.y));
        const double hi_y = std::min(std::max(a.y, b.y), std::max(c.y, d.y));
        return lo < hi || lo_y < hi_y;
    }
    // One endpoint strictly inside the other segment counts as a conflict;
    // shared endpoints do not.
    auto strict_interior = [](const Point& p, const Point& q, const Point& r) {
        if (!on_segment(p, q, r)) return false;
        const bool at_end = (r.x == p.x && r.y == p.y) || (r.x == q.x && r.y == q.y);
        return !at_end;
    };
    return strict_interior(c, d, a) || strict_interior(c, d, b) || strict_interior(a, b, c) ||
           strict_interior(a, b, d);
}

}  // namespace

std::vector<Point> dedup_consecutive(std::span<const Point> polygon, double eps) {
    std::vector<Point> out;
    out.reserve(polygon.size());
    for (const Point& p : polygon) {
        if (!out.empty() && std::abs(out.back().x - p.x) <= eps &&
            std::abs(out.back().y - p.y) <= eps) {
            continue;
        }
        out.push_back(p);
    }
    while (out.size() > 1 && std::abs(out.front().x - out.back().x) <= eps &&
           std::abs(out.front().y - out.back().y) <= eps) {
        out.pop_back();
    }
    return out;
}

double polygon_area(std::span<const Point> polygon) {
    const auto pts = dedup_consecutive(polygon);
    if (pts.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& a = pts[i];
        const Point& b = pts[(i + 1) % pts.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) / 2.0;
}

bool polygon_is_simple(std::span<const Point> polygon) {
    const auto pts = dedup_consecutive(polygon);
    const std::size_t n = pts.size();
    if (n < 3) return true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // Skip adjacent edges (they share a vertex by construction).
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_conflict(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace flexmap::geometry
