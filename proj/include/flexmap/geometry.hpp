#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace flexmap::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

class GeometryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Shoelace area, non-negative. The closing edge is implicit; a duplicated
// closing vertex is tolerated. Fewer than 3 vertices give 0.
double polygon_area(std::span<const Point> polygon);

// True when no two non-adjacent edges properly cross and no non-adjacent
// edges overlap along a segment. Touching at shared vertices is allowed, so
// boundary chains may meet at a pinch point.
bool polygon_is_simple(std::span<const Point> polygon);

std::vector<Point> dedup_consecutive(std::span<const Point> polygon, double eps = 1e-12);

}  // namespace flexmap::geometry
