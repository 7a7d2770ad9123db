#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexmap/flex.hpp"
#include "flexmap/radial.hpp"

namespace flexmap {

struct AggregationZone {
    std::vector<int> buses;
};

struct LIFPRegion {
    AggregationZone zone;
    QGrid grid;
    // Per grid index: [p_lo, p_hi], present only where every member NFP has
    // both bounds and the intervals intersect.
    std::vector<std::optional<std::pair<double, double>>> slices;
    std::vector<geometry::Point> polygon;
    bool degenerate = false;  // fewer than 3 surviving slices
};

// Slice-wise intersection over regions sampled on one shared grid:
// p_lo = max of member p_down, p_hi = min of member p_up. Throws on an empty
// input list or mismatched grids.
LIFPRegion build_lifp(const std::vector<NFPRegion>& nfps);

// Shoelace area of the region polygon; 0 for an empty region. Throws
// GeometryError when the polygon self-intersects.
double region_area(const NFPRegion& region);
double region_area(const LIFPRegion& region);

// True iff q lies within the surviving slice span and p within the interval
// linearly interpolated between the two adjacent surviving slices.
bool membership(const LIFPRegion& region, double p, double q);

struct ComparisonEntry {
    std::string name;
    double area = 0.0;                   // p.u.^2
    double normalized = 0.0;             // area / area(first topology)
    std::optional<double> improvement_over_previous_pct;
    LIFPRegion lifp;
    std::vector<NFPRegion> nfps;
};

struct ComparisonReport {
    std::vector<ComparisonEntry> entries;
    // pairwise[i][j] = (area_j / area_i - 1) * 100
    std::vector<std::vector<double>> pairwise_improvement_pct;
};

// Samples per-bus NFPs for each named topology and intersects them over the
// zone. Topologies must be radial; the offender is named otherwise.
// Normalized areas use the first-listed topology unless `base` names
// another one.
ComparisonReport compare_topologies(const NetworkCase& net,
                                    const std::vector<std::pair<std::string, Topology>>& topologies,
                                    const AggregationZone& zone, const QGrid& grid,
                                    const SampleOptions& opts = {}, const std::string& base = "");

}  // namespace flexmap
