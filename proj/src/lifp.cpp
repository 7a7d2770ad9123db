#include "flexmap/lifp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexmap {

namespace {

std::vector<geometry::Point> slices_to_polygon(
    const QGrid& grid, const std::vector<std::optional<std::pair<double, double>>>& slices) {
    std::vector<geometry::Point> up, down;
    for (int i = 0; i < grid.count; ++i) {
        if (!slices[i]) continue;
        up.push_back({slices[i]->second, grid.values[i]});
        down.push_back({slices[i]->first, grid.values[i]});
    }
    if (up.size() < 2) return {};
    std::vector<geometry::Point> poly = up;
    poly.insert(poly.end(), down.rbegin(), down.rend());
    return geometry::dedup_consecutive(poly);
}

double checked_area(const std::vector<geometry::Point>& polygon, const std::string& what) {
    if (polygon.empty()) return 0.0;
    if (!geometry::polygon_is_simple(polygon)) {
        throw geometry::GeometryError(what + " polygon is self-intersecting");
    }
    return geometry::polygon_area(polygon);
}

}  // namespace

LIFPRegion build_lifp(const std::vector<NFPRegion>& nfps) {
    if (nfps.empty()) throw std::invalid_argument("build_lifp: empty region list");
    const QGrid& grid = nfps.front().grid;
    for (const NFPRegion& nfp : nfps) {
        if (!same_grid(nfp.grid, grid)) {
            throw std::invalid_argument("build_lifp: regions sampled on different q grids");
        }
        if (static_cast<int>(nfp.samples.size()) != grid.count) {
            throw std::invalid_argument("build_lifp: region sample count does not match grid");
        }
    }

    LIFPRegion out;
    out.grid = grid;
    for (const NFPRegion& nfp : nfps) out.zone.buses.push_back(nfp.flex_bus);
    out.slices.assign(grid.count, std::nullopt);

    for (int i = 0; i < grid.count; ++i) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        bool all = true;
        for (const NFPRegion& nfp : nfps) {
            const PQSample& s = nfp.samples[i];
            if (s.status_up != NlpStatus::optimal || s.status_down != NlpStatus::optimal ||
                !s.p_up || !s.p_down) {
                all = false;
                break;
            }
            lo = std::max(lo, *s.p_down);
            hi = std::min(hi, *s.p_up);
        }
        if (all && lo <= hi) out.slices[i] = std::make_pair(lo, hi);
    }

    out.polygon = slices_to_polygon(grid, out.slices);
    int surviving = 0;
    for (const auto& s : out.slices) surviving += s.has_value() ? 1 : 0;
    out.degenerate = surviving < 3;
    return out;
}

double region_area(const NFPRegion& region) { return checked_area(region.polygon, "NFP"); }

double region_area(const LIFPRegion& region) {
    if (region.degenerate) return 0.0;
    return checked_area(region.polygon, "LIFP");
}

bool membership(const LIFPRegion& region, double p, double q) {
    // Consecutive surviving slices delimit the polygon edges; interpolate
    // between them.
    int prev = -1;
    for (int i = 0; i < region.grid.count; ++i) {
        if (!region.slices[i]) continue;
        const double qi = region.grid.values[i];
        if (q == qi) {
            return region.slices[i]->first <= p && p <= region.slices[i]->second;
        }
        if (prev >= 0) {
            const double qp = region.grid.values[prev];
            if (qp < q && q < qi) {
                const double w = (q - qp) / (qi - qp);
                const double lo = region.slices[prev]->first +
                                  w * (region.slices[i]->first - region.slices[prev]->first);
                const double hi = region.slices[prev]->second +
                                  w * (region.slices[i]->second - region.slices[prev]->second);
                return lo <= p && p <= hi;
            }
        }
        prev = i;
    }
    return false;
}

ComparisonReport compare_topologies(const NetworkCase& net,
                                    const std::vector<std::pair<std::string, Topology>>& topologies,
                                    const AggregationZone& zone, const QGrid& grid,
                                    const SampleOptions& opts, const std::string& base_name) {
    if (topologies.empty()) throw std::invalid_argument("compare_topologies: no topologies");
    if (zone.buses.empty()) throw std::invalid_argument("compare_topologies: empty zone");
    std::size_t base_index = 0;
    if (!base_name.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < topologies.size(); ++i) {
            if (topologies[i].first == base_name) {
                base_index = i;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::invalid_argument("normalization base '" + base_name +
                                        "' is not among the topologies");
        }
    }

    ComparisonReport report;
    for (const auto& [name, topo] : topologies) {
        const NetworkCase switched = apply_topology(net, topo);
        const RadialityReport rad = check_radial(switched);
        if (!rad.radial) {
            throw ValidationError("topology '" + name + "' is " + rad.describe());
        }
        ComparisonEntry entry;
        entry.name = name;
        for (int bus : zone.buses) {
            entry.nfps.push_back(sample_nfp(switched, bus, grid, opts));
        }
        entry.lifp = build_lifp(entry.nfps);
        entry.area = region_area(entry.lifp);
        report.entries.push_back(std::move(entry));
    }

    const double base = report.entries[base_index].area;
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        ComparisonEntry& e = report.entries[i];
        e.normalized = base > 0.0 ? e.area / base : (e.area > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
        if (i > 0) {
            const double prev = report.entries[i - 1].area;
            if (prev > 0.0) e.improvement_over_previous_pct = (e.area / prev - 1.0) * 100.0;
        }
    }
    report.pairwise_improvement_pct.assign(report.entries.size(),
                                           std::vector<double>(report.entries.size(), 0.0));
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        for (std::size_t j = 0; j < report.entries.size(); ++j) {
            const double ai = report.entries[i].area;
            report.pairwise_improvement_pct[i][j] =
                ai > 0.0 ? (report.entries[j].area / ai - 1.0) * 100.0
                         : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return report;
}

}  // namespace flexmap
