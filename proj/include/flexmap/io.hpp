#pragma once

#include <string>
#include <vector>

#include "flexmap/lifp.hpp"
#include "flexmap/oracle.hpp"

namespace flexmap::io {

std::string nfp_to_json(const NFPRegion& region);
NFPRegion nfp_from_json(const std::string& text);

// Columns: q, p_up, p_down, status_up, status_down. Unsolved bounds are
// empty fields. The reader rebuilds the grid from the q column.
std::string nfp_to_csv(const NFPRegion& region);
NFPRegion nfp_from_csv(const std::string& text, int flex_bus = 0);

std::string lifp_to_json(const LIFPRegion& region);
LIFPRegion lifp_from_json(const std::string& text);

std::string lifp_to_csv(const LIFPRegion& region);
LIFPRegion lifp_from_csv(const std::string& text);

std::string report_to_json(const ComparisonReport& report);
// Summary fields only; the per-topology regions live in their own files.
ComparisonReport report_from_json(const std::string& text);
// Text table: topology, normalized PQ capability area, improvement over
// previous.
std::string report_to_text(const ComparisonReport& report);

std::string topology_to_json(const Topology& topo);
Topology topology_from_json(const std::string& text);

// Accepts either a bare JSON array of bus ids or {"buses": [...]}.
std::vector<int> zone_from_json(const std::string& text);

std::string grid_to_csv(const oracle::FeasibilityGrid& grid);
oracle::FeasibilityGrid grid_from_csv(const std::string& text);

struct SvgPolygon {
    std::vector<geometry::Point> points;
    std::string fill = "none";
    double fill_opacity = 1.0;
    std::string stroke = "#000000";
    double stroke_width = 1.0;
    std::string dash;  // e.g. "6,4"; empty for solid
};

// Deterministic rendering: fixed canvas, fixed formatting, no timestamps.
std::string render_svg(const std::vector<SvgPolygon>& polygons, const std::string& x_label,
                       const std::string& y_label);

}  // namespace flexmap::io
