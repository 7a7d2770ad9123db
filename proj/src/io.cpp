#include "flexmap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace flexmap::io {

namespace {

using nlohmann::json;

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_svg(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

NlpStatus status_from_string(const std::string& s) {
    if (s == "optimal") return NlpStatus::optimal;
    if (s == "infeasible") return NlpStatus::infeasible;
    if (s == "iteration-limit") return NlpStatus::iteration_limit;
    if (s == "numerical-failure") return NlpStatus::numerical_failure;
    throw std::invalid_argument("unknown solver status '" + s + "'");
}

json grid_to_json_obj(const QGrid& grid) {
    return json{{"q_min", grid.q_min}, {"q_max", grid.q_max}, {"count", grid.count},
                {"values", grid.values}};
}

QGrid grid_from_json_obj(const json& j) {
    QGrid g;
    g.q_min = j.at("q_min").get<double>();
    g.q_max = j.at("q_max").get<double>();
    g.count = j.at("count").get<int>();
    g.values = j.at("values").get<std::vector<double>>();
    return g;
}

json polygon_to_json_obj(const std::vector<geometry::Point>& poly) {
    json arr = json::array();
    for (const auto& p : poly) arr.push_back(json::array({p.x, p.y}));
    return arr;
}

std::vector<geometry::Point> polygon_from_json_obj(const json& arr) {
    std::vector<geometry::Point> poly;
    for (const auto& p : arr) poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return poly;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string nfp_to_json(const NFPRegion& region) {
    json j;
    j["flex_bus"] = region.flex_bus;
    j["grid"] = grid_to_json_obj(region.grid);
    json samples = json::array();
    for (const PQSample& s : region.samples) {
        json e;
        e["q"] = s.q;
        e["p_up"] = s.p_up ? json(*s.p_up) : json(nullptr);
        e["p_down"] = s.p_down ? json(*s.p_down) : json(nullptr);
        e["status_up"] = to_string(s.status_up);
        e["status_down"] = to_string(s.status_down);
        samples.push_back(e);
    }
    j["samples"] = samples;
    j["polygon"] = polygon_to_json_obj(region.polygon);
    return j.dump(2) + "\n";
}

NFPRegion nfp_from_json(const std::string& text) {
    const json j = json::parse(text);
    NFPRegion region;
    region.flex_bus = j.at("flex_bus").get<int>();
    region.grid = grid_from_json_obj(j.at("grid"));
    for (const auto& e : j.at("samples")) {
        PQSample s;
        s.q = e.at("q").get<double>();
        if (!e.at("p_up").is_null()) s.p_up = e.at("p_up").get<double>();
        if (!e.at("p_down").is_null()) s.p_down = e.at("p_down").get<double>();
        s.status_up = status_from_string(e.at("status_up").get<std::string>());
        s.status_down = status_from_string(e.at("status_down").get<std::string>());
        region.samples.push_back(s);
    }
    region.polygon = polygon_from_json_obj(j.at("polygon"));
    return region;
}

std::string nfp_to_csv(const NFPRegion& region) {
    std::ostringstream os;
    os << "q,p_up,p_down,status_up,status_down\n";
    for (const PQSample& s : region.samples) {
        os << fmt_full(s.q) << ",";
        if (s.p_up) os << fmt_full(*s.p_up);
        os << ",";
        if (s.p_down) os << fmt_full(*s.p_down);
        os << "," << to_string(s.status_up) << "," << to_string(s.status_down) << "\n";
    }
    return os.str();
}

NFPRegion nfp_from_csv(const std::string& text, int flex_bus) {
    NFPRegion region;
    region.flex_bus = flex_bus;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != 5) throw std::invalid_argument("NFP csv: expected 5 fields");
        PQSample s;
        s.q = std::stod(fields[0]);
        if (!fields[1].empty()) s.p_up = std::stod(fields[1]);
        if (!fields[2].empty()) s.p_down = std::stod(fields[2]);
        s.status_up = status_from_string(fields[3]);
        s.status_down = status_from_string(fields[4]);
        region.samples.push_back(s);
    }
    if (!region.samples.empty()) {
        region.grid.count = static_cast<int>(region.samples.size());
        region.grid.q_min = region.samples.front().q;
        region.grid.q_max = region.samples.back().q;
        for (const PQSample& s : region.samples) region.grid.values.push_back(s.q);
    }
    region.polygon = build_polygon(region.samples);
    return region;
}

std::string lifp_to_json(const LIFPRegion& region) {
    json j;
    j["zone"] = region.zone.buses;
    j["grid"] = grid_to_json_obj(region.grid);
    json slices = json::array();
    for (int i = 0; i < region.grid.count; ++i) {
        if (region.slices[i]) {
            slices.push_back(json{{"q", region.grid.values[i]},
                                  {"p_lo", region.slices[i]->first},
                                  {"p_hi", region.slices[i]->second}});
        } else {
            slices.push_back(nullptr);
        }
    }
    j["slices"] = slices;
    j["polygon"] = polygon_to_json_obj(region.polygon);
    j["degenerate"] = region.degenerate;
    return j.dump(2) + "\n";
}

LIFPRegion lifp_from_json(const std::string& text) {
    const json j = json::parse(text);
    LIFPRegion region;
    region.zone.buses = j.at("zone").get<std::vector<int>>();
    region.grid = grid_from_json_obj(j.at("grid"));
    for (const auto& e : j.at("slices")) {
        if (e.is_null()) {
            region.slices.push_back(std::nullopt);
        } else {
            region.slices.push_back(
                std::make_pair(e.at("p_lo").get<double>(), e.at("p_hi").get<double>()));
        }
    }
    region.polygon = polygon_from_json_obj(j.at("polygon"));
    region.degenerate = j.at("degenerate").get<bool>();
    return region;
}

std::string lifp_to_csv(const LIFPRegion& region) {
    std::ostringstream os;
    os << "q,p_lo,p_hi\n";
    for (int i = 0; i < region.grid.count; ++i) {
        os << fmt_full(region.grid.values[i]) << ",";
        if (region.slices[i]) {
            os << fmt_full(region.slices[i]->first) << "," << fmt_full(region.slices[i]->second);
        } else {
            os << ",";
        }
        os << "\n";
    }
    return os.str();
}

LIFPRegion lifp_from_csv(const std::string& text) {
    LIFPRegion region;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != 3) throw std::invalid_argument("LIFP csv: expected 3 fields");
        region.grid.values.push_back(std::stod(fields[0]));
        if (!fields[1].empty() && !fields[2].empty()) {
            region.slices.push_back(std::make_pair(std::stod(fields[1]), std::stod(fields[2])));
        } else {
            region.slices.push_back(std::nullopt);
        }
    }
    region.grid.count = static_cast<int>(region.grid.values.size());
    if (region.grid.count > 0) {
        region.grid.q_min = region.grid.values.front();
        region.grid.q_max = region.grid.values.back();
    }
    std::vector<geometry::Point> up, down;
    for (int i = 0; i < region.grid.count; ++i) {
        if (!region.slices[i]) continue;
        up.push_back({region.slices[i]->second, region.grid.values[i]});
        down.push_back({region.slices[i]->first, region.grid.values[i]});
    }
    if (up.size() >= 2) {
        region.polygon = up;
        region.polygon.insert(region.polygon.end(), down.rbegin(), down.rend());
        region.polygon = geometry::dedup_consecutive(region.polygon);
    }
    int surviving = 0;
    for (const auto& s : region.slices) surviving += s.has_value() ? 1 : 0;
    region.degenerate = surviving < 3;
    return region;
}

std::string report_to_json(const ComparisonReport& report) {
    json j;
    json entries = json::array();
    for (const ComparisonEntry& e : report.entries) {
        json je;
        je["name"] = e.name;
        je["area_pu2"] = e.area;
        je["normalized"] = e.normalized;
        je["improvement_over_previous_pct"] =
            e.improvement_over_previous_pct ? json(*e.improvement_over_previous_pct)
                                            : json(nullptr);
        entries.push_back(je);
    }
    j["entries"] = entries;
    j["pairwise_improvement_pct"] = report.pairwise_improvement_pct;
    return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    ComparisonReport report;
    for (const auto& je : j.at("entries")) {
        ComparisonEntry e;
        e.name = je.at("name").get<std::string>();
        e.area = je.at("area_pu2").get<double>();
        e.normalized = je.at("normalized").get<double>();
        if (!je.at("improvement_over_previous_pct").is_null()) {
            e.improvement_over_previous_pct = je.at("improvement_over_previous_pct").get<double>();
        }
        report.entries.push_back(std::move(e));
    }
    for (const auto& row : j.at("pairwise_improvement_pct")) {
        std::vector<double> out;
        for (const auto& v : row) {
            // NaN (undefined ratio against a zero-area base) dumps as null
            out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                      : v.get<double>());
        }
        report.pairwise_improvement_pct.push_back(std::move(out));
    }
    return report;
}

std::string report_to_text(const ComparisonReport& report) {
    std::size_t width = 8;
    for (const ComparisonEntry& e : report.entries) width = std::max(width, e.name.size());
    std::ostringstream os;
    os << std::string(width + 2 - 8, ' ');
    os << "Topology  Norm. PQ capability  Improvement over previous\n";
    char buf[64];
    for (const ComparisonEntry& e : report.entries) {
        os << e.name << std::string(width + 2 - e.name.size(), ' ');
        std::snprintf(buf, sizeof(buf), "%-21.2f", e.normalized);
        os << buf;
        if (e.improvement_over_previous_pct) {
            std::snprintf(buf, sizeof(buf), "%+.0f%%", *e.improvement_over_previous_pct);
            os << buf;
        } else {
            os << "--";
        }
        os << "\n";
    }
    return os.str();
}

std::string topology_to_json(const Topology& topo) {
    json j = json::object();
    for (const auto& [id, state] : topo.switch_vector) {
        j[std::to_string(id)] = state == SwitchState::closed ? 1 : 0;
    }
    return j.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("topology json must be an object");
    Topology t;
    for (const auto& [key, value] : j.items()) {
        const int id = std::stoi(key);
        const int v = value.get<int>();
        if (v != 0 && v != 1) {
            throw std::invalid_argument("topology json: switch state must be 0 or 1");
        }
        t.switch_vector[id] = v == 1 ? SwitchState::closed : SwitchState::open;
    }
    return t;
}

std::vector<int> zone_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.is_array()) return j.get<std::vector<int>>();
    if (j.is_object() && j.contains("buses")) return j.at("buses").get<std::vector<int>>();
    throw std::invalid_argument("zone json must be an array of bus ids or {\"buses\": [...]}");
}

std::string grid_to_csv(const oracle::FeasibilityGrid& grid) {
    std::ostringstream os;
    os << "p,q,verdict\n";
    for (int i = 0; i < grid.np; ++i) {
        for (int j = 0; j < grid.nq; ++j) {
            os << fmt_full(grid.p_at(i)) << "," << fmt_full(grid.q_at(j)) << ","
               << oracle::to_string(grid.at(i, j)) << "\n";
        }
    }
    return os.str();
}

oracle::FeasibilityGrid grid_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    bool header = true;
    std::vector<double> ps, qs;
    std::vector<oracle::Verdict> verdicts;
    auto verdict_from = [](const std::string& s) {
        if (s == "feasible") return oracle::Verdict::feasible;
        if (s == "infeasible") return oracle::Verdict::infeasible;
        if (s == "pf-diverged") return oracle::Verdict::pf_diverged;
        throw std::invalid_argument("unknown verdict '" + s + "'");
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != 3) throw std::invalid_argument("grid csv: expected 3 fields");
        ps.push_back(std::stod(fields[0]));
        qs.push_back(std::stod(fields[1]));
        verdicts.push_back(verdict_from(fields[2]));
    }
    oracle::FeasibilityGrid grid;
    if (verdicts.empty()) return grid;
    grid.nq = 1;
    while (grid.nq < static_cast<int>(qs.size()) && qs[grid.nq] != qs[0]) ++grid.nq;
    grid.np = static_cast<int>(verdicts.size()) / grid.nq;
    grid.p_min = ps.front();
    grid.p_max = ps.back();
    grid.q_min = qs.front();
    grid.q_max = qs[grid.nq - 1];
    grid.step = grid.nq > 1 ? qs[1] - qs[0] : (grid.np > 1 ? ps[grid.nq] - ps[0] : 0.0);
    grid.verdicts = std::move(verdicts);
    return grid;
}

std::string render_svg(const std::vector<SvgPolygon>& polygons, const std::string& x_label,
                       const std::string& y_label) {
    const double width = 720, height = 540;
    const double ml = 70, mr = 20, mt = 20, mb = 50;

    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool first = true;
    for (const auto& poly : polygons) {
        for (const auto& p : poly.points) {
            if (first) {
                x_lo = x_hi = p.x;
                y_lo = y_hi = p.y;
                first = false;
            }
            x_lo = std::min(x_lo, p.x);
            x_hi = std::max(x_hi, p.x);
            y_lo = std::min(y_lo, p.y);
            y_hi = std::max(y_hi, p.y);
        }
    }
    if (x_hi - x_lo < 1e-12) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi - y_lo < 1e-12) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double pad_x = 0.05 * (x_hi - x_lo), pad_y = 0.05 * (y_hi - y_lo);
    x_lo -= pad_x;
    x_hi += pad_x;
    y_lo -= pad_y;
    y_hi += pad_y;

    auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr); };
    auto sy = [&](double y) { return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb); };

    auto nice_step = [](double span) {
        const double raw = span / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        for (double m : {1.0, 2.0, 5.0}) {
            if (raw <= m * mag) return m * mag;
        }
        return 10.0 * mag;
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
       << "\" fill=\"#ffffff\"/>\n";

    const double step_x = nice_step(x_hi - x_lo);
    const double step_y = nice_step(y_hi - y_lo);
    os << "<g stroke=\"#dddddd\" stroke-width=\"1\" font-family=\"monospace\" font-size=\"12\">\n";
    for (double t = std::ceil(x_lo / step_x) * step_x; t <= x_hi + 1e-12; t += step_x) {
        os << "<line x1=\"" << fmt_svg(sx(t)) << "\" y1=\"" << fmt_svg(sy(y_lo)) << "\" x2=\""
           << fmt_svg(sx(t)) << "\" y2=\"" << fmt_svg(sy(y_hi)) << "\"/>\n";
        os << "<text x=\"" << fmt_svg(sx(t)) << "\" y=\"" << fmt_svg(height - mb + 18)
           << "\" fill=\"#333333\" stroke=\"none\" text-anchor=\"middle\">" << fmt_svg(t)
           << "</text>\n";
    }
    for (double t = std::ceil(y_lo / step_y) * step_y; t <= y_hi + 1e-12; t += step_y) {
        os << "<line x1=\"" << fmt_svg(sx(x_lo)) << "\" y1=\"" << fmt_svg(sy(t)) << "\" x2=\""
           << fmt_svg(sx(x_hi)) << "\" y2=\"" << fmt_svg(sy(t)) << "\"/>\n";
        os << "<text x=\"" << fmt_svg(ml - 6) << "\" y=\"" << fmt_svg(sy(t) + 4)
           << "\" fill=\"#333333\" stroke=\"none\" text-anchor=\"end\">" << fmt_svg(t)
           << "</text>\n";
    }
    os << "</g>\n";

    for (const auto& poly : polygons) {
        if (poly.points.empty()) continue;
        os << "<path d=\"";
        for (std::size_t i = 0; i < poly.points.size(); ++i) {
            os << (i == 0 ? "M" : "L") << fmt_svg(sx(poly.points[i].x)) << ","
               << fmt_svg(sy(poly.points[i].y));
        }
        os << "Z\" fill=\"" << poly.fill << "\" fill-opacity=\"" << fmt_svg(poly.fill_opacity)
           << "\" stroke=\"" << poly.stroke << "\" stroke-width=\"" << fmt_svg(poly.stroke_width)
           << "\"";
        if (!poly.dash.empty()) os << " stroke-dasharray=\"" << poly.dash << "\"";
        os << "/>\n";
    }

    os << "<g fill=\"#000000\" font-family=\"monospace\" font-size=\"14\">\n";
    os << "<text x=\"" << fmt_svg(ml + (width - ml - mr) / 2) << "\" y=\""
       << fmt_svg(height - 12) << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt_svg(mt + (height - mt - mb) / 2)
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fmt_svg(mt + (height - mt - mb) / 2) << ")\">" << y_label << "</text>\n";
    os << "</g>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace flexmap::io
