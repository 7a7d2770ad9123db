#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "flexmap/flex.hpp"
#include "flexmap/io.hpp"
#include "flexmap/lifp.hpp"
#include "flexmap/log.hpp"
#include "flexmap/matpower.hpp"
#include "flexmap/oracle.hpp"
#include "flexmap/radial.hpp"

namespace fs = std::filesystem;
using namespace flexmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;
constexpr int kExitNotRadial = 3;
constexpr int kExitViolations = 4;

struct Options {
    std::string case_path;
    std::vector<std::string> topologies;  // name=path
    std::string zone = "all";
    std::string q_span = "auto";
    int q_count = 21;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    std::string out_dir = ".";
    std::string emit = "csv,json,svg";
    double oracle_step = 0.01;
    double solver_tol = 1e-6;
    std::string base;  // normalization base topology for compare
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write file '" + path.string() + "'");
    f << content;
}

NetworkCase load_case(const Options& opt) {
    NetworkCase net;
    try {
        net = parse_case(slurp(opt.case_path));
    } catch (const ParseError& e) {
        throw std::runtime_error("case file '" + opt.case_path + "': " + e.what());
    }
    return net;
}

std::vector<std::pair<std::string, Topology>> load_topologies(const Options& opt) {
    std::vector<std::pair<std::string, Topology>> out;
    for (const std::string& spec : opt.topologies) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("--topology expects name=path, got '" + spec + "'");
        }
        const std::string name = spec.substr(0, eq);
        const std::string path = spec.substr(eq + 1);
        out.emplace_back(name, io::topology_from_json(slurp(path)));
    }
    return out;
}

// Applies the single optional topology for the one-topology commands.
NetworkCase switched_case(const Options& opt, const NetworkCase& net) {
    const auto topos = load_topologies(opt);
    if (topos.size() > 1) {
        throw std::runtime_error("this command accepts at most one --topology");
    }
    return topos.empty() ? net : apply_topology(net, topos.front().second);
}

struct ZoneSpec {
    std::vector<int> buses;
    bool is_ring = false;
};

ZoneSpec resolve_zone(const std::string& zone, const NetworkCase& net) {
    ZoneSpec out;
    if (zone == "all") {
        for (const Bus& b : net.buses) out.buses.push_back(b.id);
    } else if (zone.rfind("ring:", 0) == 0) {
        out.is_ring = true;
        out.buses = io::zone_from_json(slurp(zone.substr(5)));
    } else {
        std::istringstream is(zone);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            if (!tok.empty()) out.buses.push_back(std::stoi(tok));
        }
    }
    if (out.buses.empty()) throw std::runtime_error("zone '" + zone + "' resolves to no buses");
    for (int id : out.buses) {
        if (!net.bus_pos(id)) {
            throw std::runtime_error("zone bus " + std::to_string(id) + " is not in the case");
        }
    }
    return out;
}

std::set<std::string> resolve_emit(const std::string& emit) {
    std::set<std::string> out;
    std::istringstream is(emit);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok != "csv" && tok != "json" && tok != "svg") {
            throw std::runtime_error("unknown emit format '" + tok + "'");
        }
        out.insert(tok);
    }
    return out;
}

// One grid for the whole zone: explicit span, or the intersection of the
// per-bus feasible spans.
QGrid resolve_grid(const Options& opt, const NetworkCase& net, const std::vector<int>& buses,
                   const NlpOptions& nlp) {
    if (opt.q_span != "auto") {
        const auto colon = opt.q_span.find(':');
        if (colon == std::string::npos) {
            throw std::runtime_error("--q-span expects lo:hi or auto, got '" + opt.q_span + "'");
        }
        const double lo = std::stod(opt.q_span.substr(0, colon));
        const double hi = std::stod(opt.q_span.substr(colon + 1));
        return QGrid::uniform(lo, hi, opt.q_count);
    }
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int bus : buses) {
        const auto span = auto_qrange(net, bus, nlp);
        lo = std::max(lo, span.first);
        hi = std::min(hi, span.second);
    }
    if (!(lo < hi)) {
        throw std::runtime_error("no common reactive span across the zone; pass --q-span lo:hi");
    }
    return QGrid::uniform(lo, hi, opt.q_count);
}

std::vector<geometry::Point> scaled(const std::vector<geometry::Point>& poly, double factor) {
    std::vector<geometry::Point> out = poly;
    for (auto& p : out) {
        p.x *= factor;
        p.y *= factor;
    }
    return out;
}

io::SvgPolygon nfp_style(const std::vector<geometry::Point>& pts) {
    return {pts, "#c8c8c8", 0.5, "#888888", 1.0, ""};
}

io::SvgPolygon lifp_style(const std::vector<geometry::Point>& pts) {
    return {pts, "#3a8f3a", 0.55, "#1d5c1d", 1.5, ""};
}

void write_nfp_artifacts(const fs::path& dir, const std::set<std::string>& emit,
                         const NFPRegion& nfp, double base_mva) {
    const std::string stem = "nfp_bus" + std::to_string(nfp.flex_bus);
    if (emit.count("csv")) spit(dir / (stem + ".csv"), io::nfp_to_csv(nfp));
    if (emit.count("json")) spit(dir / (stem + ".json"), io::nfp_to_json(nfp));
    if (emit.count("svg")) {
        spit(dir / (stem + ".svg"),
             io::render_svg({nfp_style(scaled(nfp.polygon, base_mva))}, "p (MW)", "q (MVAr)"));
    }
}

SampleOptions sampler_options(const Options& opt) {
    SampleOptions so;
    so.workers = std::max(1, opt.workers);
    so.nlp.tolerance = opt.solver_tol;
    return so;
}

int cmd_nfp(const Options& opt) {
    const NetworkCase base = load_case(opt);
    const NetworkCase net = switched_case(opt, base);
    const ZoneSpec zone = resolve_zone(opt.zone, net);
    if (zone.buses.size() != 1) {
        throw std::runtime_error("nfp expects a single flex bus in --zone");
    }
    const auto emit = resolve_emit(opt.emit);
    const SampleOptions so = sampler_options(opt);
    const QGrid grid = resolve_grid(opt, net, zone.buses, so.nlp);

    const NFPRegion nfp = sample_nfp(net, zone.buses.front(), grid, so);
    fs::create_directories(opt.out_dir);
    write_nfp_artifacts(opt.out_dir, emit, nfp, net.base_mva);
    if (nfp.polygon.empty()) {
        std::cerr << "flex region at bus " << zone.buses.front() << " is empty\n";
        return kExitEmpty;
    }
    std::cout << "nfp bus " << zone.buses.front() << ": area " << region_area(nfp)
              << " p.u.^2 over q in [" << grid.q_min << ", " << grid.q_max << "]\n";
    return kExitOk;
}

int cmd_lifp(const Options& opt) {
    const NetworkCase base = load_case(opt);
    const NetworkCase net = switched_case(opt, base);
    const ZoneSpec zone = resolve_zone(opt.zone, net);
    const auto emit = resolve_emit(opt.emit);
    const SampleOptions so = sampler_options(opt);
    const QGrid grid = resolve_grid(opt, net, zone.buses, so.nlp);

    std::vector<NFPRegion> nfps;
    for (int bus : zone.buses) nfps.push_back(sample_nfp(net, bus, grid, so));
    const LIFPRegion lifp = build_lifp(nfps);

    fs::create_directories(opt.out_dir);
    for (const NFPRegion& nfp : nfps) write_nfp_artifacts(opt.out_dir, emit, nfp, net.base_mva);
    if (emit.count("csv")) spit(fs::path(opt.out_dir) / "lifp.csv", io::lifp_to_csv(lifp));
    if (emit.count("json")) spit(fs::path(opt.out_dir) / "lifp.json", io::lifp_to_json(lifp));
    if (emit.count("svg")) {
        std::vector<io::SvgPolygon> polys;
        for (const NFPRegion& nfp : nfps) {
            polys.push_back(nfp_style(scaled(nfp.polygon, net.base_mva)));
        }
        polys.push_back(lifp_style(scaled(lifp.polygon, net.base_mva)));
        spit(fs::path(opt.out_dir) / "lifp.svg", io::render_svg(polys, "p (MW)", "q (MVAr)"));
    }

    double min_area = std::numeric_limits<double>::infinity();
    for (const NFPRegion& nfp : nfps) min_area = std::min(min_area, region_area(nfp));
    const double area = region_area(lifp);
    std::cout << "lifp over " << zone.buses.size() << " bus(es): area " << area
              << " p.u.^2 (min member NFP " << min_area << ")\n";
    if (lifp.polygon.empty()) {
        std::cerr << "location-invariant region is empty\n";
        return kExitEmpty;
    }
    return kExitOk;
}

int write_comparison(const Options& opt, const NetworkCase& net,
                     const std::vector<std::pair<std::string, Topology>>& topos,
                     const AggregationZone& zone, const QGrid& grid, const SampleOptions& so,
                     const std::set<std::string>& emit, const std::string& suffix) {
    const ComparisonReport report = compare_topologies(net, topos, zone, grid, so, opt.base);
    fs::create_directories(opt.out_dir);
    spit(fs::path(opt.out_dir) / ("compare" + suffix + ".json"), io::report_to_json(report));
    spit(fs::path(opt.out_dir) / ("compare" + suffix + ".txt"), io::report_to_text(report));
    for (const ComparisonEntry& e : report.entries) {
        const std::string stem = e.name + suffix;
        if (emit.count("csv")) {
            spit(fs::path(opt.out_dir) / (stem + "_lifp.csv"), io::lifp_to_csv(e.lifp));
        }
        if (emit.count("json")) {
            spit(fs::path(opt.out_dir) / (stem + "_lifp.json"), io::lifp_to_json(e.lifp));
        }
        if (emit.count("svg")) {
            std::vector<io::SvgPolygon> polys;
            for (const NFPRegion& nfp : e.nfps) {
                polys.push_back(nfp_style(scaled(nfp.polygon, net.base_mva)));
            }
            polys.push_back(lifp_style(scaled(e.lifp.polygon, net.base_mva)));
            spit(fs::path(opt.out_dir) / (stem + "_lifp.svg"),
                 io::render_svg(polys, "p (MW)", "q (MVAr)"));
        }
    }
    std::cout << io::report_to_text(report);
    return kExitOk;
}

// Shared grid for a topology comparison: per topology the usable span is the
// intersection over the zone buses; the grid must cover every topology, so
// the spans are united across topologies. Explicit --q-span overrides.
QGrid comparison_grid(const Options& opt, const NetworkCase& net,
                      const std::vector<std::pair<std::string, Topology>>& topos,
                      const std::vector<int>& buses, const NlpOptions& nlp) {
    if (opt.q_span != "auto") return resolve_grid(opt, net, buses, nlp);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [name, topo] : topos) {
        const NetworkCase switched = apply_topology(net, topo);
        double t_lo = -std::numeric_limits<double>::infinity();
        double t_hi = std::numeric_limits<double>::infinity();
        try {
            for (int bus : buses) {
                const auto span = auto_qrange(switched, bus, nlp);
                t_lo = std::max(t_lo, span.first);
                t_hi = std::min(t_hi, span.second);
            }
        } catch (const ValidationError&) {
            continue;  // no feasible operation under this topology
        }
        if (t_lo < t_hi) {
            lo = std::min(lo, t_lo);
            hi = std::max(hi, t_hi);
        }
    }
    if (!(lo < hi)) {
        throw std::runtime_error(
            "no topology admits a feasible reactive span for the zone; pass --q-span lo:hi");
    }
    return QGrid::uniform(lo, hi, opt.q_count);
}

int cmd_compare(const Options& opt) {
    const NetworkCase net = load_case(opt);
    const auto topos = load_topologies(opt);
    if (topos.size() < 2) throw std::runtime_error("compare needs at least two --topology");
    for (const auto& [name, topo] : topos) {
        const RadialityReport rad = check_radial(apply_topology(net, topo));
        if (!rad.radial) {
            throw std::runtime_error("topology '" + name + "' is " + rad.describe());
        }
    }
    const ZoneSpec zone = resolve_zone(opt.zone, net);
    const auto emit = resolve_emit(opt.emit);
    const SampleOptions so = sampler_options(opt);
    const QGrid grid = comparison_grid(opt, net, topos, zone.buses, so.nlp);

    const int rc = write_comparison(opt, net, topos, {zone.buses}, grid, so, emit, "");
    if (zone.is_ring) {
        // A ring zone also gets the whole-system comparison for reference.
        const ZoneSpec all = resolve_zone("all", net);
        const QGrid grid_all = comparison_grid(opt, net, topos, all.buses, so.nlp);
        write_comparison(opt, net, topos, {all.buses}, grid_all, so, emit, "_all");
    }
    return rc;
}

int cmd_validate(const Options& opt) {
    const NetworkCase base = load_case(opt);
    const NetworkCase net = switched_case(opt, base);
    const ZoneSpec zone = resolve_zone(opt.zone, net);
    if (zone.buses.size() != 1) {
        throw std::runtime_error("validate expects a single flex bus in --zone");
    }
    const int bus = zone.buses.front();
    const SampleOptions so = sampler_options(opt);
    const QGrid grid = resolve_grid(opt, net, zone.buses, so.nlp);
    const double step = opt.oracle_step;

    const NFPRegion nfp = sample_nfp(net, bus, grid, so);
    if (nfp.polygon.empty()) {
        std::cerr << "flex region at bus " << bus << " is empty; nothing to validate\n";
        return kExitEmpty;
    }
    const LIFPRegion single = build_lifp({nfp});

    int violations = 0;
    auto report = [&](const std::string& what, double p, double q) {
        ++violations;
        std::cout << "violation: " << what << " at p=" << p << " q=" << q << "\n";
    };

    // Boundary bracketing: vertices feasible, points one margin beyond not.
    for (const PQSample& s : nfp.samples) {
        if (s.status_up == NlpStatus::optimal && s.p_up) {
            if (oracle::probe(net, bus, *s.p_up, s.q) != oracle::Verdict::feasible) {
                report("boundary vertex not oracle-feasible", *s.p_up, s.q);
            }
            if (oracle::probe(net, bus, *s.p_up + 2 * step, s.q) == oracle::Verdict::feasible) {
                report("point beyond upper boundary oracle-feasible", *s.p_up + 2 * step, s.q);
            }
        }
        if (s.status_down == NlpStatus::optimal && s.p_down) {
            if (oracle::probe(net, bus, *s.p_down, s.q) != oracle::Verdict::feasible) {
                report("boundary vertex not oracle-feasible", *s.p_down, s.q);
            }
            if (oracle::probe(net, bus, *s.p_down - 2 * step, s.q) == oracle::Verdict::feasible) {
                report("point beyond lower boundary oracle-feasible", *s.p_down - 2 * step, s.q);
            }
        }
    }

    // Sweep soundness: every oracle-feasible node within the sampled
    // q-window lies in the region, up to one grid step. Beyond the window
    // nothing was sampled, so nothing can be checked there.
    double p_lo = 0.0, p_hi = 0.0;
    for (const PQSample& s : nfp.samples) {
        if (s.p_down) p_lo = std::min(p_lo, *s.p_down);
        if (s.p_up) p_hi = std::max(p_hi, *s.p_up);
    }
    const auto sweep = oracle::sweep(net, bus, p_lo - 4 * step, p_hi + 4 * step, grid.q_min,
                                     grid.q_max, step, std::max(1, opt.workers));
    for (int i = 0; i < sweep.np; ++i) {
        for (int j = 0; j < sweep.nq; ++j) {
            if (sweep.at(i, j) != oracle::Verdict::feasible) continue;
            const double p = sweep.p_at(i), q = sweep.q_at(j);
            bool near = false;
            for (int dp = -1; dp <= 1 && !near; ++dp) {
                for (int dq = -1; dq <= 1 && !near; ++dq) {
                    near = membership(single, p + dp * step, q + dq * step);
                }
            }
            if (!near) report("oracle-feasible node outside sampled region", p, q);
        }
    }

    fs::create_directories(opt.out_dir);
    spit(fs::path(opt.out_dir) / "oracle_grid.csv", io::grid_to_csv(sweep));
    std::cout << "validate bus " << bus << ": " << violations << " violation(s)\n";
    return violations == 0 ? kExitOk : kExitViolations;
}

int cmd_radial_check(const Options& opt) {
    const NetworkCase base = load_case(opt);
    const NetworkCase net = switched_case(opt, base);
    const RadialityReport rad = check_radial(net);
    std::cout << rad.describe() << "\n";
    return rad.radial ? kExitOk : kExitNotRadial;
}

void add_common(CLI::App* cmd, Options& opt, bool multi_topology) {
    cmd->add_option("--case", opt.case_path, "MATPOWER-style case file")->required();
    auto* topo = cmd->add_option("--topology", opt.topologies,
                                 "name=path of a switch-state JSON (repeatable)");
    if (!multi_topology) topo->expected(0, 1);
    cmd->add_option("--zone", opt.zone, "bus ids (comma separated), 'all', or ring:<file>");
    cmd->add_option("--q-span", opt.q_span, "reactive span lo:hi, or 'auto'");
    cmd->add_option("--q-count", opt.q_count, "grid point count")->check(CLI::Range(2, 100000));
    cmd->add_option("--workers", opt.workers, "parallel slice workers")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--emit", opt.emit, "subset of csv,json,svg");
    cmd->add_option("--solver-tol", opt.solver_tol, "")->group("");  // fault injection hook
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AC-feasible PQ flexibility regions and their location-invariant intersection"};
    app.require_subcommand(1);
    app.set_config("--config");

    Options opt;
    auto* nfp = app.add_subcommand("nfp", "sample the flex region at one bus");
    add_common(nfp, opt, false);
    auto* lifp = app.add_subcommand("lifp", "aggregate flex regions over a zone");
    add_common(lifp, opt, false);
    auto* compare = app.add_subcommand("compare", "compare topologies by capability area");
    add_common(compare, opt, true);
    compare->add_option("--base", opt.base,
                        "topology name used as the normalization base (default: first listed)");
    auto* validate = app.add_subcommand("validate", "cross-check the sampler against the oracle");
    add_common(validate, opt, false);
    validate->add_option("--oracle-step", opt.oracle_step, "oracle grid step, p.u.")
        ->check(CLI::PositiveNumber);
    auto* radial = app.add_subcommand("radial-check", "report radiality of the switch states");
    radial->add_option("--case", opt.case_path, "MATPOWER-style case file")->required();
    radial->add_option("--topology", opt.topologies, "name=path of a switch-state JSON")
        ->expected(0, 1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(nfp)) return cmd_nfp(opt);
        if (app.got_subcommand(lifp)) return cmd_lifp(opt);
        if (app.got_subcommand(compare)) return cmd_compare(opt);
        if (app.got_subcommand(validate)) return cmd_validate(opt);
        if (app.got_subcommand(radial)) return cmd_radial_check(opt);
    } catch (const geometry::GeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
