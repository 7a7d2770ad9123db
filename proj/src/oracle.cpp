#include "flexmap/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "flexmap/powerflow.hpp"

namespace flexmap::oracle {

namespace {

constexpr int kBusGuard = 30;

void check_guard(const NetworkCase& net) {
    if (net.buses.size() > kBusGuard) {
        throw std::invalid_argument("oracle guard: case has " +
                                    std::to_string(net.buses.size()) +
                                    " buses, limit is " + std::to_string(kBusGuard));
    }
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::feasible: return "feasible";
        case Verdict::infeasible: return "infeasible";
        case Verdict::pf_diverged: return "pf-diverged";
    }
    return "unknown";
}

Verdict probe(const NetworkCase& net, int flex_bus, double p, double q, double tol) {
    check_guard(net);
    Eigen::VectorXd inj_p, inj_q;
    scheduled_injections(net, flex_bus, p, q, inj_p, inj_q);
    const NewtonResult pf = solve_newton(net, inj_p, inj_q);
    if (!pf.converged) return Verdict::pf_diverged;

    const OperatingPoint pt = slack_dispatch_point(net, pf, flex_bus, p, q);

    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        const double v = pt.v_mag[static_cast<Eigen::Index>(b)];
        if (v < net.buses[b].v_min - tol || v > net.buses[b].v_max + tol) {
            return Verdict::infeasible;
        }
    }
    const auto flows = branch_flows(net, pt);
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
        const Branch& br = net.branches[e];
        if (!br.closed() || !(br.rating < std::numeric_limits<double>::infinity())) continue;
        const double cap = br.rating * br.rating;
        const double s_from =
            flows[e].p_from * flows[e].p_from + flows[e].q_from * flows[e].q_from;
        const double s_to = flows[e].p_to * flows[e].p_to + flows[e].q_to * flows[e].q_to;
        if (s_from > cap + tol || s_to > cap + tol) return Verdict::infeasible;
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        const double gp = pt.gen_p[static_cast<Eigen::Index>(g)];
        const double gq = pt.gen_q[static_cast<Eigen::Index>(g)];
        if (gp < gen.p_min - tol || gp > gen.p_max + tol || gq < gen.q_min - tol ||
            gq > gen.q_max + tol) {
            return Verdict::infeasible;
        }
    }
    return Verdict::feasible;
}

FeasibilityGrid sweep(const NetworkCase& net, int flex_bus, double p_min, double p_max,
                      double q_min, double q_max, double step, int workers) {
    check_guard(net);
    if (!(step > 0.0)) throw std::invalid_argument("oracle sweep: step must be positive");
    FeasibilityGrid grid;
    grid.p_min = p_min;
    grid.p_max = p_max;
    grid.q_min = q_min;
    grid.q_max = q_max;
    grid.step = step;
    grid.np = static_cast<int>(std::floor((p_max - p_min) / step + 1e-9)) + 1;
    grid.nq = static_cast<int>(std::floor((q_max - q_min) / step + 1e-9)) + 1;
    grid.verdicts.assign(static_cast<std::size_t>(grid.np) * grid.nq, Verdict::pf_diverged);

    auto run_rows = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            for (int j = 0; j < grid.nq; ++j) {
                grid.verdicts[static_cast<std::size_t>(i) * grid.nq + j] =
                    probe(net, flex_bus, grid.p_at(i), grid.q_at(j));
            }
        }
    };

    const int nw = std::max(1, std::min(workers, grid.np));
    if (nw == 1) {
        run_rows(0, grid.np);
    } else {
        std::vector<std::future<void>> futures;
        const int chunk = (grid.np + nw - 1) / nw;
        for (int w = 0; w < nw; ++w) {
            const int begin = w * chunk;
            const int end = std::min(grid.np, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, run_rows, begin, end));
        }
        for (auto& f : futures) f.get();
    }
    return grid;
}

}  // namespace flexmap::oracle
