#pragma once

#include <vector>

#include "flexmap/network.hpp"

namespace flexmap::oracle {

enum class Verdict { feasible, infeasible, pf_diverged };

const char* to_string(Verdict v);

// Brute-force feasibility check at one flex point. Generators stay at their
// case setpoints and the first reference-bus generator absorbs the slack, so
// the verdict under-approximates the co-optimizing boundary unless the case
// has a single generator. Guarded to cases of at most 30 buses.
Verdict probe(const NetworkCase& net, int flex_bus, double p, double q, double tol = 1e-6);

struct FeasibilityGrid {
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    double step = 0.0;
    int np = 0, nq = 0;
    std::vector<Verdict> verdicts;  // row-major over (p index, q index)

    double p_at(int i) const { return p_min + step * i; }
    double q_at(int j) const { return q_min + step * j; }
    Verdict at(int i, int j) const { return verdicts[static_cast<std::size_t>(i) * nq + j]; }
};

FeasibilityGrid sweep(const NetworkCase& net, int flex_bus, double p_min, double p_max,
                      double q_min, double q_max, double step, int workers = 1);

}  // namespace flexmap::oracle
