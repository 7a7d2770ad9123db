#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "flexmap/geometry.hpp"
#include "flexmap/network.hpp"
#include "flexmap/nlp.hpp"

namespace flexmap {

// Uniformly spaced reactive-power set points, inclusive of both ends.
struct QGrid {
    double q_min = 0.0;
    double q_max = 0.0;
    int count = 0;
    std::vector<double> values;

    static QGrid uniform(double q_min, double q_max, int count);
};

bool same_grid(const QGrid& a, const QGrid& b);

enum class FlexDirection { max, min };
enum class FlexTarget { real_power, reactive_power };

// One boundary NLP: the energized part of the network under the current
// switch states, with the flex draw at one bus. Variables are
// [flex_p, (flex_q), gen_p, gen_q, theta, v, p_flows, q_flows]; open branches
// and de-energized islands are left out of the equations entirely.
struct FlexProblem {
    NlpProblem nlp;
    int flex_bus = 0;
    double q_fixed = 0.0;
    FlexDirection direction = FlexDirection::max;
    FlexTarget target = FlexTarget::real_power;

    int ix_flex_p = 0;
    int ix_flex_q = -1;  // variable only for reactive_power targets
    std::vector<int> gen_list;             // positions into case.generators
    std::vector<int> ix_gen_p, ix_gen_q;   // parallel to gen_list
    std::vector<int> energized;            // case bus positions in the problem
    std::vector<int> ix_theta, ix_v;       // per case bus position, -1 if absent
    std::vector<int> branch_list;          // closed branch positions
    std::vector<int> ix_p_from, ix_p_to, ix_q_from, ix_q_to;
};

// Builds AC-Flex-Max/Min at the given reactive set point. Throws
// ValidationError for an unknown flex bus or one disconnected under the
// current switch states.
FlexProblem assemble_flex_problem(const NetworkCase& net, int flex_bus, double q_fixed,
                                  FlexDirection direction);

// Auxiliary problem spanning the reactive axis: optimize the flex reactive
// draw with the real draw free.
FlexProblem assemble_qspan_problem(const NetworkCase& net, int flex_bus,
                                   FlexDirection direction);

// Power-flow warm start at zero flex draw when it converges, flat otherwise.
Eigen::VectorXd initial_point(const NetworkCase& net, const FlexProblem& fp);

struct PQSample {
    double q = 0.0;
    std::optional<double> p_up;
    std::optional<double> p_down;
    NlpStatus status_up = NlpStatus::numerical_failure;
    NlpStatus status_down = NlpStatus::numerical_failure;
};

struct NFPRegion {
    int flex_bus = 0;
    QGrid grid;
    std::vector<PQSample> samples;  // ordered by q
    // Upper chain in increasing q, then lower chain in decreasing q; the
    // closing edge back to the first vertex is implicit. Only slices where
    // both directions solved contribute vertices.
    std::vector<geometry::Point> polygon;
};

struct SampleOptions {
    int workers = 1;
    bool warm_start_chaining = true;
    NlpOptions nlp;
};

// Samples the flexibility boundary at every grid point (two solves per
// slice). Slices are split into contiguous chunks across workers; warm-start
// chaining applies within a chunk and falls back to cold starts at chunk
// boundaries.
NFPRegion sample_nfp(const NetworkCase& net, int flex_bus, const QGrid& grid,
                     const SampleOptions& opts = {});

// Feasible reactive span at the bus, shrunk by 1e-4 p.u. per end so the
// endpoint slices stay solvable. Throws ValidationError when no feasible
// flex operation exists at the bus.
std::pair<double, double> auto_qrange(const NetworkCase& net, int flex_bus,
                                      const NlpOptions& opts = {});

// Rebuilds the polygon from the samples (exposed for deserialized regions).
std::vector<geometry::Point> build_polygon(const std::vector<PQSample>& samples);

}  // namespace flexmap
