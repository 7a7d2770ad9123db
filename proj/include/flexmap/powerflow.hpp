#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "flexmap/network.hpp"

namespace flexmap {

// Variable order used by the flow-term derivatives: [Vf, Vt, theta_f, theta_t].
struct FlowTerms {
    double p = 0.0, q = 0.0;
    std::array<double, 4> dp{}, dq{};
    std::array<std::array<double, 4>, 4> d2p{}, d2q{};
};

// Real/reactive power entering the branch at the f end:
//   p = Vf^2 (g + gsh) - Vf Vt (g cos d + b sin d),   d = theta_f - theta_t
//   q = -Vf^2 (b + bsh) + Vf Vt (b cos d - g sin d)
// For the t end call with the roles of f and t swapped.
FlowTerms flow_terms(double g, double b, double gsh, double bsh, double v_f, double v_t,
                     double theta_f, double theta_t, bool with_hessian = false);

struct OperatingPoint {
    Eigen::VectorXd v_mag;   // per bus, case order, p.u.
    Eigen::VectorXd v_ang;   // per bus, rad; reference bus pinned to 0
    Eigen::VectorXd gen_p;   // per generator, case order, p.u.
    Eigen::VectorXd gen_q;
    double flex_p = 0.0;
    double flex_q = 0.0;
};

OperatingPoint flat_point(const NetworkCase& net);

struct BranchFlow {
    double p_from = 0.0, q_from = 0.0, p_to = 0.0, q_to = 0.0;
};

// Flows per branch in case order; open branches report zeros.
std::vector<BranchFlow> branch_flows(const NetworkCase& net, const OperatingPoint& pt);

struct Mismatch {
    Eigen::VectorXd dp;  // per bus: sum(gen) - sum(flows) - sum(load) + flex_p at flex bus
    Eigen::VectorXd dq;
};

Mismatch mismatch(const NetworkCase& net, const OperatingPoint& pt,
                  std::optional<int> flex_bus = std::nullopt);

// Analytic d(dp,dq)/d(theta, v_mag) over all buses; rows [dp; dq],
// columns [theta; v_mag]. Open branches contribute nothing.
Eigen::SparseMatrix<double> jacobian(const NetworkCase& net, const OperatingPoint& pt);

struct NewtonOptions {
    double tolerance = 1e-8;  // p.u., infinity norm
    int max_iterations = 30;
    int max_halvings = 8;
};

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    std::string failure;  // set when not converged
    Eigen::VectorXd v_mag, v_ang;
    // Net injection the reference bus must supply to balance the solution
    // (sum of branch flows leaving the reference bus).
    double ref_injection_p = 0.0, ref_injection_q = 0.0;
};

// Conventional power flow: every non-reference bus holds the given net
// injection, the reference bus fixes V to its setpoint and theta to 0 and
// absorbs the imbalance. Flat start unless `warm` is supplied.
NewtonResult solve_newton(const NetworkCase& net, const Eigen::VectorXd& p_injection,
                          const Eigen::VectorXd& q_injection, const NewtonOptions& opts = {},
                          const OperatingPoint* warm = nullptr);

// Operating point with generators at their case setpoints and the first
// reference-bus generator absorbing the residual imbalance of a converged
// power flow. Throws ValidationError when the reference bus hosts no
// generator.
OperatingPoint slack_dispatch_point(const NetworkCase& net, const NewtonResult& pf,
                                    std::optional<int> flex_bus = std::nullopt,
                                    double flex_p = 0.0, double flex_q = 0.0);

// Per-bus net scheduled injections (generators at setpoint minus loads plus
// the flex draw), the quantity solve_newton holds fixed at non-reference
// buses.
void scheduled_injections(const NetworkCase& net, std::optional<int> flex_bus, double flex_p,
                          double flex_q, Eigen::VectorXd& p_injection,
                          Eigen::VectorXd& q_injection);

}  // namespace flexmap
