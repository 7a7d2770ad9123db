#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <iosfwd>
#include <string>

namespace flexmap {

// Smooth NLP in the form
//   minimize    objective . x
//   subject to  eq(x) = 0,  ineq(x) <= 0,  lb <= x <= ub
// Evaluator sparsity patterns must not change between calls. Components with
// lb == ub are rejected; fix a variable with an equality row instead.
struct NlpProblem {
    int n = 0;
    Eigen::VectorXd objective;  // linear coefficients
    Eigen::VectorXd lb, ub;     // +-infinity where free
    int m_eq = 0;
    int m_ineq = 0;

    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq_residual;
    std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> eq_jacobian;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ineq_residual;
    std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> ineq_jacobian;
    // Hessian of eq_mult . eq(x) + ineq_mult . ineq(x); full symmetric matrix.
    // May be empty when every constraint is linear.
    std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                              const Eigen::VectorXd&)>
        lagrangian_hessian;
};

enum class NlpStatus { optimal, infeasible, iteration_limit, numerical_failure };

const char* to_string(NlpStatus s);

struct NlpMultipliers {
    Eigen::VectorXd eq;       // one per equality row
    Eigen::VectorXd ineq;     // one per inequality row, >= 0
    Eigen::VectorXd z_lower;  // one per variable, 0 where unbounded
    Eigen::VectorXd z_upper;
};

struct NlpResult {
    NlpStatus status = NlpStatus::numerical_failure;
    Eigen::VectorXd point;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    NlpMultipliers multipliers;
};

struct NlpOptions {
    double tolerance = 1e-6;  // scaled KKT tolerance
    int max_iterations = 200;
    double mu_init = 0.1;
    double mu_floor = 1e-11;
    double mu_shrink = 0.2;
    double fraction_to_boundary = 0.995;
    double reg_init = 1e-8;
    double reg_growth = 10.0;
    double reg_max = 1e10;
    double infeasibility_tol = 1e-6;
    int infeasibility_window = 10;
    int multistart = 1;            // extra perturbed starts beyond the first
    unsigned multistart_seed = 7;
    std::ostream* iteration_log = nullptr;
};

// Primal-dual interior-point solve. Infeasible instances come back with
// status infeasible, not an exception.
NlpResult solve(const NlpProblem& problem, const Eigen::VectorXd& start,
                const NlpOptions& opts = {});

struct KktResiduals {
    double stationarity = 0.0;
    double primal_feasibility = 0.0;
    double complementarity = 0.0;
    double max() const;
};

// Re-evaluates first-order optimality from the problem callbacks alone,
// independent of any solver state. Uses the same multiplier-based scaling as
// the solver's convergence test.
KktResiduals kkt_check(const NlpProblem& problem, const Eigen::VectorXd& point,
                       const NlpMultipliers& mult);

}  // namespace flexmap
