#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <sstream>

#include "flexmap/flex.hpp"
#include "flexmap/oracle.hpp"
#include "helpers.hpp"

using namespace flexmap;
using testutil::load_fixture;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NlpProblem one_dim_lp() {
    NlpProblem lp;
    lp.n = 1;
    lp.objective = Eigen::VectorXd::Ones(1);
    lp.lb = Eigen::VectorXd::Ones(1);
    lp.ub = Eigen::VectorXd::Constant(1, kInf);
    return lp;
}

// max p subject to p^2 + q^2 <= 1 and q = 0, posed as min -p.
NlpProblem circle_problem() {
    NlpProblem pb;
    pb.n = 2;
    pb.objective = Eigen::VectorXd::Zero(2);
    pb.objective[0] = -1.0;
    pb.lb = Eigen::VectorXd::Constant(2, -kInf);
    pb.ub = Eigen::VectorXd::Constant(2, kInf);
    pb.m_eq = 1;
    pb.m_ineq = 1;
    pb.eq_residual = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(1);
        r[0] = x[1];
        return r;
    };
    pb.eq_jacobian = [](const Eigen::VectorXd&) {
        Eigen::SparseMatrix<double> j(1, 2);
        j.insert(0, 1) = 1.0;
        return j;
    };
    pb.ineq_residual = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(1);
        r[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
        return r;
    };
    pb.ineq_jacobian = [](const Eigen::VectorXd& x) {
        Eigen::SparseMatrix<double> j(1, 2);
        j.insert(0, 0) = 2.0 * x[0];
        j.insert(0, 1) = 2.0 * x[1];
        return j;
    };
    pb.lagrangian_hessian = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd& nu) {
        Eigen::SparseMatrix<double> h(2, 2);
        h.insert(0, 0) = 2.0 * nu[0];
        h.insert(1, 1) = 2.0 * nu[0];
        return h;
    };
    return pb;
}

}  // namespace

TEST_CASE("one-dimensional bound LP lands on the bound") {
    const NlpProblem lp = one_dim_lp();
    const NlpResult res = solve(lp, Eigen::VectorXd::Constant(1, 5.0));
    REQUIRE(res.status == NlpStatus::optimal);
    CHECK(res.point[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.kkt_residual <= 1e-6);
    CHECK(kkt_check(lp, res.point, res.multipliers).max() <= 1e-6);
}

TEST_CASE("rating circle in isolation peaks at the radius") {
    const NlpProblem pb = circle_problem();
    const NlpResult res = solve(pb, Eigen::VectorXd::Zero(2));
    REQUIRE(res.status == NlpStatus::optimal);
    CHECK(res.point[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.point[1] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(kkt_check(pb, res.point, res.multipliers).max() <= 1e-6);
}

TEST_CASE("kkt_check on hand-built points") {
    const NlpProblem lp = one_dim_lp();
    // x = 1, lower-bound dual 1 closes stationarity exactly.
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    NlpMultipliers mult;
    mult.eq.resize(0);
    mult.ineq.resize(0);
    mult.z_lower = Eigen::VectorXd::Ones(1);
    mult.z_upper = Eigen::VectorXd::Zero(1);

    SUBCASE("exact point has vanishing residuals") {
        const KktResiduals r = kkt_check(lp, x, mult);
        CHECK(r.stationarity <= 1e-12);
        CHECK(r.primal_feasibility <= 1e-12);
        CHECK(r.complementarity <= 1e-12);
    }
    SUBCASE("perturbing the multiplier moves stationarity by the same amount") {
        NlpMultipliers m2 = mult;
        m2.z_lower[0] += 1e-3;
        const KktResiduals r = kkt_check(lp, x, m2);
        CHECK(r.stationarity == doctest::Approx(1e-3).epsilon(0.01));
    }
    SUBCASE("perturbing the point moves complementarity by the same amount") {
        Eigen::VectorXd x2 = x;
        x2[0] += 1e-3;
        const KktResiduals r = kkt_check(lp, x2, mult);
        CHECK(r.complementarity == doctest::Approx(1e-3).epsilon(0.01));
    }
}

TEST_CASE("identical inputs give identical iterate sequences") {
    const NetworkCase net = load_fixture("case2.m");
    const FlexProblem fp = assemble_flex_problem(net, 2, 0.1, FlexDirection::max);
    const Eigen::VectorXd start = initial_point(net, fp);

    std::ostringstream log_a, log_b;
    NlpOptions opts;
    opts.iteration_log = &log_a;
    const NlpResult a = solve(fp.nlp, start, opts);
    opts.iteration_log = &log_b;
    const NlpResult b = solve(fp.nlp, start, opts);

    CHECK(log_a.str() == log_b.str());
    REQUIRE(a.point.size() == b.point.size());
    for (int i = 0; i < a.point.size(); ++i) CHECK(a.point[i] == b.point[i]);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("two-bus boundary matches the brute-force oracle") {
    const NetworkCase net = load_fixture("case2.m");
    const double step = 0.005;

    const FlexProblem up = assemble_flex_problem(net, 2, 0.0, FlexDirection::max);
    const NlpResult r_up = solve(up.nlp, initial_point(net, up));
    REQUIRE(r_up.status == NlpStatus::optimal);
    double oracle_max = -kInf;
    for (double p = -2.0; p <= 3.0; p += step) {
        if (oracle::probe(net, 2, p, 0.0) == oracle::Verdict::feasible) oracle_max = p;
    }
    CHECK(std::abs(r_up.point[up.ix_flex_p] - oracle_max) <= 2 * step);

    const FlexProblem down = assemble_flex_problem(net, 2, 0.0, FlexDirection::min);
    const NlpResult r_down = solve(down.nlp, initial_point(net, down));
    REQUIRE(r_down.status == NlpStatus::optimal);
    double oracle_min = kInf;
    for (double p = 3.0; p >= -3.0; p -= step) {
        if (oracle::probe(net, 2, p, 0.0) == oracle::Verdict::feasible) oracle_min = p;
    }
    CHECK(std::abs(r_down.point[down.ix_flex_p] - oracle_min) <= 2 * step);
}

TEST_CASE("optimal statuses satisfy the independent kkt re-check") {
    const NetworkCase net = load_fixture("case2.m");
    for (double q : {-0.2, 0.0, 0.3}) {
        for (FlexDirection dir : {FlexDirection::max, FlexDirection::min}) {
            const FlexProblem fp = assemble_flex_problem(net, 2, q, dir);
            const NlpResult res = solve(fp.nlp, initial_point(net, fp));
            REQUIRE(res.status == NlpStatus::optimal);
            CHECK(kkt_check(fp.nlp, res.point, res.multipliers).max() <= 1e-6);
        }
    }
}

TEST_CASE("pinched fixture is reported infeasible rather than failed") {
    const NetworkCase net = load_fixture("case2pinched.m");
    const FlexProblem fp = assemble_flex_problem(net, 2, 0.0, FlexDirection::max);
    const NlpResult res = solve(fp.nlp, initial_point(net, fp));
    CHECK(res.status == NlpStatus::infeasible);
}

TEST_CASE("the iteration cap is reported as its own status") {
    const NlpProblem pb = circle_problem();
    NlpOptions opts;
    opts.max_iterations = 3;
    const NlpResult res = solve(pb, Eigen::VectorXd::Zero(2), opts);
    CHECK(res.status == NlpStatus::iteration_limit);
    CHECK(res.iterations <= 3);
}

TEST_CASE("equal bounds are rejected with guidance") {
    NlpProblem lp = one_dim_lp();
    lp.ub[0] = lp.lb[0];
    CHECK(testutil::throws_containing<std::invalid_argument>(
        [&] { solve(lp, Eigen::VectorXd::Zero(1)); }, "equality"));
}

TEST_CASE("multistart is deterministic and keeps the best optimum") {
    const NetworkCase net = load_fixture("case2.m");
    const FlexProblem fp = assemble_flex_problem(net, 2, 0.0, FlexDirection::max);
    NlpOptions opts;
    opts.multistart = 3;
    const NlpResult a = solve(fp.nlp, initial_point(net, fp), opts);
    const NlpResult b = solve(fp.nlp, initial_point(net, fp), opts);
    REQUIRE(a.status == NlpStatus::optimal);
    CHECK(a.objective == b.objective);
    for (int i = 0; i < a.point.size(); ++i) CHECK(a.point[i] == b.point[i]);
}
