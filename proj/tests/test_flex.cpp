#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexmap/flex.hpp"
#include "flexmap/lifp.hpp"
#include "flexmap/oracle.hpp"
#include "helpers.hpp"

using namespace flexmap;
using testutil::load_fixture;

namespace {

// An isolated flex bus: the only generator sits at the flex bus and the
// reference hosts none, so its balance pins the lossless tie flow to zero
// and the local box dominates both axes.
NetworkCase island_case() {
    NetworkCase net;
    net.name = "island";
    net.base_mva = 10.0;
    net.base_voltage_kv = 20.0;
    Bus ref;
    ref.id = 1;
    ref.role = BusRole::reference;
    Bus flex;
    flex.id = 2;
    net.buses = {ref, flex};
    Branch br;
    br.id = 1;
    br.from_bus = 1;
    br.to_bus = 2;
    br.conductance = 0.0;
    br.susceptance = -10.0;
    br.rating = 1.0;
    net.branches = {br};
    Generator local;
    local.id = 1;
    local.bus = 2;
    local.p_min = -1;
    local.p_max = 1;
    local.q_min = -0.2;
    local.q_max = 0.2;
    net.generators = {local};
    return net;
}

NetworkCase unloaded_lossless_pair() {
    NetworkCase net = island_case();
    net.branches[0].rating = 5.0;
    Generator slack;
    slack.id = 2;
    slack.bus = 1;
    slack.p_min = -1.0;
    slack.p_max = 1.0;
    slack.q_min = -1.5;
    slack.q_max = 1.5;
    net.generators = {slack};
    return net;
}

}  // namespace

TEST_CASE("objective vector carries exactly one nonzero") {
    const NetworkCase net = load_fixture("case5.m");
    for (FlexDirection dir : {FlexDirection::max, FlexDirection::min}) {
        const FlexProblem fp = assemble_flex_problem(net, 3, 0.0, dir);
        int nonzeros = 0;
        for (int i = 0; i < fp.nlp.n; ++i) nonzeros += fp.nlp.objective[i] != 0.0 ? 1 : 0;
        CHECK(nonzeros == 1);
        CHECK(fp.nlp.objective[fp.ix_flex_p] == (dir == FlexDirection::max ? -1.0 : 1.0));
    }
}

TEST_CASE("zero draw is feasible on an unloaded lossless pair") {
    const NetworkCase net = unloaded_lossless_pair();
    const FlexProblem fp = assemble_flex_problem(net, 2, 0.0, FlexDirection::max);
    const NlpResult res = solve(fp.nlp, initial_point(net, fp));
    REQUIRE(res.status == NlpStatus::optimal);
    // the slack box is the only real-power limit
    CHECK(res.point[fp.ix_flex_p] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("a flex bus islanded by an open switch is rejected") {
    NetworkCase net = load_fixture("case5.m");
    net.branches[3].switch_state = SwitchState::open;  // 4-5
    CHECK(testutil::throws_containing<ValidationError>(
        [&] { assemble_flex_problem(net, 5, 0.0, FlexDirection::max); }, "disconnected"));
    CHECK_THROWS_AS(assemble_flex_problem(net, 42, 0.0, FlexDirection::max), ValidationError);
}

TEST_CASE("grid count three gives three samples and at most six vertices") {
    const NetworkCase net = load_fixture("case2.m");
    const QGrid grid = QGrid::uniform(-0.2, 0.2, 3);
    const NFPRegion nfp = sample_nfp(net, 2, grid);
    CHECK(nfp.samples.size() == 3);
    CHECK(nfp.polygon.size() <= 6);
    CHECK(nfp.polygon.size() >= 3);
}

TEST_CASE("pinched voltages give an empty region with infeasible slices") {
    const NetworkCase net = load_fixture("case2pinched.m");
    const QGrid grid = QGrid::uniform(-0.3, 0.3, 3);
    const NFPRegion nfp = sample_nfp(net, 2, grid);
    CHECK(nfp.polygon.empty());
    for (const PQSample& s : nfp.samples) {
        CHECK(s.status_up == NlpStatus::infeasible);
        CHECK(s.status_down == NlpStatus::infeasible);
        CHECK_FALSE(s.p_up.has_value());
        CHECK_FALSE(s.p_down.has_value());
    }
}

TEST_CASE("auto_qrange") {
    SUBCASE("local generator box dominates a thin tie line") {
        const NetworkCase net = island_case();
        const auto [lo, hi] = auto_qrange(net, 2);
        CHECK(lo >= -0.2 - 1e-9);
        CHECK(hi <= 0.2 + 1e-9);
        CHECK(hi - lo > 0.35);
    }
    SUBCASE("symmetric lossless fixture gives a symmetric span") {
        const NetworkCase net = island_case();
        const auto [lo, hi] = auto_qrange(net, 2);
        CHECK(std::abs(lo + hi) <= 1e-4);
    }
    SUBCASE("infeasible fixture raises the documented error") {
        const NetworkCase net = load_fixture("case3pinched.m");
        CHECK(testutil::throws_containing<ValidationError>(
            [&] { auto_qrange(net, 3); }, "no feasible flex operation"));
    }
}

TEST_CASE("five-bus boundary brackets against the oracle") {
    const NetworkCase net = load_fixture("case5.m");
    const QGrid grid = QGrid::uniform(-0.2, 0.2, 7);
    SampleOptions so;
    so.workers = 4;
    const NFPRegion nfp = sample_nfp(net, 3, grid, so);
    const double margin = 0.02;
    for (const PQSample& s : nfp.samples) {
        REQUIRE(s.status_up == NlpStatus::optimal);
        REQUIRE(s.status_down == NlpStatus::optimal);
        CHECK(*s.p_down <= *s.p_up + 1e-8);
        CHECK(oracle::probe(net, 3, *s.p_up, s.q) == oracle::Verdict::feasible);
        CHECK(oracle::probe(net, 3, *s.p_down, s.q) == oracle::Verdict::feasible);
        CHECK(oracle::probe(net, 3, *s.p_up + margin, s.q) != oracle::Verdict::feasible);
        CHECK(oracle::probe(net, 3, *s.p_down - margin, s.q) != oracle::Verdict::feasible);
    }
    CHECK(geometry::polygon_is_simple(nfp.polygon));
}

TEST_CASE("chained and parallel sampling agree") {
    const NetworkCase net = load_fixture("case5.m");
    const QGrid grid = QGrid::uniform(-0.25, 0.25, 8);
    SampleOptions serial;
    serial.workers = 1;
    SampleOptions parallel;
    parallel.workers = 3;
    const NFPRegion a = sample_nfp(net, 3, grid, serial);
    const NFPRegion b = sample_nfp(net, 3, grid, parallel);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].status_up == b.samples[i].status_up);
        CHECK(a.samples[i].status_down == b.samples[i].status_down);
        REQUIRE(a.samples[i].p_up.has_value());
        REQUIRE(b.samples[i].p_up.has_value());
        CHECK(*a.samples[i].p_up == doctest::Approx(*b.samples[i].p_up).epsilon(1e-5));
        CHECK(*a.samples[i].p_down == doctest::Approx(*b.samples[i].p_down).epsilon(1e-5));
    }
}

TEST_CASE("doubling the grid moves the area by less than a slice band") {
    const NetworkCase net = load_fixture("case2.m");
    const int k = 5;
    const QGrid coarse = QGrid::uniform(-0.3, 0.3, k);
    const QGrid fine = QGrid::uniform(-0.3, 0.3, 2 * k);
    const NFPRegion a = sample_nfp(net, 2, coarse);
    const NFPRegion b = sample_nfp(net, 2, fine);
    double p_lo = 0, p_hi = 0;
    for (const PQSample& s : a.samples) {
        if (s.p_down) p_lo = std::min(p_lo, *s.p_down);
        if (s.p_up) p_hi = std::max(p_hi, *s.p_up);
    }
    const double slice_width = (coarse.q_max - coarse.q_min) / (k - 1);
    CHECK(std::abs(region_area(a) - region_area(b)) < slice_width * (p_hi - p_lo));
}

TEST_CASE("grid construction validates its invariants") {
    CHECK_THROWS_AS(QGrid::uniform(0.2, -0.2, 5), std::invalid_argument);
    CHECK_THROWS_AS(QGrid::uniform(-0.2, 0.2, 1), std::invalid_argument);
    const QGrid g = QGrid::uniform(-1.0, 1.0, 21);
    CHECK(g.values.size() == 21);
    CHECK(g.values.front() == -1.0);
    CHECK(g.values.back() == 1.0);
    for (std::size_t i = 1; i < g.values.size(); ++i) CHECK(g.values[i] > g.values[i - 1]);
}
