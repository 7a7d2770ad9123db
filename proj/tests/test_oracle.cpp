#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flexmap/io.hpp"
#include "flexmap/oracle.hpp"
#include "helpers.hpp"

using namespace flexmap;
using testutil::load_fixture;

TEST_CASE("origin is feasible on an unloaded fixture") {
    NetworkCase net = load_fixture("case2.m");
    net.loads.clear();
    CHECK(oracle::probe(net, 2, 0.0, 0.0) == oracle::Verdict::feasible);
}

TEST_CASE("draws beyond generation and ratings are infeasible") {
    const NetworkCase net = load_fixture("case2.m");
    CHECK(oracle::probe(net, 2, 5.0, 0.0) != oracle::Verdict::feasible);
    CHECK(oracle::probe(net, 2, -5.0, 0.0) != oracle::Verdict::feasible);
}

TEST_CASE("bus-count guard") {
    NetworkCase net;
    net.base_mva = 10;
    net.base_voltage_kv = 20;
    for (int i = 1; i <= 31; ++i) {
        Bus b;
        b.id = i;
        b.role = i == 1 ? BusRole::reference : BusRole::pq;
        net.buses.push_back(b);
    }
    for (int i = 1; i < 31; ++i) {
        Branch br;
        br.id = i;
        br.from_bus = i;
        br.to_bus = i + 1;
        br.conductance = 1.0;
        br.susceptance = -10.0;
        br.rating = 1.0;
        net.branches.push_back(br);
    }
    Generator g;
    g.id = 1;
    g.bus = 1;
    g.p_min = -5;
    g.p_max = 5;
    g.q_min = -5;
    g.q_max = 5;
    net.generators.push_back(g);
    CHECK(testutil::throws_containing<std::invalid_argument>(
        [&] { oracle::probe(net, 2, 0.0, 0.0); }, "guard"));
    CHECK(testutil::throws_containing<std::invalid_argument>(
        [&] { oracle::sweep(net, 2, -1, 1, -1, 1, 0.5); }, "guard"));
}

TEST_CASE("step equal to the span gives a two-by-two sweep") {
    NetworkCase net = load_fixture("case2.m");
    net.loads.clear();
    const auto grid = oracle::sweep(net, 2, -0.1, 0.1, -0.1, 0.1, 0.2);
    CHECK(grid.np == 2);
    CHECK(grid.nq == 2);
    CHECK(grid.verdicts.size() == 4);
}

TEST_CASE("verdicts are symmetric in q on a symmetric lossless fixture") {
    // lossless pair with a symmetric generator box at the flex bus
    NetworkCase net;
    net.base_mva = 10;
    net.base_voltage_kv = 20;
    Bus ref;
    ref.id = 1;
    ref.role = BusRole::reference;
    ref.v_min = 0.8;
    ref.v_max = 1.2;
    Bus pq;
    pq.id = 2;
    pq.v_min = 0.8;
    pq.v_max = 1.2;
    net.buses = {ref, pq};
    Branch br;
    br.id = 1;
    br.from_bus = 1;
    br.to_bus = 2;
    br.conductance = 0.0;
    br.susceptance = -10.0;
    br.rating = 2.0;
    net.branches = {br};
    Generator g;
    g.id = 1;
    g.bus = 1;
    g.p_min = -1;
    g.p_max = 1;
    g.q_min = -1;
    g.q_max = 1;
    net.generators = {g};

    const auto grid = oracle::sweep(net, 2, -0.4, 0.4, -0.3, 0.3, 0.1, 2);
    for (int i = 0; i < grid.np; ++i) {
        for (int j = 0; j < grid.nq; ++j) {
            CHECK(grid.at(i, j) == grid.at(i, grid.nq - 1 - j));
        }
    }
}

TEST_CASE("an infeasible fixture sweeps all-infeasible") {
    const NetworkCase net = load_fixture("case2pinched.m");
    const auto grid = oracle::sweep(net, 2, -0.2, 0.2, -0.2, 0.2, 0.1);
    for (const auto v : grid.verdicts) CHECK(v != oracle::Verdict::feasible);
}

TEST_CASE("grid verdicts serialize to csv") {
    NetworkCase net = load_fixture("case2.m");
    net.loads.clear();
    const auto grid = oracle::sweep(net, 2, -0.1, 0.1, -0.1, 0.1, 0.1);
    const std::string csv = io::grid_to_csv(grid);
    CHECK(csv.rfind("p,q,verdict\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + grid.np * grid.nq);
    CHECK(csv.find("feasible") != std::string::npos);
}
