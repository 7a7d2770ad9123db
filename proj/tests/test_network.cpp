#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "flexmap/matpower.hpp"
#include "flexmap/radial.hpp"
#include "helpers.hpp"

using namespace flexmap;
using testutil::load_fixture;
using testutil::random_tree_case;

namespace {

const char* kMinimalCase = R"(function mpc = mini
mpc.version = '2';
mpc.baseMVA = 10;
mpc.bus = [
	1	3	0	0	0	0	1	1.0	0	20	1	1.05	0.95;
	2	1	1.0	0.5	0	0	1	1.0	0	20	1	1.05	0.95;
];
mpc.gen = [
	1	0	0	10	-10	1.0	10	1	15	-15;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	15	0	0	0	0	1;
];
)";

}  // namespace

TEST_CASE("minimal two-bus case parses") {
    const NetworkCase net = parse_case(kMinimalCase);
    CHECK(net.name == "mini");
    CHECK(net.base_mva == 10.0);
    CHECK(net.base_voltage_kv == 20.0);
    REQUIRE(net.buses.size() == 2);
    REQUIRE(net.branches.size() == 1);
    REQUIRE(net.generators.size() == 1);
    REQUIRE(net.loads.size() == 1);
    CHECK(net.buses[0].role == BusRole::reference);
    CHECK(net.buses[1].role == BusRole::pq);
    CHECK(net.branches[0].closed());
    CHECK(net.loads[0].p == doctest::Approx(0.1));
    CHECK(net.loads[0].q == doctest::Approx(0.05));
    CHECK(net.generators[0].p_max == doctest::Approx(1.5));
    CHECK(net.generators[0].q_min == doctest::Approx(-1.0));
    // series admittance of r=0.01, x=0.1
    CHECK(net.branches[0].conductance == doctest::Approx(0.01 / 0.0101));
    CHECK(net.branches[0].susceptance == doctest::Approx(-0.1 / 0.0101));
    CHECK(net.branches[0].shunt_susceptance == doctest::Approx(0.01));
}

TEST_CASE("branch status zero parses as open") {
    std::string text = kMinimalCase;
    const auto pos = text.rfind("0	1;");
    text.replace(pos, 4, "0	0;");
    const NetworkCase net = parse_case(text);
    CHECK(net.branches[0].switch_state == SwitchState::open);
}

TEST_CASE("per-unit rating conversion matches source MVA") {
    const NetworkCase net = load_fixture("case5.m");
    const double expect_mva[] = {10.0, 8.0, 6.0, 6.0};
    REQUIRE(net.branches.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
        const double back = net.branches[e].rating * net.base_mva;
        CHECK(std::abs(back - expect_mva[e]) <= 1e-9 * expect_mva[e]);
    }
}

TEST_CASE("parse errors carry position and name offenders") {
    SUBCASE("syntax error reports line and column") {
        try {
            parse_case("function mpc = x\nmpc.baseMVA = ;\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("dangling branch reference names the bus") {
        std::string text = kMinimalCase;
        const auto pos = text.find("\t1\t2\t0.01");
        text.replace(pos, 5, "\t1\t7\t");
        try {
            parse_case(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("7") != std::string::npos);
            CHECK(std::string(e.what()).find("dangling") != std::string::npos);
        }
    }
    SUBCASE("missing reference bus") {
        std::string text = kMinimalCase;
        const auto pos = text.find("\t1\t3\t");
        text.replace(pos, 5, "\t1\t1\t");
        CHECK(testutil::throws_containing<ParseError>([&] { parse_case(text); }, "reference"));
    }
    SUBCASE("non-positive base") {
        std::string text = kMinimalCase;
        const auto pos = text.find("baseMVA = 10");
        text.replace(pos, 12, "baseMVA = 0 ");
        CHECK(testutil::throws_containing<ParseError>([&] { parse_case(text); }, "base"));
    }
    SUBCASE("off-nominal tap rejected") {
        std::string text = kMinimalCase;
        const auto pos = text.find("15	0	0	0	0	1;");
        text.replace(pos, std::string("15	0	0	0	0	1;").size(), "15	0	0	1.05	0	1;");
        CHECK(testutil::throws_containing<ParseError>([&] { parse_case(text); }, "tap"));
    }
    SUBCASE("bus shunt rejected") {
        std::string text = kMinimalCase;
        const auto pos = text.find("1.0	0.5	0	0");
        text.replace(pos, std::string("1.0	0.5	0	0").size(), "1.0	0.5	0	3");
        CHECK(testutil::throws_containing<ParseError>([&] { parse_case(text); }, "shunt"));
    }
}

TEST_CASE("generator VG sets the reference setpoint") {
    std::string text = kMinimalCase;
    const auto pos = text.find("-10	1.0");
    text.replace(pos, std::string("-10	1.0").size(), "-10	1.02");
    const NetworkCase net = parse_case(text);
    CHECK(net.buses[0].v_ref_setpoint == doctest::Approx(1.02));
}

TEST_CASE("emit round-trips structurally") {
    for (const char* name :
         {"case2.m", "case5.m", "case3ring.m", "case3pinched.m", "case2pinched.m"}) {
        CAPTURE(name);
        const NetworkCase first = load_fixture(name);
        const NetworkCase second = parse_case(emit_case(first));
        CHECK(structurally_equal(first, second));
    }
}

TEST_CASE("apply_topology") {
    const NetworkCase net = parse_case(kMinimalCase);

    SUBCASE("all-closed vector is the identity") {
        Topology topo{{{1, SwitchState::closed}}};
        const NetworkCase out = apply_topology(net, topo);
        CHECK(structurally_equal(net, out));
    }
    SUBCASE("opening the only branch empties the active edge set") {
        Topology topo{{{1, SwitchState::open}}};
        const NetworkCase out = apply_topology(net, topo);
        CHECK_FALSE(out.branches[0].closed());
        // nothing but switch_state may change
        NetworkCase reverted = out;
        reverted.branches[0].switch_state = SwitchState::closed;
        CHECK(structurally_equal(net, reverted));
    }
    SUBCASE("unknown branch id") {
        Topology topo{{{1, SwitchState::closed}, {9, SwitchState::open}}};
        CHECK(testutil::throws_containing<ValidationError>([&] { apply_topology(net, topo); }, "unknown"));
    }
    SUBCASE("non-switchable branch") {
        NetworkCase frozen = net;
        frozen.branches[0].switchable = false;
        Topology topo{{{1, SwitchState::open}}};
        CHECK(testutil::throws_containing<ValidationError>([&] { apply_topology(frozen, topo); }, "non-switchable"));
    }
    SUBCASE("missing switchable branch") {
        Topology topo;
        CHECK(testutil::throws_containing<ValidationError>([&] { apply_topology(net, topo); }, "missing"));
    }
    SUBCASE("baseline and flipped vectors differ only in switch state") {
        const NetworkCase ring = load_fixture("case3ring.m");
        const Topology a{{{1, SwitchState::closed},
                          {2, SwitchState::closed},
                          {3, SwitchState::open}}};
        const Topology b{{{1, SwitchState::closed},
                          {2, SwitchState::open},
                          {3, SwitchState::closed}}};
        const NetworkCase na = apply_topology(ring, a);
        const NetworkCase nb = apply_topology(ring, b);
        NetworkCase nb_like_na = nb;
        for (std::size_t e = 0; e < nb_like_na.branches.size(); ++e) {
            nb_like_na.branches[e].switch_state = na.branches[e].switch_state;
        }
        CHECK(structurally_equal(na, nb_like_na));
    }
}

TEST_CASE("radiality checks") {
    SUBCASE("five-bus chain is radial") {
        const NetworkCase net = load_fixture("case5.m");
        const RadialityReport rep = check_radial(net);
        CHECK(rep.radial);
        CHECK(rep.cycle_branches.empty());
        CHECK(rep.disconnected_buses.empty());
    }
    SUBCASE("closed triangle reports one cycle") {
        const NetworkCase net = load_fixture("case3ring.m");
        const RadialityReport rep = check_radial(net);
        CHECK_FALSE(rep.radial);
        CHECK(rep.cycle_branches.size() == 1);
        CHECK(rep.disconnected_buses.empty());
    }
    SUBCASE("chain with an opened middle branch reports the island") {
        NetworkCase net = load_fixture("case5.m");
        net.branches[2].switch_state = SwitchState::open;  // 3-4
        const RadialityReport rep = check_radial(net);
        CHECK_FALSE(rep.radial);
        REQUIRE(rep.disconnected_buses.size() == 2);
        CHECK(rep.disconnected_buses[0] == 4);
        CHECK(rep.disconnected_buses[1] == 5);
    }
}

TEST_CASE("random trees are radial and any closed chord breaks it") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> size(2, 24);
        const int n = size(rng);
        NetworkCase net = random_tree_case(rng, n);
        CHECK(check_radial(net).radial);

        std::uniform_int_distribution<int> pick(1, n);
        int u = pick(rng), v = pick(rng);
        while (v == u) v = pick(rng);
        Branch chord;
        chord.id = static_cast<int>(net.branches.size()) + 1;
        chord.from_bus = u;
        chord.to_bus = v;
        chord.conductance = 1.0;
        chord.susceptance = -10.0;
        chord.rating = 1.0;
        net.branches.push_back(chord);
        const RadialityReport rep = check_radial(net);
        CHECK_FALSE(rep.radial);
        CHECK(rep.cycle_branches.size() == 1);
    }
}
