#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "flexmap/matpower.hpp"

namespace testutil {

// True when f() throws an E whose message contains the needle.
template <typename E, typename F>
bool throws_containing(F&& f, const std::string& needle) {
    try {
        f();
    } catch (const E& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("missing file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline std::string fixture_path(const std::string& name) {
    return std::string(FLEXMAP_FIXTURE_DIR) + "/" + name;
}

inline flexmap::NetworkCase load_fixture(const std::string& name) {
    return flexmap::parse_case(read_file(fixture_path(name)));
}

// Random recursive tree over buses 1..n plus the implied reference at bus 1.
inline flexmap::NetworkCase random_tree_case(std::mt19937& rng, int n) {
    flexmap::NetworkCase net;
    net.name = "tree";
    net.base_mva = 10.0;
    net.base_voltage_kv = 20.0;
    for (int i = 1; i <= n; ++i) {
        flexmap::Bus b;
        b.id = i;
        b.role = i == 1 ? flexmap::BusRole::reference : flexmap::BusRole::pq;
        net.buses.push_back(b);
    }
    int branch_id = 0;
    for (int i = 2; i <= n; ++i) {
        std::uniform_int_distribution<int> pick(1, i - 1);
        flexmap::Branch br;
        br.id = ++branch_id;
        br.from_bus = pick(rng);
        br.to_bus = i;
        br.conductance = 1.0;
        br.susceptance = -10.0;
        br.rating = 1.0;
        net.branches.push_back(br);
    }
    flexmap::Generator g;
    g.id = 1;
    g.bus = 1;
    g.p_min = -5.0;
    g.p_max = 5.0;
    g.q_min = -5.0;
    g.q_max = 5.0;
    net.generators.push_back(g);
    return net;
}

}  // namespace testutil
