#include "flexmap/radial.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace flexmap {

namespace {

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    // Returns false when a and b were already in the same component.
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace

RadialityReport check_radial(const NetworkCase& net) {
    RadialityReport report;
    const std::size_t n = net.buses.size();
    if (n == 0) return report;

    std::unordered_map<int, int> pos;
    pos.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pos[net.buses[i].id] = static_cast<int>(i);

    DisjointSet ds(n);
    for (const Branch& br : net.branches) {
        if (!br.closed()) continue;
        if (!ds.unite(pos.at(br.from_bus), pos.at(br.to_bus))) {
            report.cycle_branches.push_back(br.id);
        }
    }

    const int ref_root = ds.find(static_cast<int>(net.reference_pos()));
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.find(static_cast<int>(i)) != ref_root) {
            report.disconnected_buses.push_back(net.buses[i].id);
        }
    }

    report.radial = report.cycle_branches.empty() && report.disconnected_buses.empty();
    return report;
}

std::string RadialityReport::describe() const {
    if (radial) return "radial";
    std::ostringstream os;
    os << "not radial:";
    if (!cycle_branches.empty()) {
        os << " cycles closed by branch(es)";
        for (int id : cycle_branches) os << " " << id;
        os << ";";
    }
    if (!disconnected_buses.empty()) {
        os << " disconnected bus(es)";
        for (int id : disconnected_buses) os << " " << id;
    }
    return os.str();
}

}  // namespace flexmap
