#pragma once

#include <vector>

#include "flexmap/network.hpp"

namespace flexmap {

struct RadialityReport {
    bool radial = false;
    // Buses not reachable from the reference bus over closed branches.
    std::vector<int> disconnected_buses;
    // Closed branches whose endpoints were already connected when scanned;
    // each one closes a cycle in the energized subgraph.
    std::vector<int> cycle_branches;

    std::string describe() const;
};

// Checks whether the closed-branch subgraph is a spanning tree of all buses:
// connected from the reference bus and cycle free.
RadialityReport check_radial(const NetworkCase& net);

}  // namespace flexmap
