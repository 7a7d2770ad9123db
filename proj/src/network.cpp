#include "flexmap/network.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace flexmap {

std::optional<std::size_t> NetworkCase::bus_pos(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> NetworkCase::branch_pos(int id) const {
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (branches[i].id == id) return i;
    }
    return std::nullopt;
}

std::size_t NetworkCase::reference_pos() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].role == BusRole::reference) return i;
    }
    throw ValidationError("case '" + name + "' has no reference bus");
}

void NetworkCase::validate() const {
    std::ostringstream err;
    if (!(base_mva > 0.0)) {
        err << "base_mva must be positive, got " << base_mva;
        throw ValidationError(err.str());
    }
    if (!(base_voltage_kv > 0.0)) {
        err << "base_voltage_kv must be positive, got " << base_voltage_kv;
        throw ValidationError(err.str());
    }

    std::set<int> bus_ids;
    int n_ref = 0;
    for (const Bus& b : buses) {
        if (!bus_ids.insert(b.id).second) {
            err << "duplicate bus id " << b.id;
            throw ValidationError(err.str());
        }
        if (b.role == BusRole::reference) ++n_ref;
        if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max)) {
            err << "bus " << b.id << ": voltage bounds must satisfy 0 < v_min <= v_max, got ["
                << b.v_min << ", " << b.v_max << "]";
            throw ValidationError(err.str());
        }
        if (b.role == BusRole::reference &&
            (b.v_ref_setpoint < b.v_min || b.v_ref_setpoint > b.v_max)) {
            err << "reference bus " << b.id << ": setpoint " << b.v_ref_setpoint
                << " outside voltage bounds [" << b.v_min << ", " << b.v_max << "]";
            throw ValidationError(err.str());
        }
    }
    if (n_ref != 1) {
        err << "case must have exactly one reference bus, found " << n_ref;
        throw ValidationError(err.str());
    }

    std::set<int> branch_ids;
    for (const Branch& br : branches) {
        if (!branch_ids.insert(br.id).second) {
            err << "duplicate branch id " << br.id;
            throw ValidationError(err.str());
        }
        if (!bus_ids.count(br.from_bus)) {
            err << "branch " << br.id << " references unknown from bus " << br.from_bus;
            throw ValidationError(err.str());
        }
        if (!bus_ids.count(br.to_bus)) {
            err << "branch " << br.id << " references unknown to bus " << br.to_bus;
            throw ValidationError(err.str());
        }
        if (br.from_bus == br.to_bus) {
            err << "branch " << br.id << " is a self loop at bus " << br.from_bus;
            throw ValidationError(err.str());
        }
        if (!(br.rating > 0.0)) {
            err << "branch " << br.id << ": rating must be positive, got " << br.rating;
            throw ValidationError(err.str());
        }
    }

    std::set<int> gen_ids;
    for (const Generator& g : generators) {
        if (!gen_ids.insert(g.id).second) {
            err << "duplicate generator id " << g.id;
            throw ValidationError(err.str());
        }
        if (!bus_ids.count(g.bus)) {
            err << "generator " << g.id << " references unknown bus " << g.bus;
            throw ValidationError(err.str());
        }
        if (g.p_min > g.p_max || g.q_min > g.q_max) {
            err << "generator " << g.id << ": box limits inverted";
            throw ValidationError(err.str());
        }
    }

    for (const Load& l : loads) {
        if (!bus_ids.count(l.bus)) {
            err << "load " << l.id << " references unknown bus " << l.bus;
            throw ValidationError(err.str());
        }
        if (!std::isfinite(l.p) || !std::isfinite(l.q)) {
            err << "load " << l.id << ": non-finite demand";
            throw ValidationError(err.str());
        }
    }
}

NetworkCase apply_topology(const NetworkCase& net, const Topology& topo) {
    NetworkCase out = net;
    std::set<int> assigned;
    for (const auto& [id, state] : topo.switch_vector) {
        auto pos = out.branch_pos(id);
        if (!pos) {
            throw ValidationError("topology assigns state to unknown branch id " +
                                  std::to_string(id));
        }
        Branch& br = out.branches[*pos];
        if (!br.switchable) {
            throw ValidationError("topology assigns state to non-switchable branch " +
                                  std::to_string(id));
        }
        br.switch_state = state;
        assigned.insert(id);
    }
    for (const Branch& br : out.branches) {
        if (br.switchable && !assigned.count(br.id)) {
            throw ValidationError("topology missing assignment for switchable branch " +
                                  std::to_string(br.id));
        }
    }
    return out;
}

Topology topology_of(const NetworkCase& net) {
    Topology t;
    for (const Branch& br : net.branches) {
        if (br.switchable) t.switch_vector[br.id] = br.switch_state;
    }
    return t;
}

}  // namespace flexmap
