#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexmap {

class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class BusRole { reference, pq };
enum class SwitchState { closed, open };

struct Bus {
    int id = 0;
    BusRole role = BusRole::pq;
    double v_min = 0.95;           // p.u.
    double v_max = 1.05;           // p.u.
    double v_ref_setpoint = 1.0;   // p.u., meaningful for reference buses only
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double conductance = 0.0;         // series g, p.u.
    double susceptance = 0.0;         // series b, p.u. (negative for inductive lines)
    double series_r = 0.0;            // impedance as parsed, kept for exact emission
    double series_x = 0.0;
    double shunt_conductance = 0.0;   // per end, p.u.
    double shunt_susceptance = 0.0;   // per end, p.u.
    double rating = std::numeric_limits<double>::infinity();  // apparent power, p.u.
    SwitchState switch_state = SwitchState::closed;
    bool switchable = true;

    bool closed() const { return switch_state == SwitchState::closed; }
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;  // p.u.
    double q_min = 0.0, q_max = 0.0;  // p.u.
    double p_set = 0.0, q_set = 0.0;  // case-file dispatch, p.u.
};

// Positive p/q = consumption.
struct Load {
    int id = 0;
    int bus = 0;
    double p = 0.0;
    double q = 0.0;
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    double base_voltage_kv = 1.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Load> loads;

    std::optional<std::size_t> bus_pos(int id) const;
    std::optional<std::size_t> branch_pos(int id) const;
    // Index of the unique reference bus; validate() guarantees existence.
    std::size_t reference_pos() const;

    // Throws ValidationError on any broken invariant (ids, bounds, bases).
    void validate() const;
};

// Switch assignment for the switchable branches of one case.
struct Topology {
    std::map<int, SwitchState> switch_vector;
};

// Copy of `net` with switch states overwritten. The topology must assign a
// state to every switchable branch and nothing else.
NetworkCase apply_topology(const NetworkCase& net, const Topology& topo);

// Topology capturing the case's current switch states.
Topology topology_of(const NetworkCase& net);

}  // namespace flexmap
