#pragma once

#include <stdexcept>
#include <string>

#include "flexmap/network.hpp"

namespace flexmap {

class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

  private:
    int line_;
    int column_;
};

// Parses MATPOWER-style case text (function header, baseMVA, bus/gen/branch
// matrices). All quantities are converted to per-unit on baseMVA; loads are
// read from the bus PD/QD columns; the branch status column maps to the
// switch state. Branch, generator and load ids are row positions (1-based).
//
// Unsupported data is rejected with a clear error rather than dropped:
// off-nominal taps, phase shifts, bus shunts, zero-impedance branches,
// isolated (type 4) buses.
NetworkCase parse_case(const std::string& text);

// Inverse of parse_case for everything the MATPOWER table layout can carry
// (per-end branch shunt conductance and the switchable flag have no column
// and are not emitted). parse_case(emit_case(net)) is structurally equal to
// net for any parsed net.
std::string emit_case(const NetworkCase& net);

bool structurally_equal(const NetworkCase& a, const NetworkCase& b);

}  // namespace flexmap
