#include "flexmap/matpower.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace flexmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Scanner {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    explicit Scanner(const std::string& t) : text(t) {}

    bool eof() const { return pos >= text.size(); }
    char peek() const { return eof() ? '\0' : text[pos]; }

    char advance() {
        char c = text[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }

    // Skips spaces, tabs, carriage returns, comments and '...' continuations.
    // Newlines are skipped only when `skip_newlines` is set; matrix rows are
    // newline-terminated.
    void skip_ws(bool skip_newlines) {
        while (!eof()) {
            char c = peek();
            if (c == '%') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == '.' && pos + 2 < text.size() && text[pos + 1] == '.' &&
                       text[pos + 2] == '.') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
                advance();
            } else if (c == '\n' && skip_newlines) {
                advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }
};

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::string read_ident(Scanner& s) {
    std::string out;
    while (!s.eof() && ident_char(s.peek())) out += s.advance();
    return out;
}

double read_number(Scanner& s) {
    const int at_line = s.line, at_col = s.col;
    std::string tok;
    while (!s.eof()) {
        char c = s.peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
            c == 'e' || c == 'E' || std::isalpha(static_cast<unsigned char>(c))) {
            // Letters cover Inf/NaN spellings; strtod sorts out validity.
            if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E' && c != 'i' &&
                c != 'I' && c != 'n' && c != 'N' && c != 'f' && c != 'F' && c != 'a' && c != 'A') {
                break;
            }
            tok += s.advance();
        } else {
            break;
        }
    }
    if (tok.empty()) throw ParseError("expected a number", at_line, at_col);
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
        throw ParseError("malformed number '" + tok + "'", at_line, at_col);
    }
    return v;
}

// One matrix row per source line; rows may end with ';'. Ragged rows are a
// syntax error reported against the offending row.
std::vector<std::vector<double>> read_matrix(Scanner& s, std::size_t min_cols,
                                             const std::string& what) {
    s.skip_ws(true);
    if (s.peek() != '[') s.fail("expected '[' to open " + what + " matrix");
    s.advance();
    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    auto flush_row = [&](int at_line, int at_col) {
        if (row.empty()) return;
        if (row.size() < min_cols) {
            std::ostringstream os;
            os << what << " row has " << row.size() << " columns, expected at least " << min_cols;
            throw ParseError(os.str(), at_line, at_col);
        }
        rows.push_back(std::move(row));
        row.clear();
    };
    while (true) {
        s.skip_ws(false);
        if (s.eof()) s.fail("unterminated " + what + " matrix");
        char c = s.peek();
        if (c == '\n' || c == ';') {
            int l = s.line, cc = s.col;
            s.advance();
            flush_row(l, cc);
        } else if (c == ']') {
            int l = s.line, cc = s.col;
            s.advance();
            flush_row(l, cc);
            s.skip_ws(true);
            if (s.peek() == ';') s.advance();
            return rows;
        } else {
            row.push_back(read_number(s));
        }
    }
}

std::string read_quoted(Scanner& s) {
    s.skip_ws(true);
    if (s.peek() != '\'') s.fail("expected quoted string");
    s.advance();
    std::string out;
    while (!s.eof() && s.peek() != '\'') out += s.advance();
    if (s.eof()) s.fail("unterminated string");
    s.advance();
    return out;
}

struct RawTables {
    std::string name = "case";
    std::optional<double> base_mva;
    std::vector<std::vector<double>> bus, gen, branch;
    int base_line = 1, base_col = 1;
};

RawTables scan_tables(const std::string& text) {
    Scanner s(text);
    RawTables raw;
    bool saw_any = false;
    while (true) {
        s.skip_ws(true);
        if (s.eof()) break;
        if (!ident_char(s.peek())) s.fail("unexpected character");
        const int at_line = s.line, at_col = s.col;
        std::string ident = read_ident(s);
        if (ident == "function") {
            s.skip_ws(true);
            read_ident(s);  // mpc
            s.skip_ws(true);
            if (s.peek() == '=') {
                s.advance();
                s.skip_ws(true);
                raw.name = read_ident(s);
            }
            saw_any = true;
            continue;
        }
        auto dot = ident.find('.');
        if (dot == std::string::npos) {
            throw ParseError("unexpected token '" + ident + "'", at_line, at_col);
        }
        std::string field = ident.substr(dot + 1);
        s.skip_ws(true);
        if (s.peek() != '=') s.fail("expected '=' after " + ident);
        s.advance();
        s.skip_ws(true);
        if (field == "baseMVA") {
            raw.base_line = s.line;
            raw.base_col = s.col;
            raw.base_mva = read_number(s);
        } else if (field == "bus") {
            raw.bus = read_matrix(s, 13, "bus");
        } else if (field == "gen") {
            raw.gen = read_matrix(s, 10, "gen");
        } else if (field == "branch") {
            raw.branch = read_matrix(s, 11, "branch");
        } else if (s.peek() == '[') {
            read_matrix(s, 0, field);  // skipped table (gencost, bus_name, ...)
        } else if (s.peek() == '\'') {
            read_quoted(s);
        } else {
            read_number(s);
        }
        s.skip_ws(true);
        if (s.peek() == ';') s.advance();
        saw_any = true;
    }
    if (!saw_any) throw ParseError("empty case text", 1, 1);
    if (!raw.base_mva) throw ParseError("missing baseMVA", 1, 1);
    if (raw.bus.empty()) throw ParseError("missing or empty bus table", 1, 1);
    return raw;
}

}  // namespace

ParseError::ParseError(std::string message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

NetworkCase parse_case(const std::string& text) {
    RawTables raw = scan_tables(text);

    NetworkCase net;
    net.name = raw.name;
    net.base_mva = *raw.base_mva;
    if (!(net.base_mva > 0.0)) {
        throw ParseError("non-positive base MVA", raw.base_line, raw.base_col);
    }
    const double base = net.base_mva;

    std::optional<int> ref_bus;
    for (const auto& row : raw.bus) {
        Bus b;
        b.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        switch (type) {
            case 3:
                if (ref_bus) {
                    throw ParseError("multiple reference buses (" + std::to_string(*ref_bus) +
                                         " and " + std::to_string(b.id) + ")",
                                     1, 1);
                }
                ref_bus = b.id;
                b.role = BusRole::reference;
                break;
            case 1:
            case 2:
                // PV designations carry no meaning here: reactive output is a
                // free decision within the generator box.
                b.role = BusRole::pq;
                break;
            default:
                throw ParseError("bus " + std::to_string(b.id) + " has unsupported type " +
                                     std::to_string(type),
                                 1, 1);
        }
        if (row[4] != 0.0 || row[5] != 0.0) {
            throw ParseError("bus " + std::to_string(b.id) +
                                 " has a shunt (GS/BS); bus shunts are unsupported",
                             1, 1);
        }
        b.v_max = row[11] > 0.0 ? row[11] : 1.05;
        b.v_min = row[12] > 0.0 ? row[12] : 0.95;
        b.v_ref_setpoint = row[7] > 0.0 ? row[7] : 1.0;  // VM; gen VG may override below
        net.buses.push_back(b);

        const double pd = row[2], qd = row[3];
        if (pd != 0.0 || qd != 0.0) {
            net.loads.push_back({b.id, b.id, pd / base, qd / base});
        }
    }
    if (!ref_bus) throw ParseError("missing reference bus (no type-3 bus)", 1, 1);

    int gen_id = 0;
    for (const auto& row : raw.gen) {
        ++gen_id;
        if (row[7] <= 0.0) continue;  // out of service
        Generator g;
        g.id = gen_id;
        g.bus = static_cast<int>(row[0]);
        if (!net.bus_pos(g.bus)) {
            throw ParseError("generator " + std::to_string(gen_id) +
                                 ": dangling reference to bus " + std::to_string(g.bus),
                             1, 1);
        }
        g.p_set = row[1] / base;
        g.q_set = row[2] / base;
        g.q_max = row[3] / base;
        g.q_min = row[4] / base;
        g.p_max = row[8] / base;
        g.p_min = row[9] / base;
        if (g.bus == *ref_bus && row[5] > 0.0) {
            net.buses[*net.bus_pos(g.bus)].v_ref_setpoint = row[5];  // VG
        }
        net.generators.push_back(g);
    }

    int branch_id = 0;
    for (const auto& row : raw.branch) {
        ++branch_id;
        Branch br;
        br.id = branch_id;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        for (int side : {br.from_bus, br.to_bus}) {
            if (!net.bus_pos(side)) {
                throw ParseError("branch " + std::to_string(branch_id) +
                                     ": dangling reference to bus " + std::to_string(side),
                                 1, 1);
            }
        }
        const double r = row[2], x = row[3];
        const double z2 = r * r + x * x;
        if (z2 == 0.0) {
            throw ParseError("branch " + std::to_string(branch_id) +
                                 " has zero series impedance",
                             1, 1);
        }
        br.conductance = r / z2;
        br.susceptance = -x / z2;
        br.series_r = r;
        br.series_x = x;
        br.shunt_susceptance = row[4] / 2.0;  // total charging split per end
        br.rating = row[5] > 0.0 ? row[5] / base : kInf;
        const double tap = row[8];
        if (tap != 0.0 && tap != 1.0) {
            throw ParseError("branch " + std::to_string(branch_id) + ": off-nominal tap ratio " +
                                 std::to_string(tap) + " is unsupported",
                             1, 1);
        }
        if (row[9] != 0.0) {
            throw ParseError("branch " + std::to_string(branch_id) +
                                 ": phase shift is unsupported",
                             1, 1);
        }
        br.switch_state = row[10] > 0.0 ? SwitchState::closed : SwitchState::open;
        net.branches.push_back(br);
    }

    double kv = 0.0;
    const auto ref_row_kv = raw.bus[*net.bus_pos(*ref_bus)][9];
    if (ref_row_kv > 0.0) {
        kv = ref_row_kv;
    } else {
        for (const auto& row : raw.bus) {
            if (row[9] > 0.0) {
                kv = row[9];
                break;
            }
        }
    }
    net.base_voltage_kv = kv > 0.0 ? kv : 1.0;

    net.validate();
    return net;
}

std::string emit_case(const NetworkCase& net) {
    auto num = [](double v) {
        if (v == kInf) return std::string("Inf");
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    const double base = net.base_mva;
    std::ostringstream os;
    os << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << num(base) << ";\n";

    std::map<int, std::pair<double, double>> demand;
    for (const Load& l : net.loads) {
        demand[l.bus].first += l.p;
        demand[l.bus].second += l.q;
    }

    os << "mpc.bus = [\n";
    for (const Bus& b : net.buses) {
        const auto d = demand.count(b.id) ? demand[b.id] : std::make_pair(0.0, 0.0);
        os << "\t" << b.id << "\t" << (b.role == BusRole::reference ? 3 : 1) << "\t"
           << num(d.first * base) << "\t" << num(d.second * base) << "\t0\t0\t1\t"
           << num(b.role == BusRole::reference ? b.v_ref_setpoint : 1.0) << "\t0\t"
           << num(net.base_voltage_kv) << "\t1\t" << num(b.v_max) << "\t" << num(b.v_min)
           << ";\n";
    }
    os << "];\n";

    os << "mpc.gen = [\n";
    const int ref_id = net.buses[net.reference_pos()].id;
    for (const Generator& g : net.generators) {
        const double vg = g.bus == ref_id ? net.buses[net.reference_pos()].v_ref_setpoint : 1.0;
        os << "\t" << g.bus << "\t" << num(g.p_set * base) << "\t" << num(g.q_set * base) << "\t"
           << num(g.q_max * base) << "\t" << num(g.q_min * base) << "\t" << num(vg) << "\t"
           << num(base) << "\t1\t" << num(g.p_max * base) << "\t" << num(g.p_min * base) << ";\n";
    }
    os << "];\n";

    os << "mpc.branch = [\n";
    for (const Branch& br : net.branches) {
        double r = br.series_r, x = br.series_x;
        if (r == 0.0 && x == 0.0) {
            const double g = br.conductance, b = br.susceptance;
            const double y2 = g * g + b * b;
            r = g / y2;
            x = -b / y2;
        }
        os << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << num(r) << "\t" << num(x) << "\t"
           << num(2.0 * br.shunt_susceptance) << "\t"
           << num(br.rating == kInf ? 0.0 : br.rating * base) << "\t0\t0\t0\t0\t"
           << (br.closed() ? 1 : 0) << ";\n";
    }
    os << "];\n";
    return os.str();
}

bool structurally_equal(const NetworkCase& a, const NetworkCase& b) {
    auto bus_eq = [](const Bus& x, const Bus& y) {
        return x.id == y.id && x.role == y.role && x.v_min == y.v_min && x.v_max == y.v_max &&
               x.v_ref_setpoint == y.v_ref_setpoint;
    };
    auto branch_eq = [](const Branch& x, const Branch& y) {
        return x.id == y.id && x.from_bus == y.from_bus && x.to_bus == y.to_bus &&
               x.conductance == y.conductance && x.susceptance == y.susceptance &&
               x.series_r == y.series_r && x.series_x == y.series_x &&
               x.shunt_conductance == y.shunt_conductance &&
               x.shunt_susceptance == y.shunt_susceptance && x.rating == y.rating &&
               x.switch_state == y.switch_state && x.switchable == y.switchable;
    };
    auto gen_eq = [](const Generator& x, const Generator& y) {
        return x.id == y.id && x.bus == y.bus && x.p_min == y.p_min && x.p_max == y.p_max &&
               x.q_min == y.q_min && x.q_max == y.q_max && x.p_set == y.p_set &&
               x.q_set == y.q_set;
    };
    auto load_eq = [](const Load& x, const Load& y) {
        return x.id == y.id && x.bus == y.bus && x.p == y.p && x.q == y.q;
    };
    if (a.name != b.name || a.base_mva != b.base_mva || a.base_voltage_kv != b.base_voltage_kv)
        return false;
    if (a.buses.size() != b.buses.size() || a.branches.size() != b.branches.size() ||
        a.generators.size() != b.generators.size() || a.loads.size() != b.loads.size())
        return false;
    for (std::size_t i = 0; i < a.buses.size(); ++i)
        if (!bus_eq(a.buses[i], b.buses[i])) return false;
    for (std::size_t i = 0; i < a.branches.size(); ++i)
        if (!branch_eq(a.branches[i], b.branches[i])) return false;
    for (std::size_t i = 0; i < a.generators.size(); ++i)
        if (!gen_eq(a.generators[i], b.generators[i])) return false;
    for (std::size_t i = 0; i < a.loads.size(); ++i)
        if (!load_eq(a.loads[i], b.loads[i])) return false;
    return true;
}

}  // namespace flexmap
