#include "flexmap/flex.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <memory>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "flexmap/log.hpp"
#include "flexmap/powerflow.hpp"

namespace flexmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Structural data shared by all evaluator closures of one problem instance.
struct Layout {
    NetworkCase net;
    FlexTarget target;
    int flex_bus_pos = -1;
    double q_fixed = 0.0;

    int n = 0;
    int ix_flex_p = 0, ix_flex_q = -1;
    std::vector<int> gen_list, ix_gen_p, ix_gen_q;
    std::vector<int> energized;
    std::vector<int> row_of_bus;  // case bus position -> balance row, -1 if absent
    std::vector<int> ix_theta, ix_v;
    std::vector<int> branch_list;
    std::vector<int> ix_p_from, ix_p_to, ix_q_from, ix_q_to;
    std::vector<std::pair<int, double>> pins;  // extra rows x[i] = value
    std::vector<int> rated;                    // indices into branch_list
    int nb = 0;
    int m_eq = 0, m_ineq = 0;
    std::vector<double> load_p, load_q;  // per case bus position

    const Branch& branch(int k) const { return net.branches[branch_list[k]]; }
};

std::vector<int> energized_buses(const NetworkCase& net) {
    std::unordered_map<int, int> pos;
    for (std::size_t i = 0; i < net.buses.size(); ++i) pos[net.buses[i].id] = static_cast<int>(i);
    std::vector<std::vector<int>> adj(net.buses.size());
    for (const Branch& br : net.branches) {
        if (!br.closed()) continue;
        adj[pos.at(br.from_bus)].push_back(pos.at(br.to_bus));
        adj[pos.at(br.to_bus)].push_back(pos.at(br.from_bus));
    }
    std::vector<char> seen(net.buses.size(), 0);
    std::queue<int> frontier;
    frontier.push(static_cast<int>(net.reference_pos()));
    seen[net.reference_pos()] = 1;
    std::vector<int> out;
    while (!frontier.empty()) {
        int b = frontier.front();
        frontier.pop();
        out.push_back(b);
        for (int nb : adj[b]) {
            if (!seen[nb]) {
                seen[nb] = 1;
                frontier.push(nb);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

FlexProblem assemble(const NetworkCase& net, int flex_bus, double q_fixed,
                     FlexDirection direction, FlexTarget target) {
    auto pos = net.bus_pos(flex_bus);
    if (!pos) throw ValidationError("unknown flex bus id " + std::to_string(flex_bus));

    auto lay = std::make_shared<Layout>();
    lay->net = net;
    lay->target = target;
    lay->q_fixed = q_fixed;
    lay->flex_bus_pos = static_cast<int>(*pos);
    lay->energized = energized_buses(net);
    if (!std::binary_search(lay->energized.begin(), lay->energized.end(), lay->flex_bus_pos)) {
        throw ValidationError("flex bus " + std::to_string(flex_bus) +
                              " is disconnected under the current switch states");
    }

    const int nbus_total = static_cast<int>(net.buses.size());
    lay->row_of_bus.assign(nbus_total, -1);
    lay->ix_theta.assign(nbus_total, -1);
    lay->ix_v.assign(nbus_total, -1);
    lay->nb = static_cast<int>(lay->energized.size());
    for (int r = 0; r < lay->nb; ++r) lay->row_of_bus[lay->energized[r]] = r;

    lay->load_p.assign(nbus_total, 0.0);
    lay->load_q.assign(nbus_total, 0.0);
    for (const Load& l : net.loads) {
        const int b = static_cast<int>(*net.bus_pos(l.bus));
        lay->load_p[b] += l.p;
        lay->load_q[b] += l.q;
    }

    int ix = 0;
    lay->ix_flex_p = ix++;
    if (target == FlexTarget::reactive_power) lay->ix_flex_q = ix++;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        if (lay->row_of_bus[*net.bus_pos(net.generators[g].bus)] >= 0) {
            lay->gen_list.push_back(static_cast<int>(g));
        }
    }
    for (std::size_t g = 0; g < lay->gen_list.size(); ++g) lay->ix_gen_p.push_back(ix++);
    for (std::size_t g = 0; g < lay->gen_list.size(); ++g) lay->ix_gen_q.push_back(ix++);
    for (int b : lay->energized) lay->ix_theta[b] = ix++;
    for (int b : lay->energized) lay->ix_v[b] = ix++;
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
        if (net.branches[e].closed()) lay->branch_list.push_back(static_cast<int>(e));
    }
    const int ncb = static_cast<int>(lay->branch_list.size());
    for (int k = 0; k < ncb; ++k) {
        lay->ix_p_from.push_back(ix++);
        lay->ix_p_to.push_back(ix++);
        lay->ix_q_from.push_back(ix++);
        lay->ix_q_to.push_back(ix++);
    }
    lay->n = ix;

    const int ref = static_cast<int>(net.reference_pos());

    Eigen::VectorXd lb = Eigen::VectorXd::Constant(lay->n, -kInf);
    Eigen::VectorXd ub = Eigen::VectorXd::Constant(lay->n, kInf);
    for (std::size_t g = 0; g < lay->gen_list.size(); ++g) {
        const Generator& gen = net.generators[lay->gen_list[g]];
        lb[lay->ix_gen_p[g]] = gen.p_min;
        ub[lay->ix_gen_p[g]] = gen.p_max;
        lb[lay->ix_gen_q[g]] = gen.q_min;
        ub[lay->ix_gen_q[g]] = gen.q_max;
    }
    for (int b : lay->energized) {
        lb[lay->ix_v[b]] = net.buses[b].v_min;
        ub[lay->ix_v[b]] = net.buses[b].v_max;
    }
    // Degenerate boxes become equality pins; the reference rows already pin
    // the reference voltage and angle.
    for (int i = 0; i < lay->n; ++i) {
        if (ub[i] - lb[i] < 1e-12) {
            const double value = lb[i];
            lb[i] = -kInf;
            ub[i] = kInf;
            if (i == lay->ix_v[ref] || i == lay->ix_theta[ref]) continue;
            lay->pins.emplace_back(i, value);
        }
    }

    lay->m_eq = 2 * lay->nb + 4 * ncb + 2 + static_cast<int>(lay->pins.size());
    for (int k = 0; k < ncb; ++k) {
        if (lay->branch(k).rating < kInf) lay->rated.push_back(k);
    }
    lay->m_ineq = 2 * static_cast<int>(lay->rated.size());

    FlexProblem fp;
    fp.flex_bus = flex_bus;
    fp.q_fixed = q_fixed;
    fp.direction = direction;
    fp.target = target;
    fp.ix_flex_p = lay->ix_flex_p;
    fp.ix_flex_q = lay->ix_flex_q;
    fp.gen_list = lay->gen_list;
    fp.ix_gen_p = lay->ix_gen_p;
    fp.ix_gen_q = lay->ix_gen_q;
    fp.energized = lay->energized;
    fp.ix_theta = lay->ix_theta;
    fp.ix_v = lay->ix_v;
    fp.branch_list = lay->branch_list;
    fp.ix_p_from = lay->ix_p_from;
    fp.ix_p_to = lay->ix_p_to;
    fp.ix_q_from = lay->ix_q_from;
    fp.ix_q_to = lay->ix_q_to;

    NlpProblem& nlp = fp.nlp;
    nlp.n = lay->n;
    nlp.lb = lb;
    nlp.ub = ub;
    nlp.m_eq = lay->m_eq;
    nlp.m_ineq = lay->m_ineq;
    nlp.objective = Eigen::VectorXd::Zero(lay->n);
    const int obj_ix = target == FlexTarget::real_power ? lay->ix_flex_p : lay->ix_flex_q;
    nlp.objective[obj_ix] = direction == FlexDirection::max ? -1.0 : 1.0;

    nlp.eq_residual = [lay](const Eigen::VectorXd& x) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(lay->m_eq);
        const auto& net = lay->net;
        for (std::size_t g = 0; g < lay->gen_list.size(); ++g) {
            const int b = static_cast<int>(*net.bus_pos(net.generators[lay->gen_list[g]].bus));
            r[lay->row_of_bus[b]] += x[lay->ix_gen_p[g]];
            r[lay->nb + lay->row_of_bus[b]] += x[lay->ix_gen_q[g]];
        }
        for (int b : lay->energized) {
            r[lay->row_of_bus[b]] -= lay->load_p[b];
            r[lay->nb + lay->row_of_bus[b]] -= lay->load_q[b];
        }
        r[lay->row_of_bus[lay->flex_bus_pos]] += x[lay->ix_flex_p];
        r[lay->nb + lay->row_of_bus[lay->flex_bus_pos]] +=
            lay->target == FlexTarget::real_power ? lay->q_fixed : x[lay->ix_flex_q];

        const int ncb = static_cast<int>(lay->branch_list.size());
        for (int k = 0; k < ncb; ++k) {
            const Branch& br = lay->branch(k);
            const int f = static_cast<int>(*net.bus_pos(br.from_bus));
            const int t = static_cast<int>(*net.bus_pos(br.to_bus));
            r[lay->row_of_bus[f]] -= x[lay->ix_p_from[k]];
            r[lay->row_of_bus[t]] -= x[lay->ix_p_to[k]];
            r[lay->nb + lay->row_of_bus[f]] -= x[lay->ix_q_from[k]];
            r[lay->nb + lay->row_of_bus[t]] -= x[lay->ix_q_to[k]];

            const auto from = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                         br.shunt_susceptance, x[lay->ix_v[f]], x[lay->ix_v[t]],
                                         x[lay->ix_theta[f]], x[lay->ix_theta[t]]);
            const auto to = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                       br.shunt_susceptance, x[lay->ix_v[t]], x[lay->ix_v[f]],
                                       x[lay->ix_theta[t]], x[lay->ix_theta[f]]);
            const int row0 = 2 * lay->nb + 4 * k;
            r[row0 + 0] = x[lay->ix_p_from[k]] - from.p;
            r[row0 + 1] = x[lay->ix_p_to[k]] - to.p;
            r[row0 + 2] = x[lay->ix_q_from[k]] - from.q;
            r[row0 + 3] = x[lay->ix_q_to[k]] - to.q;
        }
        const int ref = static_cast<int>(net.reference_pos());
        const int ref_rows = 2 * lay->nb + 4 * ncb;
        r[ref_rows + 0] = x[lay->ix_theta[ref]];
        r[ref_rows + 1] = x[lay->ix_v[ref]] - net.buses[ref].v_ref_setpoint;
        for (std::size_t p = 0; p < lay->pins.size(); ++p) {
            r[ref_rows + 2 + static_cast<int>(p)] = x[lay->pins[p].first] - lay->pins[p].second;
        }
        return r;
    };

    nlp.eq_jacobian = [lay](const Eigen::VectorXd& x) {
        const auto& net = lay->net;
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(16 * lay->branch_list.size() + 4 * lay->gen_list.size() + 8);
        for (std::size_t g = 0; g < lay->gen_list.size(); ++g) {
            const int b = static_cast<int>(*net.bus_pos(net.generators[lay->gen_list[g]].bus));
            trips.emplace_back(lay->row_of_bus[b], lay->ix_gen_p[g], 1.0);
            trips.emplace_back(lay->nb + lay->row_of_bus[b], lay->ix_gen_q[g], 1.0);
        }
        trips.emplace_back(lay->row_of_bus[lay->flex_bus_pos], lay->ix_flex_p, 1.0);
        if (lay->target == FlexTarget::reactive_power) {
            trips.emplace_back(lay->nb + lay->row_of_bus[lay->flex_bus_pos], lay->ix_flex_q, 1.0);
        }
        const int ncb = static_cast<int>(lay->branch_list.size());
        for (int k = 0; k < ncb; ++k) {
            const Branch& br = lay->branch(k);
            const int f = static_cast<int>(*net.bus_pos(br.from_bus));
            const int t = static_cast<int>(*net.bus_pos(br.to_bus));
            trips.emplace_back(lay->row_of_bus[f], lay->ix_p_from[k], -1.0);
            trips.emplace_back(lay->row_of_bus[t], lay->ix_p_to[k], -1.0);
            trips.emplace_back(lay->nb + lay->row_of_bus[f], lay->ix_q_from[k], -1.0);
            trips.emplace_back(lay->nb + lay->row_of_bus[t], lay->ix_q_to[k], -1.0);

            const auto from = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                         br.shunt_susceptance, x[lay->ix_v[f]], x[lay->ix_v[t]],
                                         x[lay->ix_theta[f]], x[lay->ix_theta[t]]);
            const auto to = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                       br.shunt_susceptance, x[lay->ix_v[t]], x[lay->ix_v[f]],
                                       x[lay->ix_theta[t]], x[lay->ix_theta[f]]);
            const int row0 = 2 * lay->nb + 4 * k;
            const int cols_from[4] = {lay->ix_v[f], lay->ix_v[t], lay->ix_theta[f],
                                      lay->ix_theta[t]};
            const int cols_to[4] = {lay->ix_v[t], lay->ix_v[f], lay->ix_theta[t],
                                    lay->ix_theta[f]};
            trips.emplace_back(row0 + 0, lay->ix_p_from[k], 1.0);
            trips.emplace_back(row0 + 1, lay->ix_p_to[k], 1.0);
            trips.emplace_back(row0 + 2, lay->ix_q_from[k], 1.0);
            trips.emplace_back(row0 + 3, lay->ix_q_to[k], 1.0);
            for (int c = 0; c < 4; ++c) {
                trips.emplace_back(row0 + 0, cols_from[c], -from.dp[c]);
                trips.emplace_back(row0 + 1, cols_to[c], -to.dp[c]);
                trips.emplace_back(row0 + 2, cols_from[c], -from.dq[c]);
                trips.emplace_back(row0 + 3, cols_to[c], -to.dq[c]);
            }
        }
        const int ref = static_cast<int>(net.reference_pos());
        const int ref_rows = 2 * lay->nb + 4 * ncb;
        trips.emplace_back(ref_rows + 0, lay->ix_theta[ref], 1.0);
        trips.emplace_back(ref_rows + 1, lay->ix_v[ref], 1.0);
        for (std::size_t p = 0; p < lay->pins.size(); ++p) {
            trips.emplace_back(ref_rows + 2 + static_cast<int>(p), lay->pins[p].first, 1.0);
        }
        Eigen::SparseMatrix<double> jac(lay->m_eq, lay->n);
        jac.setFromTriplets(trips.begin(), trips.end());
        return jac;
    };

    nlp.ineq_residual = [lay](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(lay->m_ineq);
        for (std::size_t j = 0; j < lay->rated.size(); ++j) {
            const int k = lay->rated[j];
            const double cap = lay->branch(k).rating * lay->branch(k).rating;
            r[2 * j + 0] = x[lay->ix_p_from[k]] * x[lay->ix_p_from[k]] +
                           x[lay->ix_q_from[k]] * x[lay->ix_q_from[k]] - cap;
            r[2 * j + 1] = x[lay->ix_p_to[k]] * x[lay->ix_p_to[k]] +
                           x[lay->ix_q_to[k]] * x[lay->ix_q_to[k]] - cap;
        }
        return r;
    };

    nlp.ineq_jacobian = [lay](const Eigen::VectorXd& x) {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(4 * lay->rated.size());
        for (std::size_t j = 0; j < lay->rated.size(); ++j) {
            const int k = lay->rated[j];
            trips.emplace_back(2 * j + 0, lay->ix_p_from[k], 2.0 * x[lay->ix_p_from[k]]);
            trips.emplace_back(2 * j + 0, lay->ix_q_from[k], 2.0 * x[lay->ix_q_from[k]]);
            trips.emplace_back(2 * j + 1, lay->ix_p_to[k], 2.0 * x[lay->ix_p_to[k]]);
            trips.emplace_back(2 * j + 1, lay->ix_q_to[k], 2.0 * x[lay->ix_q_to[k]]);
        }
        Eigen::SparseMatrix<double> jac(lay->m_ineq, lay->n);
        jac.setFromTriplets(trips.begin(), trips.end());
        return jac;
    };

    nlp.lagrangian_hessian = [lay](const Eigen::VectorXd& x, const Eigen::VectorXd& lam,
                                   const Eigen::VectorXd& nu) {
        const auto& net = lay->net;
        std::vector<Eigen::Triplet<double>> trips;
        const int ncb = static_cast<int>(lay->branch_list.size());
        trips.reserve(64 * ncb + 4 * lay->rated.size());
        for (int k = 0; k < ncb; ++k) {
            const Branch& br = lay->branch(k);
            const int f = static_cast<int>(*net.bus_pos(br.from_bus));
            const int t = static_cast<int>(*net.bus_pos(br.to_bus));
            const auto from = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                         br.shunt_susceptance, x[lay->ix_v[f]], x[lay->ix_v[t]],
                                         x[lay->ix_theta[f]], x[lay->ix_theta[t]], true);
            const auto to = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                       br.shunt_susceptance, x[lay->ix_v[t]], x[lay->ix_v[f]],
                                       x[lay->ix_theta[t]], x[lay->ix_theta[f]], true);
            const int row0 = 2 * lay->nb + 4 * k;
            const int vars_from[4] = {lay->ix_v[f], lay->ix_v[t], lay->ix_theta[f],
                                      lay->ix_theta[t]};
            const int vars_to[4] = {lay->ix_v[t], lay->ix_v[f], lay->ix_theta[t],
                                    lay->ix_theta[f]};
            // Residual rows are x_flow - phi(...); their Hessian is -phi''.
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    const double w = -lam[row0 + 0] * from.d2p[a][b] -
                                     lam[row0 + 2] * from.d2q[a][b];
                    if (w != 0.0) trips.emplace_back(vars_from[a], vars_from[b], w);
                    const double wt =
                        -lam[row0 + 1] * to.d2p[a][b] - lam[row0 + 3] * to.d2q[a][b];
                    if (wt != 0.0) trips.emplace_back(vars_to[a], vars_to[b], wt);
                }
            }
        }
        for (std::size_t j = 0; j < lay->rated.size(); ++j) {
            const int k = lay->rated[j];
            trips.emplace_back(lay->ix_p_from[k], lay->ix_p_from[k], 2.0 * nu[2 * j + 0]);
            trips.emplace_back(lay->ix_q_from[k], lay->ix_q_from[k], 2.0 * nu[2 * j + 0]);
            trips.emplace_back(lay->ix_p_to[k], lay->ix_p_to[k], 2.0 * nu[2 * j + 1]);
            trips.emplace_back(lay->ix_q_to[k], lay->ix_q_to[k], 2.0 * nu[2 * j + 1]);
        }
        Eigen::SparseMatrix<double> hess(lay->n, lay->n);
        hess.setFromTriplets(trips.begin(), trips.end());
        return hess;
    };

    return fp;
}

}  // namespace

QGrid QGrid::uniform(double q_min, double q_max, int count) {
    if (!(q_min < q_max)) throw std::invalid_argument("q grid: q_min must be below q_max");
    if (count < 2) throw std::invalid_argument("q grid: count must be at least 2");
    QGrid g;
    g.q_min = q_min;
    g.q_max = q_max;
    g.count = count;
    g.values.resize(count);
    const double step = (q_max - q_min) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) g.values[i] = q_min + step * i;
    g.values.back() = q_max;
    return g;
}

bool same_grid(const QGrid& a, const QGrid& b) {
    return a.count == b.count && a.q_min == b.q_min && a.q_max == b.q_max &&
           a.values == b.values;
}

FlexProblem assemble_flex_problem(const NetworkCase& net, int flex_bus, double q_fixed,
                                  FlexDirection direction) {
    return assemble(net, flex_bus, q_fixed, direction, FlexTarget::real_power);
}

FlexProblem assemble_qspan_problem(const NetworkCase& net, int flex_bus,
                                   FlexDirection direction) {
    return assemble(net, flex_bus, 0.0, direction, FlexTarget::reactive_power);
}

Eigen::VectorXd initial_point(const NetworkCase& net, const FlexProblem& fp) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(fp.nlp.n);
    const double q0 = fp.target == FlexTarget::real_power ? fp.q_fixed : 0.0;

    Eigen::VectorXd inj_p, inj_q;
    scheduled_injections(net, fp.flex_bus, 0.0, q0, inj_p, inj_q);
    const NewtonResult pf = solve_newton(net, inj_p, inj_q);

    Eigen::VectorXd v_mag, v_ang;
    Eigen::VectorXd gp(net.generators.size()), gq(net.generators.size());
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        gp[g] = net.generators[g].p_set;
        gq[g] = net.generators[g].q_set;
    }
    if (pf.converged) {
        v_mag = pf.v_mag;
        v_ang = pf.v_ang;
        try {
            const OperatingPoint pt = slack_dispatch_point(net, pf, fp.flex_bus, 0.0, q0);
            gp = pt.gen_p;
            gq = pt.gen_q;
        } catch (const ValidationError&) {
            // no reference generator: keep plain setpoints
        }
    } else {
        const auto n = static_cast<Eigen::Index>(net.buses.size());
        v_mag.resize(n);
        v_ang = Eigen::VectorXd::Zero(n);
        for (Eigen::Index b = 0; b < n; ++b) {
            v_mag[b] = std::clamp(1.0, net.buses[b].v_min, net.buses[b].v_max);
        }
        const auto ref = net.reference_pos();
        v_mag[static_cast<Eigen::Index>(ref)] = net.buses[ref].v_ref_setpoint;
    }

    x[fp.ix_flex_p] = 0.0;
    if (fp.ix_flex_q >= 0) x[fp.ix_flex_q] = q0;
    for (std::size_t g = 0; g < fp.gen_list.size(); ++g) {
        const Generator& gen = net.generators[fp.gen_list[g]];
        x[fp.ix_gen_p[g]] = std::clamp(gp[fp.gen_list[g]], gen.p_min, gen.p_max);
        x[fp.ix_gen_q[g]] = std::clamp(gq[fp.gen_list[g]], gen.q_min, gen.q_max);
    }
    for (int b : fp.energized) {
        x[fp.ix_theta[b]] = v_ang[b];
        x[fp.ix_v[b]] = v_mag[b];
    }
    for (std::size_t k = 0; k < fp.branch_list.size(); ++k) {
        const Branch& br = net.branches[fp.branch_list[k]];
        const int f = static_cast<int>(*net.bus_pos(br.from_bus));
        const int t = static_cast<int>(*net.bus_pos(br.to_bus));
        const auto from = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                     br.shunt_susceptance, v_mag[f], v_mag[t], v_ang[f], v_ang[t]);
        const auto to = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                   br.shunt_susceptance, v_mag[t], v_mag[f], v_ang[t], v_ang[f]);
        x[fp.ix_p_from[k]] = from.p;
        x[fp.ix_p_to[k]] = to.p;
        x[fp.ix_q_from[k]] = from.q;
        x[fp.ix_q_to[k]] = to.q;
    }
    return x;
}

std::vector<geometry::Point> build_polygon(const std::vector<PQSample>& samples) {
    std::vector<geometry::Point> up, down;
    for (const PQSample& s : samples) {
        if (s.status_up != NlpStatus::optimal || s.status_down != NlpStatus::optimal) continue;
        if (!s.p_up || !s.p_down) continue;
        if (*s.p_down > *s.p_up + 1e-8) {
            FLEXMAP_LOG_WARN("crossed interval at q=", s.q, " (p_down ", *s.p_down, " > p_up ",
                             *s.p_up, "); slice excluded from polygon");
            continue;
        }
        up.push_back({*s.p_up, s.q});
        down.push_back({*s.p_down, s.q});
    }
    if (up.size() < 2) return {};
    std::vector<geometry::Point> poly = up;
    poly.insert(poly.end(), down.rbegin(), down.rend());
    return geometry::dedup_consecutive(poly);
}

NFPRegion sample_nfp(const NetworkCase& net, int flex_bus, const QGrid& grid,
                     const SampleOptions& opts) {
    NFPRegion region;
    region.flex_bus = flex_bus;
    region.grid = grid;
    region.samples.resize(grid.count);

    auto run_chunk = [&](int begin, int end) {
        Eigen::VectorXd warm_up, warm_down;
        bool have_up = false, have_down = false;
        for (int i = begin; i < end; ++i) {
            const double q = grid.values[i];
            PQSample smp;
            smp.q = q;

            // Warm starts chain within a chunk; a failed warm solve falls
            // back to the power-flow (or flat) start.
            const FlexProblem up = assemble_flex_problem(net, flex_bus, q, FlexDirection::max);
            NlpResult r_up;
            if (opts.warm_start_chaining && have_up) {
                r_up = solve(up.nlp, warm_up, opts.nlp);
                if (r_up.status != NlpStatus::optimal) {
                    r_up = solve(up.nlp, initial_point(net, up), opts.nlp);
                }
            } else {
                r_up = solve(up.nlp, initial_point(net, up), opts.nlp);
            }
            smp.status_up = r_up.status;
            if (r_up.status == NlpStatus::optimal) {
                smp.p_up = r_up.point[up.ix_flex_p];
                warm_up = r_up.point;
                have_up = true;
            }

            const FlexProblem down = assemble_flex_problem(net, flex_bus, q, FlexDirection::min);
            NlpResult r_down;
            if (opts.warm_start_chaining && have_down) {
                r_down = solve(down.nlp, warm_down, opts.nlp);
                if (r_down.status != NlpStatus::optimal) {
                    r_down = solve(down.nlp, initial_point(net, down), opts.nlp);
                }
            } else {
                r_down = solve(down.nlp, initial_point(net, down), opts.nlp);
            }
            smp.status_down = r_down.status;
            if (r_down.status == NlpStatus::optimal) {
                smp.p_down = r_down.point[down.ix_flex_p];
                warm_down = r_down.point;
                have_down = true;
            }
            region.samples[i] = smp;
        }
    };

    const int workers = std::max(1, std::min(opts.workers, grid.count));
    if (workers == 1) {
        run_chunk(0, grid.count);
    } else {
        std::vector<std::future<void>> futures;
        const int chunk = (grid.count + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(grid.count, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, run_chunk, begin, end));
        }
        for (auto& f : futures) f.get();
    }

    region.polygon = build_polygon(region.samples);
    return region;
}

std::pair<double, double> auto_qrange(const NetworkCase& net, int flex_bus,
                                      const NlpOptions& opts) {
    FlexProblem hi = assemble_qspan_problem(net, flex_bus, FlexDirection::max);
    FlexProblem lo = assemble_qspan_problem(net, flex_bus, FlexDirection::min);
    const NlpResult r_hi = solve(hi.nlp, initial_point(net, hi), opts);
    const NlpResult r_lo = solve(lo.nlp, initial_point(net, lo), opts);

    if (r_hi.status == NlpStatus::infeasible && r_lo.status == NlpStatus::infeasible) {
        throw ValidationError("no feasible flex operation at bus " + std::to_string(flex_bus));
    }
    if (r_hi.status != NlpStatus::optimal || r_lo.status != NlpStatus::optimal) {
        throw ValidationError(std::string("unable to determine reactive span at bus ") +
                              std::to_string(flex_bus) + " (max: " + to_string(r_hi.status) +
                              ", min: " + to_string(r_lo.status) + ")");
    }
    const double q_hi = r_hi.point[hi.ix_flex_q] - 1e-4;
    const double q_lo = r_lo.point[lo.ix_flex_q] + 1e-4;
    if (!(q_lo < q_hi)) {
        throw ValidationError("reactive span at bus " + std::to_string(flex_bus) +
                              " is degenerate after endpoint shrinking");
    }
    return {q_lo, q_hi};
}

}  // namespace flexmap
