#include "flexmap/powerflow.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <unordered_map>

namespace flexmap {

namespace {

std::unordered_map<int, int> bus_index(const NetworkCase& net) {
    std::unordered_map<int, int> idx;
    idx.reserve(net.buses.size());
    for (std::size_t i = 0; i < net.buses.size(); ++i) idx[net.buses[i].id] = static_cast<int>(i);
    return idx;
}

}  // namespace

FlowTerms flow_terms(double g, double b, double gsh, double bsh, double v_f, double v_t,
                     double theta_f, double theta_t, bool with_hessian) {
    const double d = theta_f - theta_t;
    const double c = std::cos(d), s = std::sin(d);
    const double A = g * c + b * s;   // dA/dtheta_f = -B
    const double B = g * s - b * c;   // dB/dtheta_f =  A
    const double C = b * c - g * s;   // dC/dtheta_f =  D
    const double D = -b * s - g * c;  // dD/dtheta_f = -C
    const double vv = v_f * v_t;

    FlowTerms ft;
    ft.p = v_f * v_f * (g + gsh) - vv * A;
    ft.q = -v_f * v_f * (b + bsh) + vv * C;

    ft.dp = {2.0 * v_f * (g + gsh) - v_t * A, -v_f * A, vv * B, -vv * B};
    ft.dq = {-2.0 * v_f * (b + bsh) + v_t * C, v_f * C, vv * D, -vv * D};

    if (with_hessian) {
        ft.d2p[0] = {2.0 * (g + gsh), -A, v_t * B, -v_t * B};
        ft.d2p[1] = {-A, 0.0, v_f * B, -v_f * B};
        ft.d2p[2] = {v_t * B, v_f * B, vv * A, -vv * A};
        ft.d2p[3] = {-v_t * B, -v_f * B, -vv * A, vv * A};

        ft.d2q[0] = {-2.0 * (b + bsh), C, v_t * D, -v_t * D};
        ft.d2q[1] = {C, 0.0, v_f * D, -v_f * D};
        ft.d2q[2] = {v_t * D, v_f * D, -vv * C, vv * C};
        ft.d2q[3] = {-v_t * D, -v_f * D, vv * C, -vv * C};
    }
    return ft;
}

OperatingPoint flat_point(const NetworkCase& net) {
    OperatingPoint pt;
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    pt.v_mag = Eigen::VectorXd::Ones(n);
    pt.v_ang = Eigen::VectorXd::Zero(n);
    pt.gen_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.generators.size()));
    pt.gen_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.generators.size()));
    const std::size_t r = net.reference_pos();
    pt.v_mag[static_cast<Eigen::Index>(r)] = net.buses[r].v_ref_setpoint;
    return pt;
}

std::vector<BranchFlow> branch_flows(const NetworkCase& net, const OperatingPoint& pt) {
    if (pt.v_mag.size() != static_cast<Eigen::Index>(net.buses.size()) ||
        pt.v_ang.size() != pt.v_mag.size()) {
        throw ValidationError("operating point does not match case bus count");
    }
    const auto idx = bus_index(net);
    std::vector<BranchFlow> flows(net.branches.size());
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
        const Branch& br = net.branches[e];
        if (!br.closed()) continue;
        const int f = idx.at(br.from_bus), t = idx.at(br.to_bus);
        const auto from = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                     br.shunt_susceptance, pt.v_mag[f], pt.v_mag[t], pt.v_ang[f],
                                     pt.v_ang[t]);
        const auto to = flow_terms(br.conductance, br.susceptance, br.shunt_conductance,
                                   br.shunt_susceptance, pt.v_mag[t], pt.v_mag[f], pt.v_ang[t],
                                   pt.v_ang[f]);
        flows[e] = {from.p, from.q, to.p, to.q};
    }
    return flows;
}

Mismatch mismatch(const NetworkCase& net, const OperatingPoint& pt, std::optional<int> flex_bus) {
    const auto idx = bus_index(net);
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Mismatch mm{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};

    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const int b = idx.at(net.generators[g].bus);
        mm.dp[b] += pt.gen_p[static_cast<Eigen::Index>(g)];
        mm.dq[b] += pt.gen_q[static_cast<Eigen::Index>(g)];
    }
    for (const Load& l : net.loads) {
        const int b = idx.at(l.bus);
        mm.dp[b] -= l.p;
        mm.dq[b] -= l.q;
    }
    if (flex_bus) {
        auto pos = net.bus_pos(*flex_bus);
        if (!pos) throw ValidationError("unknown flex bus id " + std::to_string(*flex_bus));
        mm.dp[static_cast<Eigen::Index>(*pos)] += pt.flex_p;
        mm.dq[static_cast<Eigen::Index>(*pos)] += pt.flex_q;
    }
    const auto flows = branch_flows(net, pt);
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
        const Branch& br = net.branches[e];
        if (!br.closed()) continue;
        const int f = idx.at(br.from_bus), t = idx.at(br.to_bus);
        mm.dp[f] -= flows[e].p_from;
        mm.dq[f] -= flows[e].q_from;
        mm.dp[t] -= flows[e].p_to;
        mm.dq[t] -= flows[e].q_to;
    }
    return mm;
}

Eigen::SparseMatrix<double> jacobian(const NetworkCase& net, const OperatingPoint& pt) {
    const auto idx = bus_index(net);
    const int n = static_cast<int>(net.buses.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(net.branches.size() * 32);

    // Rows [dp; dq], columns [theta; v]. Each closed branch end contributes
    // -d(flow)/d(Vf, Vt, th_f, th_t) to the sending bus's rows.
    auto add_end = [&](const Branch& br, int f, int t) {
        const FlowTerms ft =
            flow_terms(br.conductance, br.susceptance, br.shunt_conductance, br.shunt_susceptance,
                       pt.v_mag[f], pt.v_mag[t], pt.v_ang[f], pt.v_ang[t]);
        const int cols[4] = {n + f, n + t, f, t};  // [Vf, Vt, th_f, th_t]
        for (int k = 0; k < 4; ++k) {
            trips.emplace_back(f, cols[k], -ft.dp[k]);
            trips.emplace_back(n + f, cols[k], -ft.dq[k]);
        }
    };
    for (const Branch& br : net.branches) {
        if (!br.closed()) continue;
        const int f = idx.at(br.from_bus), t = idx.at(br.to_bus);
        add_end(br, f, t);
        add_end(br, t, f);
    }
    Eigen::SparseMatrix<double> jac(2 * n, 2 * n);
    jac.setFromTriplets(trips.begin(), trips.end());
    return jac;
}

NewtonResult solve_newton(const NetworkCase& net, const Eigen::VectorXd& p_injection,
                          const Eigen::VectorXd& q_injection, const NewtonOptions& opts,
                          const OperatingPoint* warm) {
    const int n = static_cast<int>(net.buses.size());
    if (p_injection.size() != n || q_injection.size() != n) {
        throw ValidationError("injection vectors must have one entry per bus");
    }
    const int ref = static_cast<int>(net.reference_pos());

    OperatingPoint pt = warm ? *warm : flat_point(net);
    pt.v_ang[ref] = 0.0;
    pt.v_mag[ref] = net.buses[ref].v_ref_setpoint;

    // Unknowns: theta then v at every non-reference bus.
    std::vector<int> free_bus;
    free_bus.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        if (i != ref) free_bus.push_back(i);
    }
    const int m = static_cast<int>(free_bus.size());

    auto residual = [&](const OperatingPoint& at, Eigen::VectorXd& r) {
        const auto flows = branch_flows(net, at);
        const auto idx = bus_index(net);
        Eigen::VectorXd sum_p = Eigen::VectorXd::Zero(n), sum_q = Eigen::VectorXd::Zero(n);
        for (std::size_t e = 0; e < net.branches.size(); ++e) {
            const Branch& br = net.branches[e];
            if (!br.closed()) continue;
            const int f = idx.at(br.from_bus), t = idx.at(br.to_bus);
            sum_p[f] += flows[e].p_from;
            sum_q[f] += flows[e].q_from;
            sum_p[t] += flows[e].p_to;
            sum_q[t] += flows[e].q_to;
        }
        r.resize(2 * m);
        for (int k = 0; k < m; ++k) {
            r[k] = p_injection[free_bus[k]] - sum_p[free_bus[k]];
            r[m + k] = q_injection[free_bus[k]] - sum_q[free_bus[k]];
        }
    };

    NewtonResult result;
    Eigen::VectorXd r;
    residual(pt, r);
    double rnorm = r.lpNorm<Eigen::Infinity>();

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (rnorm <= opts.tolerance) break;

        const auto full = jacobian(net, pt);
        Eigen::SparseMatrix<double> jac(2 * m, 2 * m);
        {
            std::vector<Eigen::Triplet<double>> trips;
            std::vector<int> col_of(2 * n, -1);
            for (int k = 0; k < m; ++k) {
                col_of[free_bus[k]] = k;          // theta
                col_of[n + free_bus[k]] = m + k;  // v
            }
            for (int outer = 0; outer < full.outerSize(); ++outer) {
                for (Eigen::SparseMatrix<double>::InnerIterator iter(full, outer); iter; ++iter) {
                    const int row_bus = static_cast<int>(iter.row()) % n;
                    const bool q_row = iter.row() >= n;
                    const int rk = col_of[row_bus];
                    const int ck = col_of[iter.col()];
                    if (rk < 0 || ck < 0) continue;
                    trips.emplace_back(q_row ? m + rk : rk, ck, iter.value());
                }
            }
            jac.setFromTriplets(trips.begin(), trips.end());
        }

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            result.failure = "singular power-flow jacobian";
            result.iterations = it;
            result.residual = rnorm;
            result.v_mag = pt.v_mag;
            result.v_ang = pt.v_ang;
            return result;
        }
        // Residual convention r = spec - computed gives J du = r with the
        // mismatch jacobian d(spec - computed)/du.
        Eigen::VectorXd du = lu.solve(-r);
        if (!du.allFinite()) {
            result.failure = "non-finite newton step";
            result.iterations = it;
            result.residual = rnorm;
            result.v_mag = pt.v_mag;
            result.v_ang = pt.v_ang;
            return result;
        }

        double step = 1.0;
        OperatingPoint trial = pt;
        double trial_norm = rnorm;
        Eigen::VectorXd r_trial;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            trial = pt;
            for (int k = 0; k < m; ++k) {
                trial.v_ang[free_bus[k]] += step * du[k];
                trial.v_mag[free_bus[k]] += step * du[m + k];
            }
            residual(trial, r_trial);
            trial_norm = r_trial.lpNorm<Eigen::Infinity>();
            if (std::isfinite(trial_norm) && trial_norm < rnorm) break;
            step *= 0.5;
        }
        pt = trial;
        r = r_trial;
        rnorm = trial_norm;
        result.iterations = it + 1;
        if (!std::isfinite(rnorm)) {
            result.failure = "diverged to non-finite residual";
            result.residual = rnorm;
            result.v_mag = pt.v_mag;
            result.v_ang = pt.v_ang;
            return result;
        }
    }

    result.v_mag = pt.v_mag;
    result.v_ang = pt.v_ang;
    result.residual = rnorm;
    result.converged = rnorm <= opts.tolerance;
    if (!result.converged && result.failure.empty()) {
        result.failure = "did not converge within " + std::to_string(opts.max_iterations) +
                         " iterations (residual " + std::to_string(rnorm) + ")";
    }
    if (result.converged) {
        const auto flows = branch_flows(net, pt);
        const auto idx = bus_index(net);
        for (std::size_t e = 0; e < net.branches.size(); ++e) {
            const Branch& br = net.branches[e];
            if (!br.closed()) continue;
            if (idx.at(br.from_bus) == ref) {
                result.ref_injection_p += flows[e].p_from;
                result.ref_injection_q += flows[e].q_from;
            }
            if (idx.at(br.to_bus) == ref) {
                result.ref_injection_p += flows[e].p_to;
                result.ref_injection_q += flows[e].q_to;
            }
        }
    }
    return result;
}

OperatingPoint slack_dispatch_point(const NetworkCase& net, const NewtonResult& pf,
                                    std::optional<int> flex_bus, double flex_p, double flex_q) {
    const int ref_id = net.buses[net.reference_pos()].id;
    int slack_gen = -1;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        if (net.generators[g].bus == ref_id) {
            slack_gen = static_cast<int>(g);
            break;
        }
    }
    if (slack_gen < 0) {
        throw ValidationError("reference bus " + std::to_string(ref_id) +
                              " hosts no generator to absorb the slack");
    }

    OperatingPoint pt;
    pt.v_mag = pf.v_mag;
    pt.v_ang = pf.v_ang;
    pt.gen_p.resize(static_cast<Eigen::Index>(net.generators.size()));
    pt.gen_q.resize(static_cast<Eigen::Index>(net.generators.size()));
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        pt.gen_p[static_cast<Eigen::Index>(g)] = net.generators[g].p_set;
        pt.gen_q[static_cast<Eigen::Index>(g)] = net.generators[g].q_set;
    }
    pt.flex_p = flex_p;
    pt.flex_q = flex_q;

    double load_p = 0.0, load_q = 0.0;
    for (const Load& l : net.loads) {
        if (l.bus == ref_id) {
            load_p += l.p;
            load_q += l.q;
        }
    }
    double other_gen_p = 0.0, other_gen_q = 0.0;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        if (net.generators[g].bus == ref_id && static_cast<int>(g) != slack_gen) {
            other_gen_p += net.generators[g].p_set;
            other_gen_q += net.generators[g].q_set;
        }
    }
    const bool flex_here = flex_bus && *flex_bus == ref_id;
    pt.gen_p[slack_gen] =
        pf.ref_injection_p + load_p - (flex_here ? flex_p : 0.0) - other_gen_p;
    pt.gen_q[slack_gen] =
        pf.ref_injection_q + load_q - (flex_here ? flex_q : 0.0) - other_gen_q;
    return pt;
}

void scheduled_injections(const NetworkCase& net, std::optional<int> flex_bus, double flex_p,
                          double flex_q, Eigen::VectorXd& p_injection,
                          Eigen::VectorXd& q_injection) {
    const auto idx = bus_index(net);
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    p_injection = Eigen::VectorXd::Zero(n);
    q_injection = Eigen::VectorXd::Zero(n);
    for (const Generator& g : net.generators) {
        p_injection[idx.at(g.bus)] += g.p_set;
        q_injection[idx.at(g.bus)] += g.q_set;
    }
    for (const Load& l : net.loads) {
        p_injection[idx.at(l.bus)] -= l.p;
        q_injection[idx.at(l.bus)] -= l.q;
    }
    if (flex_bus) {
        auto pos = net.bus_pos(*flex_bus);
        if (!pos) throw ValidationError("unknown flex bus id " + std::to_string(*flex_bus));
        p_injection[static_cast<Eigen::Index>(*pos)] += flex_p;
        q_injection[static_cast<Eigen::Index>(*pos)] += flex_q;
    }
}

}  // namespace flexmap
