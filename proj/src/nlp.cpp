#include "flexmap/nlp.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

namespace flexmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Dual-centrality corridor: keeps every complementarity product within a
// factor of the barrier parameter, which bounds the KKT conditioning. The
// floor is tight (collapsing duals wreck the slack block), the cap loose
// (active-set duals legitimately overshoot the central value on the way in).
constexpr double kDualFloor = 1e4;
constexpr double kDualCapLoose = 1e8;
constexpr double kKappaEps = 10.0;

struct Scalings {
    double s_d = 1.0;
    double s_c = 1.0;
};

Scalings residual_scalings(const NlpMultipliers& m) {
    const double s_max = 100.0;
    const Eigen::Index count =
        m.eq.size() + m.ineq.size() + m.z_lower.size() + m.z_upper.size();
    const double sum = m.eq.lpNorm<1>() + m.ineq.lpNorm<1>() + m.z_lower.lpNorm<1>() +
                       m.z_upper.lpNorm<1>();
    const double dual_sum = m.ineq.lpNorm<1>() + m.z_lower.lpNorm<1>() + m.z_upper.lpNorm<1>();
    const Eigen::Index dual_count = m.ineq.size() + m.z_lower.size() + m.z_upper.size();
    Scalings s;
    s.s_d = std::max(s_max, count > 0 ? sum / static_cast<double>(count) : 0.0) / s_max;
    s.s_c = std::max(s_max, dual_count > 0 ? dual_sum / static_cast<double>(dual_count) : 0.0) /
            s_max;
    return s;
}

class InteriorPoint {
  public:
    InteriorPoint(const NlpProblem& p, const NlpOptions& o) : prob_(p), opts_(o) {
        if (prob_.n <= 0) throw std::invalid_argument("nlp: empty problem");
        if (prob_.objective.size() != prob_.n || prob_.lb.size() != prob_.n ||
            prob_.ub.size() != prob_.n) {
            throw std::invalid_argument("nlp: objective/bounds size mismatch");
        }
        for (int i = 0; i < prob_.n; ++i) {
            if (prob_.lb[i] > prob_.ub[i]) throw std::invalid_argument("nlp: inverted bounds");
            if (prob_.lb[i] == prob_.ub[i]) {
                throw std::invalid_argument(
                    "nlp: equal bounds; pin the variable with an equality row");
            }
        }
    }

    NlpResult run(const Eigen::VectorXd& start) {
        init(start);
        NlpResult res;
        double best_primal_inf = kInf;
        int stalled_iters = 0;

        for (int iter = 0; iter < opts_.max_iterations; ++iter) {
            evaluate();
            const double err0 = kkt_error(0.0);
            const double err_mu = kkt_error(mu_);
            const double primal_inf = primal_infeasibility();

            if (opts_.iteration_log) {
                log_line(iter, err0, err_mu, primal_inf);
            }
            if (err0 <= opts_.tolerance) {
                return finish(res, NlpStatus::optimal, iter, err0);
            }

            // Infeasibility: barrier exhausted while the primal residual
            // stalls above tolerance.
            if (primal_inf < 0.9 * best_primal_inf) {
                best_primal_inf = primal_inf;
                stalled_iters = 0;
            } else if (mu_ <= opts_.mu_floor * 1.01 &&
                       primal_inf > opts_.infeasibility_tol) {
                if (++stalled_iters >= opts_.infeasibility_window) {
                    return finish(res, NlpStatus::infeasible, iter, err0);
                }
            }

            // Monotone reduction on sufficient KKT decrease for the current
            // barrier subproblem.
            if (err_mu <= kKappaEps * mu_ && mu_ > opts_.mu_floor) {
                mu_ = std::max(opts_.mu_floor, mu_ * opts_.mu_shrink);
                safeguard_duals();
                continue;  // re-test convergence against the new barrier
            }

            if (!take_step()) {
                // No usable step for this barrier problem. Push the barrier
                // down and keep going; a genuinely stuck infeasible iterate
                // is caught by the stall window above.
                if (mu_ > opts_.mu_floor) {
                    mu_ = std::max(opts_.mu_floor, mu_ * opts_.mu_shrink);
                    safeguard_duals();
                    continue;
                }
                if (primal_inf > opts_.infeasibility_tol) {
                    if (++stalled_iters >= opts_.infeasibility_window) {
                        return finish(res, NlpStatus::infeasible, iter, err0);
                    }
                    continue;
                }
                return finish(res, NlpStatus::numerical_failure, iter, err0);
            }
            res.iterations = iter + 1;
        }
        evaluate();
        return finish(res, NlpStatus::iteration_limit, opts_.max_iterations, kkt_error(0.0));
    }

  private:
    const NlpProblem& prob_;
    const NlpOptions& opts_;

    Eigen::VectorXd x_, s_, lam_, nu_, zl_, zu_;
    Eigen::VectorXd g_, h_;
    Eigen::SparseMatrix<double> jg_, jh_;
    double mu_ = 0.1;
    double rho_ = 1.0;  // exact-penalty weight in the merit function
    std::vector<int> lo_, up_;
    double last_alpha_p_ = 0.0, last_alpha_d_ = 0.0, last_delta_ = 0.0;
    int last_limiter_ = -1;
    double accepted_alpha_ = 0.0;
    // Persistent primal regularization: a near-singular step that the merit
    // search cuts to slivers gets damped up front on the next iterations.
    double sticky_reg_ = 0.0;

    void init(const Eigen::VectorXd& start) {
        if (start.size() != prob_.n) throw std::invalid_argument("nlp: start size mismatch");
        mu_ = opts_.mu_init;
        rho_ = 1.0;
        x_ = start;
        lo_.clear();
        up_.clear();
        for (int i = 0; i < prob_.n; ++i) {
            const double l = prob_.lb[i], u = prob_.ub[i];
            if (l > -kInf) lo_.push_back(i);
            if (u < kInf) up_.push_back(i);
            // Push the start strictly inside its bounds.
            if (l > -kInf && u < kInf) {
                const double pad = std::min(1e-2 * std::max(1.0, std::abs(l)), 1e-2 * (u - l));
                x_[i] = std::clamp(x_[i], l + pad, u - pad);
            } else if (l > -kInf) {
                x_[i] = std::max(x_[i], l + 1e-2 * std::max(1.0, std::abs(l)));
            } else if (u < kInf) {
                x_[i] = std::min(x_[i], u - 1e-2 * std::max(1.0, std::abs(u)));
            }
        }
        h_ = prob_.m_ineq > 0 ? prob_.ineq_residual(x_) : Eigen::VectorXd(0);
        s_.resize(prob_.m_ineq);
        for (int j = 0; j < prob_.m_ineq; ++j) s_[j] = std::max(-h_[j], 1e-2);
        lam_ = Eigen::VectorXd::Zero(prob_.m_eq);
        nu_.resize(prob_.m_ineq);
        for (int j = 0; j < prob_.m_ineq; ++j) nu_[j] = mu_ / s_[j];
        zl_ = Eigen::VectorXd::Zero(prob_.n);
        zu_ = Eigen::VectorXd::Zero(prob_.n);
        for (int i : lo_) zl_[i] = mu_ / (x_[i] - prob_.lb[i]);
        for (int i : up_) zu_[i] = mu_ / (prob_.ub[i] - x_[i]);
    }

    void evaluate() {
        g_ = prob_.m_eq > 0 ? prob_.eq_residual(x_) : Eigen::VectorXd(0);
        h_ = prob_.m_ineq > 0 ? prob_.ineq_residual(x_) : Eigen::VectorXd(0);
        jg_ = prob_.m_eq > 0 ? prob_.eq_jacobian(x_)
                             : Eigen::SparseMatrix<double>(0, prob_.n);
        jh_ = prob_.m_ineq > 0 ? prob_.ineq_jacobian(x_)
                               : Eigen::SparseMatrix<double>(0, prob_.n);
    }

    Eigen::VectorXd dual_residual() const {
        Eigen::VectorXd r = prob_.objective;
        if (prob_.m_eq > 0) r += jg_.transpose() * lam_;
        if (prob_.m_ineq > 0) r += jh_.transpose() * nu_;
        r -= zl_;
        r += zu_;
        return r;
    }

    double primal_infeasibility() const {
        double v = 0.0;
        if (g_.size() > 0) v = g_.lpNorm<Eigen::Infinity>();
        for (int j = 0; j < prob_.m_ineq; ++j) v = std::max(v, h_[j]);
        return v;
    }

    struct ErrorParts {
        double stat = 0.0, feas = 0.0, comp = 0.0;
        double max() const { return std::max({stat, feas, comp}); }
    };

    ErrorParts kkt_error_parts(double mu) const {
        NlpMultipliers m{lam_, nu_, zl_, zu_};
        const auto sc = residual_scalings(m);
        ErrorParts out;
        out.stat = dual_residual().lpNorm<Eigen::Infinity>() / sc.s_d;
        double feas = g_.size() > 0 ? g_.lpNorm<Eigen::Infinity>() : 0.0;
        for (int j = 0; j < prob_.m_ineq; ++j) feas = std::max(feas, std::abs(h_[j] + s_[j]));
        out.feas = feas;
        double comp = 0.0;
        for (int j = 0; j < prob_.m_ineq; ++j) comp = std::max(comp, std::abs(s_[j] * nu_[j] - mu));
        for (int i : lo_) comp = std::max(comp, std::abs((x_[i] - prob_.lb[i]) * zl_[i] - mu));
        for (int i : up_) comp = std::max(comp, std::abs((prob_.ub[i] - x_[i]) * zu_[i] - mu));
        out.comp = comp / sc.s_c;
        return out;
    }

    double kkt_error(double mu) const { return kkt_error_parts(mu).max(); }

    double barrier_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& s) const {
        double f = prob_.objective.dot(x);
        for (int j = 0; j < prob_.m_ineq; ++j) {
            if (s[j] <= 0.0) return kInf;
            f -= mu_ * std::log(s[j]);
        }
        for (int i : lo_) {
            const double d = x[i] - prob_.lb[i];
            if (d <= 0.0) return kInf;
            f -= mu_ * std::log(d);
        }
        for (int i : up_) {
            const double d = prob_.ub[i] - x[i];
            if (d <= 0.0) return kInf;
            f -= mu_ * std::log(d);
        }
        return f;
    }

    double constraint_l1(const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                         const Eigen::VectorXd& s) const {
        double v = g.size() > 0 ? g.lpNorm<1>() : 0.0;
        for (int j = 0; j < prob_.m_ineq; ++j) v += std::abs(h[j] + s[j]);
        return v;
    }

    // One damped primal-dual step; escalates diagonal regularization until a
    // usable direction is found. Returns false on numerical failure.
    bool take_step() {
        const int n = prob_.n, me = prob_.m_eq, mi = prob_.m_ineq;
        const int dim = n + me + mi;

        Eigen::VectorXd sigma_x = Eigen::VectorXd::Zero(n);
        for (int i : lo_) sigma_x[i] += zl_[i] / (x_[i] - prob_.lb[i]);
        for (int i : up_) sigma_x[i] += zu_[i] / (prob_.ub[i] - x_[i]);

        Eigen::SparseMatrix<double> hess(n, n);
        if (prob_.lagrangian_hessian) hess = prob_.lagrangian_hessian(x_, lam_, nu_);

        Eigen::VectorXd rhs(dim);
        {
            Eigen::VectorXd rx = prob_.objective;
            if (me > 0) rx += jg_.transpose() * lam_;
            if (mi > 0) rx += jh_.transpose() * nu_;
            for (int i : lo_) rx[i] -= mu_ / (x_[i] - prob_.lb[i]);
            for (int i : up_) rx[i] += mu_ / (prob_.ub[i] - x_[i]);
            rhs.head(n) = -rx;
            if (me > 0) rhs.segment(n, me) = -g_;
            for (int j = 0; j < mi; ++j) rhs[n + me + j] = -h_[j] - mu_ / nu_[j];
        }

        double delta_x = sticky_reg_, delta_c = 0.0;
        for (int attempt = 0; attempt < 16; ++attempt) {
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(hess.nonZeros() + jg_.nonZeros() * 2 +
                                                   jh_.nonZeros() * 2 + dim));
            for (int k = 0; k < hess.outerSize(); ++k) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(hess, k); it; ++it) {
                    trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                       it.value());
                }
            }
            for (int i = 0; i < n; ++i) trips.emplace_back(i, i, sigma_x[i] + delta_x);
            for (int k = 0; k < jg_.outerSize(); ++k) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(jg_, k); it; ++it) {
                    const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                    trips.emplace_back(n + r, c, it.value());
                    trips.emplace_back(c, n + r, it.value());
                }
            }
            for (int r = 0; r < me; ++r) trips.emplace_back(n + r, n + r, -delta_c);
            for (int k = 0; k < jh_.outerSize(); ++k) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(jh_, k); it; ++it) {
                    const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                    trips.emplace_back(n + me + r, c, it.value());
                    trips.emplace_back(c, n + me + r, it.value());
                }
            }
            for (int j = 0; j < mi; ++j) {
                trips.emplace_back(n + me + j, n + me + j, -s_[j] / nu_[j] - delta_c);
            }

            Eigen::SparseMatrix<double> kkt(dim, dim);
            kkt.setFromTriplets(trips.begin(), trips.end());

            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(kkt);
            bool ok = lu.info() == Eigen::Success;
            Eigen::VectorXd d;
            if (ok) {
                d = lu.solve(rhs);
                ok = d.allFinite() &&
                     (kkt * d - rhs).lpNorm<Eigen::Infinity>() <=
                         1e-6 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
                // A direction orders of magnitude beyond the residual scale
                // signals a near-singular system; regularize instead.
                ok = ok && d.lpNorm<Eigen::Infinity>() <=
                               1e4 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
            }
            last_delta_ = delta_x;
            if (ok && try_line_search(d)) {
                if (accepted_alpha_ < 1e-2) {
                    sticky_reg_ = std::min(std::max(sticky_reg_ * 10.0, 1e-4), 1e2);
                } else if (accepted_alpha_ > 0.5 && sticky_reg_ > 0.0) {
                    sticky_reg_ = sticky_reg_ > 1e-8 ? sticky_reg_ / 10.0 : 0.0;
                }
                return true;
            }

            delta_x = delta_x == 0.0 ? std::max(opts_.reg_init, 1e-20)
                                     : delta_x * opts_.reg_growth;
            if (delta_x > 1e-2) delta_c = std::max(delta_c, 1e-8);
            if (delta_x > opts_.reg_max) return false;
        }
        return false;
    }

    bool try_line_search(const Eigen::VectorXd& d) {
        const int n = prob_.n, me = prob_.m_eq, mi = prob_.m_ineq;
        const double tau = opts_.fraction_to_boundary;
        const Eigen::VectorXd dx = d.head(n);
        const Eigen::VectorXd dlam = me > 0 ? d.segment(n, me) : Eigen::VectorXd(0);
        const Eigen::VectorXd dnu = mi > 0 ? d.tail(mi) : Eigen::VectorXd(0);

        Eigen::VectorXd ds(mi), dzl = Eigen::VectorXd::Zero(n), dzu = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < mi; ++j) ds[j] = -(s_[j] - mu_ / nu_[j]) - (s_[j] / nu_[j]) * dnu[j];
        for (int i : lo_) {
            const double gap = x_[i] - prob_.lb[i];
            dzl[i] = mu_ / gap - zl_[i] - zl_[i] * dx[i] / gap;
        }
        for (int i : up_) {
            const double gap = prob_.ub[i] - x_[i];
            dzu[i] = mu_ / gap - zu_[i] + zu_[i] * dx[i] / gap;
        }

        double alpha_p = 1.0, alpha_d = 1.0;
        int limiter = -1;
        for (int j = 0; j < mi; ++j) {
            if (ds[j] < 0.0 && -tau * s_[j] / ds[j] < alpha_p) {
                alpha_p = -tau * s_[j] / ds[j];
                limiter = prob_.n + j;
            }
            if (dnu[j] < 0.0) alpha_d = std::min(alpha_d, -tau * nu_[j] / dnu[j]);
        }
        for (int i : lo_) {
            if (dx[i] < 0.0 && -tau * (x_[i] - prob_.lb[i]) / dx[i] < alpha_p) {
                alpha_p = -tau * (x_[i] - prob_.lb[i]) / dx[i];
                limiter = i;
            }
            if (dzl[i] < 0.0) alpha_d = std::min(alpha_d, -tau * zl_[i] / dzl[i]);
        }
        for (int i : up_) {
            if (dx[i] > 0.0 && tau * (prob_.ub[i] - x_[i]) / dx[i] < alpha_p) {
                alpha_p = tau * (prob_.ub[i] - x_[i]) / dx[i];
                limiter = i;
            }
            if (dzu[i] < 0.0) alpha_d = std::min(alpha_d, -tau * zu_[i] / dzu[i]);
        }
        last_alpha_p_ = alpha_p;
        last_alpha_d_ = alpha_d;
        last_limiter_ = limiter;

        // Exact-penalty weight from the current multipliers; trial estimates
        // from a rejected direction must not poison later iterations.
        double mult_norm = 0.0;
        if (me > 0) mult_norm = lam_.lpNorm<Eigen::Infinity>();
        if (mi > 0) mult_norm = std::max(mult_norm, nu_.lpNorm<Eigen::Infinity>());
        rho_ = 1.2 * mult_norm + 1.0;

        const double phi0 = barrier_objective(x_, s_) + rho_ * constraint_l1(g_, h_, s_);
        // Newton steps null the constraint linearization, so the l1 term's
        // directional derivative is its full negative value.
        double dphi = prob_.objective.dot(dx);
        for (int j = 0; j < mi; ++j) dphi -= mu_ * ds[j] / s_[j];
        for (int i : lo_) dphi -= mu_ * dx[i] / (x_[i] - prob_.lb[i]);
        for (int i : up_) dphi += mu_ * dx[i] / (prob_.ub[i] - x_[i]);
        dphi -= rho_ * constraint_l1(g_, h_, s_);

        double alpha = alpha_p;
        for (int bt = 0; bt < 40; ++bt) {
            if (alpha < 1e-12) return false;
            Eigen::VectorXd x_try = x_ + alpha * dx;
            Eigen::VectorXd s_try = s_ + alpha * ds;
            const Eigen::VectorXd g_try =
                me > 0 ? prob_.eq_residual(x_try) : Eigen::VectorXd(0);
            const Eigen::VectorXd h_try =
                mi > 0 ? prob_.ineq_residual(x_try) : Eigen::VectorXd(0);
            const double phi_try =
                barrier_objective(x_try, s_try) + rho_ * constraint_l1(g_try, h_try, s_try);
            const double required =
                dphi < 0.0 ? phi0 + 1e-4 * alpha * dphi : phi0 - 1e-14 * (1.0 + std::abs(phi0));
            if (std::isfinite(phi_try) && phi_try <= required) {
                assert(phi_try <= phi0 + 1e-10 * (1.0 + std::abs(phi0)));
                if (opts_.iteration_log) {
                    *opts_.iteration_log
                        << "  step: a " << alpha << "/" << alpha_d << " |dx| "
                        << dx.lpNorm<Eigen::Infinity>() << " |dlam| "
                        << (me ? dlam.lpNorm<Eigen::Infinity>() : 0.0) << " |dnu| "
                        << (mi ? dnu.lpNorm<Eigen::Infinity>() : 0.0) << " |ds| "
                        << (mi ? ds.lpNorm<Eigen::Infinity>() : 0.0) << " |dzl| "
                        << dzl.lpNorm<Eigen::Infinity>() << " |dzu| "
                        << dzu.lpNorm<Eigen::Infinity>() << "\n";
                }
                x_ = std::move(x_try);
                s_ = std::move(s_try);
                if (me > 0) lam_ += alpha_d * dlam;
                if (mi > 0) nu_ += alpha_d * dnu;
                zl_ += alpha_d * dzl;
                zu_ += alpha_d * dzu;
                safeguard_duals();
                accepted_alpha_ = alpha;
                return true;
            }
            alpha *= 0.5;
        }
        return false;
    }

    void safeguard_duals() {
        for (int j = 0; j < prob_.m_ineq; ++j) {
            const double ref = mu_ / s_[j];
            nu_[j] = std::clamp(nu_[j], ref / kDualFloor, ref * kDualCapLoose);
        }
        for (int i : lo_) {
            const double ref = mu_ / (x_[i] - prob_.lb[i]);
            zl_[i] = std::clamp(zl_[i], ref / kDualFloor, ref * kDualCapLoose);
        }
        for (int i : up_) {
            const double ref = mu_ / (prob_.ub[i] - x_[i]);
            zu_[i] = std::clamp(zu_[i], ref / kDualFloor, ref * kDualCapLoose);
        }
    }

    void log_line(int iter, double err0, double err_mu, double primal_inf) {
        const ErrorParts parts = kkt_error_parts(mu_);
        *opts_.iteration_log << "iter " << iter << " mu " << mu_ << " kkt " << err0
                             << " kkt_mu " << err_mu << " (stat " << parts.stat << " feas "
                             << parts.feas << " comp " << parts.comp << ") pinf " << primal_inf
                             << " obj " << prob_.objective.dot(x_) << " rho " << rho_ << " a_p "
                             << last_alpha_p_ << " a_d " << last_alpha_d_ << " lim "
                             << last_limiter_ << " reg " << last_delta_ << "\n";
    }

    NlpResult finish(NlpResult& res, NlpStatus status, int iterations, double err) {
        res.status = status;
        res.point = x_;
        res.objective = prob_.objective.dot(x_);
        res.kkt_residual = err;
        res.iterations = iterations;
        res.multipliers = {lam_, nu_, zl_, zu_};
        return res;
    }
};

int status_rank(NlpStatus s) {
    switch (s) {
        case NlpStatus::optimal: return 3;
        case NlpStatus::iteration_limit: return 2;
        case NlpStatus::numerical_failure: return 1;
        case NlpStatus::infeasible: return 0;
    }
    return 0;
}

}  // namespace

const char* to_string(NlpStatus s) {
    switch (s) {
        case NlpStatus::optimal: return "optimal";
        case NlpStatus::infeasible: return "infeasible";
        case NlpStatus::iteration_limit: return "iteration-limit";
        case NlpStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

NlpResult solve(const NlpProblem& problem, const Eigen::VectorXd& start,
                const NlpOptions& opts) {
    InteriorPoint ip(problem, opts);
    NlpResult best = ip.run(start);
    if (opts.multistart <= 1) return best;

    std::mt19937 rng(opts.multistart_seed);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    for (int k = 1; k < opts.multistart; ++k) {
        Eigen::VectorXd perturbed = start;
        for (int i = 0; i < perturbed.size(); ++i) {
            perturbed[i] += jitter(rng) * std::max(1.0, std::abs(perturbed[i]));
        }
        NlpResult r = ip.run(perturbed);
        const bool better =
            status_rank(r.status) > status_rank(best.status) ||
            (r.status == NlpStatus::optimal && best.status == NlpStatus::optimal &&
             r.objective < best.objective);
        if (better) best = r;
    }
    return best;
}

double KktResiduals::max() const {
    return std::max({stationarity, primal_feasibility, complementarity});
}

KktResiduals kkt_check(const NlpProblem& problem, const Eigen::VectorXd& point,
                       const NlpMultipliers& mult) {
    KktResiduals out;
    const auto sc = residual_scalings(mult);

    Eigen::VectorXd r = problem.objective;
    if (problem.m_eq > 0) r += problem.eq_jacobian(point).transpose() * mult.eq;
    if (problem.m_ineq > 0) r += problem.ineq_jacobian(point).transpose() * mult.ineq;
    if (mult.z_lower.size() == point.size()) r -= mult.z_lower;
    if (mult.z_upper.size() == point.size()) r += mult.z_upper;
    out.stationarity = r.lpNorm<Eigen::Infinity>() / sc.s_d;

    double feas = 0.0;
    if (problem.m_eq > 0) feas = problem.eq_residual(point).lpNorm<Eigen::Infinity>();
    Eigen::VectorXd h;
    if (problem.m_ineq > 0) {
        h = problem.ineq_residual(point);
        for (int j = 0; j < problem.m_ineq; ++j) feas = std::max(feas, h[j]);
    }
    for (int i = 0; i < point.size(); ++i) {
        feas = std::max(feas, problem.lb[i] - point[i]);
        feas = std::max(feas, point[i] - problem.ub[i]);
    }
    out.primal_feasibility = feas;

    double comp = 0.0;
    for (int j = 0; j < problem.m_ineq; ++j) {
        comp = std::max(comp, std::abs(mult.ineq[j] * h[j]));
    }
    for (int i = 0; i < point.size(); ++i) {
        if (mult.z_lower.size() == point.size() && problem.lb[i] > -kInf) {
            comp = std::max(comp, std::abs((point[i] - problem.lb[i]) * mult.z_lower[i]));
        }
        if (mult.z_upper.size() == point.size() && problem.ub[i] < kInf) {
            comp = std::max(comp, std::abs((problem.ub[i] - point[i]) * mult.z_upper[i]));
        }
    }
    out.complementarity = comp / sc.s_c;
    return out;
}

}  // namespace flexmap
