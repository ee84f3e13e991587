#include "sphwave/optcore.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace sphwave {

namespace {

struct Evaluated {
    double value = 0.0;
    Eigen::VectorXd grad;
};

/// Strong-Wolfe line search (Nocedal & Wright alg. 3.5/3.6, simplified).
/// Returns the accepted step; phi/dphi are updated to the accepted point.
double wolfe_line_search(const std::function<double(double, double*)>& phi, double phi0,
                         double dphi0, double alpha_init, long* evals) {
    const double c1 = 1e-4, c2 = 0.9;
    const double alpha_max = 1e8;
    double alpha_prev = 0.0, phi_prev = phi0;
    double alpha = alpha_init;

    auto zoom = [&](double lo, double hi, double phi_lo) {
        double dphi_at = 0.0;
        for (int it = 0; it < 40; ++it) {
            const double a = 0.5 * (lo + hi);
            const double p = phi(a, &dphi_at);
            ++*evals;
            if (p > phi0 + c1 * a * dphi0 || p >= phi_lo) {
                hi = a;
            } else {
                if (std::abs(dphi_at) <= -c2 * dphi0) return a;
                if (dphi_at * (hi - lo) >= 0) hi = lo;
                lo = a;
                phi_lo = p;
            }
            if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        }
        return lo;
    };

    for (int it = 0; it < 30; ++it) {
        double dphi_at = 0.0;
        const double p = phi(alpha, &dphi_at);
        ++*evals;
        if (p > phi0 + c1 * alpha * dphi0 || (it > 0 && p >= phi_prev))
            return zoom(alpha_prev, alpha, phi_prev);
        if (std::abs(dphi_at) <= -c2 * dphi0) return alpha;
        if (dphi_at >= 0) return zoom(alpha, alpha_prev, p);
        alpha_prev = alpha;
        phi_prev = p;
        alpha = std::min(2.0 * alpha, alpha_max);
    }
    return alpha;
}

/// L-BFGS minimization of `f` from x. Stops when ||grad||_inf < tol or the
/// step stalls. Returns the final point; monotone in f.
Eigen::VectorXd lbfgs(const ScalarFn& f, Eigen::VectorXd x, double tol, int max_iter, int memory,
                      long* evals, double* final_value, double* final_gnorm) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd g(n);
    double fx = f(x, &g);
    ++*evals;
    if (!std::isfinite(fx)) throw std::runtime_error("minimize: non-finite cost at x0");

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < tol) break;

        // Two-loop recursion.
        Eigen::VectorXd q = g;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha_coef(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha_coef[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha_coef[i] * y_hist[i];
        }
        if (m > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha_coef[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;
        double dphi0 = g.dot(dir);
        if (!(dphi0 < 0)) {  // not a descent direction: restart with steepest descent
            dir = -g;
            dphi0 = g.dot(dir);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            if (!(dphi0 < 0)) break;
        }

        Eigen::VectorXd x_trial = x, g_trial = g;
        auto phi = [&](double a, double* dphi) {
            x_trial = x + a * dir;
            const double v = f(x_trial, &g_trial);
            if (dphi) *dphi = g_trial.dot(dir);
            return v;
        };
        const double alpha0 = iter == 0 ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;
        const double alpha = wolfe_line_search(phi, fx, dphi0, alpha0, evals);

        Eigen::VectorXd x_new = x + alpha * dir;
        Eigen::VectorXd g_new(n);
        const double f_new = f(x_new, &g_new);
        ++*evals;
        if (!std::isfinite(f_new) || f_new > fx) break;  // stalled

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        const double step_inf = s.lpNorm<Eigen::Infinity>();
        x = std::move(x_new);
        g = std::move(g_new);
        const double df = fx - f_new;
        fx = f_new;
        if (step_inf < 1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>()) &&
            df < 1e-18 * std::max(1.0, std::abs(fx)))
            break;
    }
    if (final_value) *final_value = fx;
    if (final_gnorm) *final_gnorm = g.lpNorm<Eigen::Infinity>();
    return x;
}

}  // namespace

MinimizeResult minimize(const ScalarFn& cost, const VectorFn& equality_constraints,
                        const Eigen::VectorXd& x0, const MinimizeOptions& options) {
    MinimizeResult res;
    res.x = x0;

    {
        const double f0 = cost(x0, nullptr);
        ++res.report.evaluations;
        if (!std::isfinite(f0)) throw std::runtime_error("minimize: non-finite cost at x0");
    }

    const bool constrained = static_cast<bool>(equality_constraints);
    if (!constrained) {
        double fv = 0.0, gn = 0.0;
        res.x = lbfgs(cost, res.x, options.tol_g, options.max_inner, options.lbfgs_memory,
                      &res.report.evaluations, &fv, &gn);
        res.report.cost = fv;
        res.report.gradient_norm = gn;
        res.report.converged = gn < options.tol_g;
        res.report.outer_iterations = 1;
        res.report.cost_history.push_back(fv);
        return res;
    }

    Eigen::VectorXd c = equality_constraints(res.x, nullptr);
    const int m = static_cast<int>(c.size());
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    double mu = options.penalty_init;
    double prev_viol = c.lpNorm<Eigen::Infinity>();

    for (int outer = 0; outer < options.max_outer; ++outer) {
        res.report.outer_iterations = outer + 1;

        // Augmented Lagrangian for the current multipliers and penalty.
        auto auglag = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
            Eigen::MatrixXd jac;
            Eigen::VectorXd cx = equality_constraints(x, grad ? &jac : nullptr);
            Eigen::VectorXd gf;
            const double f = cost(x, grad ? &gf : nullptr);
            const double val = f + lambda.dot(cx) + 0.5 * mu * cx.squaredNorm();
            if (grad) *grad = gf + jac.transpose() * (lambda + mu * cx);
            return val;
        };

        // Tighten the inner tolerance as the outer loop progresses.
        const double inner_tol = std::max(options.tol_g, options.tol_g * std::pow(10.0, 2 - outer));
        double fv = 0.0, gn = 0.0;
        res.x = lbfgs(auglag, res.x, inner_tol, options.max_inner, options.lbfgs_memory,
                      &res.report.evaluations, &fv, &gn);

        c = equality_constraints(res.x, nullptr);
        ++res.report.evaluations;
        const double viol = c.lpNorm<Eigen::Infinity>();
        const double obj = cost(res.x, nullptr);
        ++res.report.evaluations;
        res.report.cost = obj;
        res.report.cost_history.push_back(obj);
        res.report.constraint_violation = viol;
        res.report.gradient_norm = gn;

        if (viol < options.tol_c && gn < options.tol_g) {
            res.report.converged = true;
            break;
        }
        // First-order multiplier update when the violation shrinks, penalty
        // growth otherwise.
        if (viol <= 0.25 * prev_viol || viol < options.tol_c) {
            lambda += mu * c;
            prev_viol = viol;
        } else {
            mu = std::min(mu * options.penalty_growth, options.penalty_max);
        }
    }
    return res;
}

MinimizeResult minimize(const ScalarFn& cost, const Eigen::VectorXd& x0,
                        const MinimizeOptions& options) {
    return minimize(cost, VectorFn{}, x0, options);
}

MinimizeResult minimize(const ScalarFn& cost, const std::vector<ScalarFn>& equality_constraints,
                        const Eigen::VectorXd& x0, const MinimizeOptions& options) {
    if (equality_constraints.empty()) return minimize(cost, VectorFn{}, x0, options);
    VectorFn combined = [&equality_constraints](const Eigen::VectorXd& x, Eigen::MatrixXd* jac) {
        const int m = static_cast<int>(equality_constraints.size());
        Eigen::VectorXd c(m);
        if (jac) jac->resize(m, x.size());
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd gi;
            c[i] = equality_constraints[i](x, jac ? &gi : nullptr);
            if (jac) jac->row(i) = gi.transpose();
        }
        return c;
    };
    return minimize(cost, combined, x0, options);
}

double check_gradient(const ScalarFn& f, const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd analytic(x.size());
    f(x, &analytic);
    Eigen::VectorXd fd(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double fp = f(xp, nullptr);
        xp[i] = x[i] - h;
        const double fm = f(xp, nullptr);
        xp[i] = x[i];
        fd[i] = (fp - fm) / (2.0 * h);
    }
    const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
    return (analytic - fd).lpNorm<Eigen::Infinity>() / scale;
}

std::vector<bool> independent_constraints(const Eigen::MatrixXd& jacobian, double pivot_tol) {
    const int m = static_cast<int>(jacobian.rows());
    const int n = static_cast<int>(jacobian.cols());
    std::vector<bool> mask(m, false);
    if (m == 0) return mask;
    // RREF of J^T: pivot columns of J^T are the independent rows of J.
    Eigen::MatrixXd work = jacobian.transpose();
    const double threshold = pivot_tol * std::max(1.0, work.cwiseAbs().maxCoeff());
    int pivot_row = 0;
    for (int col = 0; col < m && pivot_row < n; ++col) {
        int best = pivot_row;
        double best_abs = std::abs(work(pivot_row, col));
        for (int r = pivot_row + 1; r < n; ++r) {
            if (std::abs(work(r, col)) > best_abs) {
                best = r;
                best_abs = std::abs(work(r, col));
            }
        }
        if (best_abs <= threshold) continue;
        work.row(best).swap(work.row(pivot_row));
        work.row(pivot_row) /= work(pivot_row, col);
        for (int r = 0; r < n; ++r)
            if (r != pivot_row && work(r, col) != 0.0) work.row(r) -= work(r, col) * work.row(pivot_row);
        mask[col] = true;
        ++pivot_row;
    }
    return mask;
}

std::vector<Eigen::MatrixXd> ReducedProblem::upscale(const Eigen::VectorXd& x) const {
    if (x.size() != free_count) throw std::invalid_argument("ReducedProblem::upscale: size mismatch");
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(shapes.size());
    for (const auto& [r, c] : shapes) mats.push_back(Eigen::MatrixXd::Zero(r, c));
    for (int p = 0; p < free_count; ++p)
        for (const EntryRef& e : param_entries[p]) mats[e.matrix](e.row, e.col) += e.coeff * x[p];
    return mats;
}

Eigen::VectorXd ReducedProblem::downscale(const std::vector<Eigen::MatrixXd>& mats) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(free_count);
    for (int p = 0; p < free_count; ++p) {
        double sum = 0.0;
        for (const EntryRef& e : param_entries[p]) sum += mats[e.matrix](e.row, e.col) / e.coeff;
        x[p] = param_entries[p].empty() ? 0.0 : sum / static_cast<double>(param_entries[p].size());
    }
    return x;
}

Eigen::VectorXd ReducedProblem::pullback(const std::vector<Eigen::MatrixXd>& grads) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(free_count);
    for (int p = 0; p < free_count; ++p)
        for (const EntryRef& e : param_entries[p]) g[p] += e.coeff * grads[e.matrix](e.row, e.col);
    return g;
}

ReducedProblem reduce_dofs(const SymmetryOrbits& orbits, const DofOptions& options) {
    ReducedProblem rp;
    const int fine_n = static_cast<int>(orbits.rep_fine_class.empty()
                                            ? 0
                                            : orbits.rep_fine_class.front().size());
    int coarse_n = 0;
    for (const auto& orbit : orbits.orbits) coarse_n += static_cast<int>(orbit.size());
    rp.shapes = {{coarse_n, fine_n}, {fine_n, coarse_n}};  // A, then P

    auto add_param = [&rp]() {
        rp.param_entries.emplace_back();
        return rp.free_count++;
    };

    if (!options.use_orbits && !options.use_groups) {
        for (int mat = 0; mat < 2; ++mat) {
            const auto [rows, cols] = rp.shapes[mat];
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    rp.param_entries[add_param()].push_back({mat, r, c, 1.0});
        }
        return rp;
    }
    if (!options.use_orbits || !options.use_groups)
        throw std::invalid_argument("reduce_dofs: orbit ties without grouping are not supported");

    // One parameter per (orbit, neighbour class) and matrix; classes
    // 0 self, 1 v, 2 f, 3 e. Class 4 (rest) is pinned to zero.
    for (size_t o = 0; o < orbits.orbits.size(); ++o) {
        const auto& cls = orbits.rep_fine_class[o];
        int param_a[4] = {-1, -1, -1, -1};
        int param_p[4] = {-1, -1, -1, -1};
        for (int c = 0; c < 4; ++c) {
            if (std::find(cls.begin(), cls.end(), c) != cls.end()) {
                param_a[c] = add_param();
                param_p[c] = add_param();
            }
        }
        for (size_t mi = 0; mi < orbits.orbits[o].size(); ++mi) {
            const int member = orbits.orbits[o][mi];
            const auto& perm = orbits.member_fine_perm[o][mi];
            std::vector<int> inv(perm.size());
            for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
            for (int mcol = 0; mcol < fine_n; ++mcol) {
                const int c = cls[inv[mcol]];
                if (c >= 4) continue;
                rp.param_entries[param_a[c]].push_back({0, member, mcol, 1.0});
                rp.param_entries[param_p[c]].push_back({1, mcol, member, 1.0});
            }
        }
    }
    return rp;
}

}  // namespace sphwave
