#include "sphwave/waveletopt.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sphwave {

LambdaTarget build_lambda(const SubdivisionMesh& mesh, int level) {
    if (level < 1 || level > mesh.max_level())
        throw std::invalid_argument("build_lambda: level out of range");
    const int coarse_n = mesh.vertex_count(level - 1);
    const int fine_n = mesh.vertex_count(level);
    const NeighborSets ns = neighbor_sets(mesh, level);

    LambdaTarget target;
    target.level = level;
    target.matrix = Eigen::MatrixXd::Zero(fine_n, fine_n);
    Eigen::MatrixXd& lam = target.matrix;

    // Odd columns: diagonal 1/3, halves on {v1, v2, f1, f2}.
    for (int o = 0; o < ns.odd_count(); ++o) {
        const int m = coarse_n + o;
        lam(m, m) = 1.0 / 3.0;
        for (int k : ns.v[o]) lam(k, m) += 1.0 / 6.0;
        for (int k : ns.f[o]) lam(k, m) += 1.0 / 6.0;
    }
    // Even columns: the incident odd vertices, gamma = 2 / (2 + valence).
    std::vector<std::vector<int>> incident(coarse_n);
    for (int o = 0; o < ns.odd_count(); ++o)
        for (int k : ns.v[o]) incident[k].push_back(coarse_n + o);
    for (int k = 0; k < coarse_n; ++k) {
        const double d = static_cast<double>(incident[k].size());
        const double gamma = 2.0 / (2.0 + d);
        lam(k, k) = gamma;
        for (int m : incident[k]) lam(m, k) += gamma / 2.0;
    }
    return target;
}

namespace {

/// The four stage-1 cost terms over the reduced parameter vector.
struct Stage1Cost {
    const ReducedProblem* rp = nullptr;
    const Eigen::MatrixXd* lambda = nullptr;
    WaveletOptWeights weights;
    // Frozen coarser chains M = P^{j-1}..P^{j'} A^{j'}..A^{j-1}, one per
    // j' < j; the C_p2 term for j' is the column-sum defect of p M a.
    std::vector<Eigen::MatrixXd> frozen_mid;
    double n_fine = 1.0;
    double n_coarse = 1.0;

    double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const auto mats = rp->upscale(x);
        const Eigen::MatrixXd& a = mats[0];
        const Eigen::MatrixXd& p = mats[1];
        const int coarse_n = static_cast<int>(a.rows());
        const int fine_n = static_cast<int>(a.cols());

        Eigen::MatrixXd da = Eigen::MatrixXd::Zero(coarse_n, fine_n);
        Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(fine_n, coarse_n);
        double cost = 0.0;

        // C_Lambda = mean (P A - Lambda)^2
        {
            const Eigen::MatrixXd resid = p * a - *lambda;
            const double norm = 1.0 / (n_fine * n_fine);
            cost += weights.alpha_lambda * norm * resid.squaredNorm();
            if (grad) {
                da += weights.alpha_lambda * norm * 2.0 * p.transpose() * resid;
                dp += weights.alpha_lambda * norm * 2.0 * resid * a.transpose();
            }
        }
        // C_p1 = mean over columns of (colsum(A) - 1)^2
        {
            const Eigen::RowVectorXd cs = a.colwise().sum().array() - 1.0;
            cost += weights.alpha_p1 / n_fine * cs.squaredNorm();
            if (grad)
                da += weights.alpha_p1 / n_fine * 2.0 *
                      Eigen::VectorXd::Ones(coarse_n) * cs;
        }
        // C_p2: pressure across reconstruction chains, current level and
        // the frozen coarser ones: colsums of P A and of P (chain) A.
        {
            const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(fine_n);
            const Eigen::RowVectorXd top = ones * p;  // 1^T P
            {
                const Eigen::RowVectorXd cs = (top * a).array() - 1.0;
                cost += weights.alpha_p2 / n_fine * cs.squaredNorm();
                if (grad) {
                    da += weights.alpha_p2 / n_fine * 2.0 * top.transpose() * cs;
                    dp += weights.alpha_p2 / n_fine * 2.0 * Eigen::VectorXd::Ones(fine_n) *
                          (cs * a.transpose());
                }
            }
            for (const auto& mid : frozen_mid) {
                const Eigen::RowVectorXd topm = top * mid;  // 1^T p M
                const Eigen::RowVectorXd cs = (topm * a).array() - 1.0;
                cost += weights.alpha_p2 / n_fine * cs.squaredNorm();
                if (grad) {
                    const Eigen::MatrixXd ma = mid * a;
                    da += weights.alpha_p2 / n_fine * 2.0 * topm.transpose() * cs;
                    dp += weights.alpha_p2 / n_fine * 2.0 * Eigen::VectorXd::Ones(fine_n) *
                          (cs * ma.transpose());
                }
            }
        }
        // C_neg = mean of squared negative parts of A and P.
        {
            const Eigen::MatrixXd an = a.cwiseMin(0.0);
            const Eigen::MatrixXd pn = p.cwiseMin(0.0);
            const double norm_a = 1.0 / (n_coarse * n_fine);
            cost += weights.alpha_neg * norm_a * (an.squaredNorm() + pn.squaredNorm());
            if (grad) {
                da += weights.alpha_neg * norm_a * 2.0 * an;
                dp += weights.alpha_neg * norm_a * 2.0 * pn;
            }
        }
        if (grad) *grad = rp->pullback({da, dp});
        return cost;
    }
};

}  // namespace

FilterBank optimize_scaling_filters(const SubdivisionMesh& mesh, int max_level,
                                    const WaveletOptOptions& options, WaveletOptReport* report) {
    if (max_level < 1 || max_level > mesh.max_level())
        throw std::invalid_argument("optimize_scaling_filters: level out of range");

    FilterBank bank;
    bank.family = WaveletFamily::optimized;
    bank.levels.resize(max_level + 1);

    for (int level = 1; level <= max_level; ++level) {
        const int coarse_n = mesh.vertex_count(level - 1);
        const int fine_n = mesh.vertex_count(level);
        const SymmetryOrbits orbits = symmetry_orbits(mesh, level);
        const ReducedProblem rp = reduce_dofs(orbits);
        const LambdaTarget lambda = build_lambda(mesh, level);

        Stage1Cost cost;
        cost.rp = &rp;
        cost.lambda = &lambda.matrix;
        cost.weights = options.weights;
        cost.n_fine = fine_n;
        cost.n_coarse = coarse_n;
        // Frozen middles for C_p2: M = P^{level-1}..P^{jp} A^{jp}..A^{level-1},
        // square over the coarse space of the current level.
        for (int jp = 1; jp < level; ++jp) {
            Eigen::MatrixXd a_chain = bank.level(jp).A;
            for (int k = jp + 1; k <= level - 1; ++k) a_chain = a_chain * bank.level(k).A;
            Eigen::MatrixXd p_chain = bank.level(jp).P;
            for (int k = jp + 1; k <= level - 1; ++k) p_chain = bank.level(k).P * p_chain;
            cost.frozen_mid.push_back(p_chain * a_chain);
        }

        // Constraints: A P = I plus unit column sums of A and of P. The
        // Jacobian is assembled from the parameter->entry lists directly:
        // an A entry (r, c) feeds the (r, k) products through P(c, k), its
        // column sum, and nothing else; P entries mirror this.
        auto constraint_fn = [&rp, coarse_n, fine_n](const Eigen::VectorXd& x,
                                                     Eigen::MatrixXd* jac) {
            const auto mats = rp.upscale(x);
            const Eigen::MatrixXd& a = mats[0];
            const Eigen::MatrixXd& p = mats[1];
            const int n_ortho = coarse_n * coarse_n;
            Eigen::VectorXd c(n_ortho + fine_n + coarse_n);
            const Eigen::MatrixXd ap = a * p;
            for (int r = 0; r < coarse_n; ++r)
                for (int k = 0; k < coarse_n; ++k)
                    c[r * coarse_n + k] = ap(r, k) - (r == k ? 1.0 : 0.0);
            c.segment(n_ortho, fine_n) = a.colwise().sum().transpose().array() - 1.0;
            c.segment(n_ortho + fine_n, coarse_n) = p.colwise().sum().transpose().array() - 1.0;
            if (jac) {
                jac->setZero(c.size(), x.size());
                for (int param = 0; param < rp.free_count; ++param) {
                    for (const auto& e : rp.param_entries[param]) {
                        if (e.matrix == 0) {  // A(r, c)
                            for (int k = 0; k < coarse_n; ++k)
                                (*jac)(e.row * coarse_n + k, param) += e.coeff * p(e.col, k);
                            (*jac)(n_ortho + e.col, param) += e.coeff;
                        } else {  // P(r, c)
                            for (int r = 0; r < coarse_n; ++r)
                                (*jac)(r * coarse_n + e.col, param) += e.coeff * a(r, e.row);
                            (*jac)(n_ortho + fine_n + e.col, param) += e.coeff;
                        }
                    }
                }
            }
            return c;
        };

        // Initial point: SINT (feasible, pressure preserving) or random.
        Eigen::VectorXd x0;
        if (options.random_init) {
            std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(level));
            std::uniform_real_distribution<double> uni(-0.3, 0.7);
            x0.resize(rp.free_count);
            for (int i = 0; i < rp.free_count; ++i) x0[i] = uni(rng);
        } else {
            const FilterLevel sint = sint_filters(mesh, level);
            x0 = rp.downscale({sint.A, sint.P});
        }

        // Prune dependent constraints at a generic nearby point before
        // handing the set to the solver.
        Eigen::VectorXd probe = x0;
        {
            std::mt19937_64 rng(options.seed + 77);
            std::normal_distribution<double> jitter(0.0, 1e-3);
            for (int i = 0; i < probe.size(); ++i) probe[i] += jitter(rng);
        }
        Eigen::MatrixXd jac0;
        constraint_fn(probe, &jac0);
        const std::vector<bool> mask = independent_constraints(jac0);
        std::vector<int> keep;
        for (size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) keep.push_back(static_cast<int>(i));

        VectorFn masked = [constraint_fn, keep](const Eigen::VectorXd& x, Eigen::MatrixXd* jac) {
            Eigen::MatrixXd full_jac;
            const Eigen::VectorXd full = constraint_fn(x, jac ? &full_jac : nullptr);
            Eigen::VectorXd c(keep.size());
            if (jac) jac->resize(static_cast<Eigen::Index>(keep.size()), x.size());
            for (size_t i = 0; i < keep.size(); ++i) {
                c[static_cast<Eigen::Index>(i)] = full[keep[i]];
                if (jac) jac->row(static_cast<Eigen::Index>(i)) = full_jac.row(keep[i]);
            }
            return c;
        };

        ScalarFn cost_fn = [&cost](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
            return cost(x, g);
        };

        MinimizeOptions mopt = options.minimize;
        mopt.seed = options.seed;
        const double f0 = cost(x0, nullptr);
        MinimizeResult mres = minimize(cost_fn, masked, x0, mopt);

        auto mats = rp.upscale(mres.x);
        Eigen::MatrixXd a = mats[0];
        Eigen::MatrixXd p = mats[1];

        // Feasibility polish. Column sums of A are linear in the parameters:
        // project back exactly, then restore A P = I through a minimum-norm
        // correction of P (A is left untouched, so pressure stays exact).
        {
            Eigen::RowVectorXd cs = a.colwise().sum();
            for (int m = 0; m < fine_n; ++m) {
                // Distribute the defect over the nonzero template entries of
                // the column to stay inside the sparsity pattern.
                Eigen::VectorXd col = a.col(m);
                int nz = 0;
                for (int r = 0; r < coarse_n; ++r)
                    if (col[r] != 0.0) ++nz;
                if (nz == 0) continue;
                const double defect = (cs[m] - 1.0) / nz;
                for (int r = 0; r < coarse_n; ++r)
                    if (col[r] != 0.0) a(r, m) -= defect;
            }
            const Eigen::MatrixXd gram = a * a.transpose();
            const Eigen::MatrixXd corr = a.transpose() * gram.ldlt().solve(
                Eigen::MatrixXd::Identity(coarse_n, coarse_n) - a * p);
            p += corr;
            // P column sums move by O(tol); restore them exactly the same way.
            Eigen::RowVectorXd ps = p.colwise().sum();
            for (int k = 0; k < coarse_n; ++k) {
                Eigen::VectorXd col = p.col(k);
                int nz = 0;
                for (int r = 0; r < fine_n; ++r)
                    if (col[r] != 0.0) ++nz;
                if (nz == 0) continue;
                const double defect = (ps[k] - 1.0) / nz;
                for (int r = 0; r < fine_n; ++r)
                    if (col[r] != 0.0) p(r, k) -= defect;
            }
            // One more orthonormality pass after the pressure touch-up.
            const Eigen::MatrixXd gram2 = a * a.transpose();
            p += a.transpose() *
                 gram2.ldlt().solve(Eigen::MatrixXd::Identity(coarse_n, coarse_n) - a * p);
        }

        bank.levels[level].A = a;
        bank.levels[level].P = p;

        if (report) {
            WaveletOptLevelReport lr;
            lr.level = level;
            lr.cost_init = f0;
            lr.cost_final = cost(rp.downscale({a, p}), nullptr);
            lr.constraint_violation =
                (a * p - Eigen::MatrixXd::Identity(coarse_n, coarse_n)).cwiseAbs().maxCoeff();
            lr.raw_constraints = coarse_n * coarse_n + fine_n + coarse_n;
            lr.independent_constraints = static_cast<int>(keep.size());
            lr.free_parameters = rp.free_count;
            lr.cost_history = mres.report.cost_history;
            // The hard contract is the polished orthonormality residual and
            // a decreased objective; inner stationarity is best-effort.
            lr.converged = lr.constraint_violation < 1e-6 &&
                           lr.cost_final <= lr.cost_init + 1e-12;
            report->levels.push_back(std::move(lr));
        }
    }
    return bank;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> complete_wavelet_filters(const Eigen::MatrixXd& A,
                                                                     const Eigen::MatrixXd& P) {
    const int coarse_n = static_cast<int>(A.rows());
    const int fine_n = static_cast<int>(A.cols());
    const int odd_n = fine_n - coarse_n;
    if (P.rows() != fine_n || P.cols() != coarse_n)
        throw std::invalid_argument("complete_wavelet_filters: A/P shape mismatch");
    if ((A * P - Eigen::MatrixXd::Identity(coarse_n, coarse_n)).cwiseAbs().maxCoeff() > 1e-6)
        throw std::invalid_argument("complete_wavelet_filters: A P deviates from identity");

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() != coarse_n)
        throw std::runtime_error("complete_wavelet_filters: rank-deficient A");
    const Eigen::MatrixXd kernel = lu.kernel();  // fine_n x odd_n
    if (kernel.cols() != odd_n)
        throw std::runtime_error("complete_wavelet_filters: unexpected kernel dimension");
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(fine_n, odd_n);  // orthonormal ker A basis
    const Eigen::MatrixXd b =
        q.transpose() * (Eigen::MatrixXd::Identity(fine_n, fine_n) - P * A);
    return {b, q};
}

FilterBank optimized_filter_bank(const SubdivisionMesh& mesh, int max_level,
                                 const WaveletOptOptions& options, WaveletOptReport* report) {
    FilterBank bank = optimize_scaling_filters(mesh, max_level, options, report);
    for (int j = 1; j <= bank.max_level(); ++j) {
        auto [b, q] = complete_wavelet_filters(bank.level(j).A, bank.level(j).P);
        bank.level(j).B = std::move(b);
        bank.level(j).Q = std::move(q);
    }
    return bank;
}

}  // namespace sphwave
