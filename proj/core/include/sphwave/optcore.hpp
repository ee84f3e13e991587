#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/mesh.hpp"

namespace sphwave {

/// Differentiable scalar: returns the value and, when `grad` is non-null,
/// fills the gradient. Must be pure.
using ScalarFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Differentiable vector of equality constraints: returns c(x) and, when
/// `jac` is non-null, fills the (m x n) Jacobian.
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, Eigen::MatrixXd*)>;

struct MinimizeOptions {
    int max_outer = 60;
    int max_inner = 500;
    double tol_c = 1e-8;           // constraint infinity norm
    double tol_g = 1e-6;           // first-order stationarity of the augmented objective
    double penalty_init = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e14;
    int lbfgs_memory = 12;
    std::uint64_t seed = 0;        // recorded for reproducibility of caller-made inits
    int verbose = 0;
};

struct MinimizeReport {
    bool converged = false;
    double cost = 0.0;                     // objective alone, at the returned point
    double constraint_violation = 0.0;     // ||c||_inf
    double gradient_norm = 0.0;            // ||grad L||_inf at the returned point
    int outer_iterations = 0;
    long evaluations = 0;
    std::vector<double> cost_history;      // objective after each outer iteration
};

struct MinimizeResult {
    Eigen::VectorXd x;
    MinimizeReport report;
};

/// Smooth equality-constrained minimization: augmented-Lagrangian outer
/// loop around a limited-memory quasi-Newton inner solver. Deterministic
/// for fixed inputs and options. Throws on a non-finite cost at x0.
MinimizeResult minimize(const ScalarFn& cost, const VectorFn& equality_constraints,
                        const Eigen::VectorXd& x0, const MinimizeOptions& options = {});

/// Convenience overloads: unconstrained, and a list of scalar constraints.
MinimizeResult minimize(const ScalarFn& cost, const Eigen::VectorXd& x0,
                        const MinimizeOptions& options = {});
MinimizeResult minimize(const ScalarFn& cost, const std::vector<ScalarFn>& equality_constraints,
                        const Eigen::VectorXd& x0, const MinimizeOptions& options = {});

/// Compares the analytic gradient of `f` against central finite differences
/// at step `h`; returns max_i |g_i - g_fd_i| / max(1, ||g_fd||_inf).
double check_gradient(const ScalarFn& f, const Eigen::VectorXd& x, double h = 1e-6);

/// Selects a maximal linearly independent subset of Jacobian rows via
/// reduced row echelon form with partial pivoting. mask[i] is true for the
/// selected rows; duplicates keep their first occurrence.
std::vector<bool> independent_constraints(const Eigen::MatrixXd& jacobian,
                                          double pivot_tol = 1e-10);

/// Linear parametrization of a set of matrices by a free-parameter vector:
/// every matrix entry is either pinned to zero or coeff * x[param]. Distinct
/// entries may share a parameter (symmetry ties).
struct ReducedProblem {
    struct EntryRef {
        int matrix;
        int row;
        int col;
        double coeff;
    };

    int free_count = 0;
    std::vector<std::pair<int, int>> shapes;            // (rows, cols) per matrix
    std::vector<std::vector<EntryRef>> param_entries;   // per parameter

    std::vector<Eigen::MatrixXd> upscale(const Eigen::VectorXd& x) const;
    /// Least-squares inverse on the parametrized subspace: averages
    /// entry/coeff over each parameter's tied entries.
    Eigen::VectorXd downscale(const std::vector<Eigen::MatrixXd>& mats) const;
    /// Chain rule: gradient w.r.t. parameters from per-matrix gradients.
    Eigen::VectorXd pullback(const std::vector<Eigen::MatrixXd>& grads) const;
};

struct DofOptions {
    bool use_orbits = true;  // tie rows/columns across orbit members
    bool use_groups = true;  // one parameter per neighbour class, rest pinned to zero
};

/// Parametrizes the filter pair {A (coarse x fine), P (fine x coarse)} of
/// one mesh level from its symmetry orbits and the self/v/f/e neighbour
/// template. With both options off every entry is free.
ReducedProblem reduce_dofs(const SymmetryOrbits& orbits, const DofOptions& options = {});

}  // namespace sphwave
