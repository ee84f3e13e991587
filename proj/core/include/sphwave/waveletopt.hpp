#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/mesh.hpp"
#include "sphwave/optcore.hpp"
#include "sphwave/wavelets.hpp"

namespace sphwave {

/// Low-pass shape target for P^j A^j: square over the level-j vertices,
/// diagonal gamma per column, gamma/2 on the designated neighbours, columns
/// summing to one.
struct LambdaTarget {
    int level = 0;
    Eigen::MatrixXd matrix;
};

/// Odd columns: neighbours {v1, v2, f1, f2} with gamma = 1/3. Even columns:
/// the d incident odd vertices with gamma = 2 / (2 + d).
LambdaTarget build_lambda(const SubdivisionMesh& mesh, int level);

struct WaveletOptWeights {
    double alpha_lambda = 1.0;
    double alpha_p1 = 10.0;
    double alpha_p2 = 10.0;
    double alpha_neg = 100.0;
};

struct WaveletOptOptions {
    WaveletOptWeights weights;
    bool random_init = false;     // default initialization is the SINT filters
    std::uint64_t seed = 1234;
    MinimizeOptions minimize = [] {
        MinimizeOptions m;
        m.tol_c = 1e-10;
        m.tol_g = 1e-7;
        m.max_inner = 800;
        return m;
    }();
};

struct WaveletOptLevelReport {
    int level = 0;
    double cost_init = 0.0;
    double cost_final = 0.0;
    double constraint_violation = 0.0;   // ||A P - I||_inf after polish
    int raw_constraints = 0;
    int independent_constraints = 0;
    int free_parameters = 0;
    std::vector<double> cost_history;
    bool converged = true;
};

struct WaveletOptReport {
    std::vector<WaveletOptLevelReport> levels;
};

/// Stage 1: level-by-level minimization of
/// alpha_L C_Lambda + alpha_p1 C_p1 + alpha_p2 C_p2 + alpha_neg C_neg
/// over the symmetry-reduced A/P entries, subject to A P = I and unit
/// column sums of both filters (pressure through analysis and synthesis),
/// with coarser levels frozen. Returns a bank with A/P only.
FilterBank optimize_scaling_filters(const SubdivisionMesh& mesh, int max_level,
                                    const WaveletOptOptions& options = {},
                                    WaveletOptReport* report = nullptr);

/// Stage 2: B, Q from A, P alone. Q is an orthonormal basis of ker A, and
/// B = (Q^T Q)^-1 Q^T (I - P A). Requires A P = I within 1e-6; throws on a
/// rank-deficient A.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> complete_wavelet_filters(const Eigen::MatrixXd& A,
                                                                     const Eigen::MatrixXd& P);

/// Stage 1 followed by stage 2 at every level: the full optimized family.
FilterBank optimized_filter_bank(const SubdivisionMesh& mesh, int max_level,
                                 const WaveletOptOptions& options = {},
                                 WaveletOptReport* report = nullptr);

}  // namespace sphwave
