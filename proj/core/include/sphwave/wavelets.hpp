#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/mesh.hpp"
#include "sphwave/sphere.hpp"

namespace sphwave {

enum class WaveletFamily { lazy, interpolating, sint, vbap, optimized, custom };

std::string family_name(WaveletFamily f);
WaveletFamily parse_family(const std::string& s);

/// Analysis/synthesis filters between mesh levels j-1 and j:
/// A (V_{j-1} x V_j), B ((V_j - V_{j-1}) x V_j), P (V_j x V_{j-1}),
/// Q (V_j x (V_j - V_{j-1})). B and Q may be absent (vbap family).
struct FilterLevel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd P;
    std::optional<Eigen::MatrixXd> B;
    std::optional<Eigen::MatrixXd> Q;
};

struct FilterBank {
    WaveletFamily family = WaveletFamily::custom;
    std::vector<FilterLevel> levels;  // index j in [1, max_level]; slot 0 unused

    int max_level() const { return static_cast<int>(levels.size()) - 1; }
    const FilterLevel& level(int j) const { return levels.at(j); }
    FilterLevel& level(int j) { return levels.at(j); }
};

/// Tri-linear (VBAP) gains of `source` over the containing triangle of the
/// mesh level, renormalized to sum 1; at most three nonzeros. Ties on
/// shared edges/vertices resolve to the lowest triangle index. Throws if no
/// triangle contains the source.
Eigen::VectorXd vbap_gains(const MeshLevel& level_mesh, const Direction& source);

/// Plain tri-linear interpolation of a source: the exact decomposition of
/// the unit direction over the containing triangle, without the sum
/// renormalization. This is the mesh representation the encoding chain
/// consumes; it reduces to a delta at the mesh vertices.
Eigen::VectorXd interpolate_source(const MeshLevel& level_mesh, const Direction& source);

FilterLevel lazy_filters(const SubdivisionMesh& mesh, int level);
FilterLevel interpolating_filters(const SubdivisionMesh& mesh, int level);
FilterLevel sint_filters(const SubdivisionMesh& mesh, int level);
FilterLevel vbap_filters(const SubdivisionMesh& mesh, int level);  // A, P only

/// Full bank for levels 1..mesh.max_level().
FilterBank make_filter_bank(const SubdivisionMesh& mesh, WaveletFamily family);

/// Primal lifting: A <- A + S B, Q <- Q - P S. Preserves biorthogonality.
FilterLevel lift(const FilterLevel& bank, const Eigen::MatrixXd& S);
/// Dual lifting: P <- P + Q S~, B <- B - S~ A. Preserves biorthogonality.
FilterLevel dual_lift(const FilterLevel& bank, const Eigen::MatrixXd& S_dual);

/// Max entrywise deviation over AP=I, BQ=I, AQ=0, BP=0 and PA+QB=I.
/// Skips the B/Q identities when those filters are absent.
double biorthogonality_error(const FilterLevel& fl);

/// {c^0, d^0 ... d^{l-1}}: the wavelet transform truncated to level l.
struct WaveletCoefficients {
    int truncation = 0;
    Eigen::VectorXd c0;
    std::vector<Eigen::VectorXd> details;  // details[j] = d^j, j < truncation

    int total_dimension() const;
};

/// Recursive analysis c^{j-1} = A^j c^j, d^{j-1} = B^j c^j, keeping details
/// below `to_level` and zeroing the rest. Throws when a kept detail would
/// need an absent B.
WaveletCoefficients forward_transform(const FilterBank& bank, const Eigen::VectorXd& fine,
                                      int to_level);

/// Recursive synthesis c^k = P^k c^{k-1} + Q^k d^{k-1} up to `to_level`;
/// truncated levels use the P term alone.
Eigen::VectorXd inverse_transform(const FilterBank& bank, const WaveletCoefficients& coeffs,
                                  int to_level);

/// Pure A-chain: c^{to} from data at `from_level` (details discarded).
Eigen::VectorXd downsample(const FilterBank& bank, const Eigen::VectorXd& data,
                           int from_level, int to_level);

/// Pure P-chain: truncated upsampling c~ from `from_level` to `to_level`.
Eigen::VectorXd upsample(const FilterBank& bank, const Eigen::VectorXd& coarse,
                         int from_level, int to_level);

/// Tri-linear interpolation of a point source to the finest mesh followed
/// by the A-chain down to `level`: the SWF encoding of one direction.
Eigen::VectorXd swf_encode(const SubdivisionMesh& mesh, const FilterBank& bank, int level,
                           const Direction& dir);

enum class MaterializeKind { scaling, wavelet, dual_scaling, dual_wavelet };

/// Finest-level representation of one basis function:
///   scaling      phi^j_k   = column k of P^n ... P^{j+1}
///   wavelet      psi^j_k   = column k of P^n ... P^{j+2} Q^{j+1}
///   dual scaling phit^j_k  = row k of A^{j+1} ... A^n
///   dual wavelet psit^j_k  = row k of B^{j+1} A^{j+2} ... A^n
Eigen::VectorXd materialize(const FilterBank& bank, int level, MaterializeKind kind, int index);

/// One CSV per level per matrix under `dir`, header
/// `# matrix=A level=2 rows=18 cols=66 family=sint`.
void save_filter_bank(const FilterBank& bank, const std::string& dir);
FilterBank load_filter_bank(const std::string& dir);

}  // namespace sphwave
