#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/decoding.hpp"
#include "sphwave/optcore.hpp"
#include "sphwave/sphere.hpp"
#include "sphwave/wavelets.hpp"

namespace sphwave {

/// Per-direction psychoacoustic observables of a decoding: pressure P,
/// energy E, radial/transverse velocity and intensity, and the
/// out-of-phase energy Eph. Directions where E vanishes are flagged
/// invalid and excluded from the intensity quantities.
struct Observables {
    std::vector<Direction> directions;
    Eigen::VectorXd pressure, energy;
    Eigen::VectorXd vr, vt, ir, it;
    Eigen::VectorXd eph;
    std::vector<bool> valid;
};

struct CostWeights {
    double alpha_p = 0.0;
    double alpha_vr = 0.0;
    double alpha_vt = 0.0;
    double alpha_e = 0.0;
    double alpha_ir = 0.0;
    double alpha_it = 0.0;
    double alpha_ph = 0.0;
    double beta = 0.25;                        // mask value outside covered regions
    std::optional<double> mask_distance;       // d~ in radians; default 1.5x mean NN distance
    std::string preset_name;

    void validate() const;  // all alphas >= 0, at least one > 0, beta in [0,1]
};

CostWeights smooth_preset();
CostWeights focus_preset();
CostWeights lf_preset();
CostWeights hf_preset();
CostWeights preset_by_name(const std::string& name);

/// Turns a direction into the channel vector of a linear spatial format:
/// spherical harmonics for Ambisonics, VBAP-interpolate + A-chain for SWF.
class FormatEncoder {
  public:
    explicit FormatEncoder(int ambisonics_order);
    FormatEncoder(std::shared_ptr<const SubdivisionMesh> mesh,
                  std::shared_ptr<const FilterBank> bank, int level);

    const FormatSpec& spec() const { return spec_; }
    int channels() const { return channels_; }

    Eigen::VectorXd encode(const Direction& dir) const;
    /// Channels x n matrix of encodings.
    Eigen::MatrixXd encode_all(const std::vector<Direction>& dirs) const;

    /// Directions the decoder optimization samples: the finest mesh
    /// vertices for SWF, 900 fibonacci points for Ambisonics.
    std::vector<Direction> default_directions() const;

    /// Left/right mirror in channel space: encode(mirror(d))[perm[c]] =
    /// sign[c] * encode(d)[c].
    void mirror_transform(std::vector<int>& perm, Eigen::VectorXd& sign) const;

    const SubdivisionMesh* mesh() const { return mesh_.get(); }
    const FilterBank* bank() const { return bank_.get(); }

  private:
    FormatSpec spec_;
    int channels_ = 0;
    std::shared_ptr<const SubdivisionMesh> mesh_;
    std::shared_ptr<const FilterBank> bank_;
};

/// s = D * encode(dir).
Eigen::VectorXd speaker_signals(const DecodingMatrix& d, const FormatEncoder& encoder,
                                const Direction& dir);

Observables observables(const DecodingMatrix& d, const FormatEncoder& encoder,
                        const SpeakerLayout& layout, const std::vector<Direction>& dirs);

/// w_j = 1 where some speaker is closer than the mask distance, beta
/// elsewhere.
Eigen::VectorXd mask_weights(const SpeakerLayout& layout, const std::vector<Direction>& dirs,
                             const CostWeights& weights);

/// The IDHOA objective f = sum_T alpha_T C_T over the weighted mean-square
/// terms, with optional gradient w.r.t. the gain matrix. `encodings` is
/// channels x n, one column per direction.
double idhoa_cost(const Eigen::MatrixXd& gains, const Eigen::MatrixXd& encodings,
                  const Eigen::Matrix3Xd& speaker_units, const std::vector<Direction>& dirs,
                  const Eigen::VectorXd& mask, const CostWeights& weights,
                  Eigen::MatrixXd* grad = nullptr);

struct DecoderOptOptions {
    bool lr_pairing = true;
    double pairing_tolerance = 1.0 * 3.14159265358979323846 / 180.0;  // 1 degree
    std::uint64_t seed = 1234;
    std::optional<std::vector<Direction>> directions;  // override sampling directions
    MinimizeOptions minimize;
};

struct DecoderOptReport {
    double f_init = 0.0;
    double f_final = 0.0;
    bool converged = true;
    MinimizeReport minimize;
};

/// Numerical decoder optimization for any linear format. Ambisonics starts
/// from the better of the projection/pseudoinverse decoders (degree-weighted
/// per band); SWF starts from a seeded random matrix.
DecodingMatrix optimize_decoder(const SpeakerLayout& layout, const FormatEncoder& encoder,
                                const CostWeights& weights, Band band = Band::universal,
                                const DecoderOptOptions& options = {},
                                DecoderOptReport* report = nullptr);

/// Two optimize_decoder runs: pressure/velocity-weighted for LF,
/// energy/intensity-weighted for HF.
std::pair<DecodingMatrix, DecodingMatrix> dual_band_decoders(
    const SpeakerLayout& layout, const FormatEncoder& encoder,
    const CostWeights& lf = lf_preset(), const CostWeights& hf = hf_preset(),
    const DecoderOptOptions& options = {}, DecoderOptReport* lf_report = nullptr,
    DecoderOptReport* hf_report = nullptr);

/// Mirror pairs (i, j) of the layout under azimuth negation within `tol`;
/// i == j marks speakers on the mirror plane. Unpairable speakers are
/// absent.
std::vector<std::pair<int, int>> mirror_pairs(const SpeakerLayout& layout, double tol);

}  // namespace sphwave
