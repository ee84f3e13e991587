#include "sphwave/decoderopt.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sphwave {

namespace {

constexpr double kPi = std::numbers::pi;

Direction mirrored(const Direction& d) { return Direction(-d.azimuth, d.elevation); }

}  // namespace

void CostWeights::validate() const {
    const double alphas[] = {alpha_p, alpha_vr, alpha_vt, alpha_e, alpha_ir, alpha_it, alpha_ph};
    double total = 0.0;
    for (double a : alphas) {
        if (a < 0 || !std::isfinite(a)) throw std::invalid_argument("CostWeights: bad alpha");
        total += a;
    }
    if (total <= 0) throw std::invalid_argument("CostWeights: at least one alpha must be > 0");
    if (beta < 0 || beta > 1) throw std::invalid_argument("CostWeights: beta must be in [0,1]");
}

CostWeights smooth_preset() {
    // Energy flatness carries the most weight: the smooth decoder trades a
    // little directionality for a ripple-free pan.
    CostWeights w;
    w.alpha_e = 4.0;
    w.alpha_ir = 1.0;
    w.alpha_it = 0.5;
    w.alpha_ph = 2.0;
    w.preset_name = "smooth";
    return w;
}

CostWeights focus_preset() {
    CostWeights w;
    w.alpha_e = 0.5;
    w.alpha_ir = 4.0;
    w.alpha_it = 0.5;
    w.alpha_ph = 2.0;
    w.preset_name = "focus";
    return w;
}

CostWeights lf_preset() {
    CostWeights w;
    w.alpha_p = 1.0;
    w.alpha_vr = 1.0;
    w.alpha_vt = 0.5;
    w.preset_name = "lf";
    return w;
}

CostWeights hf_preset() {
    CostWeights w = smooth_preset();
    w.preset_name = "hf";
    return w;
}

CostWeights preset_by_name(const std::string& name) {
    if (name == "smooth") return smooth_preset();
    if (name == "focus") return focus_preset();
    if (name == "lf") return lf_preset();
    if (name == "hf") return hf_preset();
    throw std::invalid_argument("unknown preset '" + name + "'");
}

FormatEncoder::FormatEncoder(int ambisonics_order) {
    if (ambisonics_order < 0) throw std::invalid_argument("FormatEncoder: order must be >= 0");
    spec_ = FormatSpec::ambisonics(ambisonics_order);
    channels_ = (ambisonics_order + 1) * (ambisonics_order + 1);
}

FormatEncoder::FormatEncoder(std::shared_ptr<const SubdivisionMesh> mesh,
                             std::shared_ptr<const FilterBank> bank, int level)
    : mesh_(std::move(mesh)), bank_(std::move(bank)) {
    if (!mesh_ || !bank_) throw std::invalid_argument("FormatEncoder: null mesh/bank");
    if (level < 0 || level > mesh_->max_level())
        throw std::invalid_argument("FormatEncoder: level out of range");
    spec_ = FormatSpec::swf(family_name(bank_->family), level);
    channels_ = mesh_->vertex_count(level);
}

Eigen::VectorXd FormatEncoder::encode(const Direction& dir) const {
    if (spec_.kind == FormatSpec::Kind::ambisonics) return sh_vector(spec_.order, dir);
    return swf_encode(*mesh_, *bank_, spec_.level, dir);
}

Eigen::MatrixXd FormatEncoder::encode_all(const std::vector<Direction>& dirs) const {
    Eigen::MatrixXd g(channels_, static_cast<Eigen::Index>(dirs.size()));
    for (size_t j = 0; j < dirs.size(); ++j) g.col(static_cast<Eigen::Index>(j)) = encode(dirs[j]);
    return g;
}

std::vector<Direction> FormatEncoder::default_directions() const {
    if (spec_.kind == FormatSpec::Kind::ambisonics)
        return sample_directions(900, SampleScheme::fibonacci);
    const MeshLevel& finest = mesh_->levels[mesh_->max_level()];
    std::vector<Direction> dirs;
    dirs.reserve(finest.vertices.size());
    for (const auto& v : finest.vertices) dirs.push_back(Direction::from_unit(v));
    return dirs;
}

void FormatEncoder::mirror_transform(std::vector<int>& perm, Eigen::VectorXd& sign) const {
    perm.resize(channels_);
    sign = Eigen::VectorXd::Ones(channels_);
    if (spec_.kind == FormatSpec::Kind::ambisonics) {
        // Mirroring negates azimuth; sin(m az) channels flip sign.
        for (int c = 0; c < channels_; ++c) perm[c] = c;
        for (int l = 0; l <= spec_.order; ++l)
            for (int m = -l; m < 0; ++m) sign[l * l + l + m] = -1.0;
        return;
    }
    // SWF: the mirror is the octahedral element y -> -y, a vertex permutation.
    const MeshLevel& ml = mesh_->levels[spec_.level];
    for (int c = 0; c < channels_; ++c) {
        Eigen::Vector3d m = ml.vertices[c];
        m.y() = -m.y();
        int image = -1;
        for (int k = 0; k < channels_; ++k) {
            if ((ml.vertices[k] - m).norm() < 1e-9) {
                image = k;
                break;
            }
        }
        if (image < 0) throw std::logic_error("mirror_transform: mesh not mirror symmetric");
        perm[c] = image;
    }
}

Eigen::VectorXd speaker_signals(const DecodingMatrix& d, const FormatEncoder& encoder,
                                const Direction& dir) {
    if (d.gains.cols() != encoder.channels())
        throw std::invalid_argument("speaker_signals: format/channel mismatch");
    return d.gains * encoder.encode(dir);
}

Observables observables(const DecodingMatrix& d, const FormatEncoder& encoder,
                        const SpeakerLayout& layout, const std::vector<Direction>& dirs) {
    const int n = static_cast<int>(dirs.size());
    const Eigen::Matrix3Xd units = layout.units();
    Observables obs;
    obs.directions = dirs;
    obs.pressure.resize(n);
    obs.energy.resize(n);
    obs.vr.resize(n);
    obs.vt.resize(n);
    obs.ir.resize(n);
    obs.it.resize(n);
    obs.eph.resize(n);
    obs.valid.assign(n, true);
    for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd s = speaker_signals(d, encoder, dirs[j]);
        const Eigen::Vector3d dhat = dirs[j].unit();
        const Eigen::VectorXd s2 = s.array().square();
        const double energy = s2.sum();
        obs.pressure[j] = s.sum();
        obs.energy[j] = energy;
        const Eigen::Vector3d velocity = units * s;
        obs.vr[j] = velocity.dot(dhat);
        obs.vt[j] = velocity.cross(dhat).norm();
        obs.eph[j] = s.cwiseMin(0.0).squaredNorm();
        if (energy <= 0) {
            obs.valid[j] = false;
            obs.ir[j] = obs.it[j] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const Eigen::Vector3d intensity = (units * s2) / energy;
        obs.ir[j] = intensity.dot(dhat);
        obs.it[j] = intensity.cross(dhat).norm();
    }
    return obs;
}

Eigen::VectorXd mask_weights(const SpeakerLayout& layout, const std::vector<Direction>& dirs,
                             const CostWeights& weights) {
    const double d_tilde =
        weights.mask_distance.value_or(1.5 * layout.mean_nearest_neighbor_distance());
    Eigen::VectorXd w(static_cast<Eigen::Index>(dirs.size()));
    for (size_t j = 0; j < dirs.size(); ++j) {
        double nearest = kPi;
        for (const auto& s : layout.speakers)
            nearest = std::min(nearest, haversine(s.dir, dirs[j]));
        w[static_cast<Eigen::Index>(j)] = nearest < d_tilde ? 1.0 : weights.beta;
    }
    return w;
}

double idhoa_cost(const Eigen::MatrixXd& gains, const Eigen::MatrixXd& encodings,
                  const Eigen::Matrix3Xd& speaker_units, const std::vector<Direction>& dirs,
                  const Eigen::VectorXd& mask, const CostWeights& weights, Eigen::MatrixXd* grad) {
    const int n = static_cast<int>(dirs.size());
    const int ns = static_cast<int>(gains.rows());
    if (encodings.cols() != n || mask.size() != n || speaker_units.cols() != ns)
        throw std::invalid_argument("idhoa_cost: shape mismatch");

    const Eigen::MatrixXd signals = gains * encodings;  // speakers x n
    double cost = 0.0;
    Eigen::MatrixXd dsig;
    if (grad) dsig = Eigen::MatrixXd::Zero(ns, n);

    for (int j = 0; j < n; ++j) {
        const double w = mask[j] / n;
        const Eigen::VectorXd s = signals.col(j);
        const Eigen::Vector3d dhat = dirs[j].unit();
        const Eigen::VectorXd s2 = s.array().square();
        const Eigen::VectorXd radial = speaker_units.transpose() * dhat;  // u_i . d
        const double energy = s2.sum();

        // Pressure and velocity (coherent-sum, linear in s).
        const double pressure = s.sum();
        const double vr = s.dot(radial);
        const Eigen::Vector3d v = speaker_units * s;
        const Eigen::Vector3d v_cross = v.cross(dhat);

        cost += weights.alpha_p * w * (1.0 - pressure) * (1.0 - pressure);
        cost += weights.alpha_vr * w * (1.0 - vr) * (1.0 - vr);
        cost += weights.alpha_vt * w * v_cross.squaredNorm();

        // Energy, intensity (incoherent-sum, quadratic in s) and phase term.
        const Eigen::Vector3d q = speaker_units * s2;  // E * I
        const Eigen::VectorXd s_neg = s.cwiseMin(0.0);
        const double eph = s_neg.squaredNorm();
        cost += weights.alpha_e * w * (1.0 - energy) * (1.0 - energy);
        cost += weights.alpha_ph * w * eph * eph;

        double ir = 0.0;
        Eigen::Vector3d q_cross = Eigen::Vector3d::Zero();
        if (energy > 0) {
            ir = q.dot(dhat) / energy;
            q_cross = q.cross(dhat);
            const double it2 = q_cross.squaredNorm() / (energy * energy);
            cost += weights.alpha_ir * w * (1.0 - ir) * (1.0 - ir);
            cost += weights.alpha_it * w * it2;
        }

        if (!grad) continue;
        Eigen::VectorXd ds = Eigen::VectorXd::Zero(ns);
        ds.array() += weights.alpha_p * w * 2.0 * (pressure - 1.0);
        ds += weights.alpha_vr * w * 2.0 * (vr - 1.0) * radial;
        ds += weights.alpha_vt * w * 2.0 * (speaker_units.transpose() * v_cross.cross(dhat) * -1.0);
        ds += weights.alpha_e * w * 2.0 * (energy - 1.0) * 2.0 * s;
        ds += weights.alpha_ph * w * 2.0 * eph * 2.0 * s_neg;
        if (energy > 0) {
            // d(ir)/ds_i = 2 s_i ((u_i.d) - ir) / E
            const Eigen::VectorXd dir_ds =
                2.0 / energy * s.cwiseProduct(radial - Eigen::VectorXd::Constant(ns, ir));
            ds += weights.alpha_ir * w * 2.0 * (ir - 1.0) * dir_ds;
            // d(it^2)/ds_i = 4 s_i [ (q x d).(u_i x d) / E^2 - |q x d|^2 / E^3 ]
            const Eigen::VectorXd qc_dot =
                speaker_units.transpose() * dhat.cross(q_cross);  // (u_i x d).(q x d)
            Eigen::VectorXd dit = 4.0 * s.cwiseProduct(qc_dot) / (energy * energy);
            dit -= 4.0 * q_cross.squaredNorm() / (energy * energy * energy) * s;
            ds += weights.alpha_it * w * dit;
        }
        dsig.col(j) = ds;
    }

    if (grad) *grad = dsig * encodings.transpose();
    return cost;
}

std::vector<std::pair<int, int>> mirror_pairs(const SpeakerLayout& layout, double tol) {
    std::vector<std::pair<int, int>> pairs;
    std::vector<bool> used(layout.speakers.size(), false);
    for (size_t i = 0; i < layout.speakers.size(); ++i) {
        if (used[i]) continue;
        const Direction m = mirrored(layout.speakers[i].dir);
        int best = -1;
        double best_d = tol;
        for (size_t j = 0; j < layout.speakers.size(); ++j) {
            if (used[j] && j != i) continue;
            const double d = haversine(m, layout.speakers[j].dir);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        if (best < 0) continue;
        used[i] = true;
        used[best] = true;
        pairs.emplace_back(static_cast<int>(i), best);
    }
    return pairs;
}

namespace {

/// Parametrization of the gain matrix honoring left/right pairing:
/// paired rows are channel-transformed copies, on-plane rows are
/// constrained to their own mirror image.
ReducedProblem decoder_parametrization(int speakers, int channels,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const std::vector<int>& perm, const Eigen::VectorXd& sign) {
    ReducedProblem rp;
    rp.shapes = {{speakers, channels}};
    std::vector<bool> covered(speakers, false);

    auto add_param = [&rp]() {
        rp.param_entries.emplace_back();
        return rp.free_count++;
    };

    for (const auto& [i, j] : pairs) {
        covered[i] = true;
        covered[j] = true;
        if (i != j) {
            for (int c = 0; c < channels; ++c) {
                const int p = add_param();
                rp.param_entries[p].push_back({0, i, c, 1.0});
                rp.param_entries[p].push_back({0, j, perm[c], sign[c]});
            }
        } else {
            // On-plane speaker: D[i, perm(c)] * sign(c) = D[i, c].
            std::vector<bool> done(channels, false);
            for (int c = 0; c < channels; ++c) {
                if (done[c]) continue;
                const int cm = perm[c];
                if (cm == c) {
                    done[c] = true;
                    if (sign[c] < 0) continue;  // pinned to zero
                    rp.param_entries[add_param()].push_back({0, i, c, 1.0});
                } else {
                    done[c] = done[cm] = true;
                    const int p = add_param();
                    rp.param_entries[p].push_back({0, i, c, 1.0});
                    rp.param_entries[p].push_back({0, i, cm, sign[c]});
                }
            }
        }
    }
    for (int i = 0; i < speakers; ++i) {
        if (covered[i]) continue;
        for (int c = 0; c < channels; ++c) rp.param_entries[add_param()].push_back({0, i, c, 1.0});
    }
    return rp;
}

}  // namespace

DecodingMatrix optimize_decoder(const SpeakerLayout& layout, const FormatEncoder& encoder,
                                const CostWeights& weights, Band band,
                                const DecoderOptOptions& options, DecoderOptReport* report) {
    layout.validate();
    weights.validate();
    const int ns = layout.size();
    const int nc = encoder.channels();
    if (encoder.spec().kind == FormatSpec::Kind::swf) {
        const int sampling = encoder.mesh()->vertex_count(encoder.mesh()->max_level());
        if (ns >= sampling)
            throw std::invalid_argument(
                "optimize_decoder: SWF needs more sampling points on the finest mesh than "
                "speakers");
    }

    const std::vector<Direction> dirs =
        options.directions ? *options.directions : encoder.default_directions();
    const Eigen::MatrixXd encodings = encoder.encode_all(dirs);
    const Eigen::Matrix3Xd units = layout.units();
    const Eigen::VectorXd mask = mask_weights(layout, dirs, weights);

    // Initial matrix.
    Eigen::MatrixXd d_init(ns, nc);
    if (encoder.spec().kind == FormatSpec::Kind::ambisonics) {
        const int order = encoder.spec().order;
        DecodingMatrix proj = decode_analytic(layout, order, DecodeMode::projection);
        DecodingMatrix pinv = decode_analytic(layout, order, DecodeMode::pseudoinverse, 1e-9);
        if (band == Band::hf) {
            proj = apply_degree_weights(proj, WeightScheme::max_re);
            pinv = apply_degree_weights(pinv, WeightScheme::max_re);
        }
        const double f_proj =
            idhoa_cost(proj.gains, encodings, units, dirs, mask, weights, nullptr);
        const double f_pinv =
            idhoa_cost(pinv.gains, encodings, units, dirs, mask, weights, nullptr);
        d_init = f_proj <= f_pinv ? proj.gains : pinv.gains;
    } else {
        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> uni(0.0, 2.0 / nc);
        d_init.resize(ns, nc);
        for (int r = 0; r < ns; ++r)
            for (int c = 0; c < nc; ++c) d_init(r, c) = uni(rng);
    }

    // Parametrization (with or without the left/right tying).
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> perm;
    Eigen::VectorXd sign;
    if (options.lr_pairing) {
        pairs = mirror_pairs(layout, options.pairing_tolerance);
        encoder.mirror_transform(perm, sign);
    }
    const ReducedProblem rp = options.lr_pairing
                                  ? decoder_parametrization(ns, nc, pairs, perm, sign)
                                  : decoder_parametrization(ns, nc, {}, {}, Eigen::VectorXd());

    ScalarFn cost = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        const Eigen::MatrixXd d = rp.upscale(x)[0];
        Eigen::MatrixXd dgrad;
        const double f = idhoa_cost(d, encodings, units, dirs, mask, weights,
                                    grad ? &dgrad : nullptr);
        if (grad) *grad = rp.pullback({dgrad});
        return f;
    };

    const Eigen::VectorXd x0 = rp.downscale({d_init});
    const double f_init = cost(x0, nullptr);
    MinimizeOptions mopt = options.minimize;
    mopt.seed = options.seed;
    MinimizeResult mres = minimize(cost, x0, mopt);
    const double f_final = mres.report.cost;

    DecodingMatrix out;
    out.gains = rp.upscale(f_final <= f_init ? mres.x : x0)[0];
    out.format = encoder.spec();
    out.layout_name = layout.name;
    out.band = band;
    if (report) {
        report->f_init = f_init;
        report->f_final = std::min(f_final, f_init);
        report->converged = mres.report.converged;
        report->minimize = mres.report;
    }
    return out;
}

std::pair<DecodingMatrix, DecodingMatrix> dual_band_decoders(
    const SpeakerLayout& layout, const FormatEncoder& encoder, const CostWeights& lf,
    const CostWeights& hf, const DecoderOptOptions& options, DecoderOptReport* lf_report,
    DecoderOptReport* hf_report) {
    DecodingMatrix d_lf = optimize_decoder(layout, encoder, lf, Band::lf, options, lf_report);
    DecodingMatrix d_hf = optimize_decoder(layout, encoder, hf, Band::hf, options, hf_report);
    return {std::move(d_lf), std::move(d_hf)};
}

}  // namespace sphwave
