#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/decoderopt.hpp"

namespace sphwave {

enum class SweepPlane { horizontal, vertical };

/// A renderable chain: something that turns a direction into per-speaker
/// gains, plus the positions those gains feed. Without a decoder the mesh
/// vertices act as virtual speakers.
struct Pipeline {
    std::vector<std::string> speaker_names;
    Eigen::Matrix3Xd speaker_units;
    std::function<Eigen::VectorXd(const Direction&)> signals;
};

Pipeline make_decoder_pipeline(const SpeakerLayout& layout, const FormatEncoder& encoder,
                               const DecodingMatrix& d);

/// Virtual-speaker pipeline: encode to the finest mesh, A-chain to `level`,
/// optionally P-chain back up to `upsample_to` (the truncated c~). The
/// pipeline borrows mesh and bank; keep both alive while it is used.
Pipeline make_mesh_pipeline(const SubdivisionMesh& mesh, const FilterBank& bank, int level,
                            std::optional<int> upsample_to = std::nullopt);

struct SweepRow {
    double angle_deg = 0.0;
    Eigen::VectorXd gains;
    double pressure = 0.0;
    double energy_db = 0.0;
    double vr = 0.0, vt = 0.0, vt_deg = 0.0;
    double ir = 0.0, it = 0.0, it_deg = 0.0;
    bool valid = true;
};

struct SweepReport {
    SweepPlane plane = SweepPlane::horizontal;
    std::vector<std::string> speaker_names;
    std::vector<SweepRow> rows;
};

/// Observables along a ring of n directions in the given plane.
SweepReport sweep(const Pipeline& pipeline, SweepPlane plane, int n);

struct SummaryRow {
    std::string observable;
    double avg = 0.0, max = 0.0, min = 0.0;
};

/// avg^max_min per observable (E dB, IR, IT, IT deg, vR, vT, vT deg) plus a
/// delta_e row (max - min of E in dB).
std::vector<SummaryRow> summarize(const SweepReport& report);

/// Energy emitted by the other speakers relative to speaker k, in dB, for a
/// source panned exactly at speaker k. Zero target energy reports +inf,
/// zero leakage -inf.
Eigen::VectorXd crosstalk(const DecodingMatrix& d, const FormatEncoder& encoder,
                          const SpeakerLayout& layout);

void save_sweep_csv(const SweepReport& report, const std::string& path);
void save_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path);
void save_crosstalk_csv(const SpeakerLayout& layout, const Eigen::VectorXd& db,
                        const std::string& path);

}  // namespace sphwave
