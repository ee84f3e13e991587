#include "sphwave/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace sphwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDbFloor = -120.0;

double to_db(double energy) {
    if (energy <= 1e-12) return kDbFloor;
    return 10.0 * std::log10(energy);
}

double asin_deg(double x) { return std::asin(std::clamp(x, 0.0, 1.0)) * 180.0 / kPi; }

}  // namespace

Pipeline make_decoder_pipeline(const SpeakerLayout& layout, const FormatEncoder& encoder,
                               const DecodingMatrix& d) {
    if (d.gains.rows() != layout.size() || d.gains.cols() != encoder.channels())
        throw std::invalid_argument("make_decoder_pipeline: shape mismatch");
    Pipeline p;
    for (const auto& s : layout.speakers) p.speaker_names.push_back(s.name);
    p.speaker_units = layout.units();
    const Eigen::MatrixXd gains = d.gains;
    p.signals = [gains, encoder](const Direction& dir) { return gains * encoder.encode(dir); };
    return p;
}

Pipeline make_mesh_pipeline(const SubdivisionMesh& mesh, const FilterBank& bank, int level,
                            std::optional<int> upsample_to) {
    const int out_level = upsample_to.value_or(level);
    if (out_level < level || out_level > mesh.max_level())
        throw std::invalid_argument("make_mesh_pipeline: bad upsample level");
    Pipeline p;
    const MeshLevel& ml = mesh.levels[out_level];
    p.speaker_units.resize(3, static_cast<Eigen::Index>(ml.vertices.size()));
    for (size_t i = 0; i < ml.vertices.size(); ++i) {
        p.speaker_units.col(static_cast<Eigen::Index>(i)) = ml.vertices[i];
        p.speaker_names.push_back("m" + std::to_string(i));
    }
    p.signals = [&mesh, &bank, level, out_level](const Direction& dir) {
        Eigen::VectorXd c = swf_encode(mesh, bank, level, dir);
        if (out_level > level) c = upsample(bank, c, level, out_level);
        return c;
    };
    return p;
}

SweepReport sweep(const Pipeline& pipeline, SweepPlane plane, int n) {
    if (n < 4) throw std::invalid_argument("sweep: need at least 4 directions");
    const auto dirs = sample_directions(
        n, plane == SweepPlane::horizontal ? SampleScheme::horizontal_ring
                                           : SampleScheme::vertical_ring);
    SweepReport report;
    report.plane = plane;
    report.speaker_names = pipeline.speaker_names;
    report.rows.reserve(n);
    for (int j = 0; j < n; ++j) {
        const Direction& d = dirs[j];
        SweepRow row;
        row.angle_deg = 360.0 * j / n;
        row.gains = pipeline.signals(d);
        const Eigen::Vector3d dhat = d.unit();
        const Eigen::VectorXd s2 = row.gains.array().square();
        const double energy = s2.sum();
        row.pressure = row.gains.sum();
        row.energy_db = to_db(energy);
        const Eigen::Vector3d v = pipeline.speaker_units * row.gains;
        row.vr = v.dot(dhat);
        row.vt = v.cross(dhat).norm();
        row.vt_deg = asin_deg(row.vt);
        if (energy > 0) {
            const Eigen::Vector3d intensity = (pipeline.speaker_units * s2) / energy;
            row.ir = intensity.dot(dhat);
            row.it = intensity.cross(dhat).norm();
            row.it_deg = asin_deg(row.it);
        } else {
            row.valid = false;
            row.ir = row.it = row.it_deg = std::numeric_limits<double>::quiet_NaN();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::vector<SummaryRow> summarize(const SweepReport& report) {
    auto stat = [&report](const std::string& name, auto getter) {
        SummaryRow row;
        row.observable = name;
        double sum = 0.0;
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        int count = 0;
        for (const auto& r : report.rows) {
            if (!r.valid) continue;
            const double v = getter(r);
            sum += v;
            mx = std::max(mx, v);
            mn = std::min(mn, v);
            ++count;
        }
        row.avg = count ? sum / count : 0.0;
        row.max = mx;
        row.min = mn;
        return row;
    };
    std::vector<SummaryRow> rows;
    rows.push_back(stat("E_dB", [](const SweepRow& r) { return r.energy_db; }));
    rows.push_back(stat("IR", [](const SweepRow& r) { return r.ir; }));
    rows.push_back(stat("IT", [](const SweepRow& r) { return r.it; }));
    rows.push_back(stat("IT_deg", [](const SweepRow& r) { return r.it_deg; }));
    rows.push_back(stat("vR", [](const SweepRow& r) { return r.vr; }));
    rows.push_back(stat("vT", [](const SweepRow& r) { return r.vt; }));
    rows.push_back(stat("vT_deg", [](const SweepRow& r) { return r.vt_deg; }));
    SummaryRow delta;
    delta.observable = "delta_E_dB";
    delta.avg = delta.max = delta.min = rows[0].max - rows[0].min;
    rows.push_back(delta);
    return rows;
}

Eigen::VectorXd crosstalk(const DecodingMatrix& d, const FormatEncoder& encoder,
                          const SpeakerLayout& layout) {
    const int n = layout.size();
    Eigen::VectorXd out(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd s = speaker_signals(d, encoder, layout.speakers[k].dir);
        const double target = s[k] * s[k];
        const double others = s.squaredNorm() - target;
        if (target <= 0) {
            out[k] = std::numeric_limits<double>::infinity();
        } else if (others <= 0) {
            out[k] = -std::numeric_limits<double>::infinity();
        } else {
            out[k] = 10.0 * std::log10(others / target);
        }
    }
    return out;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_sweep_csv(const SweepReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_sweep_csv: cannot write " + path);
    out << "angle_deg,P,E_dB,vR,vT,vT_deg,IR,IT,IT_deg";
    for (const auto& n : report.speaker_names) out << ",g_" << n;
    out << "\n";
    for (const auto& r : report.rows) {
        out << fmt(r.angle_deg) << "," << fmt(r.pressure) << "," << fmt(r.energy_db) << ","
            << fmt(r.vr) << "," << fmt(r.vt) << "," << fmt(r.vt_deg) << "," << fmt(r.ir) << ","
            << fmt(r.it) << "," << fmt(r.it_deg);
        for (Eigen::Index i = 0; i < r.gains.size(); ++i) out << "," << fmt(r.gains[i]);
        out << "\n";
    }
}

void save_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_summary_csv: cannot write " + path);
    out << "observable,avg,max,min\n";
    for (const auto& r : summary)
        out << r.observable << "," << fmt(r.avg) << "," << fmt(r.max) << "," << fmt(r.min) << "\n";
}

void save_crosstalk_csv(const SpeakerLayout& layout, const Eigen::VectorXd& db,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_crosstalk_csv: cannot write " + path);
    out << "speaker,crosstalk_dB\n";
    for (int i = 0; i < layout.size(); ++i)
        out << layout.speakers[i].name << "," << fmt(db[i]) << "\n";
}

}  // namespace sphwave
