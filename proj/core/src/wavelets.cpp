#include "sphwave/wavelets.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sphwave {

namespace {

struct LevelShape {
    int coarse = 0;  // V_{j-1}
    int fine = 0;    // V_j
    int odd = 0;     // V_j - V_{j-1}
};

LevelShape shape_of(const SubdivisionMesh& mesh, int level) {
    if (level < 1 || level > mesh.max_level())
        throw std::invalid_argument("filter level out of range");
    LevelShape s;
    s.coarse = mesh.vertex_count(level - 1);
    s.fine = mesh.vertex_count(level);
    s.odd = s.fine - s.coarse;
    return s;
}

/// Scaling-function integrals of the interpolating family at `level`,
/// seeded by Voronoi areas at the finest level and recursed down through
/// I_{j-1} = P_int^j^T I_j.
Eigen::VectorXd interpolating_integrals(const SubdivisionMesh& mesh, int level) {
    Eigen::VectorXd integrals = vertex_areas(mesh, mesh.max_level());
    for (int j = mesh.max_level(); j > level; --j) {
        const LevelShape s = shape_of(mesh, j);
        const NeighborSets ns = neighbor_sets(mesh, j);
        Eigen::VectorXd coarse = integrals.head(s.coarse);
        for (int o = 0; o < s.odd; ++o) {
            coarse[ns.v[o][0]] += 0.5 * integrals[s.coarse + o];
            coarse[ns.v[o][1]] += 0.5 * integrals[s.coarse + o];
        }
        integrals = coarse;
    }
    return integrals;
}

}  // namespace

std::string family_name(WaveletFamily f) {
    switch (f) {
        case WaveletFamily::lazy: return "lazy";
        case WaveletFamily::interpolating: return "interpolating";
        case WaveletFamily::sint: return "sint";
        case WaveletFamily::vbap: return "vbap";
        case WaveletFamily::optimized: return "optimized";
        case WaveletFamily::custom: return "custom";
    }
    return "custom";
}

WaveletFamily parse_family(const std::string& s) {
    if (s == "lazy") return WaveletFamily::lazy;
    if (s == "interpolating") return WaveletFamily::interpolating;
    if (s == "sint") return WaveletFamily::sint;
    if (s == "vbap") return WaveletFamily::vbap;
    if (s == "optimized") return WaveletFamily::optimized;
    if (s == "custom") return WaveletFamily::custom;
    throw std::invalid_argument("unknown wavelet family '" + s + "'");
}

namespace {

/// Tri-linear decomposition of the unit direction over the containing
/// triangle: u = g1 v1 + g2 v2 + g3 v3 with g >= 0. Not normalized.
Eigen::VectorXd barycentric_solve(const MeshLevel& level_mesh, const Direction& source) {
    const Eigen::Vector3d u = source.unit();
    const int n = static_cast<int>(level_mesh.vertices.size());
    for (size_t t = 0; t < level_mesh.triangles.size(); ++t) {
        const auto& tri = level_mesh.triangles[t];
        Eigen::Matrix3d basis;
        for (int k = 0; k < 3; ++k) basis.col(k) = level_mesh.vertices[tri[k]];
        const Eigen::Vector3d g = basis.partialPivLu().solve(u);
        if (g.minCoeff() >= -1e-12) {
            Eigen::VectorXd gains = Eigen::VectorXd::Zero(n);
            for (int k = 0; k < 3; ++k) gains[tri[k]] += std::max(g[k], 0.0);
            return gains;
        }
    }
    throw std::runtime_error("vbap_gains: no containing triangle (degenerate mesh)");
}

}  // namespace

Eigen::VectorXd vbap_gains(const MeshLevel& level_mesh, const Direction& source) {
    Eigen::VectorXd gains = barycentric_solve(level_mesh, source);
    gains /= gains.sum();
    return gains;
}

Eigen::VectorXd interpolate_source(const MeshLevel& level_mesh, const Direction& source) {
    return barycentric_solve(level_mesh, source);
}

FilterLevel lazy_filters(const SubdivisionMesh& mesh, int level) {
    const LevelShape s = shape_of(mesh, level);
    FilterLevel fl;
    fl.A = Eigen::MatrixXd::Zero(s.coarse, s.fine);
    for (int k = 0; k < s.coarse; ++k) fl.A(k, k) = 1.0;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(s.odd, s.fine);
    for (int o = 0; o < s.odd; ++o) b(o, s.coarse + o) = 1.0;
    fl.P = fl.A.transpose();
    fl.Q = b.transpose();
    fl.B = std::move(b);
    return fl;
}

FilterLevel interpolating_filters(const SubdivisionMesh& mesh, int level) {
    const LevelShape s = shape_of(mesh, level);
    const NeighborSets ns = neighbor_sets(mesh, level);

    // Prediction weights 1/2 on the parent-edge endpoints.
    Eigen::MatrixXd s_dual = Eigen::MatrixXd::Zero(s.odd, s.coarse);
    for (int o = 0; o < s.odd; ++o) {
        s_dual(o, ns.v[o][0]) = 0.5;
        s_dual(o, ns.v[o][1]) = 0.5;
    }

    // Update weights s_{k,m} = I_m / (2 I_k), making the wavelet integral zero.
    const Eigen::VectorXd fine_int = interpolating_integrals(mesh, level);
    const Eigen::VectorXd coarse_int = interpolating_integrals(mesh, level - 1);
    Eigen::MatrixXd s_lift = Eigen::MatrixXd::Zero(s.coarse, s.odd);
    for (int o = 0; o < s.odd; ++o)
        for (int k : ns.v[o])
            s_lift(k, o) = fine_int[s.coarse + o] / (2.0 * coarse_int[k]);

    return lift(dual_lift(lazy_filters(mesh, level), s_dual), s_lift);
}

FilterLevel sint_filters(const SubdivisionMesh& mesh, int level) {
    const FilterLevel inter = interpolating_filters(mesh, level);
    FilterLevel fl;
    fl.A = inter.P.transpose();
    fl.P = inter.A.transpose();
    fl.B = inter.Q->transpose();
    fl.Q = inter.B->transpose();
    return fl;
}

FilterLevel vbap_filters(const SubdivisionMesh& mesh, int level) {
    const LevelShape s = shape_of(mesh, level);
    const MeshLevel& fine = mesh.levels[level];
    FilterLevel fl;
    fl.A = Eigen::MatrixXd::Zero(s.coarse, s.fine);
    // Even vertices render onto themselves; each odd vertex sits on its
    // parent edge and splits equally between the two endpoints.
    for (int k = 0; k < s.coarse; ++k) fl.A(k, k) = 1.0;
    for (int o = 0; o < s.odd; ++o) {
        fl.A(fine.parent_edge[o][0], s.coarse + o) = 0.5;
        fl.A(fine.parent_edge[o][1], s.coarse + o) = 0.5;
    }
    fl.P = Eigen::MatrixXd::Zero(s.fine, s.coarse);
    fl.P.topRows(s.coarse).setIdentity();
    return fl;
}

FilterBank make_filter_bank(const SubdivisionMesh& mesh, WaveletFamily family) {
    FilterBank bank;
    bank.family = family;
    bank.levels.resize(mesh.max_level() + 1);
    for (int j = 1; j <= mesh.max_level(); ++j) {
        switch (family) {
            case WaveletFamily::lazy: bank.levels[j] = lazy_filters(mesh, j); break;
            case WaveletFamily::interpolating: bank.levels[j] = interpolating_filters(mesh, j); break;
            case WaveletFamily::sint: bank.levels[j] = sint_filters(mesh, j); break;
            case WaveletFamily::vbap: bank.levels[j] = vbap_filters(mesh, j); break;
            default:
                throw std::invalid_argument("make_filter_bank: family has no closed-form builder");
        }
    }
    return bank;
}

FilterLevel lift(const FilterLevel& bank, const Eigen::MatrixXd& S) {
    if (!bank.B || !bank.Q) throw std::invalid_argument("lift: bank without B/Q");
    if (S.rows() != bank.A.rows() || S.cols() != bank.B->rows())
        throw std::invalid_argument("lift: S shape mismatch");
    FilterLevel out = bank;
    out.A = bank.A + S * (*bank.B);
    out.Q = *bank.Q - bank.P * S;
    return out;
}

FilterLevel dual_lift(const FilterLevel& bank, const Eigen::MatrixXd& S_dual) {
    if (!bank.B || !bank.Q) throw std::invalid_argument("dual_lift: bank without B/Q");
    if (S_dual.rows() != bank.B->rows() || S_dual.cols() != bank.A.rows())
        throw std::invalid_argument("dual_lift: S~ shape mismatch");
    FilterLevel out = bank;
    out.P = bank.P + (*bank.Q) * S_dual;
    out.B = *bank.B - S_dual * bank.A;
    return out;
}

double biorthogonality_error(const FilterLevel& fl) {
    const auto eye = [](Eigen::Index n) { return Eigen::MatrixXd::Identity(n, n); };
    double err = (fl.A * fl.P - eye(fl.A.rows())).cwiseAbs().maxCoeff();
    if (fl.B && fl.Q) {
        err = std::max(err, (*fl.B * *fl.Q - eye(fl.B->rows())).cwiseAbs().maxCoeff());
        err = std::max(err, (fl.A * *fl.Q).cwiseAbs().maxCoeff());
        err = std::max(err, (*fl.B * fl.P).cwiseAbs().maxCoeff());
        err = std::max(err,
                       (fl.P * fl.A + *fl.Q * *fl.B - eye(fl.P.rows())).cwiseAbs().maxCoeff());
    }
    return err;
}

int WaveletCoefficients::total_dimension() const {
    int n = static_cast<int>(c0.size());
    for (const auto& d : details) n += static_cast<int>(d.size());
    return n;
}

WaveletCoefficients forward_transform(const FilterBank& bank, const Eigen::VectorXd& fine,
                                      int to_level) {
    const int n = bank.max_level();
    if (to_level < 0 || to_level > n)
        throw std::invalid_argument("forward_transform: truncation level out of range");
    if (fine.size() != bank.level(n).A.cols())
        throw std::invalid_argument("forward_transform: input is not finest-level data");
    WaveletCoefficients wc;
    wc.truncation = to_level;
    wc.details.resize(to_level);
    Eigen::VectorXd c = fine;
    for (int j = n; j >= 1; --j) {
        if (j <= to_level) {
            if (!bank.level(j).B)
                throw std::runtime_error("forward_transform: family has no B at level " +
                                         std::to_string(j) + " but details were requested");
            wc.details[j - 1] = *bank.level(j).B * c;
        }
        c = bank.level(j).A * c;
    }
    wc.c0 = std::move(c);
    return wc;
}

Eigen::VectorXd inverse_transform(const FilterBank& bank, const WaveletCoefficients& coeffs,
                                  int to_level) {
    if (to_level < 0 || to_level > bank.max_level())
        throw std::invalid_argument("inverse_transform: level out of range");
    Eigen::VectorXd c = coeffs.c0;
    for (int j = 1; j <= to_level; ++j) {
        const FilterLevel& fl = bank.level(j);
        if (j <= coeffs.truncation && coeffs.details[j - 1].size() > 0) {
            if (!fl.Q)
                throw std::runtime_error("inverse_transform: family has no Q at level " +
                                         std::to_string(j));
            c = fl.P * c + *fl.Q * coeffs.details[j - 1];
        } else {
            c = fl.P * c;
        }
    }
    return c;
}

Eigen::VectorXd downsample(const FilterBank& bank, const Eigen::VectorXd& data,
                           int from_level, int to_level) {
    if (to_level > from_level) throw std::invalid_argument("downsample: to_level above from_level");
    Eigen::VectorXd c = data;
    for (int j = from_level; j > to_level; --j) c = bank.level(j).A * c;
    return c;
}

Eigen::VectorXd upsample(const FilterBank& bank, const Eigen::VectorXd& coarse,
                         int from_level, int to_level) {
    if (to_level < from_level) throw std::invalid_argument("upsample: to_level below from_level");
    Eigen::VectorXd c = coarse;
    for (int j = from_level + 1; j <= to_level; ++j) c = bank.level(j).P * c;
    return c;
}

Eigen::VectorXd swf_encode(const SubdivisionMesh& mesh, const FilterBank& bank, int level,
                           const Direction& dir) {
    const Eigen::VectorXd fine = interpolate_source(mesh.levels[mesh.max_level()], dir);
    return downsample(bank, fine, mesh.max_level(), level);
}

Eigen::VectorXd materialize(const FilterBank& bank, int level, MaterializeKind kind, int index) {
    const int n = bank.max_level();
    if (level < 0 || level > n) throw std::invalid_argument("materialize: level out of range");
    const bool wavelet_kind =
        kind == MaterializeKind::wavelet || kind == MaterializeKind::dual_wavelet;
    if (wavelet_kind && level >= n)
        throw std::invalid_argument("materialize: no wavelet space at the finest level");

    switch (kind) {
        case MaterializeKind::scaling: {
            const int dim = static_cast<int>(level == n ? bank.level(n).A.cols()
                                                        : bank.level(level + 1).P.cols());
            if (index < 0 || index >= dim) throw std::out_of_range("materialize: index");
            Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, index);
            for (int j = level + 1; j <= n; ++j) v = bank.level(j).P * v;
            return v;
        }
        case MaterializeKind::wavelet: {
            const FilterLevel& fl = bank.level(level + 1);
            if (!fl.Q) throw std::runtime_error("materialize: family has no Q");
            if (index < 0 || index >= fl.Q->cols()) throw std::out_of_range("materialize: index");
            Eigen::VectorXd v = fl.Q->col(index);
            for (int j = level + 2; j <= n; ++j) v = bank.level(j).P * v;
            return v;
        }
        case MaterializeKind::dual_scaling: {
            const int dim = static_cast<int>(level == n ? bank.level(n).A.cols()
                                                        : bank.level(level + 1).A.rows());
            if (index < 0 || index >= dim) throw std::out_of_range("materialize: index");
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Unit(dim, index);
            for (int j = level + 1; j <= n; ++j) r = r * bank.level(j).A;
            return r.transpose();
        }
        case MaterializeKind::dual_wavelet: {
            const FilterLevel& fl = bank.level(level + 1);
            if (!fl.B) throw std::runtime_error("materialize: family has no B");
            if (index < 0 || index >= fl.B->rows()) throw std::out_of_range("materialize: index");
            Eigen::RowVectorXd r = fl.B->row(index);
            for (int j = level + 2; j <= n; ++j) r = r * bank.level(j).A;
            return r.transpose();
        }
    }
    throw std::logic_error("materialize: unreachable");
}

namespace {

void save_matrix(const std::string& path, const Eigen::MatrixXd& m, char name, int level,
                 WaveletFamily family) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_filter_bank: cannot write " + path);
    out << "# matrix=" << name << " level=" << level << " rows=" << m.rows()
        << " cols=" << m.cols() << " family=" << family_name(family) << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            out << buf << (c + 1 == m.cols() ? "\n" : ",");
        }
    }
}

Eigen::MatrixXd load_matrix(const std::string& path, WaveletFamily* family_out) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_filter_bank: cannot read " + path);
    std::string header;
    std::getline(in, header);
    int rows = -1, cols = -1;
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
        if (tok.rfind("rows=", 0) == 0) rows = std::stoi(tok.substr(5));
        if (tok.rfind("cols=", 0) == 0) cols = std::stoi(tok.substr(5));
        if (tok.rfind("family=", 0) == 0 && family_out) *family_out = parse_family(tok.substr(7));
    }
    if (rows < 0 || cols < 0) throw std::invalid_argument("load_filter_bank: bad header in " + path);
    Eigen::MatrixXd m(rows, cols);
    std::string line;
    for (int r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw std::invalid_argument("load_filter_bank: truncated " + path);
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c < cols; ++c) {
            if (!std::getline(ls, cell, ','))
                throw std::invalid_argument("load_filter_bank: short row in " + path);
            m(r, c) = std::stod(cell);
        }
    }
    return m;
}

std::string matrix_path(const std::string& dir, char name, int level) {
    return dir + "/" + name + std::string("_level") + std::to_string(level) + ".csv";
}

}  // namespace

void save_filter_bank(const FilterBank& bank, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (int j = 1; j <= bank.max_level(); ++j) {
        const FilterLevel& fl = bank.level(j);
        save_matrix(matrix_path(dir, 'A', j), fl.A, 'A', j, bank.family);
        save_matrix(matrix_path(dir, 'P', j), fl.P, 'P', j, bank.family);
        if (fl.B) save_matrix(matrix_path(dir, 'B', j), *fl.B, 'B', j, bank.family);
        if (fl.Q) save_matrix(matrix_path(dir, 'Q', j), *fl.Q, 'Q', j, bank.family);
    }
}

FilterBank load_filter_bank(const std::string& dir) {
    FilterBank bank;
    bank.levels.emplace_back();
    for (int j = 1;; ++j) {
        if (!std::filesystem::exists(matrix_path(dir, 'A', j))) break;
        FilterLevel fl;
        fl.A = load_matrix(matrix_path(dir, 'A', j), &bank.family);
        fl.P = load_matrix(matrix_path(dir, 'P', j), nullptr);
        if (std::filesystem::exists(matrix_path(dir, 'B', j)))
            fl.B = load_matrix(matrix_path(dir, 'B', j), nullptr);
        if (std::filesystem::exists(matrix_path(dir, 'Q', j)))
            fl.Q = load_matrix(matrix_path(dir, 'Q', j), nullptr);
        bank.levels.push_back(std::move(fl));
    }
    if (bank.levels.size() == 1) throw std::invalid_argument("load_filter_bank: no matrices in " + dir);
    return bank;
}

}  // namespace sphwave
