#include "sphwave/sphere.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace sphwave {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_azimuth(double az) {
    az = std::fmod(az, 2.0 * kPi);
    if (az <= -kPi) az += 2.0 * kPi;
    if (az > kPi) az -= 2.0 * kPi;
    return az;
}

/// Associated Legendre P_l^m(x) without the Condon-Shortley phase.
double assoc_legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
        double fact = 1.0;
        for (int i = 0; i < m; ++i) {
            pmm *= fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

}  // namespace

Direction::Direction(double az, double el) {
    if (!std::isfinite(az) || !std::isfinite(el))
        throw std::invalid_argument("Direction: non-finite angles");
    if (el < -kPi / 2 - 1e-12 || el > kPi / 2 + 1e-12)
        throw std::invalid_argument("Direction: elevation out of [-pi/2, pi/2]");
    elevation = std::clamp(el, -kPi / 2, kPi / 2);
    azimuth = wrap_azimuth(az);
}

Direction Direction::from_unit(const Eigen::Vector3d& u) {
    const Eigen::Vector3d v = u.normalized();
    const double el = std::asin(std::clamp(v.z(), -1.0, 1.0));
    double az = 0.0;
    if (std::abs(v.x()) > 1e-300 || std::abs(v.y()) > 1e-300)
        az = std::atan2(v.y(), v.x());
    return Direction(az, el);
}

Eigen::Vector3d Direction::unit() const {
    const double ce = std::cos(elevation);
    return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

double haversine(const Direction& a, const Direction& b) {
    const double sdel = std::sin((b.elevation - a.elevation) / 2.0);
    const double sdaz = std::sin((b.azimuth - a.azimuth) / 2.0);
    const double h = sdel * sdel + std::cos(a.elevation) * std::cos(b.elevation) * sdaz * sdaz;
    return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<Direction> sample_directions(int count, SampleScheme scheme) {
    if (count < 1) throw std::invalid_argument("sample_directions: count must be >= 1");
    std::vector<Direction> out;
    out.reserve(count);
    switch (scheme) {
        case SampleScheme::horizontal_ring:
            for (int i = 0; i < count; ++i)
                out.emplace_back(2.0 * kPi * i / count, 0.0);
            break;
        case SampleScheme::vertical_ring:
            // Front -> up -> back -> down, in the x-z plane.
            for (int i = 0; i < count; ++i) {
                const double t = 2.0 * kPi * i / count;
                out.push_back(Direction::from_unit({std::cos(t), 0.0, std::sin(t)}));
            }
            break;
        case SampleScheme::fibonacci: {
            const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
            for (int i = 0; i < count; ++i) {
                const double z = 1.0 - (2.0 * i + 1.0) / count;
                const double az = 2.0 * kPi * std::fmod(i / golden, 1.0);
                const double el = std::asin(std::clamp(z, -1.0, 1.0));
                out.emplace_back(az, el);
            }
            break;
        }
    }
    return out;
}

Eigen::VectorXd sh_vector(int order, const Direction& dir) {
    if (order < 0) throw std::invalid_argument("sh_vector: order must be >= 0");
    const int n = (order + 1) * (order + 1);
    Eigen::VectorXd y(n);
    const double x = std::sin(dir.elevation);  // P_l^m argument
    for (int l = 0; l <= order; ++l) {
        for (int m = -l; m <= l; ++m) {
            const int acn = l * l + l + m;
            const int am = std::abs(m);
            double norm = std::sqrt(2.0 * l + 1.0);
            if (am > 0)
                norm *= std::sqrt(2.0 * factorial(l - am) / factorial(l + am));
            const double p = assoc_legendre(l, am, x);
            double trig = 1.0;
            if (m > 0) trig = std::cos(am * dir.azimuth);
            if (m < 0) trig = std::sin(am * dir.azimuth);
            y[acn] = norm * p * trig;
        }
    }
    y[0] = 1.0;
    return y;
}

AmbisonicsSignal encode_plane_wave(int order, const Direction& dir, double gain) {
    AmbisonicsSignal s;
    s.order = order;
    s.coeffs = gain * sh_vector(order, dir);
    return s;
}

Eigen::Matrix3Xd SpeakerLayout::units() const {
    Eigen::Matrix3Xd u(3, size());
    for (int i = 0; i < size(); ++i) u.col(i) = speakers[i].dir.unit();
    return u;
}

void SpeakerLayout::validate() const {
    if (speakers.empty()) throw std::invalid_argument("layout: no speakers");
    std::set<std::string> names;
    for (const auto& s : speakers)
        if (!names.insert(s.name).second)
            throw std::invalid_argument("layout: duplicate speaker name '" + s.name + "'");
    for (size_t i = 0; i < speakers.size(); ++i)
        for (size_t j = i + 1; j < speakers.size(); ++j)
            if (haversine(speakers[i].dir, speakers[j].dir) < 1e-9)
                throw std::invalid_argument("layout: speakers '" + speakers[i].name +
                                            "' and '" + speakers[j].name + "' coincide");
}

double SpeakerLayout::mean_nearest_neighbor_distance() const {
    if (size() < 2) return kPi;
    double sum = 0.0;
    for (int i = 0; i < size(); ++i) {
        double best = kPi;
        for (int j = 0; j < size(); ++j) {
            if (i == j) continue;
            best = std::min(best, haversine(speakers[i].dir, speakers[j].dir));
        }
        sum += best;
    }
    return sum / size();
}

Eigen::MatrixXd sampled_sh_matrix(const SpeakerLayout& layout, int order) {
    const int k = (order + 1) * (order + 1);
    Eigen::MatrixXd c(k, layout.size());
    for (int i = 0; i < layout.size(); ++i)
        c.col(i) = sh_vector(order, layout.speakers[i].dir);
    return c;
}

DecodingMatrix decode_analytic(const SpeakerLayout& layout, int order,
                               DecodeMode mode, double regularization) {
    layout.validate();
    if (order < 0) throw std::invalid_argument("decode_analytic: order must be >= 0");
    if (regularization < 0) throw std::invalid_argument("decode_analytic: negative regularization");
    const Eigen::MatrixXd c = sampled_sh_matrix(layout, order);
    DecodingMatrix d;
    d.format = FormatSpec::ambisonics(order);
    d.layout_name = layout.name;
    if (mode == DecodeMode::projection) {
        d.gains = c.transpose() / layout.size();
        return d;
    }
    const int k = static_cast<int>(c.rows());
    Eigen::MatrixXd gram = c * c.transpose();
    gram.diagonal().array() += regularization;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible())
        throw std::runtime_error(
            "decode_analytic: C C^T is singular for this layout/order; "
            "add a Tikhonov regularization term (regularization > 0)");
    d.gains = c.transpose() * lu.solve(Eigen::MatrixXd::Identity(k, k));
    return d;
}

double legendre_p(int n, double x) {
    if (n == 0) return 1.0;
    double pm1 = 1.0, p = x;
    for (int l = 2; l <= n; ++l) {
        const double pnext = ((2.0 * l - 1.0) * x * p - (l - 1.0) * pm1) / l;
        pm1 = p;
        p = pnext;
    }
    return p;
}

double legendre_max_root(int n) {
    if (n < 1) throw std::invalid_argument("legendre_max_root: n must be >= 1");
    // Newton from the asymptotic estimate of the largest root.
    double x = std::cos(kPi * (4.0 - 1.0) / (4.0 * n + 2.0));
    for (int it = 0; it < 100; ++it) {
        const double p = legendre_p(n, x);
        const double dp = n * (x * legendre_p(n, x) - legendre_p(n - 1, x)) / (x * x - 1.0);
        const double step = p / dp;
        x -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return x;
}

Eigen::VectorXd degree_weights(int order, WeightScheme scheme) {
    if (order < 0) throw std::invalid_argument("degree_weights: order must be >= 0");
    if (scheme != WeightScheme::basic && order < 1)
        throw std::invalid_argument("degree_weights: modified schemes need order >= 1");
    Eigen::VectorXd w = Eigen::VectorXd::Ones(order + 1);
    switch (scheme) {
        case WeightScheme::basic:
            break;
        case WeightScheme::max_re: {
            const double rho = legendre_max_root(order + 1);
            for (int l = 0; l <= order; ++l) w[l] = legendre_p(l, rho);
            break;
        }
        case WeightScheme::in_phase: {
            const double num = factorial(order) * factorial(order + 1);
            for (int l = 0; l <= order; ++l)
                w[l] = num / (factorial(order + l + 1) * factorial(order - l));
            break;
        }
    }
    return w;
}

Eigen::VectorXd degree_weights_per_channel(int order, WeightScheme scheme) {
    const Eigen::VectorXd w = degree_weights(order, scheme);
    Eigen::VectorXd out((order + 1) * (order + 1));
    for (int l = 0; l <= order; ++l)
        for (int m = -l; m <= l; ++m) out[l * l + l + m] = w[l];
    return out;
}

DecodingMatrix apply_degree_weights(const DecodingMatrix& d, WeightScheme scheme) {
    if (d.format.kind != FormatSpec::Kind::ambisonics)
        throw std::invalid_argument("apply_degree_weights: ambisonics matrices only");
    DecodingMatrix out = d;
    out.gains = d.gains * degree_weights_per_channel(d.format.order, scheme).asDiagonal();
    return out;
}

}  // namespace sphwave
