#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphwave/decoding.hpp"

namespace sphwave {

/// Position on the unit sphere in acoustic convention: azimuth grows
/// counterclockwise from the front (+azimuth is left), elevation is up
/// from the horizontal plane. Stored normalized: azimuth in (-pi, pi],
/// elevation in [-pi/2, pi/2].
struct Direction {
    double azimuth = 0.0;
    double elevation = 0.0;

    Direction() = default;
    Direction(double az, double el);

    static Direction from_unit(const Eigen::Vector3d& u);

    /// Unit 3-vector: x front, y left, z up.
    Eigen::Vector3d unit() const;
};

/// Great-circle angle between two directions, in [0, pi].
double haversine(const Direction& a, const Direction& b);

enum class SampleScheme { fibonacci, horizontal_ring, vertical_ring };

/// Evaluation directions. The ring schemes walk the named great circle in
/// equal steps starting from the front; fibonacci covers the sphere
/// quasi-uniformly.
std::vector<Direction> sample_directions(int count, SampleScheme scheme);

/// Real spherical harmonics sampled at `dir`, ACN channel order
/// (index = l^2 + l + m), N3D normalization, no Condon-Shortley phase.
/// Length (order+1)^2; component 0 is exactly 1.
Eigen::VectorXd sh_vector(int order, const Direction& dir);

struct AmbisonicsSignal {
    int order = 0;
    Eigen::VectorXd coeffs;  // length (order+1)^2, ACN/N3D
};

AmbisonicsSignal encode_plane_wave(int order, const Direction& dir, double gain);

struct Speaker {
    std::string name;
    Direction dir;
    std::optional<double> distance_m;  // parsed from layout files, ignored in the math
};

struct SpeakerLayout {
    std::string name;
    std::vector<Speaker> speakers;

    int size() const { return static_cast<int>(speakers.size()); }

    /// 3 x N matrix of speaker unit vectors.
    Eigen::Matrix3Xd units() const;

    /// Throws std::invalid_argument on empty layouts, duplicate names or
    /// coincident speakers (closer than 1e-9 rad).
    void validate() const;

    /// Mean great-circle distance between each speaker and its nearest
    /// neighbour (used for the default masking threshold).
    double mean_nearest_neighbor_distance() const;
};

/// Sampled spherical-harmonics matrix C, shape (order+1)^2 x N, one column
/// per speaker.
Eigen::MatrixXd sampled_sh_matrix(const SpeakerLayout& layout, int order);

enum class DecodeMode { projection, pseudoinverse };

/// Analytic Ambisonics decoders: projection D = C^T / N, or pseudoinverse
/// D = C^T (C C^T + reg I)^-1. Throws std::runtime_error when C C^T is
/// singular and no regularization was requested.
DecodingMatrix decode_analytic(const SpeakerLayout& layout, int order,
                               DecodeMode mode, double regularization = 0.0);

enum class WeightScheme { basic, max_re, in_phase };

/// Per-degree gains w_l (length order+1). max_re uses w_l = P_l(rho) with
/// rho the largest root of P_{order+1}; in_phase uses
/// w_l = order!(order+1)! / ((order+l+1)!(order-l)!).
Eigen::VectorXd degree_weights(int order, WeightScheme scheme);

/// Expands per-degree weights to one gain per ACN channel.
Eigen::VectorXd degree_weights_per_channel(int order, WeightScheme scheme);

/// Applies per-degree weights to the columns of a decoding matrix.
DecodingMatrix apply_degree_weights(const DecodingMatrix& d, WeightScheme scheme);

/// Largest root of the Legendre polynomial P_n.
double legendre_max_root(int n);

/// Legendre polynomial P_n(x).
double legendre_p(int n, double x);

}  // namespace sphwave
