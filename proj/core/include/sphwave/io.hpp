#pragma once

#include <string>

#include <Eigen/Dense>

#include "sphwave/decoding.hpp"
#include "sphwave/sphere.hpp"

namespace sphwave::io {

/// Layout text file: one `name azimuth_deg elevation_deg [distance_m]` per
/// line, `#` comments. Angles are degrees in files, radians in the API.
SpeakerLayout load_layout(const std::string& path);
void save_layout(const SpeakerLayout& layout, const std::string& path);

/// Decoding matrix CSV with a `# layout=... format=... rows=... cols=...`
/// header line, one speaker per row, 17 significant digits.
void save_decoding_matrix(const DecodingMatrix& d, const std::string& path);
DecodingMatrix load_decoding_matrix(const std::string& path);

/// Plain CSV of sample frames, one frame per row, one channel per column.
Eigen::MatrixXd load_frames_csv(const std::string& path);
void save_frames_csv(const Eigen::MatrixXd& frames, const std::string& path);

std::string format_real(double v);  // shortest round-trippable decimal (17 digits)

}  // namespace sphwave::io
