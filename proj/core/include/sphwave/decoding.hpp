#pragma once

#include <string>

#include <Eigen/Dense>

namespace sphwave {

enum class Band { lf, hf, universal };

std::string band_name(Band b);
Band parse_band(const std::string& s);

/// The spatial format a decoding matrix consumes: Ambisonics of a given
/// order, or a spherical wavelet format identified by family name and
/// truncation level.
struct FormatSpec {
    enum class Kind { ambisonics, swf };

    Kind kind = Kind::ambisonics;
    int order = 1;             // ambisonics only
    std::string family;        // swf only: lazy|interpolating|sint|vbap|optimized|custom
    int level = 0;             // swf truncation level

    static FormatSpec ambisonics(int order);
    static FormatSpec swf(std::string family, int level);

    /// "ambi:L" or "swf:FAMILY:LEVEL".
    static FormatSpec parse(const std::string& text);
    std::string to_string() const;

    int channels_hint() const;  // (order+1)^2 for ambisonics, -1 for swf (mesh-dependent)
};

/// Speakers x format-channels gain matrix plus format metadata.
struct DecodingMatrix {
    Eigen::MatrixXd gains;   // rows: speakers, cols: format channels
    FormatSpec format;
    std::string layout_name;
    Band band = Band::universal;
};

}  // namespace sphwave
