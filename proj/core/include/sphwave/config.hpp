#pragma once

#include <map>
#include <string>

#include "sphwave/decoderopt.hpp"
#include "sphwave/optcore.hpp"
#include "sphwave/waveletopt.hpp"

namespace sphwave {

/// Parsed `key = value` sections of a run configuration file. Section names
/// are [mesh], [family], [weights.<preset>], [optimizer] and [eval];
/// unknown sections or keys are rejected, as are non-finite numbers.
struct RunConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_number(const std::string& section, const std::string& key, double fallback) const;

    int mesh_levels(int fallback = 2) const;
    std::string family(const std::string& fallback = "vbap") const;

    /// Weights from [weights.<name>]; starts from the built-in preset of the
    /// same name when one exists, otherwise from all-zero weights.
    CostWeights weights(const std::string& name) const;

    MinimizeOptions optimizer(const MinimizeOptions& fallback = {}) const;
    WaveletOptOptions wavelet_opt() const;

    int eval_n(int fallback = 360) const;
    std::string eval_plane(const std::string& fallback = "horizontal") const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace sphwave
