#include "sphwave/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sphwave {

namespace {

const std::set<std::string> kMeshKeys = {"levels"};
const std::set<std::string> kFamilyKeys = {"name"};
const std::set<std::string> kWeightKeys = {"alpha_p",  "alpha_vr", "alpha_vt", "alpha_e",
                                           "alpha_ir", "alpha_it", "alpha_ph", "beta",
                                           "mask_distance_deg"};
const std::set<std::string> kOptimizerKeys = {"max_iter",       "tol_c", "tol_g",
                                              "penalty_growth", "seed",  "alpha_lambda",
                                              "alpha_p1",       "alpha_p2", "alpha_neg"};
const std::set<std::string> kEvalKeys = {"n", "plane"};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

void check_key(const std::string& section, const std::string& key) {
    const std::set<std::string>* allowed = nullptr;
    if (section == "mesh") allowed = &kMeshKeys;
    else if (section == "family") allowed = &kFamilyKeys;
    else if (section.rfind("weights.", 0) == 0) allowed = &kWeightKeys;
    else if (section == "optimizer") allowed = &kOptimizerKeys;
    else if (section == "eval") allowed = &kEvalKeys;
    else throw std::invalid_argument("config: unknown section [" + section + "]");
    if (!allowed->count(key))
        throw std::invalid_argument("config: unknown key '" + key + "' in [" + section + "]");
}

double to_finite(const std::string& section, const std::string& key, const std::string& value) {
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: non-numeric value for " + section + "." + key);
    }
    if (used != value.size() || !std::isfinite(v))
        throw std::invalid_argument("config: bad number for " + section + "." + key);
    return v;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section header at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        check_key(section, key);
        // validate numerics eagerly; string keys are exempt
        const bool is_string = (section == "family" && key == "name") ||
                               (section == "eval" && key == "plane");
        if (!is_string) to_finite(section, key, value);
        cfg.sections[section][key] = value;
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key);
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double RunConfig::get_number(const std::string& section, const std::string& key,
                             double fallback) const {
    if (!has(section, key)) return fallback;
    return to_finite(section, key, sections.at(section).at(key));
}

int RunConfig::mesh_levels(int fallback) const {
    return static_cast<int>(get_number("mesh", "levels", fallback));
}

std::string RunConfig::family(const std::string& fallback) const {
    return get_string("family", "name", fallback);
}

CostWeights RunConfig::weights(const std::string& name) const {
    CostWeights w;
    try {
        w = preset_by_name(name);
    } catch (const std::invalid_argument&) {
        w.preset_name = name;
    }
    const std::string section = "weights." + name;
    w.alpha_p = get_number(section, "alpha_p", w.alpha_p);
    w.alpha_vr = get_number(section, "alpha_vr", w.alpha_vr);
    w.alpha_vt = get_number(section, "alpha_vt", w.alpha_vt);
    w.alpha_e = get_number(section, "alpha_e", w.alpha_e);
    w.alpha_ir = get_number(section, "alpha_ir", w.alpha_ir);
    w.alpha_it = get_number(section, "alpha_it", w.alpha_it);
    w.alpha_ph = get_number(section, "alpha_ph", w.alpha_ph);
    w.beta = get_number(section, "beta", w.beta);
    if (has(section, "mask_distance_deg"))
        w.mask_distance = get_number(section, "mask_distance_deg", 0.0) * 3.14159265358979323846 / 180.0;
    return w;
}

MinimizeOptions RunConfig::optimizer(const MinimizeOptions& fallback) const {
    MinimizeOptions m = fallback;
    m.max_inner = static_cast<int>(get_number("optimizer", "max_iter", m.max_inner));
    m.tol_c = get_number("optimizer", "tol_c", m.tol_c);
    m.tol_g = get_number("optimizer", "tol_g", m.tol_g);
    m.penalty_growth = get_number("optimizer", "penalty_growth", m.penalty_growth);
    m.seed = static_cast<std::uint64_t>(get_number("optimizer", "seed", static_cast<double>(m.seed)));
    return m;
}

WaveletOptOptions RunConfig::wavelet_opt() const {
    WaveletOptOptions o;
    o.minimize = optimizer(o.minimize);
    o.seed = o.minimize.seed ? o.minimize.seed : o.seed;
    o.weights.alpha_lambda = get_number("optimizer", "alpha_lambda", o.weights.alpha_lambda);
    o.weights.alpha_p1 = get_number("optimizer", "alpha_p1", o.weights.alpha_p1);
    o.weights.alpha_p2 = get_number("optimizer", "alpha_p2", o.weights.alpha_p2);
    o.weights.alpha_neg = get_number("optimizer", "alpha_neg", o.weights.alpha_neg);
    return o;
}

int RunConfig::eval_n(int fallback) const {
    return static_cast<int>(get_number("eval", "n", fallback));
}

std::string RunConfig::eval_plane(const std::string& fallback) const {
    return get_string("eval", "plane", fallback);
}

}  // namespace sphwave
