#include "sphwave/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sphwave {

std::string band_name(Band b) {
    switch (b) {
        case Band::lf: return "lf";
        case Band::hf: return "hf";
        case Band::universal: return "universal";
    }
    return "universal";
}

Band parse_band(const std::string& s) {
    if (s == "lf") return Band::lf;
    if (s == "hf") return Band::hf;
    if (s == "universal") return Band::universal;
    throw std::invalid_argument("unknown band '" + s + "'");
}

FormatSpec FormatSpec::ambisonics(int order) {
    FormatSpec f;
    f.kind = Kind::ambisonics;
    f.order = order;
    return f;
}

FormatSpec FormatSpec::swf(std::string family, int level) {
    FormatSpec f;
    f.kind = Kind::swf;
    f.family = std::move(family);
    f.level = level;
    return f;
}

FormatSpec FormatSpec::parse(const std::string& text) {
    std::istringstream ss(text);
    std::string head;
    std::getline(ss, head, ':');
    if (head == "ambi" || head == "ambisonics") {
        std::string order;
        if (!std::getline(ss, order, ':'))
            throw std::invalid_argument("format: expected ambi:<order>");
        return ambisonics(std::stoi(order));
    }
    if (head == "swf") {
        std::string family, level;
        if (!std::getline(ss, family, ':') || !std::getline(ss, level, ':'))
            throw std::invalid_argument("format: expected swf:<family>:<level>");
        return swf(family, std::stoi(level));
    }
    throw std::invalid_argument("format: unknown kind '" + head + "'");
}

std::string FormatSpec::to_string() const {
    if (kind == Kind::ambisonics) return "ambi:" + std::to_string(order);
    return "swf:" + family + ":" + std::to_string(level);
}

int FormatSpec::channels_hint() const {
    if (kind == Kind::ambisonics) return (order + 1) * (order + 1);
    return -1;
}

namespace io {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SpeakerLayout load_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("layout: cannot read " + path);
    SpeakerLayout layout;
    layout.name = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        std::istringstream ss(line);
        Speaker s;
        double az_deg = 0, el_deg = 0;
        if (!(ss >> s.name)) continue;  // blank line
        if (!(ss >> az_deg >> el_deg))
            throw std::invalid_argument("layout: bad line " + std::to_string(lineno) + " in " + path);
        double dist = 0;
        if (ss >> dist) s.distance_m = dist;
        s.dir = Direction(az_deg * kDegToRad, el_deg * kDegToRad);
        layout.speakers.push_back(std::move(s));
    }
    layout.validate();
    return layout;
}

void save_layout(const SpeakerLayout& layout, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("layout: cannot write " + path);
    for (const auto& s : layout.speakers) {
        out << s.name << " " << format_real(s.dir.azimuth / kDegToRad) << " "
            << format_real(s.dir.elevation / kDegToRad);
        if (s.distance_m) out << " " << format_real(*s.distance_m);
        out << "\n";
    }
}

void save_decoding_matrix(const DecodingMatrix& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("matrix: cannot write " + path);
    out << "# layout=" << (d.layout_name.empty() ? "unknown" : d.layout_name);
    if (d.format.kind == FormatSpec::Kind::ambisonics) {
        out << " format=ambisonics order=" << d.format.order;
    } else {
        out << " format=swf family=" << d.format.family << " level=" << d.format.level;
    }
    out << " band=" << band_name(d.band) << " rows=" << d.gains.rows()
        << " cols=" << d.gains.cols() << "\n";
    for (Eigen::Index r = 0; r < d.gains.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.gains.cols(); ++c)
            out << format_real(d.gains(r, c)) << (c + 1 == d.gains.cols() ? "\n" : ",");
    }
}

DecodingMatrix load_decoding_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("matrix: cannot read " + path);
    std::string header;
    std::getline(in, header);
    DecodingMatrix d;
    int rows = -1, cols = -1;
    std::istringstream hs(header);
    std::string tok;
    std::string kind = "ambisonics";
    while (hs >> tok) {
        if (tok.rfind("layout=", 0) == 0) d.layout_name = tok.substr(7);
        if (tok.rfind("format=", 0) == 0) kind = tok.substr(7);
        if (tok.rfind("order=", 0) == 0) d.format.order = std::stoi(tok.substr(6));
        if (tok.rfind("family=", 0) == 0) d.format.family = tok.substr(7);
        if (tok.rfind("level=", 0) == 0) d.format.level = std::stoi(tok.substr(6));
        if (tok.rfind("band=", 0) == 0) d.band = parse_band(tok.substr(5));
        if (tok.rfind("rows=", 0) == 0) rows = std::stoi(tok.substr(5));
        if (tok.rfind("cols=", 0) == 0) cols = std::stoi(tok.substr(5));
    }
    d.format.kind = kind == "swf" ? FormatSpec::Kind::swf : FormatSpec::Kind::ambisonics;
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("matrix: bad header in " + path);
    d.gains.resize(rows, cols);
    std::string line;
    for (int r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw std::invalid_argument("matrix: truncated " + path);
        const auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) != cols)
            throw std::invalid_argument("matrix: short row in " + path);
        for (int c = 0; c < cols; ++c) d.gains(r, c) = std::stod(cells[c]);
    }
    return d;
}

Eigen::MatrixXd load_frames_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("frames: cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(std::stod(c));
        if (!rows.empty() && rows.front().size() != row.size())
            throw std::invalid_argument("frames: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("frames: empty file " + path);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows.front().size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

void save_frames_csv(const Eigen::MatrixXd& frames, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("frames: cannot write " + path);
    for (Eigen::Index r = 0; r < frames.rows(); ++r)
        for (Eigen::Index c = 0; c < frames.cols(); ++c)
            out << format_real(frames(r, c)) << (c + 1 == frames.cols() ? "\n" : ",");
}

}  // namespace io
}  // namespace sphwave
