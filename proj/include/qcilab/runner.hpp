#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "qcilab/eliasson.hpp"
#include "qcilab/error.hpp"
#include "qcilab/masses.hpp"
#include "qcilab/quantization.hpp"
#include "qcilab/scaling.hpp"
#include "qcilab/surfaces.hpp"

namespace qcilab {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { MassSweep, SurfaceSpectrum, Blowup, Classify, Weyl };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::MassSweep: return "mass_sweep";
        case Experiment::SurfaceSpectrum: return "surface_spectrum";
        case Experiment::Blowup: return "blowup";
        case Experiment::Classify: return "classify";
        case Experiment::Weyl: return "weyl";
    }
    return "?";
}

struct MassParams {
    BlockKind kind = BlockKind::Hyperbolic;
    double s = 0.0;
    int k = 0;
    double t = 0.0;
    int n = 0;
    int m = 1;
    double delta = 0.4;
    std::vector<double> hbar{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double tol = 1e-8;
    bool operator==(const MassParams&) const = default;
};

struct SurfaceParams {
    SurfaceKind kind = SurfaceKind::RoundSphere;
    /// Revolution profile: "sphere", "oblate" or "table".
    std::string profile = "oblate";
    double oblate_c = 0.3;
    std::string table;
    /// Torus lattice basis, column-major (b11, b21, b12, b22).
    std::array<double, 4> lattice{1.0, 0.0, 0.0, 1.0};
    bool operator==(const SurfaceParams&) const = default;
};

struct SpectrumParams {
    int l_min = 0;
    int l_max = 10;
    std::vector<int> ms{0, 1, 2, 3};
    int count = 5;
    int mesh = 2000;
    bool operator==(const SpectrumParams&) const = default;
};

struct BlowupParams {
    std::vector<double> p{kInfinity, 6.0, 4.0};
    double delta = 0.4;
    double lambda_min = 20.0;
    double lambda_max = 400.0;
    int samples = 12;
    double ladder_c = 2.0;
    bool exploratory = false;
    bool operator==(const BlowupParams&) const = default;
};

struct ClassifyParams {
    std::uint64_t seed = 20240601;
    int trials = 100;
    /// Block compositions (hyperbolic, complex-hyperbolic, elliptic).
    std::vector<std::array<int, 3>> compositions{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
    double scale = 0.3;
    bool operator==(const ClassifyParams&) const = default;
};

struct WeylParams {
    std::vector<int> l{50, 80, 125, 200, 320, 500};
    Kernel kernel = Kernel::Fejer;
    int halfwidth = 12;
    double epsilon = 0.5;
    bool operator==(const WeylParams&) const = default;
};

struct RunConfig {
    Experiment experiment = Experiment::MassSweep;
    std::string output = "out";
    MassParams mass;
    SurfaceParams surface;
    SpectrumParams spectrum;
    BlowupParams blowup;
    ClassifyParams classify;
    WeylParams weyl;
    bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Text formats.

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

template <class T>
std::string join(const std::vector<T>& xs, const std::string& sep = ",") {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) os << sep;
        if constexpr (std::is_floating_point_v<T>) {
            os << format_double(xs[i]);
        } else {
            os << xs[i];
        }
    }
    return os.str();
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& field, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + text + "'");
    }
}

inline long long parse_integer(const std::string& field, const std::string& text) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected an integer, got '" + text + "'");
    }
}

inline int parse_int(const std::string& field, const std::string& text) {
    const long long v = parse_integer(field, text);
    if (v < -1000000000LL || v > 1000000000LL) throw ConfigError(field, "integer out of range");
    return static_cast<int>(v);
}

inline bool parse_bool(const std::string& field, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(field, "expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_doubles(const std::string& field, const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split(text)) out.push_back(parse_double(field, s));
    return out;
}

inline std::vector<int> parse_ints(const std::string& field, const std::string& text) {
    std::vector<int> out;
    for (const auto& s : split(text)) out.push_back(parse_int(field, s));
    return out;
}

inline Experiment parse_experiment(const std::string& field, const std::string& s) {
    for (auto e : {Experiment::MassSweep, Experiment::SurfaceSpectrum, Experiment::Blowup, Experiment::Classify,
                   Experiment::Weyl}) {
        if (s == to_string(e)) return e;
    }
    throw ConfigError(field, "unknown experiment '" + s + "'");
}

inline BlockKind parse_block_kind(const std::string& field, const std::string& s) {
    for (auto k : {BlockKind::Elliptic, BlockKind::Hyperbolic, BlockKind::ComplexHyperbolic, BlockKind::Regular}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError(field, "unknown block kind '" + s + "'");
}

inline SurfaceKind parse_surface_kind(const std::string& field, const std::string& s) {
    for (auto k : {SurfaceKind::FlatTorus, SurfaceKind::RoundSphere, SurfaceKind::Revolution}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError(field, "unknown surface '" + s + "'");
}

inline Kernel parse_kernel(const std::string& field, const std::string& s) {
    if (s == "fejer") return Kernel::Fejer;
    if (s == "jackson") return Kernel::Jackson;
    throw ConfigError(field, "unknown kernel '" + s + "'");
}

using Section = std::map<std::string, std::string>;
using Sections = std::map<std::string, Section>;

/// Every key of the format, in output order, per section.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> schema{
        {"run", {"experiment", "output"}},
        {"mass", {"kind", "s", "k", "t", "n", "m", "delta", "hbar", "tol"}},
        {"surface", {"kind", "profile", "oblate_c", "table", "lattice"}},
        {"spectrum", {"l_min", "l_max", "m", "count", "mesh"}},
        {"blowup", {"p", "delta", "lambda_min", "lambda_max", "samples", "ladder_c", "exploratory"}},
        {"classify", {"seed", "trials", "compositions", "scale"}},
        {"weyl", {"l", "kernel", "halfwidth", "epsilon"}},
    };
    return schema;
}

inline Sections to_sections(const RunConfig& c) {
    Sections s;
    s["run"] = {{"experiment", to_string(c.experiment)}, {"output", c.output}};
    s["mass"] = {{"kind", to_string(c.mass.kind)},
                 {"s", format_double(c.mass.s)},
                 {"k", std::to_string(c.mass.k)},
                 {"t", format_double(c.mass.t)},
                 {"n", std::to_string(c.mass.n)},
                 {"m", std::to_string(c.mass.m)},
                 {"delta", format_double(c.mass.delta)},
                 {"hbar", join(c.mass.hbar)},
                 {"tol", format_double(c.mass.tol)}};
    s["surface"] = {{"kind", to_string(c.surface.kind)},
                    {"profile", c.surface.profile},
                    {"oblate_c", format_double(c.surface.oblate_c)},
                    {"table", c.surface.table},
                    {"lattice", join(std::vector<double>(c.surface.lattice.begin(), c.surface.lattice.end()))}};
    s["spectrum"] = {{"l_min", std::to_string(c.spectrum.l_min)},
                     {"l_max", std::to_string(c.spectrum.l_max)},
                     {"m", join(c.spectrum.ms)},
                     {"count", std::to_string(c.spectrum.count)},
                     {"mesh", std::to_string(c.spectrum.mesh)}};
    s["blowup"] = {{"p", join(c.blowup.p)},
                   {"delta", format_double(c.blowup.delta)},
                   {"lambda_min", format_double(c.blowup.lambda_min)},
                   {"lambda_max", format_double(c.blowup.lambda_max)},
                   {"samples", std::to_string(c.blowup.samples)},
                   {"ladder_c", format_double(c.blowup.ladder_c)},
                   {"exploratory", c.blowup.exploratory ? "true" : "false"}};
    std::vector<std::string> comps;
    for (const auto& a : c.classify.compositions) {
        comps.push_back(std::to_string(a[0]) + ":" + std::to_string(a[1]) + ":" + std::to_string(a[2]));
    }
    s["classify"] = {{"seed", std::to_string(c.classify.seed)},
                     {"trials", std::to_string(c.classify.trials)},
                     {"compositions", join(comps)},
                     {"scale", format_double(c.classify.scale)}};
    s["weyl"] = {{"l", join(c.weyl.l)},
                 {"kernel", to_string(c.weyl.kernel)},
                 {"halfwidth", std::to_string(c.weyl.halfwidth)},
                 {"epsilon", format_double(c.weyl.epsilon)}};
    return s;
}

}  // namespace detail

/// Checks every parameter the chosen experiment uses against the
/// preconditions of the routines it calls.
inline void validate(const RunConfig& c) {
    auto require = [](bool ok, const char* field, const std::string& what) {
        if (!ok) throw ConfigError(field, what);
    };
    require(!c.output.empty(), "run.output", "must not be empty");
    switch (c.experiment) {
        case Experiment::MassSweep: {
            const auto& m = c.mass;
            require(!m.hbar.empty(), "mass.hbar", "needs at least one value");
            require(m.delta >= 0.0 && m.delta <= 0.5, "mass.delta", "must lie in [0, 1/2]");
            require(m.tol > 0.0, "mass.tol", "must be positive");
            const double hmax = m.kind == BlockKind::Hyperbolic ? 0.1 : 1.0;
            for (double h : m.hbar) {
                require(h > 0.0 && (h < hmax || (m.kind == BlockKind::Hyperbolic && h <= hmax)), "mass.hbar",
                        "every value must lie in (0, " + format_double(hmax) + (m.kind == BlockKind::Hyperbolic ? "]" : ")"));
            }
            if (m.kind == BlockKind::Hyperbolic) require(std::abs(m.s) <= 10.0, "mass.s", "|s| must not exceed 10");
            if (m.kind == BlockKind::ComplexHyperbolic) {
                require(std::abs(m.k) <= 20, "mass.k", "|k| must not exceed 20");
                require(std::abs(m.t) <= 10.0, "mass.t", "|t| must not exceed 10");
            }
            if (m.kind == BlockKind::Elliptic) require(m.n >= 0 && m.n <= 50, "mass.n", "must lie in [0, 50]");
            if (m.kind == BlockKind::Regular) require(std::abs(m.m) <= 100000, "mass.m", "|m| must not exceed 1e5");
            break;
        }
        case Experiment::SurfaceSpectrum: {
            const auto& s = c.spectrum;
            if (c.surface.kind == SurfaceKind::Revolution) {
                require(!s.ms.empty(), "spectrum.m", "needs at least one angular momentum");
                for (int m : s.ms) require(std::abs(m) <= 2000, "spectrum.m", "|m| must not exceed 2000");
                require(s.count >= 1 && s.count <= 200, "spectrum.count", "must lie in [1, 200]");
                require(s.mesh >= 100 && s.mesh <= 200000, "spectrum.mesh", "must lie in [100, 200000]");
            } else {
                require(s.l_min >= 0, "spectrum.l_min", "must be non-negative");
                require(s.l_max >= s.l_min && s.l_max <= 2000, "spectrum.l_max", "must lie in [l_min, 2000]");
            }
            break;
        }
        case Experiment::Blowup: {
            const auto& b = c.blowup;
            require(!b.p.empty(), "blowup.p", "needs at least one exponent");
            for (double p : b.p) require(p >= 2.0, "blowup.p", "every p must lie in [2, inf]");
            require(b.delta >= 0.0 && b.delta < 0.5, "blowup.delta", "must lie in [0, 1/2)");
            require(b.lambda_min >= 2.0, "blowup.lambda_min", "must be at least 2");
            require(b.lambda_max >= 10.0 * b.lambda_min && b.lambda_max <= 1500.0, "blowup.lambda_max",
                    "must span a decade above lambda_min and not exceed 1500");
            require(b.samples >= 5 && b.samples <= 200, "blowup.samples", "must lie in [5, 200]");
            require(b.ladder_c > 0.0, "blowup.ladder_c", "must be positive");
            break;
        }
        case Experiment::Classify: {
            const auto& k = c.classify;
            require(k.trials >= 1 && k.trials <= 100000, "classify.trials", "must lie in [1, 1e5]");
            require(!k.compositions.empty(), "classify.compositions", "needs at least one composition");
            for (const auto& a : k.compositions) {
                require(a[0] >= 0 && a[1] >= 0 && a[2] >= 0 && a[0] + 2 * a[1] + a[2] >= 1 &&
                            a[0] + 2 * a[1] + a[2] <= 12,
                        "classify.compositions", "each entry h:l:e needs 1 <= h + 2l + e <= 12");
            }
            require(k.scale > 0.0 && k.scale <= 2.0, "classify.scale", "must lie in (0, 2]");
            break;
        }
        case Experiment::Weyl: {
            const auto& w = c.weyl;
            require(!w.l.empty(), "weyl.l", "needs at least one degree");
            require(w.halfwidth >= 1 && w.halfwidth <= 100, "weyl.halfwidth", "must lie in [1, 100]");
            for (int l : w.l) require(l > w.halfwidth && l <= 1500, "weyl.l", "every degree must lie in (halfwidth, 1500]");
            require(w.epsilon > 0.0 && w.epsilon <= 1.0, "weyl.epsilon", "must lie in (0, 1]");
            break;
        }
    }
    if (c.experiment == Experiment::SurfaceSpectrum || c.experiment == Experiment::Blowup) {
        const auto& s = c.surface;
        if (s.kind == SurfaceKind::Revolution) {
            require(s.profile == "sphere" || s.profile == "oblate" || s.profile == "table", "surface.profile",
                    "must be sphere, oblate or table");
            if (s.profile == "oblate") require(s.oblate_c > -1.0 && s.oblate_c < 1.0, "surface.oblate_c", "must lie in (-1, 1)");
            if (s.profile == "table") require(!s.table.empty(), "surface.table", "must name a profile file");
        }
        if (s.kind == SurfaceKind::FlatTorus) {
            const double det = s.lattice[0] * s.lattice[3] - s.lattice[1] * s.lattice[2];
            require(std::abs(det) > 1e-12, "surface.lattice", "basis must be non-singular");
        }
    }
}

/// Reads the INI text format: sections [run], [mass], [surface], [spectrum],
/// [blowup], [classify], [weyl]; absent keys keep their defaults.
inline RunConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("(file)", e.message() + " at line " + std::to_string(e.line()));
    }
    std::map<std::string, std::set<std::string>> known;
    for (const auto& [sec, keys] : detail::config_schema()) known[sec].insert(keys.begin(), keys.end());
    for (const auto& [sec, node] : tree) {
        if (!known.count(sec)) throw ConfigError(sec, "unknown section");
        for (const auto& [key, value] : node) {
            if (!known[sec].count(key)) throw ConfigError(sec + "." + key, "unknown key");
        }
    }
    RunConfig c;
    auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(sec + "." + key, '.'))) return detail::trim(*v);
        return std::nullopt;
    };
    using namespace detail;
    if (auto v = get("run", "experiment")) c.experiment = parse_experiment("run.experiment", *v);
    if (auto v = get("run", "output")) c.output = *v;

    if (auto v = get("mass", "kind")) c.mass.kind = parse_block_kind("mass.kind", *v);
    if (auto v = get("mass", "s")) c.mass.s = parse_double("mass.s", *v);
    if (auto v = get("mass", "k")) c.mass.k = parse_int("mass.k", *v);
    if (auto v = get("mass", "t")) c.mass.t = parse_double("mass.t", *v);
    if (auto v = get("mass", "n")) c.mass.n = parse_int("mass.n", *v);
    if (auto v = get("mass", "m")) c.mass.m = parse_int("mass.m", *v);
    if (auto v = get("mass", "delta")) c.mass.delta = parse_double("mass.delta", *v);
    if (auto v = get("mass", "hbar")) c.mass.hbar = parse_doubles("mass.hbar", *v);
    if (auto v = get("mass", "tol")) c.mass.tol = parse_double("mass.tol", *v);

    if (auto v = get("surface", "kind")) c.surface.kind = parse_surface_kind("surface.kind", *v);
    if (auto v = get("surface", "profile")) c.surface.profile = *v;
    if (auto v = get("surface", "oblate_c")) c.surface.oblate_c = parse_double("surface.oblate_c", *v);
    if (auto v = get("surface", "table")) c.surface.table = *v;
    if (auto v = get("surface", "lattice")) {
        const auto xs = parse_doubles("surface.lattice", *v);
        if (xs.size() != 4) throw ConfigError("surface.lattice", "needs exactly 4 numbers");
        std::copy(xs.begin(), xs.end(), c.surface.lattice.begin());
    }

    if (auto v = get("spectrum", "l_min")) c.spectrum.l_min = parse_int("spectrum.l_min", *v);
    if (auto v = get("spectrum", "l_max")) c.spectrum.l_max = parse_int("spectrum.l_max", *v);
    if (auto v = get("spectrum", "m")) c.spectrum.ms = parse_ints("spectrum.m", *v);
    if (auto v = get("spectrum", "count")) c.spectrum.count = parse_int("spectrum.count", *v);
    if (auto v = get("spectrum", "mesh")) c.spectrum.mesh = parse_int("spectrum.mesh", *v);

    if (auto v = get("blowup", "p")) c.blowup.p = parse_doubles("blowup.p", *v);
    if (auto v = get("blowup", "delta")) c.blowup.delta = parse_double("blowup.delta", *v);
    if (auto v = get("blowup", "lambda_min")) c.blowup.lambda_min = parse_double("blowup.lambda_min", *v);
    if (auto v = get("blowup", "lambda_max")) c.blowup.lambda_max = parse_double("blowup.lambda_max", *v);
    if (auto v = get("blowup", "samples")) c.blowup.samples = parse_int("blowup.samples", *v);
    if (auto v = get("blowup", "ladder_c")) c.blowup.ladder_c = parse_double("blowup.ladder_c", *v);
    if (auto v = get("blowup", "exploratory")) c.blowup.exploratory = parse_bool("blowup.exploratory", *v);

    if (auto v = get("classify", "seed")) {
        const long long s = parse_integer("classify.seed", *v);
        if (s < 0) throw ConfigError("classify.seed", "must be non-negative");
        c.classify.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("classify", "trials")) c.classify.trials = parse_int("classify.trials", *v);
    if (auto v = get("classify", "compositions")) {
        c.classify.compositions.clear();
        for (const auto& item : split(*v)) {
            const auto parts = split(item, ':');
            if (parts.size() != 3) throw ConfigError("classify.compositions", "entries must read h:l:e");
            c.classify.compositions.push_back({parse_int("classify.compositions", parts[0]),
                                               parse_int("classify.compositions", parts[1]),
                                               parse_int("classify.compositions", parts[2])});
        }
    }
    if (auto v = get("classify", "scale")) c.classify.scale = parse_double("classify.scale", *v);

    if (auto v = get("weyl", "l")) c.weyl.l = parse_ints("weyl.l", *v);
    if (auto v = get("weyl", "kernel")) c.weyl.kernel = parse_kernel("weyl.kernel", *v);
    if (auto v = get("weyl", "halfwidth")) c.weyl.halfwidth = parse_int("weyl.halfwidth", *v);
    if (auto v = get("weyl", "epsilon")) c.weyl.epsilon = parse_double("weyl.epsilon", *v);
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(file)", "cannot read '" + path.string() + "'");
    return parse_config(in);
}

/// Full INI text of a config; parse_config(to_ini(c)) == c.
inline std::string to_ini(const RunConfig& c) {
    const auto sections = detail::to_sections(c);
    std::ostringstream os;
    for (const auto& [sec, keys] : detail::config_schema()) {
        os << "[" << sec << "]\n";
        for (const auto& key : keys) os << key << " = " << sections.at(sec).at(key) << "\n";
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Experiments.

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct PlotData {
    std::string name;
    std::vector<std::array<double, 2>> points;
};

struct Artifacts {
    std::vector<Table> tables;
    std::vector<PlotData> plots;
};

inline SurfaceModel make_surface(const SurfaceParams& s) {
    switch (s.kind) {
        case SurfaceKind::FlatTorus: {
            Eigen::Matrix2d b;
            b << s.lattice[0], s.lattice[2], s.lattice[1], s.lattice[3];
            return SurfaceModel::flat_torus(b);
        }
        case SurfaceKind::RoundSphere: return SurfaceModel::round_sphere();
        case SurfaceKind::Revolution:
            if (s.profile == "sphere") return SurfaceModel::revolution(Profile::sphere());
            if (s.profile == "oblate") return SurfaceModel::revolution(Profile::oblate(s.oblate_c));
            return SurfaceModel::revolution(Profile::from_table(s.table));
    }
    throw ConfigError("surface.kind", "unsupported surface");
}

namespace detail {

inline std::string f17(double v) { return format_double(v); }

inline Artifacts run_mass(const MassParams& p, Parallelism par) {
    std::vector<MassReport> reps(p.hbar.size());
    parallel_for(p.hbar.size(), par, [&](std::size_t i) {
        const double h = p.hbar[i];
        switch (p.kind) {
            case BlockKind::Elliptic: reps[i] = mass_elliptic(p.n, h, p.delta); break;
            case BlockKind::Hyperbolic: reps[i] = mass_hyperbolic(p.s, h, p.delta, p.tol); break;
            case BlockKind::ComplexHyperbolic: reps[i] = mass_complex_hyperbolic(p.k, p.t, h, p.delta, p.tol); break;
            case BlockKind::Regular: reps[i] = mass_regular(p.m, h, p.delta); break;
        }
    });
    Table t{"mass", {"hbar", "delta", "value", "asymptote", "deficit"}, {}};
    PlotData plot{"mass_deficit", {}};
    for (const auto& r : reps) {
        t.rows.push_back({f17(r.hbar), f17(r.delta), f17(r.value), f17(r.asymptote), f17(r.log_deficit)});
        plot.points.push_back({r.hbar, r.log_deficit});
    }
    return {{t}, {plot}};
}

inline Artifacts run_spectrum(const RunConfig& c, Parallelism par) {
    const SurfaceModel surface = make_surface(c.surface);
    const auto& s = c.spectrum;
    Table t{"spectrum", {"m", "index", "lambda_sq", "lambda", "error"}, {}};
    PlotData plot{"spectrum", {}};
    auto add = [&](int m, int index, double lsq, double err) {
        const double lambda = JointEigenvalue{lsq, m, index}.lambda();
        t.rows.push_back({std::to_string(m), std::to_string(index), f17(lsq), f17(lambda), f17(err)});
        plot.points.push_back({lambda, static_cast<double>(m)});
    };
    if (surface.kind == SurfaceKind::Revolution) {
        std::vector<RadialSpectrum> parts(s.ms.size());
        parallel_for(s.ms.size(), par, [&](std::size_t i) {
            parts[i] = radial_eigenvalues(surface.profile, s.ms[i], static_cast<std::size_t>(s.count),
                                          static_cast<std::size_t>(s.mesh));
        });
        for (std::size_t i = 0; i < s.ms.size(); ++i) {
            for (std::size_t j = 0; j < parts[i].lambda_sq.size(); ++j) {
                add(s.ms[i], static_cast<int>(j), parts[i].lambda_sq[j], parts[i].error[j]);
            }
        }
    } else if (surface.kind == SurfaceKind::RoundSphere) {
        for (const auto& e : sphere_joint_spectrum(s.l_min, s.l_max)) add(e.m, e.index, e.lambda_sq, 0.0);
    } else {
        // Lattice modes (m1, m2) with max(|m1|, |m2|) in [l_min, l_max].
        const Eigen::Matrix2d dual = 2.0 * kPi * surface.lattice.transpose().inverse();
        for (int m1 = -s.l_max; m1 <= s.l_max; ++m1) {
            for (int m2 = -s.l_max; m2 <= s.l_max; ++m2) {
                if (std::max(std::abs(m1), std::abs(m2)) < s.l_min) continue;
                add(m1, m2, (dual * Eigen::Vector2d(m1, m2)).squaredNorm(), 0.0);
            }
        }
    }
    return {{t}, {plot}};
}

inline std::string p_label(double p) { return std::isfinite(p) ? f17(p) : "inf"; }

inline Artifacts run_blowup(const RunConfig& c, Parallelism par) {
    const SurfaceModel surface = make_surface(c.surface);
    const auto& b = c.blowup;
    BlowupOptions opt;
    opt.p_list = b.p;
    opt.delta = b.delta;
    opt.lambda_window = {b.lambda_min, b.lambda_max};
    opt.samples = static_cast<std::size_t>(b.samples);
    opt.ladder_c = b.ladder_c;
    opt.exploratory = b.exploratory;
    opt.par = par;
    const BlowupReport rep = blowup_report(surface, opt);
    Table samples{"blowup_samples",
                  {"lambda", "hbar", "q1", "q2", "ladder_size", "tube_mass", "tube_volume", "p", "norm", "holder"},
                  {}};
    std::vector<PlotData> plots;
    for (std::size_t k = 0; k < b.p.size(); ++k) plots.push_back({"blowup_p" + p_label(b.p[k]), {}});
    for (const auto& s : rep.samples) {
        for (std::size_t k = 0; k < b.p.size(); ++k) {
            const bool leaf = !s.holder.empty();
            samples.rows.push_back({f17(s.lambda), f17(s.hbar), std::to_string(s.quantum_numbers.at(0)),
                                    std::to_string(s.quantum_numbers.at(1)), std::to_string(s.ladder_size),
                                    leaf ? f17(s.tube_mass) : "nan", leaf ? f17(s.tube_volume) : "nan",
                                    p_label(b.p[k]), f17(s.norms[k]), leaf ? f17(s.holder[k]) : "nan"});
            plots[k].points.push_back({s.lambda, s.norms[k]});
        }
    }
    Table fits{"blowup_fits",
               {"p", "exponent", "intercept", "residual", "holder_exponent", "target_ideal", "target_delta",
                "exploratory_target", "sample_count", "lambda_min", "lambda_max"},
               {}};
    for (const auto& f : rep.fits) {
        fits.rows.push_back({p_label(f.p), f17(f.measured.exponent), f17(f.measured.intercept),
                             f17(f.measured.residual), f.holder ? f17(f.holder->exponent) : "nan",
                             f17(f.target_ideal), f17(f.target_delta),
                             f.exploratory_target ? f17(*f.exploratory_target) : "nan",
                             std::to_string(f.measured.sample_count), f17(f.measured.window[0]),
                             f17(f.measured.window[1])});
    }
    return {{samples, fits}, plots};
}

inline Artifacts run_classify(const ClassifyParams& p) {
    std::mt19937_64 rng(p.seed);
    Table t{"classify",
            {"trial", "h", "l", "e", "got_h", "got_l", "got_e", "correct", "cartan"},
            {}};
    PlotData plot{"classify_accuracy", {}};
    std::size_t correct = 0, total = 0;
    for (int trial = 0; trial < p.trials; ++trial) {
        for (const auto& comp : p.compositions) {
            const int d = comp[0] + 2 * comp[1] + comp[2];
            const Eigen::MatrixXd s = random_symplectic(d, rng, p.scale);
            const QuadraticHamiltonian q = conjugate(model_hamiltonian(comp[0], comp[1], comp[2]), s);
            std::vector<QuadraticHamiltonian> fam;
            for (const auto& g : model_family(comp[0], comp[1], comp[2])) fam.push_back(conjugate(g, s));
            const BlockDecomposition got = classify(q);
            const bool ok = got.hyperbolic == comp[0] && got.complex_hyperbolic == comp[1] && got.elliptic == comp[2];
            const bool cartan = is_cartan(fam).is_cartan;
            correct += ok && cartan ? 1 : 0;
            ++total;
            t.rows.push_back({std::to_string(trial), std::to_string(comp[0]), std::to_string(comp[1]),
                              std::to_string(comp[2]), std::to_string(got.hyperbolic),
                              std::to_string(got.complex_hyperbolic), std::to_string(got.elliptic), ok ? "1" : "0",
                              cartan ? "1" : "0"});
        }
        plot.points.push_back({static_cast<double>(trial), static_cast<double>(correct) / static_cast<double>(total)});
    }
    return {{t}, {plot}};
}

inline Artifacts run_weyl(const WeylParams& p, Parallelism par) {
    std::vector<double> values(p.l.size());
    parallel_for(p.l.size(), par,
                 [&](std::size_t i) { values[i] = sphere_equatorial_average(p.l[i], p.kernel, p.halfwidth, p.epsilon); });
    Table t{"weyl", {"l", "hbar", "average"}, {}};
    PlotData plot{"weyl", {}};
    for (std::size_t i = 0; i < p.l.size(); ++i) {
        const double h = 1.0 / std::sqrt(p.l[i] * (p.l[i] + 1.0));
        t.rows.push_back({std::to_string(p.l[i]), f17(h), f17(values[i])});
        plot.points.push_back({h, values[i]});
    }
    return {{t}, {plot}};
}

inline std::string csv_text(const Table& t) {
    std::ostringstream os;
    os << join(t.header) << "\n";
    for (const auto& r : t.rows) os << join(r) << "\n";
    return os.str();
}

inline std::string dat_text(const PlotData& p) {
    std::ostringstream os;
    for (const auto& [x, y] : p.points) os << format_double(x) << " " << format_double(y) << "\n";
    return os.str();
}

inline std::uint32_t crc32(const std::string& bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Runs the experiment without touching the file system.
inline Artifacts compute(const RunConfig& c, Parallelism par = {}) {
    validate(c);
    switch (c.experiment) {
        case Experiment::MassSweep: return detail::run_mass(c.mass, par);
        case Experiment::SurfaceSpectrum: return detail::run_spectrum(c, par);
        case Experiment::Blowup: return detail::run_blowup(c, par);
        case Experiment::Classify: return detail::run_classify(c.classify);
        case Experiment::Weyl: return detail::run_weyl(c.weyl, par);
    }
    return {};
}

/// Output directory: explicit argument, else QCILAB_OUT_DIR, else the config.
inline std::filesystem::path resolve_output(const RunConfig& c, const std::string& explicit_dir = {}) {
    if (!explicit_dir.empty()) return explicit_dir;
    if (const char* env = std::getenv("QCILAB_OUT_DIR"); env && *env) return env;
    return c.output;
}

struct RunResult {
    std::filesystem::path directory;
    std::vector<std::filesystem::path> files;
};

/// Computes, then writes <name>.csv, <name>.dat and manifest.json from a
/// single thread. Files already written are removed if any step fails.
inline RunResult run(const RunConfig& c, const std::filesystem::path& out, Parallelism par = {}) {
    namespace fs = std::filesystem;
    const Artifacts art = compute(c, par);
    RunResult res{out, {}};
    const bool created = !fs::exists(out);
    try {
        fs::create_directories(out);
        auto write = [&](const std::string& file, const std::string& text) {
            const fs::path path = out / file;
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error("cannot open '" + path.string() + "' for writing");
            res.files.push_back(path);
            f << text;
            f.close();
            if (!f) throw Error("cannot write '" + path.string() + "'");
        };
        nlohmann::ordered_json manifest;
        manifest["version"] = kVersion;
        manifest["experiment"] = to_string(c.experiment);
        manifest["config"] = to_ini(c);
        manifest["tables"] = nlohmann::ordered_json::array();
        manifest["plots"] = nlohmann::ordered_json::array();
        for (const auto& t : art.tables) {
            const std::string text = detail::csv_text(t);
            write(t.name + ".csv", text);
            char crc[16];
            std::snprintf(crc, sizeof crc, "%08x", detail::crc32(text));
            manifest["tables"].push_back(
                {{"file", t.name + ".csv"}, {"rows", t.rows.size()}, {"columns", t.header}, {"crc32", crc}});
        }
        for (const auto& p : art.plots) {
            const std::string text = detail::dat_text(p);
            write(p.name + ".dat", text);
            char crc[16];
            std::snprintf(crc, sizeof crc, "%08x", detail::crc32(text));
            manifest["plots"].push_back({{"file", p.name + ".dat"}, {"points", p.points.size()}, {"crc32", crc}});
        }
        manifest["created"] = detail::utc_timestamp();
        write("manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        for (const auto& f : res.files) fs::remove(f, ec);
        if (created) fs::remove(out, ec);
        throw;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Embedded oracle cross-checks.

struct OracleCheck {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline std::vector<OracleCheck> verify_oracles() {
    std::vector<OracleCheck> out;
    auto check = [&](std::string name, auto&& fn, double expected, double tol) {
        OracleCheck c{std::move(name), std::numeric_limits<double>::quiet_NaN(), expected, tol, false};
        try {
            c.value = fn();
            c.pass = std::abs(c.value - expected) <= tol;
        } catch (const std::exception&) {
            c.pass = false;
        }
        out.push_back(c);
    };
    check("torus mode sup norm", [] { return lp_norm(torus_eigenfunction(3, -2), kInfinity); }, 1.0, 1e-12);
    check("torus mode L4 norm", [] { return lp_norm(torus_eigenfunction(3, -2), 4.0); }, 1.0, 1e-12);
    check("Y_1^0 sup norm", [] { return lp_norm(sphere_harmonic(1, 0), kInfinity); }, std::sqrt(3.0 / (4.0 * kPi)),
          1e-4);
    check("|Gamma(1/2)|^2", [] { return gamma_modulus_sq_critical(0.0); }, kPi, 1e-12);
    check("Bessel-Mellin limit modulus k=0 t=0", [] { return std::abs(BesselMellinPartial(0, 0.0).limit()); }, 1.0,
          1e-4);
    check("Fresnel-type limit |F(inf, 0)|^2", [] { return std::norm(OscillatoryPartial(0.0).limit()); }, kPi, 1e-10);
    check("elliptic mass n=0", [] { return mass_elliptic(0, 1e-4, 0.4).value; }, 1.0, 1e-2);
    check("classification of a (1,1,1) model", [] {
        const auto d = classify(model_hamiltonian(1, 1, 1));
        return static_cast<double>(d.hyperbolic * 100 + d.complex_hyperbolic * 10 + d.elliptic);
    }, 111.0, 0.0);
    check("sin-profile radial eigenvalue m=2", [] {
        return radial_eigenvalues(Profile::sphere(), 2, 1).lambda_sq.front();
    }, 6.0, 6e-6);
    check("Op(1) is the identity", [] {
        const Axis ax = Axis::centered(0.0, 0.001, 1024);
        std::vector<cplx> v(ax.size());
        for (std::size_t i = 0; i < ax.size(); ++i) v[i] = std::polar(std::exp(-ax.nodes[i] * ax.nodes[i] / 0.02), 30.0 * ax.nodes[i]);
        const GridFunction u(ax, v, 0.01);
        const GridFunction w = quantize(Symbol::constant(1.0), 0.01, u);
        double err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(w[i] - u[i]));
        return err;
    }, 0.0, 1e-10);
    check("power-law exponent fit", [] {
        std::vector<std::pair<double, double>> s;
        for (double l : {10.0, 100.0, 1000.0, 1e4, 3e4}) s.emplace_back(l, std::pow(l, 0.25));
        return fit_exponent(s).exponent;
    }, 0.25, 1e-10);
    return out;
}

}  // namespace qcilab
