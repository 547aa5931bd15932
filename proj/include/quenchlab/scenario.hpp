#pragma once

// Declarative scenario configuration: a sectioned key = value text format
// with [domain], [coefficients], [exponents], [initial], [run], [bounds] and
// an optional [sweep] section. Initial data are named radial/planar profiles
// or flat binary grid files. Parse errors carry file and line.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quenchlab/bounds.hpp"
#include "quenchlab/coefficients.hpp"
#include "quenchlab/evolution.hpp"
#include "quenchlab/grid.hpp"

namespace quenchlab {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file_(file),
          line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

struct InitialProfile {
    enum class Kind { Zero, RadialBump, SinSq, Phi1, GridFile };
    Kind kind = Kind::Zero;
    double amplitude = 0.0;
    int power = 2;      // RadialBump exponent
    std::string path;   // GridFile
};

struct OutputOptions {
    bool csv = false;
    bool json = false;
    bool svg = false;
    std::filesystem::path outdir;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::filesystem::path source_path;
    DomainDescriptor domain;
    SystemCoefficients coefficients;
    double p = 2.0, q = 2.0;
    InitialProfile u0, v0;
    double amplitude_scale = 1.0;  // sweep override hook
    double horizon = 1.0;
    double blowup_threshold = 1e8;
    double dt_max = 0.0;
    double safety = 0.1;
    OutputOptions outputs;
    EpsilonMode epsilon_mode = EpsilonMode::equal_split();
    double envelope_horizon = 0.0;  // 0 -> run horizon
    std::map<std::string, std::vector<double>> sweep;  // parameter -> values
};

// ---------------------------------------------------------------------------
// grid field files: 16-byte header (8-byte magic, u64 little-endian node
// count) followed by node count doubles
// ---------------------------------------------------------------------------

inline constexpr char kFieldFileMagic[8] = {'Q', 'L', 'F', 'I', 'E', 'L', 'D', '1'};

inline void write_field_file(const std::filesystem::path& path, const Field& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open field file for writing: " + path.string());
    out.write(kFieldFileMagic, 8);
    const std::uint64_t n = field.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing field file: " + path.string());
}

inline std::vector<double> read_field_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open field file: " + path.string());
    char magic[8];
    std::uint64_t n = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || std::memcmp(magic, kFieldFileMagic, 8) != 0)
        throw std::invalid_argument("not a field file: " + path.string());
    std::vector<double> values(n);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::invalid_argument("truncated field file: " + path.string());
    return values;
}

namespace detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    return parts;
}

}  // namespace detail

/// Parse a coefficient value: a plain number (constant) or a comma-separated
/// list of t:value breakpoints (piecewise-linear table).
inline CoefficientProfile parse_coefficient(const std::string& text, const std::string& file,
                                            int line) {
    double v;
    if (detail::parse_double(text, v)) return CoefficientProfile::constant(v);
    std::vector<std::pair<double, double>> pts;
    for (const std::string& item : detail::split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(file, line, "expected number or t:value table, got '" + text + "'");
        double t, val;
        if (!detail::parse_double(item.substr(0, colon), t) ||
            !detail::parse_double(item.substr(colon + 1), val))
            throw ConfigError(file, line, "bad table entry '" + item + "'");
        pts.emplace_back(t, val);
    }
    if (pts.empty()) throw ConfigError(file, line, "empty coefficient table");
    try {
        return CoefficientProfile::table(std::move(pts));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(file, line, e.what());
    }
}

/// Initial profiles: `0`, `A*(1-(r/R)^2)^K`, `A*phi1`, `A*sinsq`, `file:path`.
inline InitialProfile parse_initial_profile(const std::string& text, const std::string& file,
                                            int line) {
    InitialProfile prof;
    const std::string t = detail::trim(text);
    if (t == "0" || t == "0.0") {
        prof.kind = InitialProfile::Kind::Zero;
        return prof;
    }
    if (t.rfind("file:", 0) == 0) {
        prof.kind = InitialProfile::Kind::GridFile;
        prof.path = detail::trim(t.substr(5));
        prof.amplitude = 1.0;
        if (prof.path.empty()) throw ConfigError(file, line, "empty field file path");
        return prof;
    }
    const auto star = t.find('*');
    if (star == std::string::npos || !detail::parse_double(t.substr(0, star), prof.amplitude))
        throw ConfigError(file, line,
                          "initial profile must be 'amp*(1-(r/R)^2)^k', 'amp*phi1', "
                          "'amp*sinsq', 'file:path' or '0'");
    const std::string shape = detail::trim(t.substr(star + 1));
    if (shape == "phi1") {
        prof.kind = InitialProfile::Kind::Phi1;
        return prof;
    }
    if (shape == "sinsq") {
        prof.kind = InitialProfile::Kind::SinSq;
        return prof;
    }
    // (1-(r/R)^2)^k
    const std::string base = "(1-(r/R)^2)^";
    if (shape.rfind(base, 0) == 0) {
        double kf;
        if (detail::parse_double(shape.substr(base.size()), kf) && kf >= 2.0 &&
            kf == std::floor(kf)) {
            prof.kind = InitialProfile::Kind::RadialBump;
            prof.power = static_cast<int>(kf);
            return prof;
        }
        throw ConfigError(file, line, "bump exponent must be an integer >= 2");
    }
    throw ConfigError(file, line, "unknown initial profile shape '" + shape + "'");
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    const std::string fname = path.string();
    if (!in) throw ConfigError(fname, 0, "cannot open scenario file");

    ScenarioConfig cfg;
    cfg.source_path = path;
    cfg.name = path.stem().string();
    cfg.envelope_horizon = 0.0;

    static const std::set<std::string> known_sections = {"domain",  "coefficients", "exponents",
                                                         "initial", "run",          "bounds",
                                                         "sweep"};
    static const std::set<std::string> sweep_keys = {"amplitude", "p",  "q",  "k1", "k2",
                                                     "delta1",    "delta2", "h1", "h2"};

    std::string section;
    std::string linetext;
    int lineno = 0;
    bool saw_domain = false, saw_exponents = false, saw_initial = false, saw_run = false;

    auto need_positive = [&](double v, const std::string& what) {
        if (!(v > 0.0)) throw ConfigError(fname, lineno, what + " must be positive");
        return v;
    };

    while (std::getline(in, linetext)) {
        ++lineno;
        const auto hash = linetext.find('#');
        if (hash != std::string::npos) linetext.erase(hash);
        const std::string line = detail::trim(linetext);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(fname, lineno, "malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw ConfigError(fname, lineno, "unknown section [" + section + "]");
            if (section == "domain") saw_domain = true;
            if (section == "exponents") saw_exponents = true;
            if (section == "initial") saw_initial = true;
            if (section == "run") saw_run = true;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fname, lineno, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(fname, lineno, "expected key = value");

        auto as_double = [&]() {
            double v;
            if (!detail::parse_double(value, v))
                throw ConfigError(fname, lineno, "expected a number for '" + key + "'");
            return v;
        };

        if (section.empty()) {
            if (key == "name") {
                cfg.name = value;
                continue;
            }
            throw ConfigError(fname, lineno, "key '" + key + "' outside any section");
        }

        if (section == "domain") {
            if (key == "kind") {
                if (value == "ball")
                    cfg.domain.kind = DomainKind::Ball;
                else if (value == "rectangle")
                    cfg.domain.kind = DomainKind::Rectangle;
                else
                    throw ConfigError(fname, lineno, "kind must be 'ball' or 'rectangle'");
            } else if (key == "dimension") {
                cfg.domain.dimension = static_cast<int>(as_double());
            } else if (key == "radius") {
                cfg.domain.radius = need_positive(as_double(), "radius");
            } else if (key == "lx") {
                cfg.domain.lx = need_positive(as_double(), "lx");
            } else if (key == "ly") {
                cfg.domain.ly = need_positive(as_double(), "ly");
            } else if (key == "resolution") {
                cfg.domain.resolution = static_cast<int>(as_double());
                if (cfg.domain.resolution < 8)
                    throw ConfigError(fname, lineno, "resolution must be >= 8");
            } else {
                throw ConfigError(fname, lineno, "unknown domain key '" + key + "'");
            }
        } else if (section == "coefficients") {
            CoefficientProfile prof = parse_coefficient(value, fname, lineno);
            const double lo = prof.inf(0.0, 1e30), hi = prof.sup(0.0, 1e30);
            if (key == "delta1" || key == "delta2") {
                if (lo <= 0.0)
                    throw ConfigError(fname, lineno, key + " must be positive (hypothesis)");
                (key == "delta1" ? cfg.coefficients.delta1 : cfg.coefficients.delta2) = prof;
            } else if (key == "h1" || key == "h2") {
                if (lo < 0.0)
                    throw ConfigError(fname, lineno, key + " must be nonnegative (hypothesis)");
                (key == "h1" ? cfg.coefficients.h1 : cfg.coefficients.h2) = prof;
            } else if (key == "k1" || key == "k2") {
                if (lo < 0.0)
                    throw ConfigError(fname, lineno, key + " must be nonnegative");
                (key == "k1" ? cfg.coefficients.k1 : cfg.coefficients.k2) = prof;
                (void)hi;
            } else {
                throw ConfigError(fname, lineno, "unknown coefficient '" + key + "'");
            }
        } else if (section == "exponents") {
            if (key == "p")
                cfg.p = as_double();
            else if (key == "q")
                cfg.q = as_double();
            else
                throw ConfigError(fname, lineno, "unknown exponent key '" + key + "'");
        } else if (section == "initial") {
            if (key == "u0")
                cfg.u0 = parse_initial_profile(value, fname, lineno);
            else if (key == "v0")
                cfg.v0 = parse_initial_profile(value, fname, lineno);
            else
                throw ConfigError(fname, lineno, "unknown initial key '" + key + "'");
        } else if (section == "run") {
            if (key == "horizon")
                cfg.horizon = need_positive(as_double(), "horizon");
            else if (key == "blowup_threshold")
                cfg.blowup_threshold = need_positive(as_double(), "blowup_threshold");
            else if (key == "dt_max")
                cfg.dt_max = need_positive(as_double(), "dt_max");
            else if (key == "safety")
                cfg.safety = need_positive(as_double(), "safety");
            else if (key == "outputs") {
                for (const std::string& o : detail::split(value, ',')) {
                    if (o == "csv")
                        cfg.outputs.csv = true;
                    else if (o == "json")
                        cfg.outputs.json = true;
                    else if (o == "svg")
                        cfg.outputs.svg = true;
                    else
                        throw ConfigError(fname, lineno, "unknown output '" + o + "'");
                }
            } else if (key == "outdir")
                cfg.outputs.outdir = value;
            else
                throw ConfigError(fname, lineno, "unknown run key '" + key + "'");
        } else if (section == "bounds") {
            if (key == "epsilon_mode") {
                if (value == "equal-split")
                    cfg.epsilon_mode = EpsilonMode::equal_split();
                else if (value == "optimized")
                    cfg.epsilon_mode = EpsilonMode::optimized();
                else if (value.rfind("optimized:", 0) == 0) {
                    double th;
                    if (!detail::parse_double(value.substr(10), th) || !(th > 0.0 && th < 1.0))
                        throw ConfigError(fname, lineno, "theta must lie in (0, 1)");
                    cfg.epsilon_mode = EpsilonMode::optimized(th);
                } else
                    throw ConfigError(fname, lineno,
                                      "epsilon_mode must be 'equal-split', 'optimized' or "
                                      "'optimized:<theta>'");
            } else if (key == "envelope_horizon")
                cfg.envelope_horizon = need_positive(as_double(), "envelope_horizon");
            else
                throw ConfigError(fname, lineno, "unknown bounds key '" + key + "'");
        } else if (section == "sweep") {
            if (!sweep_keys.count(key))
                throw ConfigError(fname, lineno, "unknown sweep parameter '" + key + "'");
            std::vector<double> vals;
            for (const std::string& item : detail::split(value, ',')) {
                double v;
                if (!detail::parse_double(item, v))
                    throw ConfigError(fname, lineno, "bad sweep value '" + item + "'");
                vals.push_back(v);
            }
            cfg.sweep[key] = std::move(vals);
        }
    }

    if (!saw_domain) throw ConfigError(fname, 0, "missing [domain] section");
    if (!saw_exponents) throw ConfigError(fname, 0, "missing [exponents] section");
    if (!saw_initial) throw ConfigError(fname, 0, "missing [initial] section");
    if (!saw_run) throw ConfigError(fname, 0, "missing [run] section");

    try {
        cfg.domain.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fname, 0, e.what());
    }
    if (!(cfg.p >= cfg.q && cfg.q > 1.0))
        throw ConfigError(fname, 0, "exponents must satisfy p >= q > 1 (hypothesis)");
    if (cfg.u0.kind == InitialProfile::Kind::RadialBump && cfg.domain.kind != DomainKind::Ball)
        throw ConfigError(fname, 0, "radial bump profile requires a ball domain");
    if (cfg.u0.kind == InitialProfile::Kind::SinSq && cfg.domain.kind != DomainKind::Rectangle)
        throw ConfigError(fname, 0, "sinsq profile requires a rectangle domain");
    if (cfg.v0.kind == InitialProfile::Kind::RadialBump && cfg.domain.kind != DomainKind::Ball)
        throw ConfigError(fname, 0, "radial bump profile requires a ball domain");
    if (cfg.v0.kind == InitialProfile::Kind::SinSq && cfg.domain.kind != DomainKind::Rectangle)
        throw ConfigError(fname, 0, "sinsq profile requires a rectangle domain");
    return cfg;
}

/// Build the nodal field of an initial profile; phi1 is required for the
/// eigenfunction profile. Amplitudes are multiplied by the sweep scale.
inline Field materialize_initial(const InitialProfile& prof, const Grid& grid,
                                 const Field* phi1, double amplitude_scale,
                                 const std::filesystem::path& base_dir) {
    const double amp = prof.amplitude * amplitude_scale;
    switch (prof.kind) {
        case InitialProfile::Kind::Zero:
            return Field::zeros(grid);
        case InitialProfile::Kind::RadialBump: {
            const double R = grid.descriptor().radius;
            const int k = prof.power;
            return Field::sample_radial(grid, [amp, R, k](double r) {
                return amp * std::pow(1.0 - (r / R) * (r / R), k);
            });
        }
        case InitialProfile::Kind::SinSq: {
            const double lx = grid.descriptor().lx, ly = grid.descriptor().ly;
            return Field::sample_xy(grid, [amp, lx, ly](double x, double y) {
                const double sx = std::sin(std::numbers::pi * x / lx);
                const double sy = std::sin(std::numbers::pi * y / ly);
                return amp * sx * sx * sy * sy;
            });
        }
        case InitialProfile::Kind::Phi1: {
            if (!phi1) throw std::invalid_argument("phi1 profile requires the eigenfunction");
            Field f = *phi1;
            for (double& v : f.values) v *= amp;
            return f;
        }
        case InitialProfile::Kind::GridFile: {
            std::filesystem::path p = prof.path;
            if (p.is_relative()) p = base_dir / p;
            std::vector<double> values = read_field_file(p);
            if (values.size() != grid.node_count())
                throw std::invalid_argument("field file node count does not match the grid");
            Field f;
            f.values = std::move(values);
            for (double& v : f.values) v *= amp;
            return f;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace quenchlab
