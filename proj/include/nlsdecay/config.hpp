#pragma once

// Scenario configuration: a flat INI-style document
//
//     name = free-soliton        # top-level keys before any section
//     [grid]
//     half_width = 20
//     num_points = 4001
//
// '#' comments run to the end of the line; ';' comments must start the line.
// Lists are comma separated; lists of pairs (rate_windows) separate pairs
// with ';'. Unknown sections, unknown keys and
// duplicate keys are errors. The full schema lives in docs/config.md.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nlsdecay/bootstrap.hpp"
#include "nlsdecay/decay.hpp"
#include "nlsdecay/errors.hpp"
#include "nlsdecay/model.hpp"
#include "nlsdecay/spectral.hpp"

namespace nlsdecay {

// ---------------------------------------------------------------------------
// INI document
// ---------------------------------------------------------------------------

struct IniEntry {
    std::string value;
    int line = 0;
};

using IniSection = std::map<std::string, IniEntry>;

struct IniDocument {
    std::map<std::string, IniSection> sections;  ///< "" holds top-level keys
    std::map<std::string, int> section_lines;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// Section -> permitted keys.
inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"", {"name", "description"}},
        {"grid", {"half_width", "num_points"}},
        {"potential",
         {"kind", "value", "mean", "amplitudes", "wavenumbers", "period", "gamma", "beta", "gamma0",
          "x", "values", "class", "limit", "lower_bound"}},
        {"nonlinearity", {"kind", "exponent", "amplitude", "saturation", "growth_constant"}},
        {"seed", {"profile", "amplitude", "width", "modulation", "wavenumber", "rate"}},
        {"solver", {"method", "tolerance", "max_iter", "damping_floor", "ladder"}},
        {"spectrum", {"scan_low", "scan_high", "resolution", "steps", "eigenvalues", "tolerance"}},
        {"decay",
         {"branches", "fit_window", "floor", "rate_window", "rate_windows", "vanishing_radii"}},
        {"bootstrap", {"dimension", "p", "epsilon"}},
        {"output", {"report", "csv"}},
    };
    return s;
}

}  // namespace detail

inline IniDocument parse_ini(const std::string& text) {
    IniDocument doc;
    doc.sections[""];
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    const auto& schema = detail::schema();
    while (std::getline(in, raw)) {
        ++line;
        // '#' starts a comment anywhere; ';' only at the start of a line, since
        // it also separates pairs in list values.
        const auto hash = raw.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty() || body.front() == ';') continue;
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ConfigError("config line " + std::to_string(line) + ": malformed section header");
            }
            current = detail::trim(std::string_view(body).substr(1, body.size() - 2));
            if (!schema.contains(current) || current.empty()) {
                throw ConfigError("config line " + std::to_string(line) + ": unknown section [" + current + "]");
            }
            if (doc.section_lines.contains(current)) {
                throw ConfigError("config line " + std::to_string(line) + ": duplicate section [" + current + "]");
            }
            doc.section_lines[current] = line;
            doc.sections[current];
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        const std::string where = current.empty() ? key : "[" + current + "] " + key;
        if (key.empty()) throw ConfigError("config line " + std::to_string(line) + ": empty key");
        if (!schema.at(current).contains(key)) {
            throw ConfigError("config line " + std::to_string(line) + ": unknown key " + where);
        }
        auto& sec = doc.sections[current];
        if (sec.contains(key)) {
            throw ConfigError("config line " + std::to_string(line) + ": duplicate key " + where);
        }
        sec[key] = {value, line};
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Typed scenario
// ---------------------------------------------------------------------------

enum class SeedProfile { Sech, Gaussian, BlochModulated, Exponential, Zero };
enum class SolveMethod { Newton, Continuation, None };

struct SeedConfig {
    SeedProfile profile = SeedProfile::Sech;
    double amplitude = 1.0;
    double width = 1.0;
    double modulation = 0.0;
    double wavenumber = 0.0;
    double rate = 1.0;

    std::vector<double> sample(const Grid& g) const {
        std::vector<double> u(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g[i];
            switch (profile) {
                case SeedProfile::Sech: u[i] = amplitude / std::cosh(x / width); break;
                case SeedProfile::Gaussian: u[i] = amplitude * std::exp(-x * x / (2.0 * width * width)); break;
                case SeedProfile::BlochModulated:
                    u[i] = amplitude / std::cosh(x / width) * (1.0 + modulation * std::cos(wavenumber * x));
                    break;
                case SeedProfile::Exponential: u[i] = amplitude * std::exp(-rate * std::abs(x)); break;
                case SeedProfile::Zero: u[i] = 0.0; break;
            }
        }
        return u;
    }
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    std::uint64_t hash = 0;

    double half_width = 20.0;
    std::size_t num_points = 4001;

    PotentialSpec potential = constant_potential(1.0);
    NonlinearitySpec nonlinearity = pure_power(4.0);
    Rational growth_exponent{4};  ///< exact p, shared with the bootstrap block

    SeedConfig seed;

    SolveMethod method = SolveMethod::Newton;
    NewtonOptions newton;
    std::vector<double> ladder{1.0};

    SpectralScan scan;
    std::size_t eigenvalues = 5;
    double spectral_tolerance = 1e-6;

    std::vector<Branch> branches;
    FitWindow fit_window;
    double floor = kDefaultFloor;
    FitWindow rate_window;
    std::vector<FitWindow> rate_windows;
    std::vector<double> vanishing_radii;

    int dimension = 1;
    Rational bootstrap_p{4};
    std::optional<Rational> bootstrap_epsilon;

    std::string report_name = "report.json";
    std::string csv_name = "solution.csv";

    Grid grid() const { return Grid(half_width, num_points); }
};

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

class Reader {
public:
    Reader(const IniDocument& doc, std::string section)
        : section_(std::move(section)), entries_(&doc.sections.at(section_)) {}

    Reader(const IniDocument& doc, std::string section, std::nullptr_t)
        : section_(std::move(section)) {
        if (auto it = doc.sections.find(section_); it != doc.sections.end()) entries_ = &it->second;
    }

    bool has(const std::string& key) const { return entries_ && entries_->contains(key); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        std::string where = section_.empty() ? key : "[" + section_ + "] " + key;
        if (has(key)) {
            throw ConfigError("config line " + std::to_string(entries_->at(key).line) + ": " + where + ": " + msg);
        }
        throw ConfigError("config: " + where + ": " + msg);
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? entries_->at(key).value : fallback;
    }

    std::string required_text(const std::string& key) const {
        if (!has(key)) fail(key, "required key missing");
        return entries_->at(key).value;
    }

    double number(const std::string& key, double fallback) const {
        return has(key) ? parse_number(key, entries_->at(key).value) : fallback;
    }

    double required_number(const std::string& key) const {
        return parse_number(key, required_text(key));
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = entries_->at(key).value;
        std::size_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size()) fail(key, "expected a non-negative integer, got '" + v + "'");
        return out;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        std::vector<double> out;
        for (const auto& item : split(entries_->at(key).value, ',')) out.push_back(parse_number(key, item));
        return out;
    }

    std::optional<FitWindow> window(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        const auto v = numbers(key, {});
        if (v.size() != 2) fail(key, "expected 'inner, outer'");
        return FitWindow{v[0], v[1]};
    }

    std::vector<FitWindow> windows(const std::string& key) const {
        std::vector<FitWindow> out;
        if (!has(key)) return out;
        for (const auto& pair : split(entries_->at(key).value, ';')) {
            const auto parts = split(pair, ',');
            if (parts.size() != 2) fail(key, "expected 'a, b; c, d; ...'");
            out.push_back({parse_number(key, parts[0]), parse_number(key, parts[1])});
        }
        return out;
    }

    Rational rational(const std::string& key, const Rational& fallback) const {
        if (!has(key)) return fallback;
        try {
            return parse_rational(entries_->at(key).value);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

private:
    double parse_number(const std::string& key, const std::string& v) const {
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
            // allow the exact-rational spelling a/b for convenience
            if (v.find('/') != std::string::npos) {
                try {
                    return parse_rational(v).convert_to<double>();
                } catch (const ConfigError&) {
                }
            }
            fail(key, "expected a finite number, got '" + v + "'");
        }
        return out;
    }

    std::string section_;
    const IniSection* entries_ = nullptr;
};

inline void check_window(const Reader& r, const std::string& key, const FitWindow& w, double L) {
    if (!(w.inner >= 0.0) || !(w.outer > w.inner) || w.outer > L) {
        r.fail(key, "window must satisfy 0 <= inner < outer <= L");
    }
}

}  // namespace detail

/// Builds and validates a scenario. Every module precondition that can be
/// checked without running a computation is checked here.
inline ScenarioConfig load_scenario(const std::string& text) {
    const IniDocument doc = parse_ini(text);
    using detail::Reader;
    ScenarioConfig c;
    c.hash = fnv1a(text);

    const Reader top(doc, "");
    c.name = top.text("name", "unnamed");
    c.description = top.text("description", "");

    const Reader grid(doc, "grid", nullptr);
    c.half_width = grid.number("half_width", 20.0);
    c.num_points = grid.count("num_points", 4001);
    try {
        (void)c.grid();
    } catch (const ConfigError& e) {
        grid.fail("num_points", e.what());
    }
    const double L = c.half_width;

    // potential
    const Reader pot(doc, "potential", nullptr);
    const std::string kind = pot.text("kind", "constant");
    try {
        if (kind == "constant") {
            c.potential = constant_potential(pot.number("value", 1.0));
        } else if (kind == "periodic_cosine") {
            c.potential = periodic_cosine(pot.number("mean", 0.0), pot.numbers("amplitudes", {}),
                                          pot.numbers("wavenumbers", {}),
                                          pot.number("period", std::numbers::pi));
        } else if (kind == "confining_power") {
            c.potential = confining_power(pot.number("gamma", 1.0), pot.number("beta", 2.0),
                                          pot.number("gamma0", 0.0));
        } else if (kind == "tabulated") {
            const std::string cls = pot.required_text("class");
            SpectralClass sc;
            if (cls == "confining") {
                sc = ConfiningClass{};
            } else if (cls == "asymptotically_constant") {
                sc = AsymptoticallyConstantClass{pot.required_number("limit")};
            } else if (cls == "periodic") {
                sc = PeriodicClass{pot.required_number("period")};
            } else {
                pot.fail("class", "expected confining | asymptotically_constant | periodic");
            }
            c.potential = tabulated_potential(pot.numbers("x", {}), pot.numbers("values", {}), sc);
        } else {
            pot.fail("kind", "expected constant | periodic_cosine | confining_power | tabulated");
        }
        if (pot.has("lower_bound")) c.potential.lower_bound = pot.number("lower_bound", 0.0);
        validate(c.potential);
        (void)eval_potential(c.potential, c.grid());
    } catch (const InvalidPotentialError& e) {
        pot.fail("kind", e.what());
    } catch (const ConfigError& e) {
        if (std::string(e.what()).starts_with("config")) throw;
        pot.fail("kind", e.what());
    }

    // nonlinearity
    const Reader nl(doc, "nonlinearity", nullptr);
    const std::string nkind = nl.text("kind", "pure_power");
    try {
        if (nkind == "pure_power") {
            c.growth_exponent = nl.rational("exponent", Rational(4));
            c.nonlinearity = pure_power(c.growth_exponent.convert_to<double>());
        } else if (nkind == "asymptotically_linear") {
            c.growth_exponent = Rational(2);
            c.nonlinearity = asymptotically_linear();
        } else if (nkind == "saturable") {
            c.growth_exponent = Rational(2);
            c.nonlinearity = saturable_scaled(nl.number("amplitude", 1.0), nl.number("saturation", 1.0));
        } else {
            nl.fail("kind", "expected pure_power | asymptotically_linear | saturable");
        }
    } catch (const ConfigError& e) {
        if (std::string(e.what()).starts_with("config")) throw;
        nl.fail("kind", e.what());
    }
    if (nl.has("growth_constant")) c.nonlinearity.growth_constant = nl.number("growth_constant", 1.0);
    const NonlinearityAudit audit = audit_nonlinearity(c.nonlinearity);
    if (!audit.ok()) {
        nl.fail("kind", std::string("nonlinearity fails its audit:") +
                            (audit.small_u_ok ? "" : " f(u)/u does not vanish as u -> 0;") +
                            (audit.growth_ok ? "" : " growth bound |f| <= c(1+|u|^{p-1}) violated;") +
                            (audit.derivative_ok ? "" : " derivative inconsistent with f;"));
    }

    // seed
    const Reader seed(doc, "seed", nullptr);
    const std::string profile = seed.text("profile", "sech");
    if (profile == "sech") c.seed.profile = SeedProfile::Sech;
    else if (profile == "gaussian") c.seed.profile = SeedProfile::Gaussian;
    else if (profile == "bloch_modulated") c.seed.profile = SeedProfile::BlochModulated;
    else if (profile == "exponential") c.seed.profile = SeedProfile::Exponential;
    else if (profile == "zero") c.seed.profile = SeedProfile::Zero;
    else seed.fail("profile", "expected sech | gaussian | bloch_modulated | exponential | zero");
    c.seed.amplitude = seed.number("amplitude", 1.0);
    c.seed.width = seed.number("width", 1.0);
    c.seed.modulation = seed.number("modulation", 0.0);
    c.seed.wavenumber = seed.number("wavenumber", 0.0);
    c.seed.rate = seed.number("rate", 1.0);
    if (!(c.seed.width > 0.0)) seed.fail("width", "must be positive");

    // solver
    const Reader solver(doc, "solver", nullptr);
    const std::string method = solver.text("method", "newton");
    if (method == "newton") c.method = SolveMethod::Newton;
    else if (method == "continuation") c.method = SolveMethod::Continuation;
    else if (method == "none") c.method = SolveMethod::None;
    else solver.fail("method", "expected newton | continuation | none");
    c.newton.tolerance = solver.number("tolerance", 1e-10);
    c.newton.max_iter = solver.count("max_iter", 100);
    c.newton.damping_floor = solver.number("damping_floor", 1e-4);
    c.newton.lower_bound = c.potential.lower_bound;
    if (!(c.newton.tolerance > 0.0)) solver.fail("tolerance", "must be positive");
    if (!(c.newton.damping_floor > 0.0 && c.newton.damping_floor <= 1.0)) {
        solver.fail("damping_floor", "must lie in (0, 1]");
    }
    c.ladder = solver.numbers("ladder", {1.0});
    if (c.ladder.empty() || c.ladder.back() != 1.0) solver.fail("ladder", "must end at 1");
    for (std::size_t j = 0; j < c.ladder.size(); ++j) {
        if (!(c.ladder[j] > 0.0) || (j > 0 && !(c.ladder[j] > c.ladder[j - 1]))) {
            solver.fail("ladder", "must be positive and strictly increasing");
        }
    }

    // spectrum
    const Reader spec(doc, "spectrum", nullptr);
    {
        const auto v = eval_potential(c.potential, c.grid());
        const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
        c.scan.low = spec.number("scan_low", std::min(*vmin, 0.0) - 1.0);
        c.scan.high = spec.number("scan_high", std::max(*vmax, 0.0) + 5.0);
    }
    c.scan.resolution = spec.number("resolution", 1e-2);
    c.scan.steps = spec.count("steps", 2000);
    c.eigenvalues = spec.count("eigenvalues", 5);
    c.spectral_tolerance = spec.number("tolerance", 1e-6);
    if (!(c.scan.high > c.scan.low)) spec.fail("scan_high", "must exceed scan_low");
    if (!(c.scan.resolution > 0.0)) spec.fail("resolution", "must be positive");
    if (c.scan.steps < 100) spec.fail("steps", "must be >= 100");
    if (c.eigenvalues > c.num_points) spec.fail("eigenvalues", "more eigenvalues than grid nodes");
    if (!(c.spectral_tolerance > 0.0)) spec.fail("tolerance", "must be positive");

    // decay
    const Reader decay(doc, "decay", nullptr);
    for (const auto& b : detail::split(decay.text("branches", ""), ',')) {
        if (b.empty()) continue;
        if (b == "gap") c.branches.push_back(Branch::GapCase);
        else if (b == "discrete") c.branches.push_back(Branch::DiscreteCase);
        else if (b == "power_law") c.branches.push_back(Branch::PowerLawCase);
        else decay.fail("branches", "unknown branch '" + b + "' (gap | discrete | power_law)");
    }
    for (Branch b : c.branches) {
        if (b == Branch::PowerLawCase && !std::holds_alternative<ConfiningPower>(c.potential.shape)) {
            decay.fail("branches", "power_law needs a confining_power potential");
        }
    }
    c.fit_window = decay.window("fit_window").value_or(FitWindow{0.5 * L, 0.9 * L});
    detail::check_window(decay, "fit_window", c.fit_window, L);
    c.floor = decay.number("floor", kDefaultFloor);
    if (!(c.floor > 0.0)) decay.fail("floor", "must be positive");
    c.rate_window = decay.window("rate_window").value_or(c.fit_window);
    detail::check_window(decay, "rate_window", c.rate_window, L);
    c.rate_windows = decay.windows("rate_windows");
    if (c.rate_windows.empty()) c.rate_windows = {{0.25 * L, 0.5 * L}, {0.5 * L, 0.75 * L}};
    for (const auto& w : c.rate_windows) detail::check_window(decay, "rate_windows", w, L);
    c.vanishing_radii = decay.numbers("vanishing_radii", {0.25 * L, 0.5 * L, 0.75 * L});
    for (std::size_t j = 0; j < c.vanishing_radii.size(); ++j) {
        const double r = c.vanishing_radii[j];
        if (!(r > 0.0 && r < L) || (j > 0 && !(r > c.vanishing_radii[j - 1]))) {
            decay.fail("vanishing_radii", "radii must increase within (0, L)");
        }
    }

    // bootstrap
    const Reader boot(doc, "bootstrap", nullptr);
    const std::size_t dim = boot.count("dimension", 1);
    if (dim < 1 || dim > 1000) boot.fail("dimension", "must be in [1, 1000]");
    c.dimension = static_cast<int>(dim);
    c.bootstrap_p = boot.rational("p", c.growth_exponent);
    if (boot.has("epsilon")) c.bootstrap_epsilon = boot.rational("epsilon", Rational(0));
    try {
        (void)make_problem(c.dimension, c.bootstrap_p, c.bootstrap_epsilon);
    } catch (const ConfigError& e) {
        boot.fail("p", e.what());
    } catch (const SupercriticalError& e) {
        boot.fail("p", e.what());
    } catch (const SlackError& e) {
        boot.fail("epsilon", e.what());
    }

    const Reader out(doc, "output", nullptr);
    c.report_name = out.text("report", "report.json");
    c.csv_name = out.text("csv", "solution.csv");
    for (const auto* n : {&c.report_name, &c.csv_name}) {
        if (n->empty() || n->find('/') != std::string::npos) out.fail("report", "file names must be plain names");
    }
    return c;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
    return load_scenario(read_text_file(path));
}

}  // namespace nlsdecay
