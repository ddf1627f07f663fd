#pragma once

// End-to-end scenario runs: spectrum -> solve -> decay verdicts -> bootstrap
// ladder, producing a canonical JSON report and a CSV field dump.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsdecay/bootstrap.hpp"
#include "nlsdecay/config.hpp"
#include "nlsdecay/decay.hpp"
#include "nlsdecay/solver.hpp"
#include "nlsdecay/spectral.hpp"

namespace nlsdecay {

using Json = nlohmann::json;

/// Exit statuses shared by the CLI and the library entry points.
enum ExitStatus : int { kPass = 0, kScientificFailure = 1, kConfigFailure = 2 };

enum class Stage { Spectrum, Solve, Verify };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Spectrum: return "spectrum";
        case Stage::Solve: return "solve";
        case Stage::Verify: return "verify";
    }
    return "?";
}

struct RunOptions {
    bool force = false;          ///< run later stages even when hypothesis (ii) fails
    bool stable_output = false;  ///< omit wall-clock timings from the report
};

struct RunReport {
    Json document;
    int status = kPass;
    std::string csv;  ///< empty unless a field was produced

    /// Canonical serialization: sorted keys, two-space indent, LF, trailing newline.
    std::string text() const { return document.dump(2) + "\n"; }
};

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

namespace detail {

/// JSON has no infinities; encode them as strings.
inline Json number(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    if (std::isnan(v)) return Json("nan");
    return Json(v);
}

inline const char* kind_name(EssentialKind k) {
    switch (k) {
        case EssentialKind::Empty: return "empty";
        case EssentialKind::HalfLine: return "half_line";
        case EssentialKind::Bands: return "bands";
    }
    return "?";
}

inline Json to_json(const SpectralReport& r) {
    Json j;
    j["eigenvalues"] = r.eigenvalues;
    Json ess;
    ess["kind"] = kind_name(r.essential.kind);
    if (r.essential.kind == EssentialKind::HalfLine) ess["threshold"] = r.essential.threshold;
    if (r.essential.kind == EssentialKind::Bands) {
        Json bands = Json::array();
        for (const auto& b : r.essential.bands) bands.push_back({b.low, b.high});
        ess["bands"] = bands;
        ess["window"] = {r.essential.window_low, r.essential.window_high};
        ess["window_limited"] = r.essential.window_limited;
    }
    j["essential"] = ess;
    j["gap_distance"] = number(r.gap_distance);
    j["hypothesis_ii_ok"] = r.hypothesis_ii_ok;
    j["zero_is_eigenvalue"] = r.zero_is_eigenvalue;
    j["tolerance"] = r.tolerance;
    return j;
}

inline Json to_json(const NewtonTrace& t) {
    return {{"iterations", t.iterations},
            {"residual_history", t.residual_history},
            {"damping", t.damping},
            {"converged", t.converged}};
}

inline Json to_json(const DecayFit& f) {
    return {{"kind", f.kind == FitKind::Exponential ? "exponential" : "stretched"},
            {"rate", f.rate},
            {"amplitude", f.amplitude},
            {"exponent", f.exponent},
            {"r_squared", f.r_squared},
            {"window", {f.window.inner, f.window.outer}},
            {"samples", f.samples},
            {"floor_mask", f.floor_mask}};
}

inline Json to_json(const DecayVerdict& v) {
    return {{"branch", to_string(v.branch)},
            {"predicted", number(v.predicted)},
            {"measured", number(v.measured)},
            {"margin", number(v.margin)},
            {"pass", v.pass},
            {"detail", v.detail}};
}

inline Json to_json(const BootstrapRun& run) {
    Json j;
    const auto& p = run.problem;
    j["dimension"] = p.dimension;
    j["p"] = to_string(p.p);
    j["reason"] = run.reason_text();
    j["termination_index"] = run.termination_index;
    if (p.critical) {
        j["critical_exponent"] = to_string(*p.critical);
        j["epsilon"] = to_string(p.epsilon);
        j["delta"] = to_string(p.delta());
        j["delta_used"] = run.delta_used;
        j["threshold"] = to_string(p.threshold());
        Json rows = Json::array();
        for (const auto& st : run.states) {
            Json row{{"k", st.step}, {"r", to_string(st.r)}, {"s", to_string(st.s)},
                     {"terminated", st.terminated}};
            if (st.q) {
                row["q"] = to_string(*st.q);
                row["gain_gap"] = to_string(verify_gain(p, st));
            }
            rows.push_back(row);
        }
        j["ladder"] = rows;
    } else {
        j["critical_exponent"] = "inf";
    }
    return j;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// CSV with header "x,u,W" and 17 significant digits.
inline std::string solution_csv(const Grid& g, std::span<const double> u, const WeightField& w) {
    std::string out = "x,u,W\n";
    out.reserve(g.size() * 72);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out += detail::format_double(g[i]);
        out += ',';
        out += detail::format_double(u[i]);
        out += ',';
        out += detail::format_double(w.values[i]);
        out += '\n';
    }
    return out;
}

struct CsvField {
    std::vector<double> x, u, w;
};

inline CsvField read_solution_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "x,u,W") throw ConfigError("csv: missing 'x,u,W' header");
    CsvField f;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto parts = detail::split(line, ',');
        if (parts.size() != 3) throw ConfigError("csv: malformed row '" + line + "'");
        f.x.push_back(std::stod(parts[0]));
        f.u.push_back(std::stod(parts[1]));
        f.w.push_back(std::stod(parts[2]));
    }
    return f;
}

/// Bootstrap report for (n, p, eps). Throws on inadmissible parameters.
inline Json bootstrap_section(int n, const Rational& p, const std::optional<Rational>& eps) {
    return detail::to_json(run_bootstrap(make_problem(n, p, eps)));
}

/// Runs the pipeline up to `stage`. Configuration-level failures discovered
/// mid-run (branch/spectrum mismatch, empty fit windows) map to status 2;
/// numerical and scientific failures to status 1.
inline RunReport run_scenario(const ScenarioConfig& cfg, Stage stage, const RunOptions& opt = {}) {
    RunReport rep;
    Json& doc = rep.document;
    detail::Stopwatch clock;
    Json timings;

    doc["scenario"] = {{"name", cfg.name}, {"config_hash", hex64(cfg.hash)}};
    doc["command"] = to_string(stage);

    auto finish = [&](int status, const std::string& outcome) {
        rep.status = status;
        doc["status"] = status;
        doc["outcome"] = outcome;
        if (!opt.stable_output) doc["timings"] = timings;
        return rep;
    };

    const Grid grid = cfg.grid();
    const auto potential = eval_potential(cfg.potential, grid);
    doc["grid"] = {{"half_width", grid.half_width()}, {"num_points", grid.size()},
                   {"spacing", grid.spacing()}};

    // spectrum
    SpectralReport spectral;
    try {
        spectral = spectral_report(cfg.potential, grid, cfg.eigenvalues, cfg.scan, cfg.spectral_tolerance);
    } catch (const NumericalFailure& e) {
        doc["error"] = e.what();
        return finish(kScientificFailure, "spectral_failure");
    }
    doc["spectral"] = detail::to_json(spectral);
    timings["spectrum"] = clock.lap();
    if (stage == Stage::Spectrum) {
        return finish(spectral.hypothesis_ii_ok ? kPass : kScientificFailure,
                      spectral.hypothesis_ii_ok ? "hypothesis_ii_ok" : "hypothesis_ii_violated");
    }
    if (!spectral.hypothesis_ii_ok && !opt.force) {
        doc["error"] = "0 lies in the essential spectrum (use --force to continue)";
        return finish(kScientificFailure, "hypothesis_ii_violated");
    }

    // solve
    const auto seed = cfg.seed.sample(grid);
    SolutionField field;
    bool synthetic = false;
    try {
        switch (cfg.method) {
            case SolveMethod::Newton: {
                auto r = newton_solve(grid, potential, cfg.nonlinearity, seed, cfg.newton);
                doc["newton"] = detail::to_json(r.trace);
                field = std::move(r.field);
                break;
            }
            case SolveMethod::Continuation: {
                auto r = continuation_solve(grid, potential, cfg.nonlinearity, seed, cfg.ladder, cfg.newton);
                doc["newton"] = detail::to_json(r.trace);
                field = std::move(r.field);
                break;
            }
            case SolveMethod::None:
                synthetic = true;
                field = make_field(grid, potential, cfg.nonlinearity, seed, cfg.newton);
                break;
        }
    } catch (const SolveError& e) {
        doc["newton"] = detail::to_json(e.trace());
        doc["error"] = e.what();
        if (e.rung() >= 0) doc["ladder_rung"] = e.rung();
        const bool trivial = dynamic_cast<const TrivialSolutionError*>(&e) != nullptr;
        const bool singular = dynamic_cast<const SingularJacobianError*>(&e) != nullptr;
        return finish(kScientificFailure, trivial ? "trivial_solution"
                                          : singular ? "singular_jacobian"
                                                     : "non_convergence");
    }
    timings["solve"] = clock.lap();

    const WeightField weight = build_W(field, cfg.nonlinearity);
    const auto minmax = std::minmax_element(field.values.begin(), field.values.end());
    doc["solution"] = {{"synthetic", synthetic},
                       {"residual_norm", field.residual_norm},
                       {"boundary_leak", field.boundary_leak},
                       {"sup_norm", field.sup_norm},
                       {"min", *minmax.first},
                       {"max", *minmax.second},
                       {"energy_norm", field.energy_norm},
                       {"weighted_norm", field.weighted_norm},
                       {"accepted", field.accepted()}};
    rep.csv = solution_csv(grid, field.values, weight);
    if (!synthetic && !field.accepted()) {
        doc["error"] = "boundary leak exceeds 1e-8 * sup|u|; enlarge the domain";
        return finish(kScientificFailure, "boundary_leak");
    }
    if (stage == Stage::Solve) return finish(kPass, synthetic ? "synthetic_field" : "accepted");

    // decay
    Json tail = Json::array();
    for (const auto& t : weight.tail_table(cfg.vanishing_radii)) {
        tail.push_back({{"radius", t.radius}, {"sup_W", t.sup}});
    }
    doc["weight_tail"] = tail;
    const auto vanishing = check_vanishing(grid, field.values, cfg.vanishing_radii);
    {
        Json sups = Json::array();
        for (const auto& s : vanishing.sups) sups.push_back({{"radius", s.radius}, {"sup_u", s.sup}});
        doc["vanishing"] = {{"sups", sups}, {"monotone", vanishing.monotone},
                            {"final_small", vanishing.final_small}, {"pass", vanishing.pass()}};
    }
    doc["effective_operator_residual"] = [&] {
        double m = 0.0;
        for (double r : apply_effective_operator(grid, potential, weight, field.values)) m = std::max(m, std::abs(r));
        return m;
    }();

    bool all_pass = !cfg.branches.empty();
    Json verdicts = Json::array();
    Json fits;
    try {
        for (Branch b : cfg.branches) {
            DecayEvidence ev;
            switch (b) {
                case Branch::GapCase:
                    ev.exponential = fit_exponential(grid, field.values, cfg.fit_window, cfg.floor);
                    fits["gap_exponential"] = detail::to_json(*ev.exponential);
                    break;
                case Branch::DiscreteCase: {
                    ev.local = local_rate(grid, field.values, cfg.rate_window, cfg.floor);
                    Json windowed = Json::array();
                    for (const auto& w : cfg.rate_windows) {
                        ev.windowed.push_back(fit_exponential(grid, field.values, w, cfg.floor));
                        windowed.push_back(detail::to_json(ev.windowed.back()));
                    }
                    fits["discrete_windowed"] = windowed;
                    fits["discrete_local_rate"] = {
                        {"window", {cfg.rate_window.inner, cfg.rate_window.outer}},
                        {"samples", ev.local->rate.size()},
                        {"monotonicity", ev.local->monotonicity}};
                    break;
                }
                case Branch::PowerLawCase: {
                    const auto& power = std::get<ConfiningPower>(cfg.potential.shape);
                    const double kappa = power.beta / 2.0 + 1.0;
                    ev.stretched = fit_stretched(grid, field.values, kappa, cfg.fit_window, cfg.floor);
                    ev.exponential = fit_exponential(grid, field.values, cfg.fit_window, cfg.floor);
                    fits["power_law_stretched"] = detail::to_json(*ev.stretched);
                    fits["power_law_exponential"] = detail::to_json(*ev.exponential);
                    break;
                }
            }
            const DecayVerdict v = verdict(b, spectral, ev, cfg.potential);
            verdicts.push_back(detail::to_json(v));
            all_pass = all_pass && v.pass;
        }
    } catch (const MisconfigurationError& e) {
        doc["error"] = e.what();
        return finish(kConfigFailure, "misconfiguration");
    } catch (const TooFewSamplesError& e) {
        doc["error"] = e.what();
        return finish(kConfigFailure, "fit_window_empty");
    }
    doc["fits"] = fits;
    doc["verdicts"] = verdicts;
    timings["decay"] = clock.lap();

    doc["bootstrap"] = bootstrap_section(cfg.dimension, cfg.bootstrap_p, cfg.bootstrap_epsilon);
    timings["bootstrap"] = clock.lap();

    return finish(all_pass ? kPass : kScientificFailure, all_pass ? "verdict_pass" : "verdict_fail");
}

}  // namespace nlsdecay
