#pragma once

// Effective potential W = f(x,u)/u, tail diagnostics, decay-law fits and the
// verdict logic comparing measured decay against the spectral prediction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlsdecay/errors.hpp"
#include "nlsdecay/model.hpp"
#include "nlsdecay/solver.hpp"
#include "nlsdecay/spectral.hpp"

namespace nlsdecay {

// ---------------------------------------------------------------------------
// Effective potential
// ---------------------------------------------------------------------------

struct TailSup {
    double radius = 0.0;
    double sup = 0.0;
};

struct WeightField {
    const Grid* grid = nullptr;
    std::vector<double> values;

    /// max over |x_i| >= radius of |W_i| (0 when no node qualifies).
    double tail_sup(double radius) const {
        double m = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (std::abs((*grid)[i]) >= radius) m = std::max(m, std::abs(values[i]));
        }
        return m;
    }

    std::vector<TailSup> tail_table(std::span<const double> radii) const {
        std::vector<TailSup> out;
        out.reserve(radii.size());
        for (double r : radii) out.push_back({r, tail_sup(r)});
        return out;
    }
};

/// W_i = f(x_i, u_i) / u_i where u_i != 0, and exactly 0 where u_i == 0.
template <Nonlinearity F>
WeightField build_W(const Grid& g, std::span<const double> u, const F& f) {
    if (u.size() != g.size()) throw ConfigError("build_W: field does not match grid");
    WeightField w;
    w.grid = &g;
    w.values.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        w.values[i] = u[i] == 0.0 ? 0.0 : f(g[i], u[i]).f / u[i];
    }
    return w;
}

template <Nonlinearity F>
WeightField build_W(const SolutionField& s, const F& f) {
    return build_W(*s.grid, s.values, f);
}

/// (-Delta_h + V - W) u on interior nodes, ends 0. With W from build_W this is
/// the discrete residual rewritten as a linear problem in u.
inline std::vector<double> apply_effective_operator(const Grid& g, std::span<const double> v,
                                                    const WeightField& w,
                                                    std::span<const double> u) {
    const std::size_t n = g.size();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double left = i == 1 ? 0.0 : u[i - 1];
        const double right = i + 2 == n ? 0.0 : u[i + 1];
        out[i] = -(left - 2.0 * u[i] + right) * inv_h2 + (v[i] - w.values[i]) * u[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vanishing at infinity
// ---------------------------------------------------------------------------

struct VanishingReport {
    std::vector<TailSup> sups;
    bool monotone = false;
    bool final_small = false;

    bool pass() const noexcept { return monotone && final_small; }
};

inline VanishingReport check_vanishing(const Grid& g, std::span<const double> u,
                                       std::span<const double> radii, double ratio = 1e-6) {
    for (std::size_t j = 0; j < radii.size(); ++j) {
        if (!(radii[j] > 0.0) || !(radii[j] < g.half_width()) || (j > 0 && !(radii[j] > radii[j - 1]))) {
            throw ConfigError("check_vanishing: radii must increase within (0, L)");
        }
    }
    VanishingReport r;
    double peak = 0.0;
    for (double x : u) peak = std::max(peak, std::abs(x));
    for (double radius : radii) {
        double m = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (std::abs(g[i]) >= radius) m = std::max(m, std::abs(u[i]));
        }
        r.sups.push_back({radius, m});
    }
    r.monotone = true;
    for (std::size_t j = 1; j < r.sups.size(); ++j) {
        if (r.sups[j].sup > r.sups[j - 1].sup) r.monotone = false;
    }
    r.final_small = !r.sups.empty() && r.sups.back().sup <= ratio * peak;
    return r;
}

// ---------------------------------------------------------------------------
// Decay fits
// ---------------------------------------------------------------------------

enum class FitKind { Exponential, Stretched };

struct FitWindow {
    double inner = 0.0;
    double outer = 0.0;

    static FitWindow standard(const Grid& g) { return {0.5 * g.half_width(), 0.9 * g.half_width()}; }
};

/// log|u| ~ log C - rate * |x|^exponent over the window, both tails pooled.
struct DecayFit {
    FitKind kind = FitKind::Exponential;
    double rate = 0.0;       ///< alpha (exponential) or a (stretched)
    double amplitude = 0.0;  ///< C
    double exponent = 1.0;   ///< kappa
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    FitWindow window;
    std::size_t samples = 0;
    std::size_t floor_mask = 0;  ///< window samples dropped as below the floor
};

inline constexpr double kDefaultFloor = 1e-13;
inline constexpr std::size_t kMinFitSamples = 10;

inline DecayFit fit_stretched(const Grid& g, std::span<const double> u, double exponent,
                              FitWindow window, double floor = kDefaultFloor) {
    if (!(exponent > 0.0)) throw ConfigError("fit: exponent must be positive");
    if (!(window.outer > window.inner) || window.inner < 0.0) {
        throw ConfigError("fit: window must satisfy 0 <= inner < outer");
    }
    DecayFit fit;
    fit.kind = exponent == 1.0 ? FitKind::Exponential : FitKind::Stretched;
    fit.exponent = exponent;
    fit.window = window;

    std::vector<double> t, y;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = std::abs(g[i]);
        if (r < window.inner || r > window.outer) continue;
        if (!(std::abs(u[i]) > floor)) {
            ++fit.floor_mask;
            continue;
        }
        t.push_back(exponent == 1.0 ? r : std::pow(r, exponent));
        y.push_back(std::log(std::abs(u[i])));
    }
    fit.samples = t.size();
    if (t.size() < kMinFitSamples) {
        throw TooFewSamplesError("fit: only " + std::to_string(t.size()) +
                                 " samples above the floor in window [" +
                                 std::to_string(window.inner) + ", " + std::to_string(window.outer) + "]");
    }

    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(stt > 0.0)) throw TooFewSamplesError("fit: window samples share a single abscissa");
    fit.slope = sty / stt;
    fit.intercept = my - fit.slope * mt;
    double ssr = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * t[i]);
        ssr += e * e;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.rate = -fit.slope;
    fit.amplitude = std::exp(fit.intercept);
    return fit;
}

inline DecayFit fit_exponential(const Grid& g, std::span<const double> u, FitWindow window,
                                double floor = kDefaultFloor) {
    return fit_stretched(g, u, 1.0, window, floor);
}

// ---------------------------------------------------------------------------
// Local decay rate
// ---------------------------------------------------------------------------

struct LocalRate {
    std::vector<double> radius;  ///< |x| of each sample, per tail in outward order
    std::vector<double> rate;    ///< -d log|u| / d|x|
    double monotonicity = 0.0;   ///< fraction of outward steps where the rate increases
};

/// Centered-difference local rate on samples in the window whose node and
/// both neighbours sit above the floor. Right tail first, then left tail.
inline LocalRate local_rate(const Grid& g, std::span<const double> u, FitWindow window,
                            double floor = kDefaultFloor) {
    const std::size_t n = u.size();
    const double h = g.spacing();
    LocalRate out;
    std::size_t steps = 0, increasing = 0;
    auto usable = [&](std::size_t i) { return std::abs(u[i]) > floor; };

    auto sweep = [&](bool right) {
        bool have_prev = false;
        double prev = 0.0;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const std::size_t i = right ? k : n - 1 - k;
            const double r = std::abs(g[i]);
            if ((right && g[i] <= 0.0) || (!right && g[i] >= 0.0)) continue;
            if (r < window.inner || r > window.outer) continue;
            if (!usable(i - 1) || !usable(i) || !usable(i + 1)) {
                have_prev = false;
                continue;
            }
            const double d = (std::log(std::abs(u[i + 1])) - std::log(std::abs(u[i - 1]))) / (2.0 * h);
            const double rate = right ? -d : d;
            out.radius.push_back(r);
            out.rate.push_back(rate);
            if (have_prev) {
                ++steps;
                if (rate > prev) ++increasing;
            }
            prev = rate;
            have_prev = true;
        }
    };
    sweep(true);
    sweep(false);
    if (out.rate.size() < kMinFitSamples) {
        throw TooFewSamplesError("local_rate: only " + std::to_string(out.rate.size()) +
                                 " usable tail samples");
    }
    out.monotonicity = steps > 0 ? static_cast<double>(increasing) / static_cast<double>(steps) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

enum class Branch { GapCase, DiscreteCase, PowerLawCase };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::GapCase: return "gap";
        case Branch::DiscreteCase: return "discrete";
        case Branch::PowerLawCase: return "power_law";
    }
    return "?";
}

/// Fitted evidence handed to verdict(); each branch reads what it needs.
struct DecayEvidence {
    std::optional<DecayFit> exponential;
    std::optional<DecayFit> stretched;
    std::optional<LocalRate> local;
    std::vector<DecayFit> windowed;  ///< exponential fits over outward windows
};

struct VerdictRules {
    double gap_safety = 0.5;          ///< alpha >= gap_safety * sqrt(d)
    double min_r_squared = 0.98;
    double min_monotonicity = 0.9;
};

struct DecayVerdict {
    Branch branch = Branch::GapCase;
    double predicted = 0.0;  ///< sqrt(d), kappa, or the monotonicity requirement
    double measured = 0.0;   ///< alpha, stretched R^2, or monotonicity statistic
    bool pass = false;
    double margin = 0.0;     ///< signed distance to the pass threshold (>= 0 on pass for the primary test)
    std::string detail;
};

/// Decay verdict for one branch:
///  - GapCase: alpha >= 0.5 sqrt(d) and R^2 >= 0.98 for the exponential fit.
///  - DiscreteCase: local-rate monotonicity >= 0.9 and windowed rates
///    strictly increasing outward.
///  - PowerLawCase: stretched fit with kappa = beta/2 + 1 has R^2 >= 0.98 and
///    strictly beats the exponential fit's R^2.
inline DecayVerdict verdict(Branch branch, const SpectralReport& spectral,
                            const DecayEvidence& evidence, const PotentialSpec& potential,
                            const VerdictRules& rules = {}) {
    DecayVerdict out;
    out.branch = branch;
    const double d = spectral.gap_distance;
    switch (branch) {
        case Branch::GapCase: {
            if (!std::isfinite(d) || !(d > 0.0)) {
                throw MisconfigurationError("verdict: gap branch needs a finite gap distance d > 0, got " +
                                            std::to_string(d));
            }
            if (!evidence.exponential) throw MisconfigurationError("verdict: gap branch needs an exponential fit");
            const DecayFit& fit = *evidence.exponential;
            out.predicted = std::sqrt(d);
            out.measured = fit.rate;
            out.margin = fit.rate - rules.gap_safety * out.predicted;
            const bool rate_ok = out.margin >= 0.0;
            const bool fit_ok = fit.r_squared >= rules.min_r_squared;
            out.pass = rate_ok && fit_ok;
            out.detail = "alpha = " + std::to_string(fit.rate) + " vs " + std::to_string(rules.gap_safety) +
                         " * sqrt(d) = " + std::to_string(rules.gap_safety * out.predicted) +
                         ", R^2 = " + std::to_string(fit.r_squared);
            break;
        }
        case Branch::DiscreteCase: {
            if (spectral.essential.kind != EssentialKind::Empty) {
                throw MisconfigurationError("verdict: discrete branch needs an empty essential spectrum");
            }
            if (!evidence.local) throw MisconfigurationError("verdict: discrete branch needs local rates");
            if (evidence.windowed.size() < 2) {
                throw MisconfigurationError("verdict: discrete branch needs at least two windowed fits");
            }
            out.predicted = rules.min_monotonicity;
            out.measured = evidence.local->monotonicity;
            out.margin = out.measured - out.predicted;
            bool outward = true;
            for (std::size_t j = 1; j < evidence.windowed.size(); ++j) {
                if (!(evidence.windowed[j].rate > evidence.windowed[j - 1].rate)) outward = false;
            }
            out.pass = out.margin >= 0.0 && outward;
            out.detail = "monotonicity = " + std::to_string(out.measured) + ", windowed rates";
            for (const auto& w : evidence.windowed) out.detail += " " + std::to_string(w.rate);
            out.detail += outward ? " (increasing)" : " (not increasing)";
            break;
        }
        case Branch::PowerLawCase: {
            const auto* power = std::get_if<ConfiningPower>(&potential.shape);
            if (!power) throw MisconfigurationError("verdict: power-law branch needs a confining power potential");
            if (spectral.essential.kind != EssentialKind::Empty) {
                throw MisconfigurationError("verdict: power-law branch needs an empty essential spectrum");
            }
            if (!evidence.stretched || !evidence.exponential) {
                throw MisconfigurationError("verdict: power-law branch needs stretched and exponential fits");
            }
            const double kappa = power->beta / 2.0 + 1.0;
            if (std::abs(evidence.stretched->exponent - kappa) > 1e-12) {
                throw MisconfigurationError("verdict: stretched fit exponent " +
                                            std::to_string(evidence.stretched->exponent) +
                                            " differs from beta/2 + 1 = " + std::to_string(kappa));
            }
            out.predicted = kappa;
            out.measured = evidence.stretched->r_squared;
            out.margin = evidence.stretched->r_squared - evidence.exponential->r_squared;
            out.pass = evidence.stretched->r_squared >= rules.min_r_squared && out.margin > 0.0;
            out.detail = "R^2(kappa=" + std::to_string(kappa) + ") = " +
                         std::to_string(evidence.stretched->r_squared) + " vs R^2(kappa=1) = " +
                         std::to_string(evidence.exponential->r_squared);
            break;
        }
    }
    return out;
}

}  // namespace nlsdecay
