#pragma once

// Grids, potential families and nonlinearity families for the 1D stationary
// problem  -u'' + V(x) u = f(x, u)  on a truncated interval [-L, L].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nlsdecay/errors.hpp"

namespace nlsdecay {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Uniform node set on [-L, L] with an odd number of points, so that x = 0 is
/// a node. Abscissae are generated as L * (i - m) / m with m = (N - 1) / 2,
/// which makes the end points, the centre and the mirror symmetry
/// x[N-1-i] == -x[i] exact in floating point.
class Grid {
public:
    Grid(double half_width, std::size_t num_points)
        : half_width_(half_width), num_points_(num_points) {
        if (!(half_width > 0.0) || !std::isfinite(half_width)) {
            throw ConfigError("grid: half_width must be positive and finite");
        }
        if (num_points < 3 || num_points % 2 == 0) {
            throw ConfigError("grid: num_points must be odd and >= 3, got " +
                              std::to_string(num_points));
        }
        const auto m = static_cast<double>((num_points - 1) / 2);
        spacing_ = 2.0 * half_width / static_cast<double>(num_points - 1);
        nodes_.resize(num_points);
        for (std::size_t i = 0; i < num_points; ++i) {
            const double offset = static_cast<double>(i) - m;
            nodes_[i] = half_width * offset / m;
        }
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t size() const noexcept { return num_points_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t center() const noexcept { return (num_points_ - 1) / 2; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    /// Same interval with the spacing halved.
    Grid refined() const { return Grid(half_width_, 2 * (num_points_ - 1) + 1); }

private:
    double half_width_;
    std::size_t num_points_;
    double spacing_ = 0.0;
    std::vector<double> nodes_;
};

inline Grid build_grid(double half_width, std::size_t num_points) {
    return Grid(half_width, num_points);
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

struct ConstantPotential {
    double value = 0.0;
};

/// V(x) = mean + sum_j A_j cos(k_j x), with every k_j a multiple of 2 pi / T.
struct PeriodicCosine {
    double mean = 0.0;
    std::vector<double> amplitudes;
    std::vector<double> wavenumbers;
    double period = std::numbers::pi;
};

/// V(x) = gamma |x|^beta - gamma0.
struct ConfiningPower {
    double gamma = 1.0;
    double beta = 2.0;
    double gamma0 = 0.0;
};

/// Spectral-class annotations for tabulated potentials. The essential spectrum
/// of a sampled potential cannot be recovered from the samples, so the caller
/// states it.
struct ConfiningClass {};
struct AsymptoticallyConstantClass {
    double limit = 0.0;
};
struct PeriodicClass {
    double period = 1.0;
};
using SpectralClass = std::variant<ConfiningClass, AsymptoticallyConstantClass, PeriodicClass>;

/// Piecewise-linear interpolation of (x, V) samples, held constant outside the
/// sampled range. Periodic tables are evaluated modulo the period.
struct TabulatedPotential {
    std::vector<double> x;
    std::vector<double> values;
    SpectralClass spectral_class;
};

using PotentialShape =
    std::variant<ConstantPotential, PeriodicCosine, ConfiningPower, TabulatedPotential>;

struct PotentialSpec {
    PotentialShape shape;
    double lower_bound = 0.0;  ///< c0, with V(x) >= -c0
};

namespace detail {

inline double interpolate(const TabulatedPotential& t, double x) {
    if (const auto* p = std::get_if<PeriodicClass>(&t.spectral_class)) {
        const double origin = t.x.front();
        x = origin + std::fmod(std::fmod(x - origin, p->period) + p->period, p->period);
    }
    if (x <= t.x.front()) return t.values.front();
    if (x >= t.x.back()) return t.values.back();
    const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
    const auto hi = static_cast<std::size_t>(it - t.x.begin());
    const auto lo = hi - 1;
    const double w = (x - t.x[lo]) / (t.x[hi] - t.x[lo]);
    return (1.0 - w) * t.values[lo] + w * t.values[hi];
}

inline double natural_lower_bound(const PotentialShape& shape) {
    struct Visitor {
        double operator()(const ConstantPotential& c) const { return std::max(0.0, -c.value); }
        double operator()(const PeriodicCosine& p) const {
            double swing = 0.0;
            for (double a : p.amplitudes) swing += std::abs(a);
            return std::max(0.0, -(p.mean - swing));
        }
        double operator()(const ConfiningPower& c) const { return c.gamma0; }
        double operator()(const TabulatedPotential& t) const {
            if (t.values.empty()) return 0.0;
            return std::max(0.0, -*std::min_element(t.values.begin(), t.values.end()));
        }
    };
    return std::visit(Visitor{}, shape);
}

}  // namespace detail

/// Point evaluation of V.
inline double potential_at(const PotentialSpec& spec, double x) {
    struct Visitor {
        double x;
        double operator()(const ConstantPotential& c) const { return c.value; }
        double operator()(const PeriodicCosine& p) const {
            double v = p.mean;
            for (std::size_t j = 0; j < p.amplitudes.size(); ++j) {
                v += p.amplitudes[j] * std::cos(p.wavenumbers[j] * x);
            }
            return v;
        }
        double operator()(const ConfiningPower& c) const {
            return c.gamma * std::pow(std::abs(x), c.beta) - c.gamma0;
        }
        double operator()(const TabulatedPotential& t) const { return detail::interpolate(t, x); }
    };
    return std::visit(Visitor{x}, spec.shape);
}

/// Checks the structural invariants of a potential; throws ConfigError.
inline void validate(const PotentialSpec& spec) {
    if (!(spec.lower_bound >= 0.0) || !std::isfinite(spec.lower_bound)) {
        throw ConfigError("potential: lower bound c0 must be finite and >= 0");
    }
    struct Visitor {
        void operator()(const ConstantPotential& c) const {
            if (!std::isfinite(c.value)) throw ConfigError("potential: constant value not finite");
        }
        void operator()(const PeriodicCosine& p) const {
            if (!(p.period > 0.0)) throw ConfigError("potential: period must be positive");
            if (p.amplitudes.size() != p.wavenumbers.size()) {
                throw ConfigError("potential: amplitudes and wavenumbers differ in length");
            }
            const double base = 2.0 * std::numbers::pi / p.period;
            for (double k : p.wavenumbers) {
                const double multiple = k / base;
                if (std::abs(multiple - std::round(multiple)) > 1e-9) {
                    throw ConfigError("potential: wavenumber " + std::to_string(k) +
                                      " is not a multiple of 2*pi/T");
                }
            }
        }
        void operator()(const ConfiningPower& c) const {
            if (!(c.gamma > 0.0)) throw ConfigError("potential: confining gamma must be > 0");
            if (!(c.beta > 0.0)) throw ConfigError("potential: confining beta must be > 0");
            if (!(c.gamma0 >= 0.0)) throw ConfigError("potential: confining gamma0 must be >= 0");
        }
        void operator()(const TabulatedPotential& t) const {
            if (t.x.size() < 2 || t.x.size() != t.values.size()) {
                throw ConfigError("potential: tabulated samples need >= 2 matching (x, V) pairs");
            }
            if (!std::is_sorted(t.x.begin(), t.x.end()) ||
                std::adjacent_find(t.x.begin(), t.x.end()) != t.x.end()) {
                throw ConfigError("potential: tabulated abscissae must be strictly increasing");
            }
            if (const auto* p = std::get_if<PeriodicClass>(&t.spectral_class)) {
                if (!(p->period > 0.0)) throw ConfigError("potential: tabulated period must be > 0");
            }
        }
    };
    std::visit(Visitor{}, spec.shape);
}

inline PotentialSpec constant_potential(double value) {
    PotentialSpec s{ConstantPotential{value}, 0.0};
    s.lower_bound = detail::natural_lower_bound(s.shape);
    return s;
}

inline PotentialSpec periodic_cosine(double mean, std::vector<double> amplitudes,
                                     std::vector<double> wavenumbers, double period) {
    PotentialSpec s{PeriodicCosine{mean, std::move(amplitudes), std::move(wavenumbers), period}, 0.0};
    s.lower_bound = detail::natural_lower_bound(s.shape);
    validate(s);
    return s;
}

inline PotentialSpec confining_power(double gamma, double beta, double gamma0 = 0.0) {
    PotentialSpec s{ConfiningPower{gamma, beta, gamma0}, gamma0};
    validate(s);
    return s;
}

inline PotentialSpec tabulated_potential(std::vector<double> x, std::vector<double> values,
                                         SpectralClass cls) {
    PotentialSpec s{TabulatedPotential{std::move(x), std::move(values), cls}, 0.0};
    validate(s);
    s.lower_bound = detail::natural_lower_bound(s.shape);
    return s;
}

/// Period of a periodic potential, or nullopt-like 0 for other families.
inline double period_of(const PotentialSpec& spec) {
    if (const auto* p = std::get_if<PeriodicCosine>(&spec.shape)) return p->period;
    if (const auto* t = std::get_if<TabulatedPotential>(&spec.shape)) {
        if (const auto* c = std::get_if<PeriodicClass>(&t->spectral_class)) return c->period;
    }
    return 0.0;
}

/// V at every node. Throws InvalidPotentialError on a non-finite value or when
/// the samples dip below -c0 by more than 1e-9.
inline std::vector<double> eval_potential(const PotentialSpec& spec, const Grid& grid) {
    validate(spec);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v[i] = potential_at(spec, grid[i]);
        if (!std::isfinite(v[i])) {
            throw InvalidPotentialError("potential: non-finite value at x = " +
                                        std::to_string(grid[i]));
        }
        if (v[i] < -spec.lower_bound - 1e-9) {
            throw InvalidPotentialError("potential: V(" + std::to_string(grid[i]) + ") = " +
                                        std::to_string(v[i]) + " is below -c0 = " +
                                        std::to_string(-spec.lower_bound));
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

/// f(u) = |u|^{p-2} u.
struct PurePower {
    double exponent = 4.0;
};

/// f(u) = u^3 / (1 + u^2); grows linearly, so the effective p is 2.
struct AsymptoticallyLinear {};

/// f(u) = kappa u^3 / (m^2 + u^2); asymptotically linear with slope kappa.
struct SaturableScaled {
    double amplitude = 1.0;
    double saturation = 1.0;
};

using NonlinearityShape = std::variant<PurePower, AsymptoticallyLinear, SaturableScaled>;

struct FValue {
    double f = 0.0;
    double df = 0.0;  ///< partial derivative in u
};

struct NonlinearitySpec {
    NonlinearityShape shape;
    double growth_exponent = 4.0;  ///< p in |f| <= c (1 + |u|^{p-1})
    double growth_constant = 1.0;  ///< c

    /// f(x, u) and its u-derivative. The shipped families are autonomous; x is
    /// part of the signature so x-dependent families can slot in.
    FValue operator()(double /*x*/, double u) const {
        struct Visitor {
            double u;
            FValue operator()(const PurePower& p) const {
                const double a = std::abs(u);
                if (p.exponent == 2.0) return {u, 1.0};
                const double mag = std::pow(a, p.exponent - 2.0);
                return {mag * u, (p.exponent - 1.0) * mag};
            }
            FValue operator()(const AsymptoticallyLinear&) const {
                const double u2 = u * u;
                const double den = 1.0 + u2;
                return {u * u2 / den, u2 * (3.0 + u2) / (den * den)};
            }
            FValue operator()(const SaturableScaled& s) const {
                const double u2 = u * u;
                const double m2 = s.saturation * s.saturation;
                const double den = m2 + u2;
                return {s.amplitude * u * u2 / den,
                        s.amplitude * u2 * (3.0 * m2 + u2) / (den * den)};
            }
        };
        return std::visit(Visitor{u}, shape);
    }
};

inline NonlinearitySpec pure_power(double p) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw ConfigError("nonlinearity: pure power exponent must satisfy p >= 2");
    }
    return {PurePower{p}, p, 1.0};
}

inline NonlinearitySpec asymptotically_linear() { return {AsymptoticallyLinear{}, 2.0, 1.0}; }

inline NonlinearitySpec saturable_scaled(double amplitude, double saturation) {
    if (!(amplitude > 0.0) || !(saturation > 0.0)) {
        throw ConfigError("nonlinearity: saturable amplitude and saturation must be positive");
    }
    return {SaturableScaled{amplitude, saturation}, 2.0, amplitude};
}

inline FValue eval_nonlinearity(const NonlinearitySpec& spec, double u, double x = 0.0) {
    if (!std::isfinite(u)) throw ConfigError("nonlinearity: non-finite argument");
    return spec(x, u);
}

/// Numerical audit of the standing assumptions on f: vanishing of f(u)/u at
/// u -> 0, the declared growth bound, and derivative consistency.
struct NonlinearityAudit {
    bool small_u_ok = false;
    bool growth_ok = false;
    bool derivative_ok = false;
    double small_u_ratio = 0.0;     ///< |f(u)/u| at |u| = 1e-8
    double worst_growth_excess = 0.0;  ///< max |f| / (c (1 + |u|^{p-1})) over samples
    double worst_derivative_error = 0.0;

    bool ok() const noexcept { return small_u_ok && growth_ok && derivative_ok; }
};

inline NonlinearityAudit audit_nonlinearity(const NonlinearitySpec& spec, std::size_t samples = 2001) {
    NonlinearityAudit a;
    // f(u)/u must shrink with u; for p near 2 it does so slowly (|u|^{p-2}).
    auto ratio = [&](double u) { return std::max(std::abs(spec(0.0, u).f / u), std::abs(spec(0.0, -u).f / u)); };
    const double coarse = ratio(1e-6);
    a.small_u_ratio = ratio(1e-12);
    a.small_u_ok = spec(0.0, 0.0).f == 0.0 && (a.small_u_ratio <= 1e-6 || a.small_u_ratio < 0.5 * coarse);

    const double eps = std::numeric_limits<double>::epsilon();
    double growth = 0.0;
    double deriv = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = -10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(samples - 1);
        const FValue v = spec(0.0, u);
        const double bound =
            spec.growth_constant * (1.0 + std::pow(std::abs(u), spec.growth_exponent - 1.0));
        growth = std::max(growth, std::abs(v.f) / bound);

        if (std::abs(u) < 1e-2) continue;  // |u|^{p-1} need not be smooth at 0
        const double step = 1e-6 * std::max(1.0, std::abs(u));
        const double fd = (spec(0.0, u + step).f - spec(0.0, u - step).f) / (2.0 * step);
        deriv = std::max(deriv, std::abs(fd - v.df) / std::max(1.0, std::abs(v.df)));
    }
    a.worst_growth_excess = growth;
    a.growth_ok = growth <= 1.0 + 4.0 * eps;
    a.worst_derivative_error = deriv;
    a.derivative_ok = deriv <= 1e-6;
    return a;
}

}  // namespace nlsdecay
