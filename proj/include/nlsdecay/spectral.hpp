#pragma once

// Discrete Schrodinger operator H = -d^2/dx^2 + V on a grid, its low-lying
// spectrum, and the essential spectrum of the untruncated operator per
// potential family.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nlsdecay/errors.hpp"
#include "nlsdecay/model.hpp"
#include "nlsdecay/tridiagonal.hpp"

namespace nlsdecay {

/// Three-point Dirichlet discretization over all N nodes, with zero ghost
/// values outside [x_0, x_{N-1}].
struct DiscreteOperator {
    const Grid* grid = nullptr;
    SymTridiagonal matrix;

    std::size_t size() const noexcept { return matrix.size(); }
    std::span<const double> diag() const noexcept { return matrix.diag; }
    double off() const noexcept { return matrix.off; }
};

inline DiscreteOperator assemble(const Grid& grid, std::span<const double> potential) {
    if (potential.size() != grid.size()) {
        throw ConfigError("assemble: " + std::to_string(potential.size()) +
                          " potential samples for a grid of " + std::to_string(grid.size()));
    }
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    DiscreteOperator op;
    op.grid = &grid;
    op.matrix.off = -inv_h2;
    op.matrix.diag.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) op.matrix.diag[i] = 2.0 * inv_h2 + potential[i];
    return op;
}

/// The k smallest eigenvalues in ascending order; each is certified by an
/// inverse-iteration residual <= 1e-8.
inline std::vector<double> lowest_eigenvalues(const DiscreteOperator& op, std::size_t k) {
    const auto pairs = lowest_eigenpairs(op.matrix, k, 1e-8);
    std::vector<double> values;
    values.reserve(pairs.size());
    for (const auto& p : pairs) values.push_back(p.value);
    return values;
}

// ---------------------------------------------------------------------------
// Hill discriminant
// ---------------------------------------------------------------------------

struct Discriminant {
    double energy = 0.0;
    double trace = 0.0;  ///< u1(T) + u2'(T)

    bool in_band() const noexcept { return std::abs(trace) <= 2.0; }
};

/// Trace of the period map of u'' = (V - E) u over [0, T], integrated by
/// classical fixed-step RK4 from the fundamental initial data (1,0), (0,1).
inline Discriminant hill_discriminant(const PotentialSpec& spec, double energy,
                                      std::size_t steps = 2000) {
    const double period = period_of(spec);
    if (!(period > 0.0)) {
        throw ClassificationError("hill_discriminant: potential is not periodic");
    }
    if (steps < 100) throw ConfigError("hill_discriminant: need at least 100 steps per period");

    const double h = period / static_cast<double>(steps);
    // Both fundamental solutions share the coefficient q(x) = V(x) - E, so they
    // are advanced together.
    std::array<double, 4> y{1.0, 0.0, 0.0, 1.0};  // (u1, u1', u2, u2')
    auto rhs = [&](double q, const std::array<double, 4>& s) {
        return std::array<double, 4>{s[1], q * s[0], s[3], q * s[2]};
    };
    for (std::size_t n = 0; n < steps; ++n) {
        const double x = h * static_cast<double>(n);
        const double q0 = potential_at(spec, x) - energy;
        const double qm = potential_at(spec, x + 0.5 * h) - energy;
        const double q1 = potential_at(spec, x + h) - energy;
        const auto k1 = rhs(q0, y);
        std::array<double, 4> t{};
        for (int c = 0; c < 4; ++c) t[c] = y[c] + 0.5 * h * k1[c];
        const auto k2 = rhs(qm, t);
        for (int c = 0; c < 4; ++c) t[c] = y[c] + 0.5 * h * k2[c];
        const auto k3 = rhs(qm, t);
        for (int c = 0; c < 4; ++c) t[c] = y[c] + h * k3[c];
        const auto k4 = rhs(q1, t);
        for (int c = 0; c < 4; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    return {energy, y[0] + y[3]};
}

// ---------------------------------------------------------------------------
// Essential spectrum
// ---------------------------------------------------------------------------

struct Band {
    double low = 0.0;
    double high = 0.0;
};

enum class EssentialKind { Empty, HalfLine, Bands };

struct EssentialSpectrum {
    EssentialKind kind = EssentialKind::Empty;
    double threshold = 0.0;    ///< v_inf for HalfLine
    std::vector<Band> bands;   ///< sorted, disjoint, for Bands
    bool window_limited = false;
    double window_low = 0.0;   ///< scan window, for Bands
    double window_high = 0.0;
};

struct SpectralScan {
    double low = -5.0;
    double high = 10.0;
    double resolution = 1e-2;
    std::size_t steps = 2000;   ///< RK4 steps per period
    double edge_tolerance = 1e-8;
};

namespace detail {

inline double refine_edge(const PotentialSpec& spec, double inside, double outside,
                          const SpectralScan& scan) {
    // Bisection on g(E) = |Delta(E)| - 2, negative inside a band.
    for (int it = 0; it < 200 && std::abs(outside - inside) > scan.edge_tolerance; ++it) {
        const double mid = 0.5 * (inside + outside);
        if (hill_discriminant(spec, mid, scan.steps).in_band()) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return inside;
}

}  // namespace detail

inline std::vector<Band> scan_bands(const PotentialSpec& spec, const SpectralScan& scan,
                                    bool* clipped = nullptr) {
    if (!(scan.high > scan.low) || !(scan.resolution > 0.0)) {
        throw ConfigError("essential_spectrum: scan window must satisfy low < high, resolution > 0");
    }
    const auto samples =
        static_cast<std::size_t>(std::ceil((scan.high - scan.low) / scan.resolution)) + 1;
    const double de = (scan.high - scan.low) / static_cast<double>(samples - 1);
    std::vector<double> energy(samples);
    std::vector<char> inside(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        energy[i] = i + 1 == samples ? scan.high : scan.low + de * static_cast<double>(i);
        inside[i] = hill_discriminant(spec, energy[i], scan.steps).in_band() ? 1 : 0;
    }

    std::vector<Band> bands;
    bool limited = false;
    std::size_t i = 0;
    while (i < samples) {
        if (!inside[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < samples && inside[j + 1]) ++j;
        Band b;
        if (i == 0) {
            b.low = energy[0];
            limited = true;
        } else {
            b.low = detail::refine_edge(spec, energy[i], energy[i - 1], scan);
        }
        if (j + 1 == samples) {
            b.high = energy[samples - 1];
            limited = true;
        } else {
            b.high = detail::refine_edge(spec, energy[j], energy[j + 1], scan);
        }
        bands.push_back(b);
        i = j + 1;
    }
    if (clipped) *clipped = limited;
    return bands;
}

/// Essential spectrum of H on the whole line. Classification follows the
/// potential family: confining potentials have none, asymptotically constant
/// ones a half-line, periodic ones bands from a discriminant scan.
inline EssentialSpectrum essential_spectrum(const PotentialSpec& spec, const SpectralScan& scan = {}) {
    validate(spec);
    struct Visitor {
        const PotentialSpec& spec;
        const SpectralScan& scan;

        EssentialSpectrum periodic() const {
            EssentialSpectrum e;
            e.kind = EssentialKind::Bands;
            e.window_low = scan.low;
            e.window_high = scan.high;
            e.bands = scan_bands(spec, scan, &e.window_limited);
            return e;
        }
        EssentialSpectrum operator()(const ConstantPotential& c) const {
            return {EssentialKind::HalfLine, c.value, {}, false, 0.0, 0.0};
        }
        EssentialSpectrum operator()(const PeriodicCosine&) const { return periodic(); }
        EssentialSpectrum operator()(const ConfiningPower&) const { return {}; }
        EssentialSpectrum operator()(const TabulatedPotential& t) const {
            if (std::holds_alternative<ConfiningClass>(t.spectral_class)) return {};
            if (const auto* a = std::get_if<AsymptoticallyConstantClass>(&t.spectral_class)) {
                return {EssentialKind::HalfLine, a->limit, {}, false, 0.0, 0.0};
            }
            return periodic();
        }
    };
    return std::visit(Visitor{spec, scan}, spec.shape);
}

struct HypothesisCheck {
    bool ok = false;
    double gap_distance = 0.0;  ///< dist(0, sigma_ess); +inf when empty
};

/// Whether 0 lies outside the essential spectrum by more than `tolerance`.
/// For band scans, spectrum may continue past the window, so the window edges
/// bound the distance from above.
inline HypothesisCheck check_hypothesis_ii(const EssentialSpectrum& ess, double tolerance = 1e-6) {
    const double inf = std::numeric_limits<double>::infinity();
    double d = inf;
    switch (ess.kind) {
        case EssentialKind::Empty:
            break;
        case EssentialKind::HalfLine:
            d = ess.threshold <= 0.0 ? 0.0 : ess.threshold;
            break;
        case EssentialKind::Bands:
            for (const Band& b : ess.bands) {
                if (b.low <= 0.0 && 0.0 <= b.high) {
                    d = 0.0;
                } else {
                    d = std::min(d, std::min(std::abs(b.low), std::abs(b.high)));
                }
            }
            if (ess.window_high > ess.window_low) {
                if (ess.window_high > 0.0) d = std::min(d, ess.window_high);
                if (ess.window_low > 0.0) d = 0.0;  // cannot see below the window
            }
            break;
    }
    return {d > tolerance, d};
}

struct SpectralReport {
    std::vector<double> eigenvalues;  ///< truncated-operator eigenvalues below the cutoff
    EssentialSpectrum essential;
    double gap_distance = 0.0;
    bool hypothesis_ii_ok = false;
    bool zero_is_eigenvalue = false;
    double tolerance = 1e-6;
};

/// Full spectral report: essential part by family, low-lying eigenvalues of
/// the truncated operator below the bottom of sigma_ess, and the 0-eigenvalue
/// diagnostic (which never blocks anything).
inline SpectralReport spectral_report(const PotentialSpec& spec, const Grid& grid,
                                      std::size_t num_eigenvalues, const SpectralScan& scan = {},
                                      double tolerance = 1e-6) {
    SpectralReport r;
    r.tolerance = tolerance;
    r.essential = essential_spectrum(spec, scan);
    const auto check = check_hypothesis_ii(r.essential, tolerance);
    r.hypothesis_ii_ok = check.ok;
    r.gap_distance = check.gap_distance;

    double cutoff = std::numeric_limits<double>::infinity();
    if (r.essential.kind == EssentialKind::HalfLine) cutoff = r.essential.threshold;
    if (r.essential.kind == EssentialKind::Bands && !r.essential.bands.empty()) {
        cutoff = r.essential.bands.front().low;
    }
    const auto v = eval_potential(spec, grid);
    const auto op = assemble(grid, v);
    const std::size_t k = std::min(num_eigenvalues, grid.size());
    if (k > 0) {
        for (double lambda : lowest_eigenvalues(op, k)) {
            if (std::abs(lambda) <= 1e-6) r.zero_is_eigenvalue = true;
            if (lambda < cutoff) r.eigenvalues.push_back(lambda);
        }
    }
    return r;
}

}  // namespace nlsdecay
