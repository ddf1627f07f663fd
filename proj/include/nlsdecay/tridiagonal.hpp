#pragma once

// Symmetric tridiagonal kernels with a constant off-diagonal, which is all the
// three-point Laplacian ever produces.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlsdecay/errors.hpp"

namespace nlsdecay {

struct SymTridiagonal {
    std::vector<double> diag;
    double off = 0.0;

    std::size_t size() const noexcept { return diag.size(); }

    std::vector<double> apply(std::span<const double> v) const {
        const std::size_t n = diag.size();
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = diag[i] * v[i];
            if (i > 0) acc += off * v[i - 1];
            if (i + 1 < n) acc += off * v[i + 1];
            out[i] = acc;
        }
        return out;
    }

    /// Gershgorin enclosure of the spectrum.
    std::pair<double, double> gershgorin() const {
        const auto [lo, hi] = std::minmax_element(diag.begin(), diag.end());
        const double r = diag.size() > 1 ? 2.0 * std::abs(off) : 0.0;
        return {*lo - r, *hi + r};
    }

    double norm_bound() const {
        const auto [lo, hi] = gershgorin();
        return std::max(std::abs(lo), std::abs(hi));
    }
};

/// Number of eigenvalues strictly below `shift` (Sturm sequence count).
inline std::size_t sturm_count(const SymTridiagonal& t, double shift) {
    const double e2 = t.off * t.off;
    const double guard = std::numeric_limits<double>::min() * 1e10 +
                         std::numeric_limits<double>::epsilon() * std::abs(t.off);
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        q = (t.diag[i] - shift) - (i > 0 ? e2 / q : 0.0);
        if (q == 0.0) q = -guard;
        if (q < 0.0) ++count;
    }
    return count;
}

/// Solution of a general tridiagonal system by Gaussian elimination with
/// partial pivoting. `lower`, `diag`, `upper` are the three bands (lower[0] and
/// upper[n-1] unused). Returns false when a pivot falls to `pivot_floor` or
/// below; the output is then unspecified.
inline bool solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                              std::vector<double> upper, std::span<const double> rhs,
                              std::span<double> out, double pivot_floor) {
    const std::size_t n = diag.size();
    if (n == 0) return true;
    std::vector<double> b(rhs.begin(), rhs.end());
    std::vector<double> upper2(n, 0.0);  // fill-in from row swaps

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(lower[i + 1]) > std::abs(diag[i])) {
            // swap rows i and i+1
            std::swap(diag[i], lower[i + 1]);
            std::swap(upper[i], diag[i + 1]);
            if (i + 2 < n) std::swap(upper2[i], upper[i + 1]);
            std::swap(b[i], b[i + 1]);
        }
        if (std::abs(diag[i]) <= pivot_floor) return false;
        const double m = lower[i + 1] / diag[i];
        diag[i + 1] -= m * upper[i];
        if (i + 2 < n) upper[i + 1] -= m * upper2[i];
        b[i + 1] -= m * b[i];
    }
    if (std::abs(diag[n - 1]) <= pivot_floor) return false;

    out[n - 1] = b[n - 1] / diag[n - 1];
    if (n >= 2) out[n - 2] = (b[n - 2] - upper[n - 2] * out[n - 1]) / diag[n - 2];
    for (std::size_t k = n >= 2 ? n - 2 : 0; k-- > 0;) {
        out[k] = (b[k] - upper[k] * out[k + 1] - upper2[k] * out[k + 2]) / diag[k];
    }
    return true;
}

/// j-th smallest eigenvalue (0-based) by Sturm bisection to full precision.
inline double bisect_eigenvalue(const SymTridiagonal& t, std::size_t j) {
    auto [lo, hi] = t.gershgorin();
    const double eps = std::numeric_limits<double>::epsilon();
    lo -= eps * (1.0 + std::abs(lo));
    hi += eps * (1.0 + std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(t, mid) > j) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;  ///< unit 2-norm
    double residual = 0.0;       ///< ||T v - lambda v|| / ||v||
};

/// Eigenvector for a converged eigenvalue by inverse iteration.
inline EigenPair inverse_iteration(const SymTridiagonal& t, double lambda, int sweeps = 3) {
    const std::size_t n = t.size();
    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = std::max(t.norm_bound(), 1.0);
    // Deterministic, generic start vector.
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);

    std::vector<double> lower(n, t.off), diag(n), upper(n, t.off), y(n);
    EigenPair best{lambda, v, std::numeric_limits<double>::infinity()};
    for (int s = 0; s < sweeps; ++s) {
        for (std::size_t i = 0; i < n; ++i) diag[i] = t.diag[i] - lambda;
        // A near-singular pivot is expected here; floor it instead of failing.
        double floor = eps * scale;
        if (!solve_tridiagonal(lower, diag, upper, v, y, 0.0)) {
            for (std::size_t i = 0; i < n; ++i) diag[i] = t.diag[i] - lambda + floor;
            solve_tridiagonal(lower, diag, upper, v, y, 0.0);
        }
        double norm = 0.0;
        for (double yi : y) norm += yi * yi;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / norm;

        const auto tv = t.apply(v);
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) r += (tv[i] - lambda * v[i]) * (tv[i] - lambda * v[i]);
        r = std::sqrt(r);
        if (r < best.residual) best = {lambda, v, r};
    }
    return best;
}

/// The k smallest eigenvalues with eigenvectors, each certified by its
/// residual. Throws NumericalFailure when a residual exceeds `residual_tol`.
inline std::vector<EigenPair> lowest_eigenpairs(const SymTridiagonal& t, std::size_t k,
                                                double residual_tol = 1e-8) {
    if (k == 0 || k > t.size()) {
        throw ConfigError("eigensolver: requested " + std::to_string(k) +
                          " eigenvalues of a " + std::to_string(t.size()) + "x" +
                          std::to_string(t.size()) + " operator");
    }
    std::vector<EigenPair> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double lambda = bisect_eigenvalue(t, j);
        EigenPair pair = inverse_iteration(t, lambda);
        if (!(pair.residual <= residual_tol)) {
            throw NumericalFailure("eigensolver: eigenvalue #" + std::to_string(j) + " = " +
                                   std::to_string(lambda) + " has residual " +
                                   std::to_string(pair.residual) + " after inverse iteration (tol " +
                                   std::to_string(residual_tol) + ")");
        }
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace nlsdecay
