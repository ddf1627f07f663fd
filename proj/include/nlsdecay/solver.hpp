#pragma once

// Damped Newton iteration for the discretized stationary equation
//
//     F(u)_i = -(u_{i+1} - 2 u_i + u_{i-1}) / h^2 + V_i u_i - f(x_i, u_i)
//
// on interior nodes, with u_0 = u_{N-1} = 0 (Dirichlet truncation of the line).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlsdecay/errors.hpp"
#include "nlsdecay/model.hpp"
#include "nlsdecay/spectral.hpp"
#include "nlsdecay/tridiagonal.hpp"

namespace nlsdecay {

/// Anything callable as f(x, u) -> FValue.
template <typename F>
concept Nonlinearity = requires(const F& f, double x, double u) {
    { f(x, u) } -> std::convertible_to<FValue>;
};

/// f_s(x, w) = s f(x, w / s). If u solves the problem with f, then s u solves
/// it with f_s, so a ladder s -> 1 walks a solution up in amplitude.
template <Nonlinearity F>
struct AmplitudeScaled {
    const F& base;
    double scale = 1.0;

    FValue operator()(double x, double w) const {
        const FValue v = base(x, w / scale);
        return {scale * v.f, v.df};
    }
};

struct SolutionField {
    const Grid* grid = nullptr;
    std::vector<double> values;
    double residual_norm = 0.0;  ///< ||F(u)||_inf
    double boundary_leak = 0.0;  ///< max(|u_1|, |u_{N-2}|): first free nodes next to the pinned ends
    double sup_norm = 0.0;
    double energy_norm = 0.0;    ///< discrete H^1 norm
    double weighted_norm = 0.0;  ///< sqrt(sum (V + c0 + 1) u^2 h)
    bool leak_ok = false;

    /// Accepted iff the truncation is consistent with decay.
    bool accepted() const noexcept { return leak_ok; }
};

struct NewtonOptions {
    double tolerance = 1e-10;
    std::size_t max_iter = 100;
    double damping_floor = 1e-4;
    double nontrivial_floor = 1e-6;
    double leak_ratio = 1e-8;
    double lower_bound = 0.0;  ///< c0, only used for the weighted norm
};

struct NewtonResult {
    SolutionField field;
    NewtonTrace trace;
};

namespace detail {

inline void check_shapes(const Grid& g, std::span<const double> v, std::span<const double> u) {
    if (v.size() != g.size() || u.size() != g.size()) {
        throw ConfigError("solver: field lengths (" + std::to_string(v.size()) + ", " +
                          std::to_string(u.size()) + ") do not match grid size " +
                          std::to_string(g.size()));
    }
}

inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

/// Discrete residual. End entries are 0; end values of u are treated as 0.
template <Nonlinearity F>
std::vector<double> residual(const Grid& g, std::span<const double> v, const F& f,
                             std::span<const double> u) {
    detail::check_shapes(g, v, u);
    const std::size_t n = g.size();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double left = i == 1 ? 0.0 : u[i - 1];
        const double right = i + 2 == n ? 0.0 : u[i + 1];
        const double lap = (left - 2.0 * u[i] + right) * inv_h2;
        out[i] = -lap + v[i] * u[i] - f(g[i], u[i]).f;
    }
    return out;
}

/// Linearization of F at u: -Delta_h + diag(V - df/du), over all N nodes (the
/// Newton step uses its interior block). At u = 0 this is assemble(g, V).
template <Nonlinearity F>
SymTridiagonal jacobian(const Grid& g, std::span<const double> v, const F& f,
                        std::span<const double> u) {
    detail::check_shapes(g, v, u);
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    SymTridiagonal j;
    j.off = -inv_h2;
    j.diag.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        j.diag[i] = 2.0 * inv_h2 + v[i] - f(g[i], u[i]).df;
    }
    return j;
}

/// Packages u as a SolutionField with its diagnostics.
template <Nonlinearity F>
SolutionField make_field(const Grid& g, std::span<const double> v, const F& f,
                         std::vector<double> u, const NewtonOptions& opt = {}) {
    SolutionField s;
    s.grid = &g;
    s.residual_norm = detail::sup_norm(residual(g, v, f, u));
    s.sup_norm = detail::sup_norm(u);
    const std::size_t n = g.size();
    s.boundary_leak = n > 2 ? std::max(std::abs(u[1]), std::abs(u[n - 2])) : 0.0;
    const double h = g.spacing();
    double grad = 0.0, mass = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mass += u[i] * u[i] * h;
        weighted += (v[i] + opt.lower_bound + 1.0) * u[i] * u[i] * h;
        if (i + 1 < n) {
            const double du = (u[i + 1] - u[i]) / h;
            grad += du * du * h;
        }
    }
    s.energy_norm = std::sqrt(grad + mass);
    s.weighted_norm = std::sqrt(std::max(weighted, 0.0));
    s.leak_ok = s.boundary_leak <= opt.leak_ratio * s.sup_norm;
    s.values = std::move(u);
    return s;
}

/// Damped Newton with step halving down to `damping_floor`. The end values of
/// u0 are replaced by 0. Throws NonConvergenceError, TrivialSolutionError or
/// SingularJacobianError, each carrying the trace.
template <Nonlinearity F>
NewtonResult newton_solve(const Grid& g, std::span<const double> v, const F& f,
                          std::span<const double> u0, const NewtonOptions& opt = {}) {
    detail::check_shapes(g, v, u0);
    if (!(opt.tolerance > 0.0)) throw ConfigError("newton_solve: tolerance must be positive");
    for (double x : u0) {
        if (!std::isfinite(x)) throw ConfigError("newton_solve: initial field is not finite");
    }
    const std::size_t n = g.size();
    std::vector<double> u(u0.begin(), u0.end());
    u.front() = 0.0;
    u.back() = 0.0;

    NewtonTrace trace;
    std::vector<double> res = residual(g, v, f, u);
    double rnorm = detail::sup_norm(res);
    trace.residual_history.push_back(rnorm);

    const std::size_t m = n - 2;
    std::vector<double> lower(m), diag(m), upper(m), rhs(m), step(m), trial(n);
    while (rnorm > opt.tolerance) {
        if (trace.iterations >= opt.max_iter) {
            throw NonConvergenceError("newton_solve: no convergence after " +
                                          std::to_string(opt.max_iter) + " iterations (residual " +
                                          std::to_string(rnorm) + ")",
                                      trace);
        }
        const SymTridiagonal jac = jacobian(g, v, f, u);
        for (std::size_t i = 0; i < m; ++i) {
            lower[i] = jac.off;
            upper[i] = jac.off;
            diag[i] = jac.diag[i + 1];
            rhs[i] = -res[i + 1];
        }
        const double pivot_floor = 1e3 * std::numeric_limits<double>::epsilon() * jac.norm_bound();
        if (!solve_tridiagonal(lower, diag, upper, rhs, step, pivot_floor)) {
            throw SingularJacobianError(
                "newton_solve: singular Jacobian at iteration " + std::to_string(trace.iterations) +
                    "; try a continuation ladder or a different seed",
                trace);
        }

        double t = 1.0;
        bool accepted = false;
        while (t >= opt.damping_floor) {
            trial = u;
            for (std::size_t i = 0; i < m; ++i) trial[i + 1] += t * step[i];
            auto trial_res = residual(g, v, f, trial);
            const double trial_norm = detail::sup_norm(trial_res);
            if (trial_norm < rnorm) {
                u.swap(trial);
                res.swap(trial_res);
                rnorm = trial_norm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++trace.iterations;
        if (!accepted) {
            throw NonConvergenceError("newton_solve: damping fell below " +
                                          std::to_string(opt.damping_floor) + " at iteration " +
                                          std::to_string(trace.iterations) + " (residual " +
                                          std::to_string(rnorm) + ")",
                                      trace);
        }
        trace.damping.push_back(t);
        trace.residual_history.push_back(rnorm);
    }
    trace.converged = true;

    if (detail::sup_norm(u) < opt.nontrivial_floor) {
        throw TrivialSolutionError("newton_solve: converged to the trivial solution u = 0", trace);
    }
    return {make_field(g, v, f, std::move(u), opt), std::move(trace)};
}

/// Newton along an amplitude ladder s_1 < ... < s_m = 1: rung j solves the
/// problem with f replaced by s_j f(x, w / s_j) (solution s_j u), seeded by
/// the previous rung's solution rescaled by s_j / s_{j-1}. The first rung is
/// seeded with u0 as given. Errors carry the failing rung index.
template <Nonlinearity F>
NewtonResult continuation_solve(const Grid& g, std::span<const double> v, const F& f,
                                std::span<const double> u0, std::span<const double> ladder,
                                const NewtonOptions& opt = {}) {
    if (ladder.empty()) throw ConfigError("continuation_solve: empty ladder");
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        if (!(ladder[j] > 0.0) || (j > 0 && !(ladder[j] > ladder[j - 1]))) {
            throw ConfigError("continuation_solve: ladder must be positive and strictly increasing");
        }
    }
    if (ladder.back() != 1.0) throw ConfigError("continuation_solve: ladder must end at 1");

    std::vector<double> seed(u0.begin(), u0.end());
    NewtonTrace combined;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        const AmplitudeScaled<F> scaled{f, ladder[j]};
        if (j > 0) {
            const double ratio = ladder[j] / ladder[j - 1];
            for (double& x : seed) x *= ratio;
        }
        NewtonResult step;
        try {
            step = newton_solve(g, v, scaled, seed, opt);
        } catch (const TrivialSolutionError& e) {
            throw TrivialSolutionError(std::string(e.what()) + " (ladder rung " + std::to_string(j) + ")",
                                       e.trace(), static_cast<long>(j));
        } catch (const SingularJacobianError& e) {
            throw SingularJacobianError(std::string(e.what()) + " (ladder rung " + std::to_string(j) + ")",
                                        e.trace(), static_cast<long>(j));
        } catch (const NonConvergenceError& e) {
            throw NonConvergenceError(std::string(e.what()) + " (ladder rung " + std::to_string(j) + ")",
                                      e.trace(), static_cast<long>(j));
        }
        combined.iterations += step.trace.iterations;
        combined.damping.insert(combined.damping.end(), step.trace.damping.begin(),
                                step.trace.damping.end());
        if (j + 1 == ladder.size()) {
            combined.residual_history = step.trace.residual_history;
            combined.converged = true;
            // Re-package against the unscaled nonlinearity.
            return {make_field(g, v, f, std::move(step.field.values), opt), std::move(combined)};
        }
        seed = std::move(step.field.values);
    }
    throw InternalInvariantError("continuation_solve: ladder loop exited early");
}

}  // namespace nlsdecay
