#include <cmath>
#include <random>

#include <Eigen/Sparse>
#include <gtest/gtest.h>

#include "nlsdecay/solver.hpp"

using namespace nlsdecay;

namespace {

std::vector<double> sample(const Grid& g, auto&& fn) {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = fn(g[i]);
    return out;
}

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double soliton(double x) { return std::sqrt(2.0) / std::cosh(x); }

// Independent oracle for even solutions: Newton on the half line [0, L] with
// the reflection u_{-1} = u_1 at the centre, solved with Eigen's SparseLU.
std::vector<double> half_line_oracle(const Grid& g, std::span<const double> v, const NonlinearitySpec& f,
                                     std::span<const double> seed) {
    const std::size_t c = g.center();
    const auto m = static_cast<Eigen::Index>(g.size() - 1 - c);  // free nodes 0..m-1, node m pinned
    const double h2 = g.spacing() * g.spacing();
    Eigen::VectorXd u(m);
    for (Eigen::Index k = 0; k < m; ++k) u(k) = seed[c + static_cast<std::size_t>(k)];
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd res(m);
        std::vector<Eigen::Triplet<double>> trip;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double xk = g[c + static_cast<std::size_t>(k)];
            const double left = k == 0 ? u(1) : u(k - 1);
            const double right = k + 1 < m ? u(k + 1) : 0.0;
            const FValue fv = f(xk, u(k));
            res(k) = -(left - 2.0 * u(k) + right) / h2 + v[c + static_cast<std::size_t>(k)] * u(k) - fv.f;
            trip.emplace_back(k, k, 2.0 / h2 + v[c + static_cast<std::size_t>(k)] - fv.df);
            if (k == 0) {
                trip.emplace_back(0, 1, -2.0 / h2);
            } else {
                trip.emplace_back(k, k - 1, -1.0 / h2);
                if (k + 1 < m) trip.emplace_back(k, k + 1, -1.0 / h2);
            }
        }
        if (res.lpNorm<Eigen::Infinity>() < 1e-11) break;
        Eigen::SparseMatrix<double> jac(m, m);
        jac.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(jac);
        u -= lu.solve(res);
    }
    std::vector<double> out(g.size(), 0.0);
    for (Eigen::Index k = 0; k < m; ++k) {
        out[c + static_cast<std::size_t>(k)] = u(k);
        out[c - static_cast<std::size_t>(k)] = u(k);
    }
    return out;
}

struct Zero {
    FValue operator()(double, double) const { return {0.0, 0.0}; }
};

}  // namespace

TEST(Residual, SolitonIsSecondOrder) {
    const auto f = pure_power(4.0);
    for (double h : {0.02, 0.01}) {
        const Grid g = build_grid(20.0, static_cast<std::size_t>(40.0 / h) + 1);
        const std::vector<double> v(g.size(), 1.0);
        const auto r = residual(g, v, f, sample(g, soliton));
        EXPECT_EQ(r.front(), 0.0);
        EXPECT_EQ(r.back(), 0.0);
        // u''''/12 h^2 with |u''''| <= 10 sqrt2 for the soliton
        EXPECT_LE(sup_abs(r), 1.3 * h * h);
        EXPECT_GT(sup_abs(r), 0.01 * h * h);
    }
}

TEST(Residual, GaussianGroundStateOfShiftedOscillator) {
    // -u'' + (x^2 - 1) u = 0 for u = exp(-x^2/2)
    const Grid g = build_grid(8.0, 1601);
    const auto v = eval_potential(confining_power(1.0, 2.0, 1.0), g);
    const auto r = residual(g, v, Zero{}, sample(g, [](double x) { return std::exp(-x * x / 2); }));
    const double h = g.spacing();
    EXPECT_LE(sup_abs(r), 0.3 * h * h);
}

TEST(Residual, RejectsShapeMismatch) {
    const Grid g = build_grid(1.0, 5);
    EXPECT_THROW(residual(g, std::vector<double>(4, 0.0), Zero{}, std::vector<double>(5, 0.0)), ConfigError);
}

TEST(Jacobian, AtZeroIsTheLinearOperator) {
    const Grid g = build_grid(3.0, 31);
    const auto v = eval_potential(confining_power(1.0, 2.0), g);
    const auto j = jacobian(g, v, pure_power(4.0), std::vector<double>(g.size(), 0.0));
    const auto op = assemble(g, v);
    EXPECT_EQ(j.off, op.off());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(j.diag[i], op.diag()[i]);
}

TEST(Jacobian, DiagonalExample) {
    const Grid g = build_grid(1.0, 3);
    const std::vector<double> v(3, 1.0);
    const auto j = jacobian(g, v, pure_power(4.0), std::vector<double>{0.0, 2.0, 0.0});
    EXPECT_EQ(j.diag[1], 2.0 + 1.0 - 12.0);
}

// ||F(u + t d) - F(u) - t J d|| / t = O(t).
TEST(JacobianProperty, DirectionalDerivative) {
    const Grid g = build_grid(10.0, 401);
    const auto v = eval_potential(confining_power(0.5, 2.0), g);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (const auto& f : {pure_power(4.0), asymptotically_linear(), saturable_scaled(1.2, 0.7)}) {
        auto u = sample(g, [](double x) { return 1.3 / std::cosh(0.7 * x); });
        std::vector<double> d(g.size());
        for (double& x : d) x = nd(rng);
        u.front() = u.back() = d.front() = d.back() = 0.0;
        const auto f0 = residual(g, v, f, u);
        const auto jd = jacobian(g, v, f, u).apply(d);
        std::vector<double> rel;
        for (double t : {1e-2, 5e-3, 2.5e-3}) {
            std::vector<double> ut(u);
            for (std::size_t i = 0; i < u.size(); ++i) ut[i] += t * d[i];
            const auto ft = residual(g, v, f, ut);
            double err = 0.0;
            for (std::size_t i = 1; i + 1 < u.size(); ++i) err = std::max(err, std::abs(ft[i] - f0[i] - t * jd[i]));
            rel.push_back(err / t);
        }
        for (std::size_t k = 1; k < rel.size(); ++k) {
            EXPECT_GT(rel[k - 1] / rel[k], 1.8);
            EXPECT_LT(rel[k - 1] / rel[k], 2.2);
        }
    }
}

TEST(Newton, CubicSolitonMatchesClosedForm) {
    const Grid g = build_grid(20.0, 4001);
    const std::vector<double> v(g.size(), 1.0);
    const auto seed = sample(g, [](double x) { return 1.5 / std::cosh(x); });
    const auto res = newton_solve(g, v, pure_power(4.0), seed);
    EXPECT_LE(res.trace.iterations, 20u);
    EXPECT_TRUE(res.trace.converged);
    EXPECT_LE(res.field.residual_norm, 1e-10);
    EXPECT_TRUE(res.field.accepted());
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(res.field.values[i] - soliton(g[i])));
    EXPECT_LE(err, 1e-4);
    EXPECT_EQ(res.field.values.front(), 0.0);
    EXPECT_EQ(res.field.values.back(), 0.0);
}

TEST(Newton, ZeroSeedIsTrivial) {
    const Grid g = build_grid(20.0, 401);
    const std::vector<double> v(g.size(), 1.0);
    try {
        newton_solve(g, v, pure_power(4.0), std::vector<double>(g.size(), 0.0));
        FAIL() << "zero seed must not succeed";
    } catch (const TrivialSolutionError& e) {
        EXPECT_TRUE(e.trace().converged);
        EXPECT_EQ(e.trace().iterations, 0u);
    }
}

TEST(Newton, SingularJacobianIsReported) {
    // one interior node with 2/h^2 + V - df = 0 and a nonzero residual
    const Grid g = build_grid(1.0, 3);
    const std::vector<double> v(3, -2.0);
    const auto forcing = [](double, double) { return FValue{1.0, 0.0}; };
    EXPECT_THROW(newton_solve(g, v, forcing, std::vector<double>{0.0, 1.0, 0.0}), SingularJacobianError);
}

TEST(Newton, IterationCapIsNonConvergence) {
    const Grid g = build_grid(20.0, 801);
    const std::vector<double> v(g.size(), 1.0);
    NewtonOptions opt;
    opt.max_iter = 1;
    try {
        newton_solve(g, v, pure_power(4.0), sample(g, [](double x) { return 3.0 / std::cosh(x); }), opt);
        FAIL();
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.trace().iterations, 1u);
        EXPECT_EQ(e.trace().residual_history.size(), 2u);
        EXPECT_EQ(e.rung(), -1);
    }
}

TEST(Newton, ShortDomainFailsLeakCheck) {
    const Grid g = build_grid(4.0, 801);
    const std::vector<double> v(g.size(), 1.0);
    const auto res = newton_solve(g, v, pure_power(4.0), sample(g, [](double x) { return 1.5 / std::cosh(x); }));
    EXPECT_FALSE(res.field.accepted());
    EXPECT_GT(res.field.boundary_leak, 1e-3);
}

TEST(Newton, EvenTrapSolutionMatchesHalfLineOracle) {
    const Grid g = build_grid(8.0, 1601);
    const auto v = eval_potential(confining_power(1.0, 2.0, 0.5), g);
    const auto f = pure_power(4.0);
    const auto seed = sample(g, [](double x) { return 1.5 * std::exp(-x * x / 2); });
    const auto res = newton_solve(g, v, f, seed);
    const auto& u = res.field.values;
    EXPECT_GT(res.field.sup_norm, 0.1);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(u[i], u[g.size() - 1 - i], 1e-12);
    const auto oracle = half_line_oracle(g, v, f, seed);
    double diff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(u[i] - oracle[i]));
    EXPECT_LE(diff, 1e-9);
}

TEST(Newton, ResidualHistoryDecreasesAndStoredResidualIsHonest) {
    const Grid g = build_grid(20.0, 2001);
    const std::vector<double> v(g.size(), 1.0);
    const auto f = pure_power(4.0);
    const auto res = newton_solve(g, v, f, sample(g, [](double x) { return 0.9 * std::exp(-x * x / 4); }));
    const auto& hist = res.trace.residual_history;
    ASSERT_EQ(hist.size(), res.trace.iterations + 1);
    for (std::size_t k = 1; k < hist.size(); ++k) EXPECT_LT(hist[k], hist[k - 1]);
    EXPECT_EQ(res.field.residual_norm, sup_abs(residual(g, v, f, res.field.values)));
    EXPECT_EQ(res.field.residual_norm, hist.back());
    for (double t : res.trace.damping) {
        EXPECT_GT(t, 0.0);
        EXPECT_LE(t, 1.0);
    }
}

// Summation by parts: the discrete weak form against any phi with zero ends
// equals sum h F_i phi_i, so it is bounded by the residual.
TEST(NewtonProperty, WeakFormHolds) {
    const Grid g = build_grid(20.0, 2001);
    const std::vector<double> v(g.size(), 1.0);
    const auto f = pure_power(4.0);
    const auto u = newton_solve(g, v, f, sample(g, [](double x) { return 1.5 / std::cosh(x); })).field.values;
    const double h = g.spacing();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> du(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> phi(g.size());
        for (double& x : phi) x = du(rng);
        phi.front() = phi.back() = 0.0;
        double weak = 0.0, l1 = 0.0;
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            weak += (u[i + 1] - u[i]) * (phi[i + 1] - phi[i]) / h;
        }
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            weak += h * (v[i] * u[i] - f(g[i], u[i]).f) * phi[i];
            l1 += h * std::abs(phi[i]);
        }
        EXPECT_LE(std::abs(weak), 2e-10 * l1 + 1e-12);
    }
}

TEST(NewtonProperty, GridRefinementIsSecondOrder) {
    const auto f = pure_power(4.0);
    std::vector<double> errs;
    for (std::size_t n : {1001u, 2001u, 4001u}) {
        const Grid g = build_grid(20.0, n);
        const std::vector<double> v(g.size(), 1.0);
        const auto u = newton_solve(g, v, f, sample(g, [](double x) { return 1.5 / std::cosh(x); })).field.values;
        double e = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(u[i] - soliton(g[i])));
        errs.push_back(e);
    }
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double ratio = errs[k - 1] / errs[k];
        EXPECT_GE(ratio, 3.0);
        EXPECT_LE(ratio, 5.0);
    }
}

TEST(Continuation, SingleRungEqualsNewton) {
    const Grid g = build_grid(20.0, 2001);
    const std::vector<double> v(g.size(), 1.0);
    const auto f = pure_power(4.0);
    const auto seed = sample(g, [](double x) { return 1.5 / std::cosh(x); });
    const std::vector<double> ladder{1.0};
    const auto a = continuation_solve(g, v, f, seed, ladder);
    const auto b = newton_solve(g, v, f, seed);
    EXPECT_EQ(a.field.values, b.field.values);
    EXPECT_EQ(a.trace.iterations, b.trace.iterations);
}

TEST(Continuation, LadderFromSmallSeed) {
    const Grid g = build_grid(20.0, 2001);
    const std::vector<double> v(g.size(), 1.0);
    const auto f = pure_power(4.0);
    const auto seed = sample(g, [](double x) { return 0.3 / std::cosh(x); });
    const std::vector<double> ladder{0.25, 0.5, 0.75, 1.0};
    const auto res = continuation_solve(g, v, f, seed, ladder);
    EXPECT_LE(res.field.residual_norm, 1e-10);
    EXPECT_EQ(res.field.residual_norm, sup_abs(residual(g, v, f, res.field.values)));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(res.field.values[i] - soliton(g[i])));
    EXPECT_LE(err, 5e-4);
}

TEST(Continuation, LadderValidationAndRungIndex) {
    const Grid g = build_grid(20.0, 401);
    const std::vector<double> v(g.size(), 1.0);
    const auto f = pure_power(4.0);
    const auto seed = sample(g, [](double x) { return 1.5 / std::cosh(x); });
    EXPECT_THROW(continuation_solve(g, v, f, seed, std::vector<double>{}), ConfigError);
    EXPECT_THROW(continuation_solve(g, v, f, seed, std::vector<double>{0.5, 0.5, 1.0}), ConfigError);
    EXPECT_THROW(continuation_solve(g, v, f, seed, std::vector<double>{0.5, 0.9}), ConfigError);
    EXPECT_THROW(continuation_solve(g, v, f, seed, std::vector<double>{-0.5, 1.0}), ConfigError);
    try {
        continuation_solve(g, v, f, std::vector<double>(g.size(), 0.0), std::vector<double>{0.5, 1.0});
        FAIL();
    } catch (const TrivialSolutionError& e) {
        EXPECT_EQ(e.rung(), 0);
    }
}

TEST(AmplitudeScaled, ScalesSolutions) {
    const auto f = pure_power(4.0);
    const AmplitudeScaled<NonlinearitySpec> fs{f, 0.5};
    // s f(w/s) for f = u^3 is w^3 / s^2
    EXPECT_DOUBLE_EQ(fs(0.0, 1.0).f, 4.0);
    EXPECT_DOUBLE_EQ(fs(0.0, 1.0).df, f(0.0, 2.0).df);
}
