#pragma once

// Exact-rational integrability ladder for the L^r -> L^infinity regularity
// bootstrap of solutions with nonlinearity growth |u|^{p-1} in dimension n:
//
//     2*    = 2n / (n - 2)                      (n >= 3)
//     delta = 4 / (n - 2) - (p - 2) - eps
//     r_0   = 2*,   r_{k+1} = r_k / (1 - delta),   s_k = r_k / (p - 1)
//
// iterated until r_k > n (p - 1) / 2. Dimensions 1 and 2 need no iteration.
// No floating point is used anywhere in this header.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "nlsdecay/errors.hpp"

namespace nlsdecay {

using Rational = boost::multiprecision::cpp_rational;

/// Parses "a", "-a", "a/b" or a plain decimal "a.b" into an exact rational.
inline Rational parse_rational(const std::string& text) {
    try {
        const auto dot = text.find('.');
        if (dot != std::string::npos && text.find('/') == std::string::npos) {
            const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
            const std::string frac = text.substr(dot + 1);
            if (frac.empty() || frac.find_first_not_of("0123456789") != std::string::npos) {
                throw std::invalid_argument("bad decimal");
            }
            boost::multiprecision::cpp_int den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            return Rational(boost::multiprecision::cpp_int(digits), den);
        }
        const auto slash = text.find('/');
        if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(text));
        const boost::multiprecision::cpp_int num(text.substr(0, slash));
        const boost::multiprecision::cpp_int den(text.substr(slash + 1));
        if (den == 0) throw ConfigError("rational '" + text + "' has zero denominator");
        return Rational(num, den);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse '" + text + "' as an exact rational (use a or a/b)");
    }
}

inline std::string to_string(const Rational& q) {
    if (boost::multiprecision::denominator(q) == 1) return boost::multiprecision::numerator(q).str();
    return boost::multiprecision::numerator(q).str() + "/" +
           boost::multiprecision::denominator(q).str();
}

struct BootstrapProblem {
    int dimension = 3;
    Rational p;
    Rational epsilon;                   ///< only meaningful for n >= 3
    std::optional<Rational> critical;   ///< 2*, absent (infinite) for n <= 2

    /// 4/(n-2) - (p-2): the supremum of admissible eps. n >= 3 only.
    Rational slack_supremum() const { return Rational(4, dimension - 2) - (p - 2); }
    Rational delta() const { return slack_supremum() - epsilon; }
    /// n (p - 1) / 2
    Rational threshold() const { return Rational(dimension) * (p - 1) / 2; }
};

/// Validates (n, p, eps). When eps is omitted it defaults to half of its
/// supremum, which puts delta at half its maximum.
inline BootstrapProblem make_problem(int n, const Rational& p, std::optional<Rational> eps = {}) {
    if (n < 1) throw ConfigError("bootstrap: dimension must be >= 1");
    if (p < 2) throw ConfigError("bootstrap: growth exponent must satisfy p >= 2");
    BootstrapProblem prob;
    prob.dimension = n;
    prob.p = p;
    if (n <= 2) {
        prob.epsilon = eps.value_or(Rational(0));
        if (eps && *eps <= 0) throw SlackError("bootstrap: slack must be positive");
        return prob;
    }
    prob.critical = Rational(2 * n, n - 2);
    if (p >= *prob.critical) {
        throw SupercriticalError("bootstrap: p = " + to_string(p) + " is not below 2* = " +
                                 to_string(*prob.critical));
    }
    const Rational sup = prob.slack_supremum();
    prob.epsilon = eps.value_or(sup / 2);
    if (prob.epsilon <= 0 || prob.epsilon >= sup) {
        throw SlackError("bootstrap: slack " + to_string(prob.epsilon) + " outside (0, " +
                         to_string(sup) + ")");
    }
    return prob;
}

struct BootstrapState {
    std::size_t step = 0;
    Rational r;
    Rational s;                  ///< r / (p - 1)
    std::optional<Rational> q;   ///< r / (1 - delta), when delta is in (0, 1)
    bool terminated = false;
};

enum class BootstrapReason { TrivialDimensionOne, SimplerDimensionTwo, Ladder };

struct BootstrapRun {
    BootstrapProblem problem;
    BootstrapReason reason = BootstrapReason::Ladder;
    std::vector<BootstrapState> states;
    std::size_t termination_index = 0;  ///< k*
    bool delta_used = false;            ///< false when r_0 already clears the threshold

    std::string reason_text() const {
        switch (reason) {
            case BootstrapReason::TrivialDimensionOne:
                return "n = 1: H^1 functions are bounded and continuous; no iteration needed";
            case BootstrapReason::SimplerDimensionTwo:
                return "n = 2: Sobolev embedding gives every finite r; no iteration needed";
            case BootstrapReason::Ladder:
                return "ladder terminated at r > n(p-1)/2";
        }
        return {};
    }
};

inline constexpr std::size_t kBootstrapStepCap = 10000;

inline BootstrapRun run_bootstrap(const BootstrapProblem& prob) {
    BootstrapRun run;
    run.problem = prob;
    if (prob.dimension == 1) {
        run.reason = BootstrapReason::TrivialDimensionOne;
        return run;
    }
    if (prob.dimension == 2) {
        run.reason = BootstrapReason::SimplerDimensionTwo;
        return run;
    }
    run.reason = BootstrapReason::Ladder;
    const Rational delta = prob.delta();
    const Rational threshold = prob.threshold();
    const bool delta_admissible = delta > 0 && delta < 1;
    Rational r = *prob.critical;
    for (std::size_t k = 0; k <= kBootstrapStepCap; ++k) {
        BootstrapState st;
        st.step = k;
        st.r = r;
        st.s = r / (prob.p - 1);
        if (delta_admissible) st.q = r / (1 - delta);
        st.terminated = r > threshold;
        run.states.push_back(st);
        if (st.terminated) {
            run.termination_index = k;
            run.delta_used = k > 0;
            return run;
        }
        if (!delta_admissible) {
            throw InternalInvariantError("bootstrap: iteration required but delta = " + to_string(delta) +
                                         " is outside (0, 1)");
        }
        r = *st.q;
    }
    throw InternalInvariantError("bootstrap: no termination within " +
                                 std::to_string(kBootstrapStepCap) + " steps");
}

/// 2/n - (1/s - 1/q) at integrability r, with s = r/(p-1), q = r/(1-delta).
/// Equals ((n-2)/(2n)) eps at r = 2* and grows with r.
inline Rational verify_gain(const BootstrapProblem& prob, const Rational& r) {
    if (prob.dimension < 3) throw ConfigError("verify_gain: only defined for n >= 3");
    const Rational n(prob.dimension);
    return Rational(2) / n - ((prob.p - 1) / r - (1 - prob.delta()) / r);
}

inline Rational verify_gain(const BootstrapProblem& prob, const BootstrapState& st) {
    return verify_gain(prob, st.r);
}

}  // namespace nlsdecay
