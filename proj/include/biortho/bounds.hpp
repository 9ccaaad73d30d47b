#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "biortho/precision.hpp"
#include "biortho/sequences.hpp"

namespace biortho {

// H1 = ((1 + rho p2^2 + q^2) / (rho^2 p1^4))^{2q-2}; the q^2 term drops for
// real sequences. Equals 1 when q = 1.
inline Real bound_h1(const ClassParameters& p, bool real_sequence) {
    using mp::pow;
    Real rho = to_real(p.rho), p1 = to_real(p.p1), p2 = to_real(p.p2);
    Real numer = 1 + rho * p2 * p2;
    if (!real_sequence) numer += Real(static_cast<long>(p.q)) * p.q;
    Real base = numer / (rho * rho * p1 * p1 * p1 * p1);
    return pow(base, 2 * static_cast<long>(p.q) - 2);
}

// H2 = 1 + q + sqrt(T) + (1+q)/(rho^2 p1^2) + p2, with (1+q) -> 1 in the
// middle term for real sequences.
inline Real bound_h2(const ClassParameters& p, const Real& t_final, bool real_sequence) {
    using mp::sqrt;
    Real rho = to_real(p.rho), p1 = to_real(p.p1);
    Real mid = (real_sequence ? Real(1) : Real(static_cast<long>(1 + p.q))) / (rho * rho * p1 * p1);
    return 1 + Real(static_cast<long>(p.q)) + sqrt(t_final) + mid + to_real(p.p2);
}

// H3: the sqrt(T)-free variant used in the product lower bound.
inline Real bound_h3(const ClassParameters& p, bool real_sequence) {
    Real rho = to_real(p.rho), p1 = to_real(p.p1);
    Real mid = (real_sequence ? Real(1) : Real(static_cast<long>(1 + p.q))) / (rho * rho * p1 * p1);
    return 1 + Real(static_cast<long>(p.q)) + mid + to_real(p.p2);
}

// Guichal coefficients A_n = 1 / prod_{i != n} (Lambda_i - Lambda_n) over the
// first `count` terms (count = M + 1). The combination f_1 = sum A_n e_n has
// vanishing derivatives at 0 through order M-1 and f_1^{(M)}(0) = 1.
inline std::vector<Complex> guichal_coefficients(const EigenSequence& seq, std::int64_t count) {
    if (count < 1) throw std::invalid_argument("guichal_coefficients requires count >= 1");
    std::vector<Complex> terms(static_cast<std::size_t>(count));
    for (std::int64_t i = 1; i <= count; ++i) terms[static_cast<std::size_t>(i - 1)] = seq.term(i);
    std::vector<Complex> a(static_cast<std::size_t>(count));
    for (std::int64_t n = 0; n < count; ++n) {
        Complex prod{Real(1)};
        for (std::int64_t i = 0; i < count; ++i) {
            if (i == n) continue;
            Complex d = terms[static_cast<std::size_t>(i)] - terms[static_cast<std::size_t>(n)];
            if (d.re == 0 && d.im == 0) throw DegenerateWindow("coincident terms at " + std::to_string(i + 1) +
                                                               ", " + std::to_string(n + 1));
            prod *= d;
        }
        a[static_cast<std::size_t>(n)] = Complex(Real(1)) / prod;
    }
    return a;
}

inline std::vector<Rational> guichal_coefficients_exact(const EigenSequence& seq, std::int64_t count) {
    if (count < 1) throw std::invalid_argument("guichal_coefficients requires count >= 1");
    std::vector<Rational> terms(static_cast<std::size_t>(count));
    for (std::int64_t i = 1; i <= count; ++i) terms[static_cast<std::size_t>(i - 1)] = seq.exact_term(i);
    std::vector<Rational> a(static_cast<std::size_t>(count));
    for (std::int64_t n = 0; n < count; ++n) {
        Rational prod = 1;
        for (std::int64_t i = 0; i < count; ++i) {
            if (i == n) continue;
            Rational d = terms[static_cast<std::size_t>(i)] - terms[static_cast<std::size_t>(n)];
            if (d == 0) throw DegenerateWindow("coincident terms at " + std::to_string(i + 1) + ", " +
                                               std::to_string(n + 1));
            prod *= d;
        }
        a[static_cast<std::size_t>(n)] = 1 / prod;
    }
    return a;
}

// Largest deviation of the moment identities sum_n A_n (-Lambda_n)^j =
// delta_{jM} for 0 <= j <= M (the derivative form of the Guichal property).
inline Real guichal_moment_residual(const std::vector<Complex>& a, const std::vector<Complex>& terms) {
    const std::int64_t count = static_cast<std::int64_t>(a.size());
    const std::int64_t m = count - 1;
    std::vector<Complex> pw(static_cast<std::size_t>(count), Complex(Real(1)));
    Real worst = 0;
    for (std::int64_t j = 0; j <= m; ++j) {
        Complex acc;
        for (std::int64_t n = 0; n < count; ++n) {
            acc += a[static_cast<std::size_t>(n)] * pw[static_cast<std::size_t>(n)];
            pw[static_cast<std::size_t>(n)] *= -terms[static_cast<std::size_t>(n)];
        }
        if (j == m) acc -= Complex(Real(1));
        Real r = abs(acc);
        if (r > worst) worst = r;
    }
    return worst;
}

// Window coefficients around k: A~_n = 1 / prod_{|k-i|<q, i != n} (Lambda_i -
// Lambda_n), indices n with |k-n| < q. |A~_k| equals the condensation
// product P_k.
inline std::map<std::int64_t, Complex> window_coefficients(const EigenSequence& seq, std::int64_t k,
                                                           std::int64_t q) {
    if (k < 1 || q < 2) throw std::invalid_argument("window_coefficients requires k >= 1 and q >= 2");
    const std::int64_t lo = std::max<std::int64_t>(1, k - q + 1), hi = k + q - 1;
    std::map<std::int64_t, Complex> out;
    for (std::int64_t n = lo; n <= hi; ++n) {
        Complex prod{Real(1)};
        for (std::int64_t i = lo; i <= hi; ++i) {
            if (i == n) continue;
            Complex d = seq.term(i) - seq.term(n);
            if (d.re == 0 && d.im == 0) throw DegenerateWindow("coincident terms at " + std::to_string(i) + ", " +
                                                               std::to_string(n));
            prod *= d;
        }
        out[n] = Complex(Real(1)) / prod;
    }
    return out;
}

struct LowerBoundValues {
    Real b_k;       // product branch (before the 6/pi^2 e^{1/(T nu)} factors)
    Real e_k;       // polynomial branch
    Real p_k;       // condensation product
    Real combined;  // max{(6/pi^2) B_k e^{1/(T nu)}, E_k} * P_k
};

// The two lower-bound branches of the optimal-family estimate. Exact
// factorials, extended-precision powers; the combined value is certified for
// k >= 3, raw formula output otherwise.
inline LowerBoundValues evaluate_lower_bounds(std::int64_t k, std::int64_t q, const Real& nu, const Real& delta,
                                              const EigenSequence& seq, const Real& t_final) {
    using mp::pow;
    using mp::sqrt;
    if (k < 1 || q < 1) throw std::invalid_argument("evaluate_lower_bounds requires k, q >= 1");
    Real lam1 = abs(seq.term(1));
    Real nt = nu * t_final;

    Real b_k;
    {
        Real common = pow(nt, static_cast<long>(k) + 1) / pow(1 + nt, 2 * static_cast<long>(k) + q + 1) *
                      (factorial(2 * k + q - 1) / factorial(2 * k + q + 1)) * sqrt(delta * lam1 + 1 / (2 * t_final));
        if (k < q) {
            b_k = pow(nu, static_cast<long>(k + q - 2)) * factorial(q - 1) / factorial(q + 3) * factorial(k + q) *
                  common;
        } else {
            b_k = pow(nu, 2 * (static_cast<long>(q) - 1)) * factorial(q - 1) * factorial(q - 1) / factorial(q + 3) *
                  factorial(k + q) * Real(static_cast<long>(k)) / factorial(2 * k - q) * common;
        }
    }

    Real e_k;
    if (k < q) {
        e_k = factorial(k + q - 2) / pow(t_final, static_cast<long>(k + q - 2)) *
              sqrt((2 * Real(static_cast<long>(k + q)) - 3) / (2 * t_final) + delta * lam1);
    } else {
        Real lam_edge = abs(seq.term(k + 1 - q));
        e_k = factorial(2 * q - 2) / pow(t_final, 2 * (static_cast<long>(q) - 1)) *
              sqrt((4 * Real(static_cast<long>(q)) - 3) / (2 * t_final) + delta * lam_edge);
    }

    Real p_k = condensation_product(seq, k, q);
    Real pi = pi_value();
    Real product_branch = 6 / (pi * pi) * b_k * mp::exp(1 / (t_final * nu));
    Real combined = (product_branch > e_k ? product_branch : e_k) * p_k;
    return {b_k, e_k, p_k, combined};
}

// D_k of the per-truncation distance bound.
inline Real guichal_d_k(std::int64_t k, std::int64_t q, const Real& nu, const Real& delta, const Real& lam1_abs,
                        const Real& t_final, const Real& p_k) {
    using mp::pow;
    using mp::sqrt;
    Real root = sqrt(delta * lam1_abs + 1 / (2 * t_final));
    if (k <= q)
        return pow(nu, static_cast<long>(k + q - 2)) * factorial(q - 1) * factorial(2 * k + q - 1) * root * p_k;
    return pow(nu, 2 * (static_cast<long>(q) - 1)) * factorial(q - 1) * factorial(q - 1) *
           Real(static_cast<long>(k)) * factorial(2 * k + q - 1) / factorial(2 * k - q) * root * p_k;
}

// Pre-summation distance bound: d_{T,k} (with M+1 retained exponentials)
// <= D_k^{-1} (q+3)!/(k+q)! (M+k+1)!/(M+1-k-q)^2 (nu T)^M, for k >= 3, M >= k+q.
inline Real per_truncation_distance_bound(std::int64_t k, std::int64_t q, const Real& nu, const Real& delta,
                                          const Real& lam1_abs, const Real& t_final, const Real& p_k,
                                          std::int64_t m) {
    using mp::pow;
    if (m < k + q) throw std::invalid_argument("per-truncation bound needs M >= k + q");
    Real d_k = guichal_d_k(k, q, nu, delta, lam1_abs, t_final, p_k);
    Real denom = Real(static_cast<long>(m + 1 - k - q));
    if (denom == 0) denom = 1; // M = k+q-1 excluded by the guard above
    return factorial(q + 3) / factorial(k + q) * factorial(m + k + 1) / (denom * denom) *
           pow(nu * t_final, static_cast<long>(m)) / d_k;
}

// Upper-bound functional form: H1 exp[C (1 + H2 sqrt|Lambda_k| + (1+p2)^2/T)] P_k.
inline Real evaluate_upper_form(const ClassParameters& params, const Real& lam_k_abs, const Real& t_final,
                                const Real& p_k, const Real& c, bool real_sequence) {
    using mp::exp;
    using mp::sqrt;
    Real h1 = bound_h1(params, real_sequence);
    Real h2 = bound_h2(params, t_final, real_sequence);
    Real one_p2 = 1 + to_real(params.p2);
    return h1 * exp(c * (1 + h2 * sqrt(lam_k_abs) + one_p2 * one_p2 / t_final)) * p_k;
}

struct BoundObservation {
    std::int64_t k = 0;
    Real t_final;
    Real norm;  // observed (plateau-certified) minimal norm
    Real p_k;
    Real lam_k_abs;
};

struct FitResult {
    Real c_fit;
    std::vector<Real> slack; // per observation: C * envelope - log(norm/P_k) >= 0
};

// Smallest C with log(norm/P_k) <= C (1 + H2 sqrt|Lambda_k| + (1+p2)^2/T)
// across the observations. The envelope is positive, so the fit is a plain
// maximum of ratios.
inline FitResult fit_constant_C(const std::vector<BoundObservation>& obs, const ClassParameters& params,
                                bool real_sequence) {
    using mp::log;
    using mp::sqrt;
    if (obs.empty()) throw InfeasibleFit("no observations");
    Real one_p2 = 1 + to_real(params.p2);
    Real c_fit = 0;
    std::vector<Real> envelopes, lhs;
    for (const auto& o : obs) {
        if (!(o.norm > 0) || !(o.p_k > 0)) throw InfeasibleFit("nonpositive norm or P_k");
        Real h2 = bound_h2(params, o.t_final, real_sequence);
        Real env = 1 + h2 * sqrt(o.lam_k_abs) + one_p2 * one_p2 / o.t_final;
        Real l = log(o.norm / o.p_k);
        envelopes.push_back(env);
        lhs.push_back(l);
        Real c = l / env;
        if (c > c_fit) c_fit = c;
    }
    FitResult res;
    res.c_fit = c_fit;
    for (std::size_t i = 0; i < obs.size(); ++i) res.slack.push_back(c_fit * envelopes[i] - lhs[i]);
    return res;
}

// Everything Theorem-level about one index: report row for CSV/JSON export.
struct BoundReport {
    std::int64_t k = 0;
    double t_final = 0;
    double p_k = 0;
    double h1 = 0, h2 = 0, h3 = 0;
    double b_k = 0, e_k = 0, d_k = 0;
    double lower = 0;          // max{(6/pi^2) B_k e^{1/(T nu)}, E_k} P_k
    double observed_norm = 0;  // plateau-certified ||s_k|| when available
    double upper_at_c = 0;     // upper form at the fitted C
    bool certified = false;    // k >= 3 and observation is plateau-certified
};

} // namespace biortho
