#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "biortho/bounds.hpp"
#include "biortho/catalog.hpp"
#include "biortho/gram.hpp"
#include "biortho/linalg.hpp"
#include "biortho/precision.hpp"
#include "biortho/quadrature.hpp"
#include "biortho/sequences.hpp"

namespace biortho {

struct MinimalTimeEstimate {
    Real value;       // limsup of -log|eps_k| / k^2 over the prefix
    bool converged = false;
    bool diverging = false;
};

// Numerical limsup: tail suprema of s_k = -log|eps_k|/k^2 over the given
// prefix. Growth at the end flags divergence (estimate +inf).
inline MinimalTimeEstimate minimal_time(const std::vector<Real>& epsilons) {
    using mp::log;
    using mp::abs;
    if (epsilons.empty()) throw std::invalid_argument("minimal_time needs a nonempty prefix");
    const std::int64_t n = static_cast<std::int64_t>(epsilons.size());
    std::vector<Real> s(static_cast<std::size_t>(n));
    for (std::int64_t k = 1; k <= n; ++k) {
        const Real& e = epsilons[static_cast<std::size_t>(k - 1)];
        if (e == 0) throw ZeroPerturbation(k);
        s[static_cast<std::size_t>(k - 1)] = -log(abs(e)) / (Real(static_cast<long>(k)) * k);
    }
    std::vector<Real> tail_sup(static_cast<std::size_t>(n));
    tail_sup[static_cast<std::size_t>(n - 1)] = s[static_cast<std::size_t>(n - 1)];
    for (std::int64_t k = n - 2; k >= 0; --k)
        tail_sup[static_cast<std::size_t>(k)] =
            s[static_cast<std::size_t>(k)] > tail_sup[static_cast<std::size_t>(k + 1)]
                ? s[static_cast<std::size_t>(k)]
                : tail_sup[static_cast<std::size_t>(k + 1)];

    MinimalTimeEstimate out{tail_sup[static_cast<std::size_t>(std::max<std::int64_t>(0, n / 2))], false, false};
    if (n >= 8) {
        const Real& end = s[static_cast<std::size_t>(n - 1)];
        const Real& mid = s[static_cast<std::size_t>(n / 2 - 1)];
        if (end > mid * 3 / 2 && end > 4 * s[0]) {
            out.diverging = true;
            out.value = std::numeric_limits<Real>::infinity();
            return out;
        }
        Real a = tail_sup[static_cast<std::size_t>(n / 2)];
        Real b = tail_sup[static_cast<std::size_t>(3 * n / 4)];
        Real scale = a > Real(1) / 100 ? a : Real(1) / 100;
        out.converged = mp::abs(a - b) <= scale / 20;
        out.value = b;
    }
    return out;
}

// Boundary-control problem in spectral coordinates: merged system spectrum
// with per-mode provenance (which family, which original index), control
// vector components and eigenfunction-derivative weights.
struct ControlProblem {
    EigenSequence sequence;
    Real b1 = Real(1), b2 = Real(1);
    Real t_final;
    std::int64_t truncation = 0;

    Real weight(std::int64_t k) const {
        TermProvenance p = sequence.provenance(k);
        std::int64_t mode = p.parent == 0 ? k : p.original_index;
        return mp::sqrt(2 / pi_value()) * mode;
    }

    const Real& b_of(std::int64_t k) const {
        TermProvenance p = sequence.provenance(k);
        return p.parent == 2 ? b2 : b1;
    }
};

struct MomentData {
    std::vector<Complex> m;   // m_k = -c_k / (b_k w_k)
    std::vector<Complex> mu;  // e^{-Lambda_k T} m_k
    Real y0_norm;             // (sum |c_k|^2 / |Lambda_k|)^{1/2}
};

inline MomentData moment_data(const ControlProblem& problem, const std::vector<Complex>& y0_coefficients) {
    using mp::sqrt;
    const std::int64_t m = static_cast<std::int64_t>(y0_coefficients.size());
    MomentData out;
    out.m.resize(static_cast<std::size_t>(m));
    out.mu.resize(static_cast<std::size_t>(m));
    Real nrm2 = 0;
    for (std::int64_t k = 1; k <= m; ++k) {
        const Complex& c = y0_coefficients[static_cast<std::size_t>(k - 1)];
        if (!is_finite(c)) throw NonFinite("y0 coefficient " + std::to_string(k));
        const Real& b = problem.b_of(k);
        if (b == 0) throw ZeroControlVector();
        Complex lam = problem.sequence.term(k);
        Real w = problem.weight(k);
        out.m[static_cast<std::size_t>(k - 1)] = Complex(Real(-1)) / Complex(b * w) * c;
        out.mu[static_cast<std::size_t>(k - 1)] =
            exp(Complex(-lam.re * problem.t_final, -lam.im * problem.t_final)) * out.m[static_cast<std::size_t>(k - 1)];
        nrm2 += sqnorm(c) / abs(lam);
    }
    out.y0_norm = sqrt(nrm2);
    return out;
}

struct NullControl {
    std::vector<std::pair<Real, Complex>> samples; // u on a uniform grid in [0, T]
    Real norm;                                     // ||u||_{L2(0,T)} = sqrt(mu^H G^{-1} mu)
    Real moment_residual_max; // quadrature recheck of the moment equations
};

// Minimal-norm null control u(t) = sum_k mu_k s_k(T - t). The norm comes from
// the Gram identity; the moment equations are re-verified by independent
// quadrature (equivalent to the terminal condition y(T) = 0).
inline NullControl solve_null_control(const ControlProblem& problem, const MomentData& data,
                                      const MinimalFamily& family, int samples = 129) {
    using mp::sqrt;
    if (static_cast<std::int64_t>(data.mu.size()) != family.truncation)
        throw std::invalid_argument("moment data length must match the family truncation");
    if (problem.truncation > 0 && problem.truncation != family.truncation)
        throw std::invalid_argument("problem truncation does not match the family");
    const std::int64_t m = family.truncation;

    // ||u||^2 = mu^H G^{-1} mu via the coefficient expansion of s_k.
    // u(T - t) = sum_k mu_k s_k(t) = sum_n (sum_k mu_k C_{kn}) e_n(t).
    std::vector<Complex> a(static_cast<std::size_t>(m));
    for (std::int64_t n = 0; n < m; ++n) {
        Complex acc;
        for (std::int64_t k = 0; k < m; ++k)
            acc += data.mu[static_cast<std::size_t>(k)] * family.coefficients[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
        a[static_cast<std::size_t>(n)] = acc;
    }
    Real norm2 = 0;
    for (std::int64_t k = 0; k < m; ++k) {
        Complex acc;
        for (std::int64_t n = 0; n < m; ++n) {
            Complex g = gram_entry(family.terms[static_cast<std::size_t>(k)], family.terms[static_cast<std::size_t>(n)],
                                   family.t_final);
            acc += g * conj(a[static_cast<std::size_t>(n)]);
        }
        norm2 += (a[static_cast<std::size_t>(k)] * acc).re;
    }

    NullControl out;
    out.norm = sqrt(norm2);

    auto u_rev = [&](const Real& t) { // u(T - t) = sum_k mu_k s_k(t)
        Complex acc;
        for (std::int64_t k = 1; k <= m; ++k)
            acc += data.mu[static_cast<std::size_t>(k - 1)] * family.evaluate(k, t);
        return acc;
    };

    out.samples.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        Real t = family.t_final * i / (samples - 1);
        out.samples.emplace_back(t, u_rev(family.t_final - t));
    }

    Real worst = 0;
    int panels = std::max(16, static_cast<int>(static_cast<double>(abs(family.terms.back())) *
                                               static_cast<double>(family.t_final) / 4));
    for (std::int64_t k = 1; k <= m; ++k) {
        Complex lam = family.terms[static_cast<std::size_t>(k - 1)];
        auto integrand = [&](const Real& t) { return u_rev(t) * exp(Complex(-lam.re * t, -lam.im * t)); };
        QuadratureResult q = integrate(integrand, Real(0), family.t_final, panels, 16);
        Real r = abs(q.value - data.mu[static_cast<std::size_t>(k - 1)]);
        if (r > worst) worst = r;
    }
    out.moment_residual_max = worst;
    return out;
}

struct CostValue {
    Real k_value;
    std::int64_t m = 0;
    int iterations = 0;
    Real residual;
    unsigned precision_bits = 0;
};

namespace detail {

inline CostValue control_cost_truncated_at(const ControlProblem& problem, std::int64_t m,
                                           const PrecisionContext& ctx) {
    using mp::sqrt;
    PrecisionScope scope(ctx);
    GramSystem gram(problem.sequence, problem.t_final, m, ctx);
    std::vector<Real> d(static_cast<std::size_t>(m));
    for (std::int64_t k = 1; k <= m; ++k) {
        Complex lam = gram.terms()[static_cast<std::size_t>(k - 1)];
        const Real& b = problem.b_of(k);
        if (b == 0) throw ZeroControlVector();
        d[static_cast<std::size_t>(k - 1)] =
            mp::exp(-lam.re * problem.t_final) * sqrt(abs(lam)) / (mp::abs(b) * problem.weight(k));
    }
    auto apply = [&](const std::vector<Complex>& x, std::vector<Complex>& y) {
        std::vector<Complex> tmp(static_cast<std::size_t>(m));
        for (std::int64_t i = 0; i < m; ++i) tmp[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        gram.factorization().solve(tmp);
        y.resize(static_cast<std::size_t>(m));
        for (std::int64_t i = 0; i < m; ++i) y[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(i)];
    };
    Real rtol = mp::pow(Real(2), -static_cast<long>(scope.bits() / 3));
    try {
        auto pw = power_iteration(m, apply, rtol);
        return {sqrt(pw.eigenvalue), m, pw.iterations, pw.residual};
    } catch (const PowerIterationStall&) {
        if (m > 40) throw;
        auto inv = gram.factorization().inverse();
        HermitianMatrix b_mat(m);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j <= i; ++j)
                b_mat.set(i, j, d[static_cast<std::size_t>(i)] * inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                                    d[static_cast<std::size_t>(j)]);
        auto ev = hermitian_eigenvalues(b_mat);
        Real best = 0;
        for (const auto& e : ev)
            if (e > best) best = e;
        return {sqrt(best), m, -1, Real(0)};
    }
}

} // namespace detail

// K_M(T): spectral norm root of D^H G^{-1} D with D_kk = e^{-Lambda_k T}
// sqrt(|Lambda_k|) / (b_k w_k), the worst-case minimal control norm over unit
// H^{-1} data within the truncated system. Condensed pairs push the Gram
// conditioning past any fixed mantissa (pivots ~ squared pair gaps), so the
// factorization escalates through doubled precisions up to 8x the request;
// the precision actually used is recorded on the result.
inline CostValue control_cost_truncated(const ControlProblem& problem, std::int64_t m,
                                        PrecisionContext ctx = ambient_or()) {
    unsigned active = active_precision_bits();
    unsigned bits = ctx.mantissa_bits;
    for (int attempt = 0;; ++attempt) {
        try {
            CostValue v = detail::control_cost_truncated_at(problem, m, PrecisionContext{bits});
            v.precision_bits = bits;
            return v;
        } catch (const NotPositiveDefinite&) {
            if (attempt >= 3) throw;
            bits *= 2;
            if (active != 0 && active != bits) throw; // enclosing scope pins the precision
        }
    }
}

struct CostPlateau {
    Real k_value;
    std::int64_t m_star = 0;
    std::vector<std::pair<std::int64_t, Real>> history;
};

// K(T) by exhaustion in M, plateau criterion identical to the Gram module's:
// two consecutive steps with relative change below rtol.
inline CostPlateau control_cost(const ControlProblem& problem, const Real& rtol = Real(1) / 50,
                                PrecisionContext ctx = ambient_or(), std::int64_t m_max = 200,
                                std::int64_t m_step = 5) {
    CostPlateau out;
    std::int64_t m = std::max<std::int64_t>(problem.truncation > 0 ? problem.truncation : m_step, 2);
    int stable = 0;
    Real prev = -1;
    for (;;) {
        CostValue v = control_cost_truncated(problem, m, ctx);
        out.history.emplace_back(m, v.k_value);
        if (prev >= 0) {
            Real rel = mp::abs(v.k_value - prev) / v.k_value;
            stable = rel < rtol ? stable + 1 : 0;
        }
        prev = v.k_value;
        out.k_value = v.k_value;
        out.m_star = m;
        if (stable >= 2) return out;
        bool exhausted = problem.sequence.length() && m >= *problem.sequence.length();
        if (exhausted) return out;
        if (m >= m_max) throw NoPlateau(m_max);
        m = std::min<std::int64_t>(m + m_step, m_max);
        if (problem.sequence.length()) m = std::min(m, *problem.sequence.length());
    }
}

// Probe-mode window of the scaling lower bound: any integer k0 with
// x~/2 <= k0^2 <= x~, x~ = (gamma/T)^{1/(1-gamma)}. Exists whenever
// T < gamma ((sqrt 2 - 1)/sqrt 2)^{2(1-gamma)}.
struct ProbeMode {
    Real x_tilde;
    std::optional<std::int64_t> k0;
    bool feasible = false; // the admissibility condition on T
};

inline ProbeMode probe_mode(const Real& gamma, const Real& t_final) {
    using mp::pow;
    using mp::sqrt;
    using mp::ceil;
    using mp::floor;
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
    ProbeMode out;
    Real one_minus = 1 - gamma;
    out.x_tilde = pow(gamma / t_final, 1 / one_minus);
    Real s2 = sqrt(Real(2));
    out.feasible = t_final < gamma * pow((s2 - 1) / s2, 2 * one_minus);
    Real lo = ceil(sqrt(out.x_tilde / 2));
    Real hi = floor(sqrt(out.x_tilde));
    if (lo <= hi && lo >= 1) out.k0 = static_cast<std::int64_t>(lo);
    return out;
}

struct CostPoint {
    double t = 0;
    double log_k = 0;
    std::int64_t m_star = 0;
    unsigned precision_bits = 0;
    std::optional<std::int64_t> probe_k0;
    bool probe_feasible = false;
    bool failed = false;
    std::string error;
};

struct AffineFit {
    double slope = 0, intercept = 0;
};

inline AffineFit fit_affine(const std::vector<std::pair<double, double>>& xy) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : xy) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(xy.size());
    double denom = n * sxx - sx * sx;
    if (denom == 0) return {0, xy.empty() ? 0 : sy / n};
    AffineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

struct CostReport {
    std::vector<CostPoint> points;
    double gamma = 0;
    AffineFit fit_inv_t;       // log K against 1/T
    AffineFit fit_scaled;      // log K against 1/T^{gamma/(1-gamma)}
    double minimal_time_estimate = 0;
    bool t0_converged = false, t0_diverging = false;
    double band_min = 0, band_max = 0; // min/max of T log K over the grid
    double pk_fit_exponent = 0;        // phase-field: fitted log P_k / log k slope
};

// Control-cost scaling experiment on the perturbed system: K(T) over a grid,
// fitted against both 1/T and the condensation-driven abscissa
// 1/T^{gamma/(1-gamma)}, with the probe-mode window reported per grid point.
inline CostReport cost_scaling_experiment(const Rational& gamma, const std::vector<Real>& t_grid,
                                          PrecisionContext ctx = ambient_or(), const Real& rtol = Real(1) / 50,
                                          std::int64_t m_max = 200, std::int64_t m_fixed = 0) {
    if (t_grid.empty()) throw GridInfeasible("empty T grid");
    EigenSequence seq = gen_perturbed(gamma);
    CostReport rep;
    rep.gamma = static_cast<double>(Real(gamma));

    {
        PrecisionScope scope(ctx);
        // eps_k from the generator definition, not by differencing the
        // spectrum: for large k the pair gap cancels out of the subtraction
        // at any fixed mantissa width.
        std::vector<Real> eps;
        Real g2 = 2 * to_real(gamma);
        for (std::int64_t k = 1; k <= 2000; ++k)
            eps.push_back(mp::exp(-mp::exp(g2 * mp::log(Real(static_cast<long>(k))))));
        auto t0 = minimal_time(eps);
        rep.minimal_time_estimate = t0.diverging ? std::numeric_limits<double>::infinity()
                                                 : static_cast<double>(t0.value);
        rep.t0_converged = t0.converged;
        rep.t0_diverging = t0.diverging;
    }

    std::vector<std::pair<double, double>> inv_t_pts, scaled_pts;
    Real g = to_real(gamma);
    for (const Real& t : t_grid) {
        CostPoint pt;
        pt.t = static_cast<double>(t);
        pt.precision_bits = ctx.mantissa_bits;
        ControlProblem problem{seq, Real(1), Real(1), t, 0};
        if (m_fixed > 0) {
            auto v = control_cost_truncated(problem, m_fixed, ctx);
            pt.log_k = static_cast<double>(mp::log(v.k_value));
            pt.m_star = m_fixed;
            pt.precision_bits = v.precision_bits;
        } else {
            auto plateau = control_cost(problem, rtol, ctx, m_max);
            pt.log_k = static_cast<double>(mp::log(plateau.k_value));
            pt.m_star = plateau.m_star;
        }
        auto probe = probe_mode(g, t);
        pt.probe_feasible = probe.feasible;
        pt.probe_k0 = probe.k0;
        rep.points.push_back(pt);
        double inv_t = 1.0 / pt.t;
        inv_t_pts.emplace_back(inv_t, pt.log_k);
        double expo = static_cast<double>(g / (1 - g));
        scaled_pts.emplace_back(std::pow(pt.t, -expo), pt.log_k);
    }
    rep.fit_inv_t = fit_affine(inv_t_pts);
    rep.fit_scaled = fit_affine(scaled_pts);

    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    for (auto& pt : rep.points) {
        double v = pt.t * pt.log_k;
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    rep.band_min = bmin;
    rep.band_max = bmax;
    return rep;
}

// Phase-field cost over a T grid; reports the T log K band (the desk-scale
// image of the e^{M/T} two-sided bound) and the fitted decay exponent of the
// condensation products past the interleaving threshold.
inline CostReport phase_field_cost(const Rational& xi, const Rational& rho, const Rational& tau,
                                   const std::vector<Real>& t_grid, PrecisionContext ctx = ambient_or(),
                                   const Real& rtol = Real(1) / 50, std::int64_t m_max = 200,
                                   std::int64_t m_fixed = 0) {
    if (t_grid.empty()) throw GridInfeasible("empty T grid");
    auto pf = gen_phase_field(xi, rho, tau, 4 * m_max, ctx);
    CostReport rep;

    std::vector<std::pair<double, double>> inv_t_pts;
    for (const Real& t : t_grid) {
        CostPoint pt;
        pt.t = static_cast<double>(t);
        pt.precision_bits = ctx.mantissa_bits;
        ControlProblem problem{pf.sequence, Real(1), Real(1), t, 0};
        if (m_fixed > 0) {
            auto v = control_cost_truncated(problem, m_fixed, ctx);
            pt.log_k = static_cast<double>(mp::log(v.k_value));
            pt.m_star = m_fixed;
            pt.precision_bits = v.precision_bits;
        } else {
            auto plateau = control_cost(problem, rtol, ctx, m_max);
            pt.log_k = static_cast<double>(mp::log(plateau.k_value));
            pt.m_star = plateau.m_star;
        }
        rep.points.push_back(pt);
        inv_t_pts.emplace_back(1.0 / pt.t, pt.log_k);
    }
    rep.fit_inv_t = fit_affine(inv_t_pts);

    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    for (auto& pt : rep.points) {
        double v = pt.t * pt.log_k;
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    rep.band_min = bmin;
    rep.band_max = bmax;

    // P_k ~ k^{-(2q-4)} past the interleaving threshold.
    {
        PrecisionScope scope(ctx);
        const auto& params = pf.sequence.params();
        std::int64_t q = params ? params->q : 2;
        std::int64_t start = 2 * pf.spectrum.k0 + (pf.spectrum.j0 ? *pf.spectrum.j0 : 0) + q;
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t k = start; k <= start + 120; k += 4) {
            Real pk = condensation_product(pf.sequence, k, q);
            pts.emplace_back(std::log(static_cast<double>(k)), static_cast<double>(mp::log(pk)));
        }
        rep.pk_fit_exponent = fit_affine(pts).slope;
    }
    return rep;
}

} // namespace biortho
