#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biortho/precision.hpp"
#include "biortho/sequences.hpp"
#include "biortho/tail_sums.hpp"

namespace biortho {

// Exact binary-rational view of an mpfr value.
inline Rational to_rational_exact(const Real& x) {
    if (x == 0) return Rational(0);
    mpz_t z;
    mpz_init(z);
    mpfr_exp_t e = mpfr_get_z_2exp(z, x.backend().data());
    BigInt mantissa(z);
    mpz_clear(z);
    Rational r(mantissa);
    if (e > 0) r *= Rational(BigInt(1) << static_cast<unsigned>(e));
    else if (e < 0) r /= Rational(BigInt(1) << static_cast<unsigned>(-e));
    return r;
}

namespace detail {

// Rational surrogate for an irrational parameter, evaluated at the ambient
// working precision (>= 512 bits); deterministic for a fixed configuration
// and far more accurate than any checking margin.
inline Rational surrogate(const std::function<Real()>& f) {
    unsigned bits = active_precision_bits();
    PrecisionScope scope(PrecisionContext{bits ? bits : 512});
    return to_rational_exact(f());
}

} // namespace detail

// Lambda_k = A (k + omega)^2 with A = inv_p^2. Attached parameters follow the
// real-sequence derivation with p = 1/inv_p and alpha = 1 + |omega|.
inline EigenSequence gen_quadratic(const Rational& inv_p, const Rational& omega) {
    if (!(inv_p > 0)) throw std::invalid_argument("inv_p must be positive");
    if (!(omega > -1)) throw InvalidShift(static_cast<double>(Real(omega)));
    Rational a = inv_p * inv_p;
    EigenSequence s = EigenSequence::from_exact_generator(
        "quadratic(A=" + std::to_string(static_cast<double>(Real(a))) + ",omega=" +
            std::to_string(static_cast<double>(Real(omega))) + ")",
        [a, omega](std::int64_t k) {
            Rational t = k + omega;
            return a * t * t;
        });

    Rational p = 1 / inv_p;
    Rational alpha = 1 + mp::abs(omega);
    auto derived = derive_params_real(p, alpha);
    ClassParameters cp;
    cp.beta = 0;
    cp.rho = derived.rho;
    cp.q = derived.q;
    cp.p0 = cp.p1 = cp.p2 = p;
    cp.alpha = alpha;
    cp.nu = derived.nu;
    cp.delta = 1;
    cp.exact = true;
    s.attach_params(cp);

    s.attach_tail_moments([a, omega](std::int64_t m, std::int64_t M) {
        using mp::pow;
        return pow(to_real(a), -static_cast<long>(m)) *
               inverse_power_tail(2 * m, Real(static_cast<long>(M) + 1) + to_real(omega));
    });
    return s;
}

// The grouped family {j^2 + (l-1)/m : j >= 1, 1 <= l <= m}: m-term
// condensation groupings above each square.
inline EigenSequence gen_grouped(std::int64_t m) {
    if (m < 2) throw std::invalid_argument("grouped family requires m >= 2");
    EigenSequence s = EigenSequence::from_exact_generator(
        "grouped(m=" + std::to_string(m) + ")", [m](std::int64_t k) {
            std::int64_t jt = (k - 1) / m;
            std::int64_t l = k - m * jt; // 1..m
            return Rational((jt + 1) * (jt + 1)) + Rational(l - 1, static_cast<long>(m));
        });
    ClassParameters cp;
    cp.beta = 0;
    cp.q = m;
    cp.p0 = 2;
    cp.p1 = cp.p2 = m;
    cp.alpha = m;
    cp.rho = Rational(2, static_cast<long>((2 * m - 1) * (2 * m + 1)));
    cp.nu = Rational(4 * m - 1, static_cast<long>(m * (2 * m + 1)));
    cp.delta = 1;
    cp.exact = true;
    s.attach_params(cp);
    return s;
}

// Counting formula for the grouped family, exact in r: N(r) = m floor(sqrt r)
// - m + l~ on the fractional steps inside a group, m floor(sqrt r) past them.
inline std::int64_t grouped_counting_formula(std::int64_t m, const Rational& r) {
    if (r < 1) return 0;
    // k = floor(sqrt(r))
    BigInt num = mp::numerator(r), den = mp::denominator(r);
    BigInt k = mp::sqrt(num / den);
    while (Rational((k + 1) * (k + 1)) <= r) k += 1;
    while (Rational(k * k) > r) k -= 1;
    Rational frac = r - Rational(k * k);
    if (frac >= 1) return static_cast<std::int64_t>(m * k);
    // l~ = floor(m * frac) + 1, bucket [k^2 + (l~-1)/m, k^2 + l~/m)
    Rational mf = m * frac;
    BigInt lt = mp::numerator(mf) / mp::denominator(mf);
    return static_cast<std::int64_t>(m * k - m + static_cast<std::int64_t>(lt) + 1);
}

// {k^2} U {d k^2} in increasing order. Requires sqrt(d) irrational, tested
// exactly on the rational input: num*den must not be a perfect square.
inline EigenSequence gen_dirichlet_pair(const Rational& d) {
    if (!(d > 0)) throw std::invalid_argument("d must be positive");
    BigInt num = mp::numerator(d), den = mp::denominator(d);
    BigInt prod = num * den;
    BigInt root = mp::sqrt(prod);
    if (root * root == prod) {
        // sqrt(d) = root/den in lowest terms gives the collision k^2 = d n^2.
        BigInt g = mp::gcd(root, den);
        std::int64_t k = static_cast<std::int64_t>(root / g);
        std::int64_t n = static_cast<std::int64_t>(den / g);
        throw RationalRootCollision(k, n);
    }
    EigenSequence base = gen_quadratic(1, 0);
    EigenSequence scaled = EigenSequence::from_exact_generator(
        "quadratic(A=" + std::to_string(static_cast<double>(Real(d))) + ")",
        [d](std::int64_t k) { return d * k * k; });
    scaled.attach_tail_moments([d](std::int64_t m, std::int64_t M) {
        using mp::pow;
        return pow(to_real(d), -static_cast<long>(m)) * inverse_power_tail(2 * m, Real(static_cast<long>(M) + 1));
    });
    EigenSequence merged = merge_increasing(base, scaled);

    ClassParameters cp;
    cp.beta = 0;
    cp.q = 2;
    cp.alpha = 2;
    cp.p0 = 1;
    cp.p1 = cp.p2 = detail::surrogate([&] { return 1 + 1 / mp::sqrt(to_real(d)); });
    cp.rho = detail::surrogate([&] {
        Real p = 1 + 1 / mp::sqrt(to_real(d));
        return Real(5) / 8 / (p * p);
    });
    cp.nu = detail::surrogate([&] {
        Real p = 1 + 1 / mp::sqrt(to_real(d));
        return Real(8) / 3 / (p * p);
    });
    cp.delta = 1;
    cp.exact = false;
    merged.attach_params(cp);
    return merged;
}

// Lambda_{2k-1} = k^2, Lambda_{2k} = k^2 + e^{-k^{2 gamma}}: condensing pairs
// with minimal null-controllability time 0 for gamma in (0,1).
inline EigenSequence gen_perturbed(const Rational& gamma) {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
    auto eps = [gamma](std::int64_t k) {
        using mp::exp;
        using mp::log;
        return exp(-exp(2 * to_real(gamma) * log(Real(static_cast<long>(k)))));
    };
    EigenSequence s = EigenSequence::from_generator(
        "perturbed(gamma=" + std::to_string(static_cast<double>(Real(gamma))) + ")",
        [eps](std::int64_t n) {
            std::int64_t k = (n + 1) / 2;
            Real base = Real(static_cast<long>(k)) * k;
            if (n % 2 == 1) return Complex(base);
            return Complex(base + eps(k));
        });
    s.attach_provenance([](std::int64_t n) {
        return TermProvenance{n % 2 == 1 ? 1 : 2, (n + 1) / 2};
    });

    ClassParameters cp;
    cp.beta = 0;
    cp.q = 2;
    cp.rho = Rational(1, 16);
    cp.p0 = 1;
    cp.p1 = cp.p2 = 2;
    cp.alpha = detail::surrogate([] { return 2 + mp::exp(Real(-1) / 2); });
    cp.nu = detail::surrogate([] { return (1 + mp::exp(Real(-1))) / 2; });
    cp.delta = 1;
    cp.exact = false;
    s.attach_params(cp);
    s.attach_minimal_time(0.0);

    s.attach_tail_moments([eps](std::int64_t m, std::int64_t M) {
        using mp::pow;
        // odd indices n = 2k-1 > M  <=>  k >= floor((M+1)/2) + 1
        // even indices n = 2k  > M  <=>  k >= floor(M/2) + 1
        std::int64_t ko = (M + 1) / 2 + 1;
        std::int64_t ke = M / 2 + 1;
        Real total = inverse_power_tail(2 * m, Real(static_cast<long>(ko)));
        const unsigned bits = active_precision_bits() ? active_precision_bits() : 512;
        Real cutoff = pow(Real(2), -static_cast<long>(bits) - 8);
        std::int64_t k = ke;
        for (;; ++k) {
            Real e = eps(k);
            Real ksq = Real(static_cast<long>(k)) * k;
            total += pow(ksq + e, -static_cast<long>(m));
            if (e < cutoff * ksq || k > ke + 200000) {
                ++k;
                break;
            }
        }
        total += inverse_power_tail(2 * m, Real(static_cast<long>(k)));
        return total;
    });
    return s;
}

// Phase-field spectrum: lambda_k^{(3,1/2)} = xi k^2 + (rho+1)/(2 tau) -/+ r_k
// with r_k = sqrt(xi rho / tau k^2 + ((rho+1)/(2 tau))^2).
struct PhaseFieldSpectrum {
    Rational xi, rho, tau;
    std::optional<std::int64_t> j0; // resonance index when xi = rho/(tau j0^2)
    std::int64_t k0 = 0;            // interleaving threshold (resonant case)

    Real b() const { return (to_real(rho) + 1) / (2 * to_real(tau)); }

    Real r(std::int64_t k) const {
        using mp::sqrt;
        Real bb = b();
        return sqrt(to_real(xi * rho / tau) * k * k + bb * bb);
    }

    Real lambda1(std::int64_t k) const { return to_real(xi) * k * k + b() - r(k); }
    Real lambda2(std::int64_t k) const { return to_real(xi) * k * k + b() + r(k); }

    // From r_k = sqrt(xi rho/tau) k + eps_k / k; increasing in k.
    Real eps(std::int64_t k) const {
        using mp::sqrt;
        Real bb = b();
        Real w = to_real(xi * rho / tau);
        return bb * bb / (sqrt(w + bb * bb / (Real(static_cast<long>(k)) * k)) + sqrt(w));
    }

    // L = lim eps_k = ((rho+1)/(2 tau))^2 sqrt(tau) / (2 sqrt(xi rho)).
    Real eps_limit() const {
        using mp::sqrt;
        Real bb = b();
        return bb * bb * sqrt(to_real(tau)) / (2 * sqrt(to_real(xi * rho)));
    }
};

struct H2ScanEntry {
    std::int64_t k, l;
    double value;
};

// Scans the approximate-controllability condition
// xi^2 tau^2 (l^2-k^2)^2 - 2 xi rho tau (l^2+k^2) - 2 rho - 1 != 0 over l > k.
// Near-zeros count as violations: they poison the Gram conditioning just as
// exact collisions do.
inline std::vector<H2ScanEntry> check_H2_real(const Real& xi, const Real& rho, const Real& tau,
                                              std::int64_t kmax, PrecisionContext ctx = ambient_or()) {
    if (kmax < 2) throw std::invalid_argument("check_H2 requires kmax >= 2");
    PrecisionScope scope(ctx);
    std::vector<H2ScanEntry> out;
    Real tol = mp::pow(Real(2), -static_cast<long>(scope.bits() / 4));
    for (std::int64_t k = 1; k <= kmax; ++k) {
        for (std::int64_t l = k + 1; l <= kmax; ++l) {
            Real d2 = Real(static_cast<long>(l)) * l - Real(static_cast<long>(k)) * k;
            Real s2 = Real(static_cast<long>(l)) * l + Real(static_cast<long>(k)) * k;
            Real t1 = xi * xi * tau * tau * d2 * d2;
            Real t2 = 2 * xi * rho * tau * s2;
            Real t3 = 2 * rho + 1;
            Real expr = t1 - t2 - t3;
            Real scale = 1 + mp::abs(t1) + mp::abs(t2) + mp::abs(t3);
            if (mp::abs(expr) < tol * scale) out.push_back({k, l, static_cast<double>(expr)});
        }
    }
    return out;
}

inline std::vector<H2ScanEntry> check_H2(const Rational& xi, const Rational& rho, const Rational& tau,
                                         std::int64_t kmax, PrecisionContext ctx = ambient_or()) {
    PrecisionScope scope(ctx);
    return check_H2_real(to_real(xi), to_real(rho), to_real(tau), kmax, ctx);
}

inline void attach_phase_field_params(EigenSequence& s, const PhaseFieldSpectrum& spec) {
    ClassParameters cp;
    cp.beta = 0;
    cp.delta = 1;
    cp.p0 = cp.p1 = cp.p2 = detail::surrogate([&] { return 2 / mp::sqrt(to_real(spec.xi)); });
    cp.alpha = detail::surrogate([&] {
        using mp::sqrt;
        Real rr = to_real(spec.rho), tr = to_real(spec.tau);
        return (sqrt(rr / tr) + sqrt((3 * rr + 4) / tr)) / (2 * sqrt(to_real(spec.xi))) + 2;
    });
    {
        unsigned bits = active_precision_bits();
        PrecisionScope scope(PrecisionContext{bits ? bits : 512});
        auto derived = derive_params_real(2 / mp::sqrt(to_real(spec.xi)), to_real(cp.alpha));
        cp.q = derived.q;
        cp.rho = to_rational_exact(derived.rho);
        cp.nu = to_rational_exact(derived.nu);
    }
    cp.exact = false;
    s.attach_params(cp);
}

struct PhaseFieldResult {
    PhaseFieldSpectrum spectrum;
    EigenSequence sequence;
};

// Merged increasing phase-field spectrum. At resonance (xi = rho/(tau j0^2))
// the tail interleaving follows the closed index map valid past the threshold
// k0; the finite head is sorted directly. H2 is verified up to the requested
// materialization depth first.
inline PhaseFieldResult gen_phase_field(const Rational& xi, const Rational& rho, const Rational& tau,
                                        std::int64_t n, PrecisionContext ctx = ambient_or()) {
    if (!(xi > 0 && rho > 0 && tau > 0)) throw std::invalid_argument("phase-field parameters must be positive");
    PrecisionScope scope(ctx);

    PhaseFieldSpectrum spec{xi, rho, tau, std::nullopt, 0};

    // Resonance: rho/(tau*xi) an integer square.
    Rational ratio = rho / (tau * xi);
    if (mp::denominator(ratio) == 1) {
        BigInt rn = mp::numerator(ratio);
        BigInt root = mp::sqrt(rn);
        if (root * root == rn) spec.j0 = static_cast<std::int64_t>(root);
    }

    std::int64_t kmax_scan = n / 2 + (spec.j0 ? *spec.j0 : 0) + 4;
    auto violations = check_H2(xi, rho, tau, std::max<std::int64_t>(kmax_scan, 2), ctx);
    if (!violations.empty()) throw H2Violation(violations.front().k, violations.front().l);

    if (!spec.j0) {
        auto spectrum = std::make_shared<PhaseFieldSpectrum>(spec);
        EigenSequence s1 = EigenSequence::from_generator(
            "phase_field_l1", [spectrum](std::int64_t k) { return Complex(spectrum->lambda1(k)); });
        EigenSequence s2 = EigenSequence::from_generator(
            "phase_field_l2", [spectrum](std::int64_t k) { return Complex(spectrum->lambda2(k)); });
        PhaseFieldResult res{spec, merge_increasing(s1, s2)};
        attach_phase_field_params(res.sequence, spec);
        return res;
    }

    const std::int64_t j0 = *spec.j0;
    // smallest k0 with 2 L / k0 <= (xi/2)(2 k0 + j0 + 1)
    Real L = spec.eps_limit();
    Real x = to_real(xi);
    std::int64_t k0 = 1;
    while (!(2 * L / k0 <= x / 2 * (2 * k0 + j0 + 1))) ++k0;
    spec.k0 = k0;

    auto spectrum = std::make_shared<PhaseFieldSpectrum>(spec);
    const std::int64_t head_count = 2 * k0 + j0 - 2;
    // Head entries keep only (family, original index); values are evaluated
    // at the caller's working precision. The sort order is decided here, with
    // O(1) gaps guaranteed by the H2 scan.
    auto head = std::make_shared<std::vector<TermProvenance>>();
    for (std::int64_t j = 1; j <= k0 + j0 - 1; ++j) head->push_back({1, j});
    for (std::int64_t j = 1; j <= k0 - 1; ++j) head->push_back({2, j});
    std::sort(head->begin(), head->end(), [&](const TermProvenance& a, const TermProvenance& b) {
        Real va = a.parent == 1 ? spec.lambda1(a.original_index) : spec.lambda2(a.original_index);
        Real vb = b.parent == 1 ? spec.lambda1(b.original_index) : spec.lambda2(b.original_index);
        return va < vb;
    });

    auto eval = [spectrum, head, head_count, j0](std::int64_t k) -> Real {
        TermProvenance p;
        if (k <= head_count) p = (*head)[static_cast<std::size_t>(k - 1)];
        else if ((k + j0) % 2 == 1) p = {1, (k + j0 + 1) / 2};
        else p = {2, (k - j0) / 2};
        return p.parent == 1 ? spectrum->lambda1(p.original_index) : spectrum->lambda2(p.original_index);
    };
    EigenSequence s = EigenSequence::from_generator(
        "phase_field(j0=" + std::to_string(j0) + ",k0=" + std::to_string(k0) + ")",
        [eval](std::int64_t k) { return Complex(eval(k)); });
    s.attach_provenance([head, head_count, j0](std::int64_t k) {
        if (k <= head_count) return (*head)[static_cast<std::size_t>(k - 1)];
        if ((k + j0) % 2 == 1) return TermProvenance{1, (k + j0 + 1) / 2};
        return TermProvenance{2, (k - j0) / 2};
    });

    PhaseFieldResult res{spec, s};
    attach_phase_field_params(res.sequence, spec);
    return res;
}

} // namespace biortho
