#include <catch2/catch_amalgamated.hpp>

#include "biortho/bounds.hpp"
#include "biortho/catalog.hpp"
#include "biortho/gram.hpp"
#include "biortho/paley_wiener.hpp"

using namespace biortho;

namespace {

Real rel_err(const Real& got, const Real& want) {
    if (want == 0) return mp::abs(got);
    return mp::abs(got - want) / mp::abs(want);
}

// Closed form for Lambda = {n^2}: prod_{n>=1}(1 - z/n^2) = sin(pi sqrt z)/(pi sqrt z),
// so f_k(z) = that with the (1 - z/k^2) factor divided out. Evaluated for real
// z (the test grid), with the sign carried through sqrt of negatives.
Complex sin_product_oracle(std::int64_t k, const Real& z) {
    using mp::sin;
    using mp::sinh;
    using mp::sqrt;
    Real pi = pi_value();
    Real full_re;
    if (z == 0) {
        full_re = 1;
    } else if (z > 0) {
        Real s = sqrt(z);
        full_re = sin(pi * s) / (pi * s);
    } else {
        Real s = sqrt(-z);
        full_re = sinh(pi * s) / (pi * s);
    }
    Real factor = 1 - z / (Real(static_cast<long>(k)) * k);
    return Complex(full_re / factor);
}

} // namespace

TEST_CASE("Weierstrass product basics") {
    PrecisionContext ctx{512};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    Real tol = Real(1) / Real("1e30");

    // f_k(0) = 1 (empty factors at z = 0)
    auto at0 = product_fk(squares, 1, Complex(Real(0)), tol, ctx);
    REQUIRE(rel_err(at0.value.re, Real(1)) < 1e-100);

    // zeros exactly on the omitted-sequence points
    auto at4 = product_fk(squares, 1, Complex(Real(4)), tol, ctx);
    REQUIRE(abs(at4.value) == 0);

    // telescoping: f_1(1) = 1/2
    auto at1 = product_fk(squares, 1, Complex(Real(1)), tol, ctx);
    REQUIRE(rel_err(at1.value.re, Real(1) / 2) < Real(1) / Real("1e20"));
    REQUIRE(at1.log_tail_bound < tol);
}

TEST_CASE("product matches the sine closed form on a grid") {
    PrecisionContext ctx{512};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    Real tol = Real(1) / Real("1e25");
    for (std::int64_t k : {1, 3}) {
        for (int i = 0; i < 50; ++i) {
            Real z = Real(-30) + Real(i) * Real(13) / 10; // spans negatives and positives
            if (z > 0) {
                // skip points that collide with the zeros of the product
                Real s = mp::sqrt(z);
                if (mp::abs(s - mp::floor(s + Real(1) / 2)) < Real(1) / 100) continue;
            }
            auto got = product_fk(squares, k, Complex(z), tol, ctx);
            Complex want = sin_product_oracle(k, z);
            INFO("k=" << k << " z=" << static_cast<double>(z));
            REQUIRE(abs(got.value - want) <=
                    abs(want) * (mp::exp(got.log_tail_bound) - 1 + Real(1) / Real("1e20")) + tol);
        }
    }
}

TEST_CASE("log growth of the product obeys the counting-envelope bound") {
    PrecisionContext ctx{256};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    Real p2 = to_real(squares.params()->p2);
    Real pi = pi_value();
    Real tol = Real(1) / Real("1e20");
    // fitted C on two disjoint grids is stable and finite
    auto fit_on = [&](double lo, int n) {
        Real c_fit = -std::numeric_limits<Real>::infinity();
        for (int i = 0; i < n; ++i) {
            Real x = Real(lo) * mp::pow(Real(2), i);
            auto v = product_fk(squares, 2, Complex(x), tol, ctx);
            if (abs(v.value) == 0) continue;
            Real c = log_abs(v.value) - (p2 * pi + 1) * mp::sqrt(mp::abs(x));
            if (c > c_fit) c_fit = c;
        }
        return c_fit;
    };
    Real c1 = fit_on(0.7, 9);
    Real c2 = fit_on(1.1, 9);
    REQUIRE(c1 < 10);
    REQUIRE(c2 < 10);
    REQUIRE(mp::abs(c1 - c2) < 8); // same order; the bound is generous
}

TEST_CASE("product lower bound at the index point carries a stable fitted constant") {
    PrecisionContext ctx{256};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    const auto& cp = *squares.params();
    Real h1 = bound_h1(cp, true);
    Real h3 = bound_h3(cp, true);
    Real tol = Real(1) / Real("1e20");
    // |f_k(Lambda_k)| >= H1^{-1} e^{-C H3 sqrt|Lambda_k|} P_k^{-1}:
    // fitted C = max_k [-log(|f_k| H1 P_k)] / (H3 sqrt|Lambda_k|) stays
    // positive, finite, and stable between disjoint index ranges.
    auto fit_on = [&](std::int64_t k0, std::int64_t k1) {
        Real c_fit = 0;
        for (std::int64_t k = k0; k <= k1; ++k) {
            auto v = product_fk(squares, k, Complex(squares.term(k)), tol, ctx);
            Real p_k = condensation_product(squares, k, cp.q);
            Real c = -(log_abs(v.value) + mp::log(h1) + mp::log(p_k)) /
                     (h3 * mp::sqrt(abs(squares.term(k))));
            if (c > c_fit) c_fit = c;
        }
        return c_fit;
    };
    Real ca = fit_on(2, 8);
    Real cb = fit_on(9, 15);
    REQUIRE(ca > 0);
    REQUIRE(cb > 0);
    REQUIRE(ca < 5);
    REQUIRE(cb < 5);
    REQUIRE(mp::abs(ca - cb) / ca < 1);
}

TEST_CASE("mollifier normalization and bounds") {
    PrecisionContext ctx{256};
    PrecisionScope scope(ctx);
    Real t_final = 1;

    // C_{N,T} for N = 2: 1/(2 (pi^2/6 - 1))
    auto cfg2 = MollifierConfig::make(t_final, 2);
    Real expected = 1 / (2 * (pi_value() * pi_value() / 6 - 1));
    REQUIRE(rel_err(cfg2.c_nt, expected) < 1e-60);

    auto cfg = MollifierConfig::make(t_final, 37);
    // P(0) = 1 exactly
    Complex at0 = mollifier(cfg, t_final, Complex(Real(0)));
    REQUIRE(at0.re == 1);
    REQUIRE(at0.im == 0);

    // |P(x)| <= 1 on the real axis
    for (double x : {0.3, 1.0, 4.7, 19.0, 55.0, 213.0, 1001.0}) {
        REQUIRE(abs(mollifier(cfg, t_final, Complex(Real(x)))) <= 1 + Real(1) / Real("1e40"));
    }

    // |P(z)| <= 1 in the upper half plane (sampled)
    for (double x : {-11.0, 3.0, 40.0}) {
        for (double y : {0.5, 7.0}) {
            REQUIRE(abs(mollifier(cfg, t_final, Complex(Real(x), Real(y)))) <= 1 + Real(1) / Real("1e40"));
        }
    }

    // P(ix) >= e^{-theta2 sqrt(C_{N,T} x)} for x >= 0 with theta2 = 2
    for (double x : {0.5, 2.0, 9.0, 36.0, 144.0, 900.0}) {
        Complex v = mollifier(cfg, t_final, Complex(Real(0), Real(x)));
        REQUIRE(mp::abs(v.im) < Real(1) / Real("1e40"));
        Real lower = mp::exp(-cfg.theta2 * mp::sqrt(cfg.c_nt * Real(x)));
        INFO("x=" << x);
        REQUIRE(v.re >= lower);
        REQUIRE(v.re <= 1);
    }
}

TEST_CASE("mollifier truncation agrees with a longer direct product") {
    PrecisionContext ctx{256};
    PrecisionScope scope(ctx);
    Real t_final = 1;
    auto cfg = MollifierConfig::make(t_final, 5);
    for (double x : {3.0, 29.0, 160.0}) {
        Complex fast = mollifier(cfg, t_final, Complex(Real(x)));
        // brute force with a very deep cutoff
        Complex brute = exp(i_times(Complex(Real(x))) * (t_final / 2));
        for (std::int64_t k = 5; k <= 400000; ++k) brute *= Complex(mp::cos(cfg.a(k) * Real(x)));
        INFO("x=" << x);
        REQUIRE(abs(fast - brute) < mp::abs(abs(brute)) * Real(1) / Real("1e12") + Real(1) / Real("1e13"));
    }
}

TEST_CASE("choice of N") {
    PrecisionScope scope(PrecisionContext{256});
    // T=1, p2=1, theta0=1, theta1=8 (gamma=2): N = ceil(2 + 2 (pi+1)^2) = 37
    REQUIRE(choose_N(Real(1), Real(1)) == 37);

    // gamma -> 0 limit: stays inside the admissible window {2, 3, 4} with the
    // lower clamp at N = 2
    std::int64_t n_tiny = choose_N(Real(1), Real(1), 1e-9, 8.0);
    REQUIRE(n_tiny >= 2);
    REQUIRE(n_tiny <= 4);

    // halving T doubles the gamma-term of N - 2 (within rounding)
    std::int64_t n1 = choose_N(Real(1), Real(1));
    std::int64_t n2 = choose_N(Real(1) / 2, Real(1));
    REQUIRE(std::llabs((n2 - 2) - 2 * (n1 - 2)) <= 2);
}

TEST_CASE("interpolation property of G_k") {
    PrecisionContext ctx{320};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    Real t_final = 1;
    auto cfg = MollifierConfig::make(t_final, choose_N(t_final, to_real(squares.params()->p2)));
    Real tol = Real(1) / Real("1e40");
    Real inv_sqrt_2pi = 1 / mp::sqrt(2 * pi_value());
    for (std::int64_t k : {1, 2, 4}) {
        GkEvaluator g(squares, k, t_final, cfg, tol, ctx);
        for (std::int64_t n = 1; n <= 6; ++n) {
            // z = i conj(Lambda_n)
            Complex z = i_times(conj(squares.term(n)));
            Complex v = g(z);
            INFO("k=" << k << " n=" << n);
            if (n == k) {
                REQUIRE(rel_err(v.re, inv_sqrt_2pi) < 1e-35);
                REQUIRE(mp::abs(v.im) < 1e-35);
            } else {
                REQUIRE(abs(v) < Real(1) / Real("1e30"));
            }
        }
    }
}

TEST_CASE("G_k decays on the real axis") {
    PrecisionContext ctx{320};
    PrecisionScope scope(ctx);
    auto squares = gen_quadratic(1, 0);
    Real t_final = 1;
    auto cfg = MollifierConfig::make(t_final, choose_N(t_final, Real(1)));
    GkEvaluator g(squares, 1, t_final, cfg, Real(1) / Real("1e40"), ctx);
    auto fit = detail::fit_gk_decay(g, Real(8));
    REQUIRE(fit.coefficient > 0); // fitted decay exponent is negative
}

TEST_CASE("synthesized family is biorthogonal and Plancherel-consistent") {
    PrecisionContext ctx{192};
    auto squares = gen_quadratic(1, 0);
    Real t_final = 1;
    auto n_start = choose_N(t_final, to_real(squares.params()->p2));
    SynthesisOptions opt;
    opt.residual_n_max = 8;
    PrecisionScope scope(ctx);
    auto cfg = MollifierConfig::make(t_final, n_start);
    for (std::int64_t k : {1, 2, 3}) {
        auto fam = synthesize_qk(squares, k, t_final, cfg, opt, ctx);
        INFO("k=" << k << " X=" << static_cast<double>(fam.window_x));
        REQUIRE(fam.residual_max < Real(1) / Real("1e6"));
        REQUIRE(rel_err(fam.norm_time, fam.norm_freq) < Real(1) / Real("1e6"));

        // optimality: any biorthogonal family dominates the minimal one at
        // every truncation
        for (std::int64_t m : {8, 20, 40}) {
            auto minimal = minimal_family(squares, m, t_final, ctx);
            REQUIRE(fam.norm_time >= minimal.norms[static_cast<std::size_t>(k - 1)]);
        }
    }
}
