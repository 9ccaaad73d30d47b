#include <catch2/catch_amalgamated.hpp>

#include "biortho/linalg.hpp"
#include "biortho/precision.hpp"
#include "biortho/quadrature.hpp"
#include "biortho/tail_sums.hpp"

using namespace biortho;

namespace {

Real rel_err(const Real& got, const Real& want) {
    if (want == 0) return mp::abs(got);
    return mp::abs(got - want) / mp::abs(want);
}

// Deterministic pseudo-random doubles in [-1, 1].
struct Lcg {
    std::uint64_t s = 0x243f6a8885a308d3ull;
    double next() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>((s >> 11) % 2000000) / 1000000.0 - 1.0;
    }
};

HermitianMatrix random_hpd(std::int64_t n, Lcg& rng) {
    // B^H B + n I is Hermitian positive definite.
    std::vector<std::vector<Complex>> b(static_cast<std::size_t>(n), std::vector<Complex>(static_cast<std::size_t>(n)));
    for (auto& row : b)
        for (auto& x : row) x = Complex(rng.next(), rng.next());
    HermitianMatrix a(n);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j <= i; ++j) {
            Complex acc;
            for (std::int64_t k = 0; k < n; ++k)
                acc += conj(b[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]) *
                       b[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            if (i == j) acc += Complex(Real(static_cast<long>(n)));
            a.set(i, j, conj(acc));
        }
    }
    return a;
}

} // namespace

TEST_CASE("inverse diagonal on the stated examples") {
    PrecisionScope scope(PrecisionContext{512});

    HermitianMatrix id3(3);
    for (int i = 0; i < 3; ++i) id3.set(i, i, Complex(Real(1)));
    auto d3 = hermitian_inverse_diagonal(id3);
    for (auto& v : d3) REQUIRE(rel_err(v, Real(1)) < 1e-100);

    HermitianMatrix a(2);
    a.set(0, 0, Complex(Real(2)));
    a.set(1, 1, Complex(Real(2)));
    a.set(0, 1, Complex(Real(1)));
    auto d2 = hermitian_inverse_diagonal(a);
    REQUIRE(rel_err(d2[0], Real(2) / 3) < 1e-100);
    REQUIRE(rel_err(d2[1], Real(2) / 3) < 1e-100);

    HermitianMatrix s(1);
    s.set(0, 0, Complex(Real(4)));
    REQUIRE(rel_err(hermitian_inverse_diagonal(s)[0], Real(1) / 4) < 1e-100);
}

TEST_CASE("factorization rejects indefinite matrices") {
    PrecisionScope scope(PrecisionContext{128});
    HermitianMatrix a(2);
    a.set(0, 0, Complex(Real(1)));
    a.set(1, 1, Complex(Real(-1)));
    REQUIRE_THROWS_AS(LdlFactorization(a), NotPositiveDefinite);

    // Singular: pivot exactly zero.
    HermitianMatrix b(2);
    b.set(0, 0, Complex(Real(1)));
    b.set(0, 1, Complex(Real(1)));
    b.set(1, 1, Complex(Real(1)));
    REQUIRE_THROWS_AS(LdlFactorization(b), NotPositiveDefinite);
}

TEST_CASE("LDL^H reproduces random Hermitian PD matrices") {
    PrecisionScope scope(PrecisionContext{256});
    Lcg rng;
    for (std::int64_t n : {3, 10, 30}) {
        HermitianMatrix a = random_hpd(n, rng);
        LdlFactorization f(a);
        Real worst = 0, scale = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < n; ++j) {
                Complex acc;
                for (std::int64_t k = 0; k <= std::min(i, j); ++k)
                    acc += f.l(i, k) * conj(f.l(j, k)) * f.d(k);
                worst = std::max(worst, abs(acc - a(i, j)), [](const Real& x, const Real& y) { return x < y; });
                scale = std::max(scale, abs(a(i, j)), [](const Real& x, const Real& y) { return x < y; });
            }
        }
        REQUIRE(worst / scale < mp::pow(Real(2), -128));
    }
}

TEST_CASE("inverse of a factored matrix solves A X = I") {
    PrecisionScope scope(PrecisionContext{256});
    Lcg rng;
    HermitianMatrix a = random_hpd(8, rng);
    LdlFactorization f(a);
    auto inv = f.inverse();
    for (std::int64_t i = 0; i < 8; ++i) {
        for (std::int64_t j = 0; j < 8; ++j) {
            Complex acc;
            for (std::int64_t k = 0; k < 8; ++k) acc += a(i, k) * inv[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            if (i == j) acc -= Complex(Real(1));
            REQUIRE(abs(acc) < mp::pow(Real(2), -120));
        }
    }
    // A Hermitian PD inverse has a real positive diagonal.
    auto diag = f.inverse_diagonal();
    for (auto& d : diag) REQUIRE(d > 0);
}

TEST_CASE("quadrature on the stated integrals") {
    PrecisionScope scope(PrecisionContext{512});
    auto one = integrate([](const Real&) { return Complex(Real(1)); }, Real(0), Real(1), 4, 12);
    REQUIRE(rel_err(one.value.re, Real(1)) < 1e-140);

    auto decay = integrate([](const Real& t) { return Complex(mp::exp(-2 * t)); }, Real(0), Real(1), 4, 16);
    Real expected = -real_expm1(Real(-2)) / 2; // (1 - e^{-2})/2
    REQUIRE(rel_err(decay.value.re, expected) < 1e-100);
    REQUIRE(decay.error_estimate < 1e-60);

    auto sine = integrate([](const Real& t) { return Complex(mp::sin(t)); }, Real(0), pi_value(), 8, 16);
    REQUIRE(rel_err(sine.value.re, Real(2)) < 1e-100);
}

TEST_CASE("Gauss-Legendre is exact on polynomials of degree 2n-1") {
    PrecisionScope scope(PrecisionContext{256});
    for (int nodes : {2, 5, 9}) {
        // highest exactly-integrated degree with the coarse pass: 2*nodes - 1
        int degree = 2 * nodes - 1;
        auto val = integrate(
            [degree](const Real& t) {
                Real p = 1;
                for (int i = 0; i < degree; ++i) p *= t;
                return Complex(p);
            },
            Real(0), Real(1), 1, nodes);
        Real expected = Real(1) / (degree + 1);
        REQUIRE(rel_err(val.value.re, expected) < mp::pow(Real(2), -200));
        REQUIRE(val.error_estimate < mp::pow(Real(2), -200));
    }
}

TEST_CASE("doubled precision moves results by less than the error estimate") {
    auto run = [](unsigned bits) {
        PrecisionScope scope(PrecisionContext{bits});
        return integrate([](const Real& t) { return Complex(mp::exp(-t * t)); }, Real(0), Real(2), 6, 14);
    };
    auto lo = run(256);
    auto hi = run(512);
    REQUIRE(mp::abs(lo.value.re - hi.value.re) <= lo.error_estimate + mp::pow(Real(2), -200));
}

TEST_CASE("reproducibility at fixed precision") {
    auto run = [] {
        PrecisionScope scope(PrecisionContext{512});
        auto q = integrate([](const Real& t) { return Complex(mp::cos(3 * t)); }, Real(0), Real(1), 5, 11);
        return format_real(q.value.re, 120);
    };
    REQUIRE(run() == run());
}

TEST_CASE("non-finite integrand is reported") {
    PrecisionScope scope(PrecisionContext{128});
    REQUIRE_THROWS_AS(integrate([](const Real& t) { return Complex(Real(1) / (t - t)); }, Real(0), Real(1), 2, 4),
                      NonFinite);
}

TEST_CASE("Jacobi eigenvalues match hand-computed spectra") {
    PrecisionScope scope(PrecisionContext{256});
    // [[2,1],[1,2]] -> {1, 3}
    HermitianMatrix a(2);
    a.set(0, 0, Complex(Real(2)));
    a.set(1, 1, Complex(Real(2)));
    a.set(0, 1, Complex(Real(1)));
    auto ev = hermitian_eigenvalues(a);
    std::sort(ev.begin(), ev.end());
    REQUIRE(rel_err(ev[0], Real(1)) < 1e-60);
    REQUIRE(rel_err(ev[1], Real(3)) < 1e-60);

    // Complex Hermitian: [[1, i],[-i, 1]] -> {0, 2}
    HermitianMatrix b(2);
    b.set(0, 0, Complex(Real(1)));
    b.set(1, 1, Complex(Real(1)));
    b.set(0, 1, Complex(Real(0), Real(1)));
    auto evb = hermitian_eigenvalues(b);
    std::sort(evb.begin(), evb.end());
    REQUIRE(mp::abs(evb[0]) < 1e-60);
    REQUIRE(rel_err(evb[1], Real(2)) < 1e-60);

    // Trace/eigenvalue consistency on a random HPD matrix, and agreement of
    // the largest eigenvalue with power iteration.
    Lcg rng;
    HermitianMatrix c = random_hpd(6, rng);
    auto evc = hermitian_eigenvalues(c);
    Real trace = 0;
    for (int i = 0; i < 6; ++i) trace += c(i, i).re;
    Real sum = 0, biggest = 0;
    for (auto& e : evc) {
        sum += e;
        if (e > biggest) biggest = e;
    }
    REQUIRE(rel_err(sum, trace) < 1e-50);

    auto apply = [&](const std::vector<Complex>& x, std::vector<Complex>& y) {
        y.assign(6, Complex());
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) y[static_cast<std::size_t>(i)] += c(i, j) * x[static_cast<std::size_t>(j)];
    };
    auto pw = power_iteration(6, apply, Real(1) / 1000000000);
    REQUIRE(rel_err(pw.eigenvalue, biggest) < 1e-7);
}

TEST_CASE("inverse power tails agree with brute-force summation") {
    PrecisionScope scope(PrecisionContext{256});
    for (std::int64_t s : {2, 4, 8}) {
        for (std::int64_t k : {5, 64, 200}) {
            Real brute = 0;
            for (std::int64_t n = k + 200000; n > k; --n) brute += mp::pow(Real(static_cast<long>(n)), -static_cast<long>(s));
            // completion of the brute-force tail by integral sandwich
            Real rest_lo = mp::pow(Real(static_cast<long>(k + 200000)) + 1, 1 - static_cast<long>(s)) / (s - 1);
            Real got = zeta_tail(s, k);
            REQUIRE(got > brute);
            REQUIRE(got < brute + 2 * rest_lo + mp::pow(Real(static_cast<long>(k + 200000)), -static_cast<long>(s)));
            // and to high relative accuracy against brute + integral midpoint
            Real approx = brute + rest_lo;
            REQUIRE(mp::abs(got - approx) / got < 1e-5);
        }
    }
}
