#pragma once

#include <cstdint>
#include <vector>

#include "biortho/precision.hpp"

namespace biortho {

// Dense Hermitian matrix; storage enforces conjugate symmetry through set().
class HermitianMatrix {
public:
    explicit HermitianMatrix(std::int64_t order)
        : n_(order), a_(static_cast<std::size_t>(order * order)) {}

    std::int64_t order() const { return n_; }

    const Complex& operator()(std::int64_t i, std::int64_t j) const {
        return a_[static_cast<std::size_t>(i * n_ + j)];
    }

    void set(std::int64_t i, std::int64_t j, const Complex& v) {
        a_[static_cast<std::size_t>(i * n_ + j)] = v;
        a_[static_cast<std::size_t>(j * n_ + i)] = conj(v);
        if (i == j) a_[static_cast<std::size_t>(i * n_ + i)].im = 0;
    }

    unsigned precision_bits = 0;

private:
    std::int64_t n_;
    std::vector<Complex> a_;
};

// LDL^H factorization without pivoting: A = L D L^H with unit lower L and
// real diagonal D. Valid for Hermitian positive definite input; a pivot <= 0
// raises NotPositiveDefinite instead of regularizing.
class LdlFactorization {
public:
    explicit LdlFactorization(const HermitianMatrix& a) : n_(a.order()), l_(static_cast<std::size_t>(n_ * n_)), d_(n_) {
        for (std::int64_t j = 0; j < n_; ++j) {
            Real dj = a(j, j).re;
            for (std::int64_t k = 0; k < j; ++k) dj -= sqnorm(lv(j, k)) * d_[k];
            if (!(dj > 0)) throw NotPositiveDefinite(j);
            d_[j] = dj;
            lv(j, j) = Complex(Real(1));
            for (std::int64_t i = j + 1; i < n_; ++i) {
                Complex s = a(i, j);
                for (std::int64_t k = 0; k < j; ++k) s -= lv(i, k) * conj(lv(j, k)) * d_[k];
                lv(i, j) = s / d_[j];
            }
        }
    }

    std::int64_t order() const { return n_; }
    const Real& d(std::int64_t j) const { return d_[static_cast<std::size_t>(j)]; }
    const Complex& l(std::int64_t i, std::int64_t j) const { return l_[static_cast<std::size_t>(i * n_ + j)]; }

    // Solve A x = b in place.
    void solve(std::vector<Complex>& b) const {
        for (std::int64_t i = 0; i < n_; ++i)
            for (std::int64_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
        for (std::int64_t i = 0; i < n_; ++i) b[i] = b[i] / d_[i];
        for (std::int64_t i = n_ - 1; i >= 0; --i)
            for (std::int64_t k = i + 1; k < n_; ++k) b[i] -= conj(l(k, i)) * b[k];
    }

    std::vector<Complex> inverse_column(std::int64_t j) const {
        std::vector<Complex> e(static_cast<std::size_t>(n_));
        e[static_cast<std::size_t>(j)] = Complex(Real(1));
        solve(e);
        return e;
    }

    // Full inverse, row-major.
    std::vector<std::vector<Complex>> inverse() const {
        std::vector<std::vector<Complex>> inv(static_cast<std::size_t>(n_),
                                              std::vector<Complex>(static_cast<std::size_t>(n_)));
        for (std::int64_t j = 0; j < n_; ++j) {
            auto col = inverse_column(j);
            for (std::int64_t i = 0; i < n_; ++i) inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = col[static_cast<std::size_t>(i)];
        }
        return inv;
    }

    std::vector<Real> inverse_diagonal() const {
        std::vector<Real> diag(static_cast<std::size_t>(n_));
        for (std::int64_t j = 0; j < n_; ++j) {
            auto col = inverse_column(j);
            diag[static_cast<std::size_t>(j)] = col[static_cast<std::size_t>(j)].re;
        }
        return diag;
    }

private:
    Complex& lv(std::int64_t i, std::int64_t j) { return l_[static_cast<std::size_t>(i * n_ + j)]; }

    std::int64_t n_;
    std::vector<Complex> l_;
    std::vector<Real> d_;
};

// Diagonal of A^{-1}; entries are real and positive for Hermitian PD input.
inline std::vector<Real> hermitian_inverse_diagonal(const HermitianMatrix& a) {
    return LdlFactorization(a).inverse_diagonal();
}

// Cyclic Jacobi eigensolver for Hermitian matrices, used as the fallback when
// power iteration cannot separate the leading eigenvalue.
inline std::vector<Real> hermitian_eigenvalues(HermitianMatrix a, int max_sweeps = 60) {
    using mp::sqrt;
    using mp::abs;
    const std::int64_t n = a.order();
    if (n == 1) return {a(0, 0).re};
    const Real tol = mp::pow(Real(2), -static_cast<long>(active_precision_bits() ? active_precision_bits() : 512) + 8);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        Real off = 0;
        for (std::int64_t p = 0; p < n; ++p)
            for (std::int64_t q = p + 1; q < n; ++q) off += sqnorm(a(p, q));
        Real scale = 0;
        for (std::int64_t p = 0; p < n; ++p) scale += abs(a(p, p).re);
        if (off <= tol * tol * (scale * scale + 1)) break;

        for (std::int64_t p = 0; p < n; ++p) {
            for (std::int64_t q = p + 1; q < n; ++q) {
                Complex apq = a(p, q);
                if (sqnorm(apq) == 0) continue;
                Real app = a(p, p).re, aqq = a(q, q).re;
                // Unitary 2x2 diagonalization: U = [[c, -s e^{i phi}], [s e^{-i phi}, c]]
                // with apq = |apq| e^{i phi} annihilates the (p,q) entry of U^H A U.
                Real mod = abs(apq);
                Complex phase = apq / mod;
                Real tau = (app - aqq) / (2 * mod);
                Real t = (tau >= 0) ? Real(1) / (tau + sqrt(1 + tau * tau)) : Real(1) / (tau - sqrt(1 + tau * tau));
                Real c = 1 / sqrt(1 + t * t);
                Real s = t * c;
                for (std::int64_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    Complex akp = a(k, p), akq = a(k, q);
                    a.set(k, p, c * akp + (s * conj(phase)) * akq);
                    a.set(k, q, c * akq - (s * phase) * akp);
                }
                a.set(p, p, Complex(app * c * c + aqq * s * s + 2 * c * s * mod));
                a.set(q, q, Complex(app * s * s + aqq * c * c - 2 * c * s * mod));
                a.set(p, q, Complex(Real(0)));
            }
        }
    }
    std::vector<Real> ev(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i).re;
    return ev;
}

struct PowerIterationResult {
    Real eigenvalue;
    Real residual; // ||A x - lambda x|| at the accepted iterate
    int iterations;
};

// Largest eigenvalue of a Hermitian positive semidefinite operator given as a
// matrix-vector product. Deterministic start vector.
inline PowerIterationResult power_iteration(std::int64_t n,
                                            const std::function<void(const std::vector<Complex>&, std::vector<Complex>&)>& apply,
                                            const Real& rtol, int max_iterations = 500) {
    using mp::sqrt;
    std::vector<Complex> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    // Fixed pseudo-random start (LCG), reproducible across runs.
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (auto& xi : x) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        xi = Complex(Real(1) + Real(static_cast<double>((state >> 33) & 0xffff) / 65536.0));
    }
    Real nrm = 0;
    for (const auto& xi : x) nrm += sqnorm(xi);
    nrm = sqrt(nrm);
    for (auto& xi : x) xi = xi / nrm;

    Real lambda = 0;
    for (int it = 1; it <= max_iterations; ++it) {
        apply(x, y);
        Real num = 0;
        for (std::int64_t i = 0; i < n; ++i) num += (conj(x[static_cast<std::size_t>(i)]) * y[static_cast<std::size_t>(i)]).re;
        lambda = num;
        Real res = 0;
        for (std::int64_t i = 0; i < n; ++i) res += sqnorm(y[static_cast<std::size_t>(i)] - lambda * x[static_cast<std::size_t>(i)]);
        res = sqrt(res);
        if (res <= rtol * mp::abs(lambda)) return {lambda, res, it};
        Real ynrm = 0;
        for (const auto& yi : y) ynrm += sqnorm(yi);
        ynrm = sqrt(ynrm);
        if (ynrm == 0) return {Real(0), Real(0), it};
        for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] / ynrm;
    }
    throw PowerIterationStall("no convergence in " + std::to_string(max_iterations) + " iterations");
}

} // namespace biortho
