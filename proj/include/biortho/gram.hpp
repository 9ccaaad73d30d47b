#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biortho/linalg.hpp"
#include "biortho/precision.hpp"
#include "biortho/quadrature.hpp"
#include "biortho/sequences.hpp"

namespace biortho {

// Closed form of the exponential inner product on (0, T):
// <e_k, e_n> = (1 - e^{-(Lambda_k + conj(Lambda_n)) T}) / (Lambda_k + conj(Lambda_n)).
inline Complex gram_entry(const Complex& lam_k, const Complex& lam_n, const Real& t_final) {
    Complex s = lam_k + conj(lam_n);
    if (s.re == 0 && s.im == 0) throw ZeroDenominator();
    Complex st = Complex(-t_final) * s;
    Complex one_minus;
    if (st.im == 0) {
        one_minus = Complex(-real_expm1(st.re));
    } else {
        one_minus = Complex(Real(1)) - exp(st);
    }
    return one_minus / s;
}

// Gram matrix of {e^{-Lambda_k t}}_{k<=M} on L^2(0,T) together with its LDL^H
// factorization and the diagonal of the inverse. Immutable after build.
class GramSystem {
public:
    GramSystem(const EigenSequence& seq, const Real& t_final, std::int64_t m, const PrecisionContext& ctx)
        : seq_(seq), t_(t_final), m_(m), matrix_(m), ctx_(ctx) {
        PrecisionScope scope(ctx);
        if (m < 1) throw std::invalid_argument("Gram order must be >= 1");
        std::vector<Complex> terms(static_cast<std::size_t>(m));
        for (std::int64_t k = 1; k <= m; ++k) terms[static_cast<std::size_t>(k - 1)] = seq.term(k);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j <= i; ++j)
                matrix_.set(i, j, gram_entry(terms[static_cast<std::size_t>(i)], terms[static_cast<std::size_t>(j)], t_));
        matrix_.precision_bits = scope.bits();
        factorization_ = std::make_unique<LdlFactorization>(matrix_);
        inverse_diag_ = factorization_->inverse_diagonal();
        terms_ = std::move(terms);
    }

    const EigenSequence& sequence() const { return seq_; }
    const Real& horizon() const { return t_; }
    std::int64_t order() const { return m_; }
    const HermitianMatrix& matrix() const { return matrix_; }
    const LdlFactorization& factorization() const { return *factorization_; }
    const std::vector<Real>& inverse_diagonal() const { return inverse_diag_; }
    const std::vector<Complex>& terms() const { return terms_; }
    const PrecisionContext& context() const { return ctx_; }

private:
    EigenSequence seq_;
    Real t_;
    std::int64_t m_;
    HermitianMatrix matrix_;
    PrecisionContext ctx_;
    std::unique_ptr<LdlFactorization> factorization_;
    std::vector<Real> inverse_diag_;
    std::vector<Complex> terms_;
};

// Minimal-norm biorthogonal family to the first M exponentials: s_k = sum_n
// (G^{-1})_{kn} e_n, so that ||s_k||^2 = (G^{-1})_{kk} and <e_j, s_k> =
// delta_{jk}. distances[k] = 1/||s_k|| is the distance from e_k to the span
// of the other M-1 exponentials.
struct MinimalFamily {
    std::vector<Complex> terms;                  // Lambda_1..Lambda_M
    Real t_final;
    std::int64_t truncation = 0;                 // M
    unsigned precision_bits = 0;
    std::vector<std::vector<Complex>> coefficients; // row k: expansion of s_k over {e_n}
    std::vector<Real> norms;                     // ||s_k||
    std::vector<Real> distances;                 // d_{T,k} = 1/||s_k||
    Real residual_max;                           // max |G C^H - I| during build

    Complex evaluate(std::int64_t k, const Real& t) const {
        Complex acc;
        for (std::int64_t n = 0; n < truncation; ++n) {
            const Complex& lam = terms[static_cast<std::size_t>(n)];
            acc += coefficients[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(n)] *
                   exp(Complex(-lam.re * t, -lam.im * t));
        }
        return acc;
    }
};

namespace detail {

inline MinimalFamily minimal_family_at(const EigenSequence& seq, std::int64_t m, const Real& t_final,
                                       const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    GramSystem gram(seq, t_final, m, ctx);
    MinimalFamily fam;
    fam.terms = gram.terms();
    fam.t_final = t_final;
    fam.truncation = m;
    fam.precision_bits = scope.bits();
    fam.coefficients = gram.factorization().inverse();
    fam.norms.resize(static_cast<std::size_t>(m));
    fam.distances.resize(static_cast<std::size_t>(m));
    for (std::int64_t k = 0; k < m; ++k) {
        fam.norms[static_cast<std::size_t>(k)] = mp::sqrt(gram.inverse_diagonal()[static_cast<std::size_t>(k)]);
        fam.distances[static_cast<std::size_t>(k)] = 1 / fam.norms[static_cast<std::size_t>(k)];
    }
    // Biorthogonality at the linear-algebra level: G * C^H = I.
    Real worst = 0;
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            Complex acc;
            for (std::int64_t n = 0; n < m; ++n)
                acc += gram.matrix()(i, n) * conj(fam.coefficients[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)]);
            if (i == j) acc -= Complex(Real(1));
            Real r = abs(acc);
            if (r > worst) worst = r;
        }
    }
    fam.residual_max = worst;
    return fam;
}

} // namespace detail

// Builds the minimal family at truncation M. A Gram factorization failure at
// the requested precision is retried once at doubled precision before the
// error propagates.
inline MinimalFamily minimal_family(const EigenSequence& seq, std::int64_t m, const Real& t_final,
                                    PrecisionContext ctx = ambient_or()) {
    if (m < 1) throw std::invalid_argument("minimal_family requires M >= 1");
    try {
        return detail::minimal_family_at(seq, m, t_final, ctx);
    } catch (const NotPositiveDefinite&) {
        // One retry at doubled precision, unless an enclosing scope pins the
        // working precision (then the caller decides).
        unsigned active = active_precision_bits();
        unsigned doubled = 2 * ctx.mantissa_bits;
        if (active != 0 && active != doubled) throw;
        return detail::minimal_family_at(seq, m, t_final, PrecisionContext{doubled});
    }
}

struct TruncationResult {
    Real norm;                // plateau value of ||s_k^{(M)}||
    std::int64_t m_star = 0;  // truncation at which the plateau was declared
    std::vector<std::pair<std::int64_t, Real>> history; // (M, norm)
    Real residual_max;        // linear-algebra biorthogonality residual at M*
};

// Approximates the full-space norm ||s_k|| = 1/d_{T,k} by exhaustion in M.
// The history is nondecreasing (distances to growing subspaces shrink); the
// plateau requires two consecutive steps with relative change below rtol.
inline TruncationResult converge_truncation(const EigenSequence& seq, std::int64_t k, const Real& t_final,
                                            const Real& rtol, PrecisionContext ctx = ambient_or(),
                                            std::int64_t m_max = 200, std::int64_t m_step = 5) {
    if (k < 1) throw std::invalid_argument("converge_truncation requires k >= 1");
    if (!(rtol > 0)) throw std::invalid_argument("rtol must be positive");

    TruncationResult res;
    std::int64_t m = std::max<std::int64_t>(k, m_step);
    if (seq.length()) m = std::min(m, *seq.length());
    int stable_steps = 0;
    Real prev = -1;
    for (;;) {
        MinimalFamily fam = minimal_family(seq, m, t_final, ctx);
        Real norm = fam.norms[static_cast<std::size_t>(k - 1)];
        res.history.emplace_back(m, norm);
        if (prev >= 0) {
            Real rel = mp::abs(norm - prev) / norm;
            stable_steps = (rel < rtol) ? stable_steps + 1 : 0;
        }
        prev = norm;
        res.norm = norm;
        res.m_star = m;
        res.residual_max = fam.residual_max;
        if (stable_steps >= 2) return res;
        bool exhausted = seq.length() && m >= *seq.length();
        if (exhausted) return res; // nothing left to add: plateau by exhaustion
        if (m >= m_max) throw NoPlateau(m_max);
        m = std::min<std::int64_t>(m + m_step, m_max);
        if (seq.length()) m = std::min(m, *seq.length());
    }
}

// Recomputes <e_k, s_n> by quadrature, independent of the closed-form Gram
// entries, and returns the largest deviation from delta_{kn}.
inline Real residual_check(const MinimalFamily& fam, int panels = 32, int nodes = 24) {
    Real worst = 0;
    for (std::int64_t k = 1; k <= fam.truncation; ++k) {
        const Complex lam_k = fam.terms[static_cast<std::size_t>(k - 1)];
        for (std::int64_t n = 1; n <= fam.truncation; ++n) {
            auto integrand = [&](const Real& t) {
                Complex ek = exp(Complex(-lam_k.re * t, -lam_k.im * t));
                return ek * conj(fam.evaluate(n, t));
            };
            QuadratureResult q = integrate(integrand, Real(0), fam.t_final, panels, nodes);
            Complex dev = q.value;
            if (k == n) dev -= Complex(Real(1));
            Real r = abs(dev);
            if (r > worst) worst = r;
        }
    }
    return worst;
}

} // namespace biortho
