#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "biortho/precision.hpp"

namespace biortho {

// Parameters of the sequence class: beta bounds the imaginary parts, (rho, q)
// the quadratic separation away from condensation groupings, (p0, p1, p2,
// alpha) the counting-function envelope, nu the reverse quadratic bound and
// delta the real-part cone. Values are stored as rationals; irrational
// parameters carry a high-accuracy rational surrogate and exact == false.
struct ClassParameters {
    Rational beta = 0;
    Rational rho = 1;
    std::int64_t q = 1;
    Rational p0 = 1, p1 = 1, p2 = 1;
    Rational alpha = 1;
    Rational nu = 1;
    Rational delta = 1;
    bool exact = true;

    void validate() const {
        if (!(rho > 0 && p0 > 0 && p1 > 0 && p2 > 0 && alpha > 0 && nu > 0))
            throw ConfigInvalid("class parameters must be positive");
        if (q < 1) throw ConfigInvalid("q must be a positive integer");
        if (p1 < p0 || p2 < p0) throw ConfigInvalid("p1, p2 must be >= p0");
        if (p1 * p1 * rho > 1) throw ConfigInvalid("p1 <= 1/sqrt(rho) violated");
        if (p2 * p2 * nu < 1) throw ConfigInvalid("1/sqrt(nu) <= p2 violated");
        if (beta < 0) throw ConfigInvalid("beta must be >= 0");
        if (beta == 0 && delta != 1) throw ConfigInvalid("delta must be 1 when beta = 0");
        if (!(delta > 0 && delta <= 1)) throw ConfigInvalid("delta must lie in (0,1]");
    }
};

struct TermProvenance {
    int parent = 0;                 // 0: own generator, 1/2: merge inputs
    std::int64_t original_index = 0;
};

// Lazily generated eigenvalue sequence, 1-indexed, nondecreasing in modulus.
// Materialized prefixes are memoized per precision; real rational sequences
// additionally carry an exact view. Extension is single-writer, reads are
// concurrent.
class EigenSequence {
public:
    using Generator = std::function<Complex(std::int64_t)>;
    using ExactGenerator = std::function<Rational(std::int64_t)>;
    using ProvenanceFn = std::function<TermProvenance(std::int64_t)>;
    using TailMomentFn = std::function<Real(std::int64_t m, std::int64_t M)>;

    EigenSequence() : impl_(std::make_shared<Impl>()) {}

    static EigenSequence from_generator(std::string label, Generator gen,
                                        std::optional<std::int64_t> length = std::nullopt) {
        EigenSequence s;
        s.impl_->label = std::move(label);
        s.impl_->gen = std::move(gen);
        s.impl_->len = length;
        return s;
    }

    static EigenSequence from_exact_generator(std::string label, ExactGenerator exact,
                                              std::optional<std::int64_t> length = std::nullopt) {
        EigenSequence s;
        s.impl_->label = std::move(label);
        s.impl_->exact_gen = exact;
        s.impl_->gen = [exact](std::int64_t k) { return Complex(to_real(exact(k))); };
        s.impl_->len = length;
        return s;
    }

    static EigenSequence explicit_terms(std::string label, std::vector<Complex> terms) {
        EigenSequence s;
        s.impl_->label = std::move(label);
        auto data = std::make_shared<std::vector<Complex>>(std::move(terms));
        s.impl_->gen = [data](std::int64_t k) { return (*data)[static_cast<std::size_t>(k - 1)]; };
        s.impl_->len = static_cast<std::int64_t>(data->size());
        return s;
    }

    const std::string& label() const { return impl_->label; }
    std::optional<std::int64_t> length() const { return impl_->len; }
    bool has_exact() const { return static_cast<bool>(impl_->exact_gen) || impl_->merged_exact(); }
    bool is_merged() const { return impl_->parent_a != nullptr; }

    const std::optional<ClassParameters>& params() const { return impl_->params; }
    void attach_params(ClassParameters p) {
        p.validate();
        impl_->params = std::move(p);
    }
    std::optional<double> attached_minimal_time() const { return impl_->minimal_time; }
    void attach_minimal_time(double t0) { impl_->minimal_time = t0; }

    void attach_provenance(ProvenanceFn f) { impl_->prov_fn = std::move(f); }
    void attach_tail_moments(TailMomentFn f) { impl_->tail_moments = std::move(f); }
    bool has_tail_moments() const { return static_cast<bool>(impl_->tail_moments); }

    // sum_{n > M} Lambda_n^{-m} for real sequences that support it
    Real tail_inverse_moment(std::int64_t m, std::int64_t M) const {
        if (!impl_->tail_moments) throw TailNotSummable(impl_->label + " has no tail moment capability");
        return impl_->tail_moments(m, M);
    }

    Complex term(std::int64_t k) const {
        if (k < 1) throw std::invalid_argument("sequence indices are 1-based");
        PrecisionScope scope(ambient());
        auto& cache = impl_->float_cache_for(scope.bits());
        {
            std::shared_lock lk(impl_->mx);
            if (static_cast<std::size_t>(k) <= cache.terms.size()) return cache.terms[static_cast<std::size_t>(k - 1)];
        }
        std::unique_lock lk(impl_->mx);
        impl_->extend_float(cache, k);
        return cache.terms[static_cast<std::size_t>(k - 1)];
    }

    Real term_modulus(std::int64_t k) const { return abs(term(k)); }

    Rational exact_term(std::int64_t k) const {
        if (!has_exact()) throw std::logic_error("sequence has no exact terms");
        if (k < 1) throw std::invalid_argument("sequence indices are 1-based");
        {
            std::shared_lock lk(impl_->mx);
            if (static_cast<std::size_t>(k) <= impl_->exact_cache.size())
                return impl_->exact_cache[static_cast<std::size_t>(k - 1)];
        }
        std::unique_lock lk(impl_->mx);
        impl_->extend_exact(k);
        return impl_->exact_cache[static_cast<std::size_t>(k - 1)];
    }

    TermProvenance provenance(std::int64_t k) const {
        if (impl_->prov_fn) return impl_->prov_fn(k);
        if (!is_merged()) return TermProvenance{0, k};
        if (has_exact()) {
            exact_term(k);
            std::shared_lock lk(impl_->mx);
            return impl_->exact_prov[static_cast<std::size_t>(k - 1)];
        }
        PrecisionScope scope(ambient());
        auto& cache = impl_->float_cache_for(scope.bits());
        term(k);
        std::shared_lock lk(impl_->mx);
        return cache.prov[static_cast<std::size_t>(k - 1)];
    }

    friend EigenSequence merge_increasing(const EigenSequence& a, const EigenSequence& b);

private:
    static PrecisionContext ambient() {
        unsigned bits = active_precision_bits();
        return PrecisionContext{bits ? bits : 512};
    }

    struct FloatCache {
        std::vector<Complex> terms;
        std::vector<TermProvenance> prov;    // merged backends only
        std::int64_t cursor_a = 0, cursor_b = 0;
    };

    struct Impl {
        std::string label;
        Generator gen;
        ExactGenerator exact_gen;
        ProvenanceFn prov_fn;
        TailMomentFn tail_moments;
        std::shared_ptr<Impl> parent_a, parent_b;
        std::optional<std::int64_t> len;
        std::optional<ClassParameters> params;
        std::optional<double> minimal_time;

        mutable std::shared_mutex mx;
        mutable std::map<unsigned, FloatCache> caches;
        mutable std::vector<Rational> exact_cache;
        mutable std::vector<TermProvenance> exact_prov;
        mutable std::int64_t exact_cursor_a = 0, exact_cursor_b = 0;

        bool merged_exact() const {
            return parent_a && parent_b && wrap(parent_a).has_exact() && wrap(parent_b).has_exact();
        }

        static EigenSequence wrap(const std::shared_ptr<Impl>& p) {
            EigenSequence s;
            s.impl_ = p;
            return s;
        }

        FloatCache& float_cache_for(unsigned bits) const {
            std::unique_lock lk(mx);
            return caches[bits];
        }

        void extend_float(FloatCache& cache, std::int64_t upto) const {
            if (len && upto > *len)
                throw PrefixExhausted(label + " has only " + std::to_string(*len) + " terms");
            if (!parent_a) {
                while (static_cast<std::int64_t>(cache.terms.size()) < upto)
                    cache.terms.push_back(gen(static_cast<std::int64_t>(cache.terms.size()) + 1));
                return;
            }
            EigenSequence a = wrap(parent_a), b = wrap(parent_b);
            while (static_cast<std::int64_t>(cache.terms.size()) < upto) {
                bool have_a = !a.length() || cache.cursor_a < *a.length();
                bool have_b = !b.length() || cache.cursor_b < *b.length();
                if (!have_a && !have_b) throw PrefixExhausted(label + " merge inputs exhausted");
                int take;
                if (!have_a) take = 2;
                else if (!have_b) take = 1;
                else {
                    Complex ta = a.term(cache.cursor_a + 1), tb = b.term(cache.cursor_b + 1);
                    if (ta == tb) throw DuplicateTerm("value shared by both inputs at indices " +
                                                      std::to_string(cache.cursor_a + 1) + "/" +
                                                      std::to_string(cache.cursor_b + 1));
                    Real ma = abs(ta), mb = abs(tb);
                    take = (ma < mb || (ma == mb && ta.im <= tb.im)) ? 1 : 2;
                }
                if (take == 1) {
                    ++cache.cursor_a;
                    cache.terms.push_back(a.term(cache.cursor_a));
                    cache.prov.push_back({1, cache.cursor_a});
                } else {
                    ++cache.cursor_b;
                    cache.terms.push_back(b.term(cache.cursor_b));
                    cache.prov.push_back({2, cache.cursor_b});
                }
            }
        }

        void extend_exact(std::int64_t upto) const {
            if (len && upto > *len)
                throw PrefixExhausted(label + " has only " + std::to_string(*len) + " terms");
            if (exact_gen) {
                while (static_cast<std::int64_t>(exact_cache.size()) < upto)
                    exact_cache.push_back(exact_gen(static_cast<std::int64_t>(exact_cache.size()) + 1));
                return;
            }
            if (!merged_exact()) throw std::logic_error("no exact backend");
            EigenSequence a = wrap(parent_a), b = wrap(parent_b);
            while (static_cast<std::int64_t>(exact_cache.size()) < upto) {
                bool have_a = !a.length() || exact_cursor_a < *a.length();
                bool have_b = !b.length() || exact_cursor_b < *b.length();
                if (!have_a && !have_b) throw PrefixExhausted(label + " merge inputs exhausted");
                int take;
                if (!have_a) take = 2;
                else if (!have_b) take = 1;
                else {
                    Rational ra = a.exact_term(exact_cursor_a + 1), rb = b.exact_term(exact_cursor_b + 1);
                    if (ra == rb) throw DuplicateTerm("value shared by both inputs at indices " +
                                                      std::to_string(exact_cursor_a + 1) + "/" +
                                                      std::to_string(exact_cursor_b + 1));
                    take = (mp::abs(ra) <= mp::abs(rb)) ? 1 : 2;
                }
                if (take == 1) {
                    ++exact_cursor_a;
                    exact_cache.push_back(a.exact_term(exact_cursor_a));
                    exact_prov.push_back({1, exact_cursor_a});
                } else {
                    ++exact_cursor_b;
                    exact_cache.push_back(b.exact_term(exact_cursor_b));
                    exact_prov.push_back({2, exact_cursor_b});
                }
            }
        }
    };

    std::shared_ptr<Impl> impl_;
};

// Merge two modulus-nondecreasing sequences into one; ties in modulus broken
// by ascending imaginary part. A value present in both inputs raises
// DuplicateTerm when reached.
inline EigenSequence merge_increasing(const EigenSequence& a, const EigenSequence& b) {
    EigenSequence s;
    s.impl_->label = a.label() + " + " + b.label();
    s.impl_->parent_a = a.impl_;
    s.impl_->parent_b = b.impl_;
    if (a.length() && b.length()) s.impl_->len = *a.length() + *b.length();
    return s;
}

// N(r) = #{k : |Lambda_k| <= r}; strict = true counts |Lambda_k| < r (the
// left limit of the step function).
inline std::int64_t counting_function(const EigenSequence& seq, const Real& r, bool strict = false) {
    if (!(r > 0)) throw std::invalid_argument("counting function requires r > 0");
    std::int64_t count = 0;
    for (std::int64_t k = 1;; ++k) {
        if (seq.length() && k > *seq.length()) {
            Real last = seq.term_modulus(*seq.length());
            if (last <= r) throw PrefixExhausted("generator cannot certify N(r) beyond its last term");
            break;
        }
        Real m = seq.term_modulus(k);
        if (strict ? (m < r) : (m <= r)) ++count;
        else if (m > r) break;
    }
    return count;
}

inline std::int64_t counting_function_exact(const EigenSequence& seq, const Rational& r, bool strict = false) {
    if (!(r > 0)) throw std::invalid_argument("counting function requires r > 0");
    if (!seq.has_exact()) throw std::logic_error("exact counting requires an exact sequence");
    std::int64_t count = 0;
    for (std::int64_t k = 1;; ++k) {
        if (seq.length() && k > *seq.length()) {
            if (mp::abs(seq.exact_term(*seq.length())) <= r)
                throw PrefixExhausted("generator cannot certify N(r) beyond its last term");
            break;
        }
        Rational m = mp::abs(seq.exact_term(k));
        if (strict ? (m < r) : (m <= r)) ++count;
        else if (m > r) break;
    }
    return count;
}

// P_k = 1 / prod_{1 <= |k-n| < q} |Lambda_k - Lambda_n|; equals 1 when q = 1.
inline Real condensation_product(const EigenSequence& seq, std::int64_t k, std::int64_t q) {
    if (k < 1 || q < 1) throw std::invalid_argument("condensation_product requires k, q >= 1");
    if (q == 1) return Real(1);
    Real prod = 1;
    Complex lk = seq.term(k);
    for (std::int64_t n = std::max<std::int64_t>(1, k - q + 1); n <= k + q - 1; ++n) {
        if (n == k) continue;
        Real d = abs(lk - seq.term(n));
        if (d == 0) throw DegenerateSequence(k, n);
        prod *= d;
    }
    return 1 / prod;
}

inline Rational condensation_product_exact(const EigenSequence& seq, std::int64_t k, std::int64_t q) {
    if (k < 1 || q < 1) throw std::invalid_argument("condensation_product requires k, q >= 1");
    if (q == 1) return Rational(1);
    Rational prod = 1;
    Rational lk = seq.exact_term(k);
    for (std::int64_t n = std::max<std::int64_t>(1, k - q + 1); n <= k + q - 1; ++n) {
        if (n == k) continue;
        Rational d = mp::abs(lk - seq.exact_term(n));
        if (d == 0) throw DegenerateSequence(k, n);
        prod *= d;
    }
    return 1 / prod;
}

enum class CheckStatus { Pass, Fail, Skipped };

struct CheckWitness {
    std::int64_t k = 0, n = 0;
    double r = 0;
};

struct HypothesisResult {
    CheckStatus status = CheckStatus::Skipped;
    std::optional<CheckWitness> witness;
    double margin = std::numeric_limits<double>::infinity();
};

struct ClassReport {
    HypothesisResult h1, h2, h3, h4, h5, h6, item6;
    std::int64_t checked_prefix = 0;
    double counting_margin = std::numeric_limits<double>::infinity();
    bool exact_arithmetic = false;
    double fitted_condi_c = 0;   // smallest C with sqrt|Lambda_k| <= k/p1 + C(1+q)/(rho p1^2)
    bool condi_lower_ok = true;  // (1/p2)(k - alpha) <= sqrt|Lambda_k| over the prefix

    bool all_pass() const {
        auto ok = [](const HypothesisResult& h) { return h.status != CheckStatus::Fail; };
        return ok(h1) && ok(h2) && ok(h3) && ok(h4) && ok(h5) && ok(h6) && ok(item6);
    }
};

namespace detail {

// Shared pairwise checking core. Scalar is Rational (exact path, real
// sequences) or a (Complex value, Real modulus) view for the float path.
struct FloatView {
    std::vector<Complex> terms;
    std::vector<Real> mods;
};

inline double to_double(const Real& x) { return static_cast<double>(x); }
inline double to_double(const Rational& x) { return static_cast<double>(Real(x)); }

} // namespace detail

// Checks hypotheses (H1)-(H6) and the reverse bound |Lambda_k - Lambda_n| <=
// nu |k^2 - n^2| over a materialized prefix. Failures carry a concrete
// witness. PASS entries are prefix-verified only: a finite prefix can refute
// membership but never prove it.
inline ClassReport check_class(const EigenSequence& seq, const ClassParameters& params, std::int64_t prefix,
                               PrecisionContext ctx = ambient_or()) {
    if (prefix < params.q + 2) throw std::invalid_argument("prefix must be at least q + 2");
    PrecisionScope scope(ctx);
    ClassReport rep;
    rep.checked_prefix = prefix;
    const bool exact = seq.has_exact() && params.exact;
    rep.exact_arithmetic = exact;

    const std::int64_t q = params.q;

    // Materialize the prefix once.
    std::vector<Rational> exact_terms;
    detail::FloatView fv;
    if (exact) {
        exact_terms.reserve(static_cast<std::size_t>(prefix));
        for (std::int64_t k = 1; k <= prefix; ++k) exact_terms.push_back(seq.exact_term(k));
    } else {
        fv.terms.reserve(static_cast<std::size_t>(prefix));
        for (std::int64_t k = 1; k <= prefix; ++k) fv.terms.push_back(seq.term(k));
        for (auto& t : fv.terms) fv.mods.push_back(abs(t));
    }

    auto modulus_d = [&](std::int64_t k) {
        return exact ? detail::to_double(mp::abs(exact_terms[static_cast<std::size_t>(k - 1)]))
                     : detail::to_double(fv.mods[static_cast<std::size_t>(k - 1)]);
    };

    // H1: pairwise distinct.
    rep.h1.status = CheckStatus::Pass;
    for (std::int64_t k = 1; k <= prefix && rep.h1.status == CheckStatus::Pass; ++k)
        for (std::int64_t n = k + 1; n <= prefix; ++n) {
            bool equal = exact ? (exact_terms[static_cast<std::size_t>(k - 1)] == exact_terms[static_cast<std::size_t>(n - 1)])
                               : (fv.terms[static_cast<std::size_t>(k - 1)] == fv.terms[static_cast<std::size_t>(n - 1)]);
            if (equal) {
                rep.h1.status = CheckStatus::Fail;
                rep.h1.witness = CheckWitness{k, n, 0};
                break;
            }
        }

    // H2: Re > 0.
    rep.h2.status = CheckStatus::Pass;
    for (std::int64_t k = 1; k <= prefix; ++k) {
        bool ok = exact ? (exact_terms[static_cast<std::size_t>(k - 1)] > 0) : (fv.terms[static_cast<std::size_t>(k - 1)].re > 0);
        if (!ok) {
            rep.h2.status = CheckStatus::Fail;
            rep.h2.witness = CheckWitness{k, 0, 0};
            break;
        }
    }

    // H3: |Im|^2 <= beta^2 Re (only binding for complex sequences).
    rep.h3.status = CheckStatus::Pass;
    if (!exact) {
        for (std::int64_t k = 1; k <= prefix; ++k) {
            const Complex& t = fv.terms[static_cast<std::size_t>(k - 1)];
            if (t.re <= 0) continue; // reported under H2
            if (t.im * t.im > to_real(params.beta * params.beta) * t.re) {
                rep.h3.status = CheckStatus::Fail;
                rep.h3.witness = CheckWitness{k, 0, 0};
                break;
            }
        }
    }

    // H4: nondecreasing modulus.
    rep.h4.status = CheckStatus::Pass;
    for (std::int64_t k = 1; k < prefix; ++k) {
        bool ok = exact ? (mp::abs(exact_terms[static_cast<std::size_t>(k - 1)]) <= mp::abs(exact_terms[static_cast<std::size_t>(k)]))
                        : (fv.mods[static_cast<std::size_t>(k - 1)] <= fv.mods[static_cast<std::size_t>(k)]);
        if (!ok) {
            rep.h4.status = CheckStatus::Fail;
            rep.h4.witness = CheckWitness{k, k + 1, 0};
            break;
        }
    }

    // H5 and item6 over all pairs, square-comparison form (no square roots).
    rep.h5.status = CheckStatus::Pass;
    rep.item6.status = CheckStatus::Pass;
    double h5_margin = std::numeric_limits<double>::infinity();
    double i6_margin = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 2; k <= prefix; ++k) {
        for (std::int64_t n = 1; n < k; ++n) {
            const std::int64_t ksq = k * k - n * n;
            if (exact) {
                Rational diff = mp::abs(exact_terms[static_cast<std::size_t>(k - 1)] - exact_terms[static_cast<std::size_t>(n - 1)]);
                if (k - n >= q && rep.h5.status == CheckStatus::Pass) {
                    if (params.rho * ksq > diff) {
                        rep.h5.status = CheckStatus::Fail;
                        rep.h5.witness = CheckWitness{k, n, 0};
                    } else {
                        h5_margin = std::min(h5_margin, detail::to_double(diff - params.rho * ksq));
                    }
                }
                if (rep.item6.status == CheckStatus::Pass) {
                    if (diff > params.nu * ksq) {
                        rep.item6.status = CheckStatus::Fail;
                        rep.item6.witness = CheckWitness{k, n, 0};
                    } else {
                        i6_margin = std::min(i6_margin, detail::to_double(params.nu * ksq - diff));
                    }
                }
            } else {
                Real diff2 = sqnorm(fv.terms[static_cast<std::size_t>(k - 1)] - fv.terms[static_cast<std::size_t>(n - 1)]);
                Real k2 = Real(static_cast<long>(ksq));
                if (k - n >= q && rep.h5.status == CheckStatus::Pass) {
                    Real lhs = to_real(params.rho * params.rho) * k2 * k2;
                    if (lhs > diff2) {
                        rep.h5.status = CheckStatus::Fail;
                        rep.h5.witness = CheckWitness{k, n, 0};
                    } else {
                        h5_margin = std::min(h5_margin, detail::to_double(mp::sqrt(diff2) - mp::sqrt(lhs)));
                    }
                }
                if (rep.item6.status == CheckStatus::Pass) {
                    Real rhs = to_real(params.nu * params.nu) * k2 * k2;
                    if (diff2 > rhs) {
                        rep.item6.status = CheckStatus::Fail;
                        rep.item6.witness = CheckWitness{k, n, 0};
                    } else {
                        i6_margin = std::min(i6_margin, detail::to_double(mp::sqrt(rhs) - mp::sqrt(diff2)));
                    }
                }
            }
            if (rep.h5.status == CheckStatus::Fail && rep.item6.status == CheckStatus::Fail) break;
        }
        if (rep.h5.status == CheckStatus::Fail && rep.item6.status == CheckStatus::Fail) break;
    }
    rep.h5.margin = h5_margin;
    rep.item6.margin = i6_margin;

    // H6: counting envelope at the jump points, their left limits, and a
    // log-spaced grid. N is a step function, so the jumps dominate.
    rep.h6.status = CheckStatus::Pass;
    double h6_margin = std::numeric_limits<double>::infinity();
    auto check_h6_at = [&](const Rational& r_exact, const Real& r_float, bool strict) {
        if (rep.h6.status == CheckStatus::Fail) return;
        std::int64_t N;
        double r_d;
        if (exact) {
            if (!(r_exact > 0)) return;
            try {
                N = counting_function_exact(seq, r_exact, strict);
            } catch (const PrefixExhausted&) { return; }
            r_d = detail::to_double(r_exact);
            // left: p1^2 r <= (N + alpha)^2 ; right: N <= alpha or (N - alpha)^2 <= p2^2 r
            bool left = params.p1 * params.p1 * r_exact <= (N + params.alpha) * (N + params.alpha);
            bool right = (params.alpha >= N) || ((N - params.alpha) * (N - params.alpha) <= params.p2 * params.p2 * r_exact);
            if (!left || !right) {
                rep.h6.status = CheckStatus::Fail;
                rep.h6.witness = CheckWitness{N, 0, r_d};
                return;
            }
        } else {
            if (!(r_float > 0)) return;
            try {
                N = counting_function(seq, r_float, strict);
            } catch (const PrefixExhausted&) { return; }
            r_d = detail::to_double(r_float);
            Real sq = mp::sqrt(r_float);
            Real left = Real(static_cast<long>(N)) + to_real(params.alpha) - to_real(params.p1) * sq;
            Real right = to_real(params.alpha) + to_real(params.p2) * sq - Real(static_cast<long>(N));
            if (left < 0 || right < 0) {
                rep.h6.status = CheckStatus::Fail;
                rep.h6.witness = CheckWitness{N, 0, r_d};
                return;
            }
        }
        double sqr = std::sqrt(r_d);
        double left_m = static_cast<double>(N) + detail::to_double(params.alpha) - detail::to_double(params.p1) * sqr;
        double right_m = detail::to_double(params.alpha) + detail::to_double(params.p2) * sqr - static_cast<double>(N);
        h6_margin = std::min(h6_margin, std::min(left_m, right_m));
    };

    for (std::int64_t k = 1; k <= prefix; ++k) {
        if (exact) {
            Rational m = mp::abs(exact_terms[static_cast<std::size_t>(k - 1)]);
            check_h6_at(m, Real(0), false);
            check_h6_at(m, Real(0), true);
        } else {
            Real m = fv.mods[static_cast<std::size_t>(k - 1)];
            check_h6_at(Rational(0), m, false);
            check_h6_at(Rational(0), m, true);
        }
        if (rep.h6.status == CheckStatus::Fail) break;
    }
    if (rep.h6.status != CheckStatus::Fail) {
        double lo = modulus_d(1) / 2;
        double hi = 2 * modulus_d(prefix);
        if (seq.length()) hi = std::min(hi, modulus_d(*seq.length()));
        if (lo > 0 && hi > lo) {
            for (int i = 0; i < 256; ++i) {
                double r = lo * std::pow(hi / lo, i / 255.0);
                if (exact) check_h6_at(Rational(r), Real(0), false);
                else check_h6_at(Rational(0), Real(r), false);
                if (rep.h6.status == CheckStatus::Fail) break;
            }
        }
    }
    rep.h6.margin = h6_margin;
    rep.counting_margin = h6_margin;

    // Index bound (1/p2)(k - alpha) <= sqrt|Lambda_k| <= k/p1 + C(1+q)/(rho p1^2):
    // the lower part is parameter-free, the upper constant is fitted.
    double c_fit = 0;
    const double p1_d = detail::to_double(params.p1);
    const double p2_d = detail::to_double(params.p2);
    const double alpha_d = detail::to_double(params.alpha);
    const double rho_d = detail::to_double(params.rho);
    for (std::int64_t k = 1; k <= prefix; ++k) {
        double sq = std::sqrt(modulus_d(k));
        if (static_cast<double>(k) - alpha_d > p2_d * sq + 1e-12 * (1 + p2_d * sq)) rep.condi_lower_ok = false;
        double c = (sq - static_cast<double>(k) / p1_d) * rho_d * p1_d * p1_d / (1.0 + static_cast<double>(q));
        c_fit = std::max(c_fit, c);
    }
    rep.fitted_condi_c = c_fit;

    return rep;
}

template <typename T>
struct DerivedRealParams {
    std::int64_t q;
    T rho;
    T nu;
};

// Parameter derivation for real sequences with p1 = p2 = p: q = ceil(3 alpha)
// (the class definition needs an integer q and enlarging q weakens (H5)),
// rho = 1/(3 p^2), nu = ((2 + alpha)/p)^2 / 3.
inline DerivedRealParams<Rational> derive_params_real(const Rational& p, const Rational& alpha) {
    if (!(p > 0 && alpha > 0)) throw std::invalid_argument("derive_params_real requires positive inputs");
    Rational three_alpha = 3 * alpha;
    BigInt qn = mp::numerator(three_alpha) / mp::denominator(three_alpha);
    if (Rational(qn) < three_alpha) qn += 1;
    Rational two_plus = (2 + alpha) / p;
    return {static_cast<std::int64_t>(qn), Rational(1) / (3 * p * p), two_plus * two_plus / 3};
}

inline DerivedRealParams<Real> derive_params_real(const Real& p, const Real& alpha) {
    if (!(p > 0 && alpha > 0)) throw std::invalid_argument("derive_params_real requires positive inputs");
    Real two_plus = (2 + alpha) / p;
    return {static_cast<std::int64_t>(mp::ceil(3 * alpha)), 1 / (3 * p * p), two_plus * two_plus / 3};
}

struct GapDerivedParams {
    Real p0, p1, p2, alpha;
};

// Parameters implied by the separation constants alone: p0 = p1 = 1/sqrt(nu),
// p2 = 1/sqrt(rho), alpha = max{q - sqrt(|L1|/rho), sqrt(|L1|/rho + 1),
// sqrt(|L1|/nu) + 1}.
inline GapDerivedParams derive_params_from_gap(const Real& rho, const Real& nu, std::int64_t q,
                                               const Real& lambda1_abs) {
    using mp::sqrt;
    if (!(rho > 0 && nu > 0 && lambda1_abs > 0) || q < 1)
        throw std::invalid_argument("derive_params_from_gap requires positive inputs");
    Real a1 = Real(static_cast<long>(q)) - sqrt(lambda1_abs / rho);
    Real a2 = sqrt(lambda1_abs / rho + 1);
    Real a3 = sqrt(lambda1_abs / nu) + 1;
    Real alpha = a1 > a2 ? a1 : a2;
    if (a3 > alpha) alpha = a3;
    return {1 / sqrt(nu), 1 / sqrt(nu), 1 / sqrt(rho), alpha};
}

} // namespace biortho
