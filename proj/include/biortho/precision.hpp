#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>

#include "biortho/errors.hpp"

namespace biortho {

namespace mp = boost::multiprecision;

// Variable-precision real scalar (MPFR-backed, nearest-even rounding).
using Real = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;
using Rational = mp::number<mp::gmp_rational, mp::et_off>;
using BigInt = mp::number<mp::gmp_int, mp::et_off>;

// Precision of all fresh values created while a PrecisionScope with this
// context is active. Mantissa width is >= mantissa_bits (the bits -> decimal
// digits mapping rounds up).
struct PrecisionContext {
    unsigned mantissa_bits = 512;
};

namespace detail {

inline unsigned digits10_for_bits(unsigned bits) {
    return static_cast<unsigned>(std::ceil(bits * 0.3010299956639812)) + 2;
}

// boost 1.7x stores the mpfr default precision in one process-global atomic.
// Concurrent operations that share a precision run in parallel under a shared
// lock; switching to a different precision takes the gate exclusively.
struct PrecisionGate {
    std::shared_mutex mtx;
    unsigned current_bits = 0;

    static PrecisionGate& instance() {
        static PrecisionGate g;
        return g;
    }
};

inline thread_local unsigned tl_scope_bits = 0;
inline thread_local int tl_scope_depth = 0;

} // namespace detail

// RAII guard establishing the working precision for the current thread.
// Scopes nest only with identical bit counts; that keeps per-call contexts
// from silently mixing precisions mid-computation.
class PrecisionScope {
public:
    explicit PrecisionScope(const PrecisionContext& ctx) : bits_(ctx.mantissa_bits) {
        if (bits_ < 64) throw ConfigInvalid("mantissa_bits must be >= 64");
        if (detail::tl_scope_depth > 0) {
            if (bits_ != detail::tl_scope_bits)
                throw std::logic_error("nested PrecisionScope with different mantissa_bits");
            ++detail::tl_scope_depth;
            owns_lock_ = false;
            return;
        }
        auto& gate = detail::PrecisionGate::instance();
        for (;;) {
            gate.mtx.lock_shared();
            if (gate.current_bits == bits_) break;
            gate.mtx.unlock_shared();
            std::unique_lock lk(gate.mtx);
            if (gate.current_bits != bits_) {
                gate.current_bits = bits_;
                Real::default_precision(detail::digits10_for_bits(bits_));
            }
        }
        detail::tl_scope_bits = bits_;
        detail::tl_scope_depth = 1;
        owns_lock_ = true;
    }

    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

    ~PrecisionScope() {
        if (owns_lock_) {
            detail::PrecisionGate::instance().mtx.unlock_shared();
            detail::tl_scope_depth = 0;
            detail::tl_scope_bits = 0;
        } else {
            --detail::tl_scope_depth;
        }
    }

    unsigned bits() const { return bits_; }

private:
    unsigned bits_;
    bool owns_lock_;
};

inline unsigned active_precision_bits() {
    return detail::tl_scope_depth > 0 ? detail::tl_scope_bits : 0;
}

// Context of the enclosing scope, or the given fallback when none is active.
// The usual default for per-call context parameters.
inline PrecisionContext ambient_or(unsigned fallback_bits = 512) {
    unsigned b = active_precision_bits();
    return PrecisionContext{b ? b : fallback_bits};
}

inline Real pi_value() {
    Real p = 0;
    mpfr_const_pi(p.backend().data(), MPFR_RNDN);
    return p;
}

inline Real real_expm1(const Real& x) {
    Real r = 0;
    mpfr_expm1(r.backend().data(), x.backend().data(), MPFR_RNDN);
    return r;
}

inline bool is_finite(const Real& x) { return mpfr_number_p(x.backend().data()) != 0; }

inline BigInt factorial_int(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("factorial of negative argument");
    BigInt f = 1;
    for (std::int64_t i = 2; i <= n; ++i) f *= static_cast<long>(i);
    return f;
}

inline Real factorial(std::int64_t n) { return Real(factorial_int(n)); }

// Complex scalar over Real. std::complex is only specified for the builtin
// floating types, so the arithmetic lives here.
struct Complex {
    Real re, im;

    Complex() : re(0), im(0) {}
    Complex(const Real& r) : re(r), im(0) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    Complex(double r) : re(r), im(0) {}
    Complex(double r, double i) : re(r), im(i) {}

    Complex& operator+=(const Complex& o) { re += o.re; im += o.im; return *this; }
    Complex& operator-=(const Complex& o) { re -= o.re; im -= o.im; return *this; }
    Complex& operator*=(const Complex& o) {
        Real r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = std::move(r);
        return *this;
    }
};

inline Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
inline Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
inline Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
inline Complex operator*(const Complex& a, const Complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline Complex operator*(const Real& a, const Complex& b) { return {a * b.re, a * b.im}; }
inline Complex operator*(const Complex& a, const Real& b) { return {a.re * b, a.im * b}; }
inline Complex conj(const Complex& a) { return {a.re, -a.im}; }
inline Real sqnorm(const Complex& a) { return a.re * a.re + a.im * a.im; }
inline Real abs(const Complex& a) {
    using mp::hypot;
    return hypot(a.re, a.im);
}
inline Complex operator/(const Complex& a, const Complex& b) {
    Real d = sqnorm(b);
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
inline Complex operator/(const Complex& a, const Real& b) { return {a.re / b, a.im / b}; }
inline bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const Complex& a, const Complex& b) { return !(a == b); }

inline Complex exp(const Complex& z) {
    using mp::exp;
    using mp::cos;
    using mp::sin;
    Real m = exp(z.re);
    return {m * cos(z.im), m * sin(z.im)};
}

inline Complex cos(const Complex& z) {
    using mp::cos;
    using mp::sin;
    using mp::cosh;
    using mp::sinh;
    return {cos(z.re) * cosh(z.im), -sin(z.re) * sinh(z.im)};
}

inline Complex i_times(const Complex& z) { return {-z.im, z.re}; }       // i*z
inline Complex minus_i_times(const Complex& z) { return {z.im, -z.re}; } // -i*z

inline bool is_finite(const Complex& z) { return is_finite(z.re) && is_finite(z.im); }

// log(|z|) without over/underflow concerns (mpfr exponent range is huge).
inline Real log_abs(const Complex& z) {
    using mp::log;
    Real s = sqnorm(z);
    if (s == 0) throw NonFinite("log of zero modulus");
    return log(s) / 2;
}

inline Real to_real(const Rational& q) { return Real(q); }

// Deterministic decimal rendering; digit count derived from precision bits.
inline std::string format_real(const Real& x, unsigned digits) {
    std::ostringstream os;
    os.precision(static_cast<int>(digits));
    os << x;
    return os.str();
}

inline unsigned output_digits_for_bits(unsigned bits) {
    return static_cast<unsigned>(bits * 0.3010299956639812);
}

} // namespace biortho
