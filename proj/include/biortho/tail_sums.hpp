#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "biortho/precision.hpp"

namespace biortho {

namespace detail {

// Even-index Bernoulli numbers B_2, B_4, ... by the exact recurrence
// sum_{j=0}^{m} C(m+1, j) B_j = 0; extended lazily, cached process-wide.
inline Rational bernoulli_even(std::size_t i) { // returns B_{2i}, i >= 1
    static std::mutex mtx;
    static std::vector<Rational> all = {Rational(1), Rational(-1, 2)}; // B_0, B_1
    std::lock_guard lk(mtx);
    while (all.size() < 2 * i + 1) {
        std::size_t m = all.size(); // computing B_m
        // B_m = -1/(m+1) sum_{j<m} C(m+1, j) B_j
        Rational acc = 0;
        BigInt binom = 1; // C(m+1, 0)
        for (std::size_t j = 0; j < m; ++j) {
            acc += Rational(binom) * all[j];
            binom = binom * static_cast<long>(m + 1 - j) / static_cast<long>(j + 1);
        }
        all.push_back(-acc / static_cast<long>(m + 1));
    }
    return all[2 * i];
}

} // namespace detail

// sum_{j>=0} (a + j)^(-s) for real a > 0 and integer s >= 2: direct summation
// up to an anchor where the Euler-Maclaurin expansion reaches working
// precision, then the expansion. The optimal-truncation floor of the
// asymptotic series is ~exp(-2 pi a_eff), so the anchor scales with the
// precision: a_eff >= max(s, 64, bits/5).
inline Real inverse_power_tail(std::int64_t s, const Real& a) {
    using mp::pow;
    if (s < 2) throw std::invalid_argument("inverse_power_tail requires s >= 2");
    if (a <= 0) throw std::invalid_argument("inverse_power_tail requires a > 0");

    const unsigned bits = active_precision_bits() ? active_precision_bits() : 512;
    Real direct = 0;
    Real a_eff = a;
    const Real target(static_cast<double>(std::max<std::int64_t>({s, 64, static_cast<std::int64_t>(bits) / 5})));
    while (a_eff < target) {
        direct += pow(a_eff, -static_cast<long>(s));
        a_eff += 1;
    }

    Real inv_a2 = 1 / (a_eff * a_eff);
    Real tail = pow(a_eff, 1 - static_cast<long>(s)) / (s - 1) + pow(a_eff, -static_cast<long>(s)) / 2;
    Real pochhammer = Real(s);          // (s)_1
    Real fct = 2;                       // (2i)! at i = 1
    Real a_pow = pow(a_eff, -static_cast<long>(s) - 1);
    const Real cut = mp::abs(tail) * pow(Real(2), -static_cast<long>(bits) - 8);
    Real prev_mag = -1;
    for (std::size_t i = 1; i <= 512; ++i) {
        Real term = to_real(detail::bernoulli_even(i)) / fct * pochhammer * a_pow;
        Real mag = mp::abs(term);
        if (prev_mag >= 0 && mag > prev_mag) break; // asymptotic series turned
        tail += term;
        prev_mag = mag;
        if (mag < cut) break;
        pochhammer *= (s + 2 * static_cast<long>(i) - 1) * Real(s + 2 * static_cast<long>(i));
        fct *= (2 * static_cast<long>(i) + 1) * Real(2 * static_cast<long>(i) + 2);
        a_pow *= inv_a2;
    }
    return direct + tail;
}

// sum_{k > K} k^(-s), cached per (s, K, precision).
inline Real zeta_tail(std::int64_t s, std::int64_t K) {
    static std::mutex mtx;
    static std::map<std::tuple<std::int64_t, std::int64_t, unsigned>, Real> cache;
    const unsigned bits = active_precision_bits() ? active_precision_bits() : 512;
    {
        std::lock_guard lk(mtx);
        auto it = cache.find({s, K, bits});
        if (it != cache.end()) return it->second;
    }
    Real v = inverse_power_tail(s, Real(static_cast<long>(K) + 1));
    std::lock_guard lk(mtx);
    return cache.emplace(std::make_tuple(s, K, bits), v).first->second;
}

} // namespace biortho
