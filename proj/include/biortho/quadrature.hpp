#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "biortho/precision.hpp"

namespace biortho {

struct QuadratureNodes {
    std::vector<Real> x; // nodes on (-1, 1)
    std::vector<Real> w; // weights
};

namespace detail {

// Legendre P_n and P_n' by recurrence.
inline void legendre_pair(const Real& x, int n, Real& p, Real& dp) {
    Real pkm1 = 1, pk = x;
    if (n == 0) { p = 1; dp = 0; return; }
    for (int k = 1; k < n; ++k) {
        Real pkp1 = ((2 * k + 1) * x * pk - k * pkm1) / (k + 1);
        pkm1 = pk;
        pk = pkp1;
    }
    p = pk;
    dp = n * (x * pk - pkm1) / (x * x - 1);
}

inline std::shared_ptr<const QuadratureNodes> make_gauss_legendre(int n) {
    auto out = std::make_shared<QuadratureNodes>();
    out->x.resize(n);
    out->w.resize(n);
    const unsigned bits = active_precision_bits() ? active_precision_bits() : 512;
    const Real tol = mp::pow(Real(2), -static_cast<long>(bits) + 4);
    const double pi_d = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real x(std::cos(pi_d * (i + 0.75) / (n + 0.5)));
        Real p, dp;
        for (int it = 0; it < 200; ++it) {
            legendre_pair(x, n, p, dp);
            Real dx = p / dp;
            x -= dx;
            if (mp::abs(dx) < tol) break;
        }
        legendre_pair(x, n, p, dp);
        Real w = 2 / ((1 - x * x) * dp * dp);
        out->x[i] = -x;
        out->w[i] = w;
        out->x[n - 1 - i] = x;
        out->w[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        Real x = 0, p, dp;
        legendre_pair(x, n, p, dp);
        out->x[n / 2] = 0;
        out->w[n / 2] = 2 / (dp * dp);
    }
    return out;
}

} // namespace detail

// Node cache keyed by (node count, precision bits).
inline std::shared_ptr<const QuadratureNodes> gauss_legendre_nodes(int n) {
    static std::mutex mtx;
    static std::map<std::pair<int, unsigned>, std::shared_ptr<const QuadratureNodes>> cache;
    const unsigned bits = active_precision_bits() ? active_precision_bits() : 512;
    {
        std::lock_guard lk(mtx);
        auto it = cache.find({n, bits});
        if (it != cache.end()) return it->second;
    }
    auto nodes = detail::make_gauss_legendre(n);
    std::lock_guard lk(mtx);
    return cache.emplace(std::make_pair(n, bits), nodes).first->second;
}

struct QuadratureResult {
    Complex value;
    Real error_estimate; // |value - value at doubled node count|
};

// Composite Gauss-Legendre over [a, b] split into `panels` equal panels.
// The returned value uses 2*nodes_per_panel points; the error estimate is the
// difference against the nodes_per_panel run.
inline QuadratureResult integrate(const std::function<Complex(const Real&)>& f, const Real& a, const Real& b,
                                  int panels, int nodes_per_panel) {
    if (!(a < b)) throw std::invalid_argument("integrate requires a < b");
    if (panels < 1 || nodes_per_panel < 1) throw std::invalid_argument("integrate requires positive panel/node counts");

    auto run = [&](int n) {
        auto nodes = gauss_legendre_nodes(n);
        Real h = (b - a) / panels;
        Complex total;
        for (int p = 0; p < panels; ++p) {
            Real c = a + h * p + h / 2;
            Real half = h / 2;
            Complex acc;
            for (int i = 0; i < n; ++i) {
                Real t = c + half * nodes->x[i];
                Complex v = f(t);
                if (!is_finite(v)) throw NonFinite("integrand at t = " + format_real(t, 20));
                acc += nodes->w[i] * v;
            }
            total += half * acc;
        }
        return total;
    };

    Complex coarse = run(nodes_per_panel);
    Complex fine = run(2 * nodes_per_panel);
    return {fine, abs(fine - coarse)};
}

inline QuadratureResult integrate_real(const std::function<Real(const Real&)>& f, const Real& a, const Real& b,
                                       int panels, int nodes_per_panel) {
    return integrate([&](const Real& t) { return Complex(f(t)); }, a, b, panels, nodes_per_panel);
}

} // namespace biortho
