// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are fixed here, not calibrated at run time.

#include <chrono>
#include <sstream>
#include <cstdio>
#include <vector>

#include "biortho/biortho.hpp"

using namespace biortho;

namespace {

int failures = 0;

void report(int idx, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", idx, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 1: grouped-family class parameters, exact arithmetic ------

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    for (std::int64_t m : {2, 3, 4}) {
        auto seq = gen_grouped(m);
        auto rep = check_class(seq, *seq.params(), 500);
        if (!rep.exact_arithmetic || !rep.all_pass()) {
            pass = false;
            detail += "m=" + std::to_string(m) + " membership check failed; ";
            continue;
        }
        ClassParameters smaller = *seq.params();
        smaller.q = m - 1;
        auto rep_q = check_class(seq, smaller, 500);
        if (rep_q.h5.status != CheckStatus::Fail || !rep_q.h5.witness) {
            pass = false;
            detail += "m=" + std::to_string(m) + " q=m-1 did not fail (H5); ";
        }
    }
    double secs = seconds_since(t0);
    if (secs >= 60.0) {
        pass = false;
        detail += "runtime " + std::to_string(secs) + "s >= 60s";
    }
    report(1, pass, "grouped class parameters certified exactly for m in {2,3,4}, q=m-1 refuted",
           detail.empty() ? std::to_string(secs) + "s" : detail);
}

// ---- criterion 2: counting formula against brute enumeration -------------

void criterion_2() {
    bool pass = true;
    std::string detail;
    std::int64_t mismatches = 0;
    for (std::int64_t m : {2, 3, 4}) {
        auto seq = gen_grouped(m);
        for (int i = 0; i < 2000; ++i) {
            Rational r = 1 + Rational(199 * i, 1999);
            std::int64_t brute = counting_function_exact(seq, r);
            if (grouped_counting_formula(m, r) != brute) ++mismatches;
        }
    }
    if (mismatches != 0) {
        pass = false;
        detail = std::to_string(mismatches) + " mismatches";
    }
    report(2, pass, "grouped counting formula equals enumeration on 3 x 2000 rational grid points", detail);
}

// ---- criteria 3, 4, 7: optimal-family certificates and the fitted C ------

struct PlateauRecord {
    std::int64_t k;
    Real t_final;
    Real norm;
    std::int64_t m_star;
    Real p_k;
    Real lam_abs;
};

void criteria_3_4_7() {
    auto t0 = std::chrono::steady_clock::now();
    auto seq = gen_perturbed(Rational(1, 2));
    const ClassParameters& cp = *seq.params();
    const std::int64_t q = cp.q;
    const Real delta = 1;
    PrecisionContext ctx512{512};
    const std::int64_t m_cap = 80;

    std::vector<PlateauRecord> records;
    bool pass3 = true, pass4 = true;
    int bound_violations = 0, m_stability_fails = 0, precision_fails = 0;
    std::string det4;
    double worst_m_drift = 0;
    const Real rtol = Real(1) / Real("2e6"); // per 5-step; two steps ~ the 1e-6 M->M+10 clause

    for (double t_d : {0.5, 1.0}) {
        Real t_final(t_d);
        // One inverse diagonal per (T, M) covers every k.
        std::vector<std::vector<Real>> norms_by_m; // index 0 at M = q + 3
        {
            PrecisionScope scope(ctx512);
            for (std::int64_t m = q + 3; m <= m_cap; ++m) {
                GramSystem gram(seq, t_final, m, ctx512);
                std::vector<Real> norms;
                for (auto& d : gram.inverse_diagonal()) norms.push_back(mp::sqrt(d));
                norms_by_m.push_back(std::move(norms));
            }
        }
        auto norm_at = [&](std::int64_t k, std::int64_t m) -> const Real& {
            return norms_by_m[static_cast<std::size_t>(m - (q + 3))][static_cast<std::size_t>(k - 1)];
        };

        for (std::int64_t k = 3; k <= 12; ++k) {
            // plateau scan: two consecutive steps of 5 with relative change < rtol
            std::int64_t m_star = 0;
            bool plateaued = false;
            {
                int stable = 0;
                Real prev = -1;
                for (std::int64_t m = std::max<std::int64_t>(k, q + 3); m <= m_cap; m += 5) {
                    const Real& nrm = norm_at(k, m);
                    if (prev >= 0) stable = (mp::abs(nrm - prev) / nrm < rtol) ? stable + 1 : 0;
                    prev = nrm;
                    m_star = m;
                    if (stable >= 2) {
                        plateaued = true;
                        break;
                    }
                }
            }
            PrecisionScope scope(ctx512);
            Real norm = norm_at(k, m_star);
            Real p_k = condensation_product(seq, k, q);
            auto lb = evaluate_lower_bounds(k, q, to_real(cp.nu), delta, seq, t_final);
            // The truncated norm is a certified lower approximant of ||s_k||,
            // so norm >= lower certifies the theorem-level inequality.
            if (!(norm >= lb.combined)) ++bound_violations;
            // M -> M + 10 stability at 1e-6, as stated.
            Real norm_m10 = norm_at(k, std::min(m_star + 10, m_cap));
            double drift = static_cast<double>(mp::abs(norm_m10 - norm) / norm);
            worst_m_drift = std::max(worst_m_drift, drift);
            if (!plateaued || !(drift < 1e-6)) ++m_stability_fails;
            records.push_back({k, t_final, norm, m_star, p_k, abs(seq.term(k))});

            // criterion 4: E_k P_k <= ||s_k^{(M)}|| for every M >= k + q
            for (std::int64_t m = std::max(k + q, q + 3); m <= m_cap; ++m) {
                if (!(norm_at(k, m) >= lb.e_k * p_k * (1 - Real(1) / Real("1e40")))) {
                    pass4 = false;
                    det4 += "k=" + std::to_string(k) + " M=" + std::to_string(m) + "; ";
                }
            }
        }
    }

    // 512 -> 1024 stability at the recorded truncations
    PrecisionContext ctx1024{1024};
    for (auto& rec : records) {
        GramSystem gram(seq, rec.t_final, rec.m_star, ctx1024);
        PrecisionScope scope(ctx1024);
        Real hi = mp::sqrt(gram.inverse_diagonal()[static_cast<std::size_t>(rec.k - 1)]);
        if (!(mp::abs(hi - rec.norm) / hi < Real(1) / Real("1e6"))) ++precision_fails;
    }

    double secs = seconds_since(t0);
    bool runtime_ok = secs < 600.0;
    pass3 = bound_violations == 0 && m_stability_fails == 0 && precision_fails == 0 && runtime_ok;
    std::ostringstream det3;
    det3 << "lower-bound violations=" << bound_violations << ", 512->1024 fails=" << precision_fails
         << ", M->M+10 1e-6 stability fails=" << m_stability_fails << "/" << records.size()
         << " (worst drift " << worst_m_drift
         << "; truncated norms converge only algebraically in M -- see decisions ledger), runtime "
         << static_cast<int>(secs) << "s";
    report(3, pass3, "perturbed optimal-family certificates (bound, precision stability, M-stability)",
           det3.str());
    report(4, pass4, "truncated families dominate E_k P_k at every admissible truncation", det4);

    // criterion 7: fitted C stable across disjoint half-grids
    {
        PrecisionScope scope(PrecisionContext{512});
        std::vector<BoundObservation> all, half_a, half_b;
        for (std::size_t i = 0; i < records.size(); ++i) {
            BoundObservation o{records[i].k, records[i].t_final, records[i].norm, records[i].p_k,
                               records[i].lam_abs};
            all.push_back(o);
            (i % 2 == 0 ? half_a : half_b).push_back(o);
        }
        auto fa = fit_constant_C(half_a, cp, true);
        auto fb = fit_constant_C(half_b, cp, true);
        auto fc = fit_constant_C(all, cp, true);
        bool pass7 = is_finite(fc.c_fit) && fc.c_fit > 0;
        Real rel = mp::abs(fa.c_fit - fb.c_fit) / (fa.c_fit > fb.c_fit ? fa.c_fit : fb.c_fit);
        if (!(rel <= Real(2) / 10)) pass7 = false;
        report(7, pass7, "fitted upper-form constant finite and stable across half-grids",
               "C=" + format_real(fc.c_fit, 6) + " split-drift=" + format_real(rel, 4));
    }
}

// ---- criterion 5: Paley-Wiener family ------------------------------------

void criterion_5() {
    auto t0 = std::chrono::steady_clock::now();
    PrecisionContext ctx{192};
    auto seq = gen_quadratic(1, 0);
    Real t_final = 1;
    bool pass = true;
    std::string detail;
    SynthesisOptions sopt;
    sopt.residual_n_max = 10;

    std::vector<Real> qk_norms;
    {
        PrecisionScope scope(ctx);
        auto cfg = MollifierConfig::make(t_final, choose_N(t_final, to_real(seq.params()->p2)));
        for (std::int64_t k = 1; k <= 6; ++k) {
            auto fam = synthesize_qk(seq, k, t_final, cfg, sopt, ctx);
            if (!(fam.residual_max < Real(1) / Real("1e6"))) {
                pass = false;
                detail += "k=" + std::to_string(k) + " residual=" + format_real(fam.residual_max, 3) + "; ";
            }
            Real plancherel = mp::abs(fam.norm_time - fam.norm_freq) / fam.norm_freq;
            if (!(plancherel < Real(1) / Real("1e6"))) {
                pass = false;
                detail += "k=" + std::to_string(k) + " plancherel=" + format_real(plancherel, 3) + "; ";
            }
            qk_norms.push_back(fam.norm_time);
        }
    }
    // optimality against the truncated minimal families, M <= 60
    for (std::int64_t m = 5; m <= 60; m += 5) {
        auto fam = minimal_family(seq, m, t_final, ctx);
        for (std::int64_t k = 1; k <= 6; ++k) {
            if (!(qk_norms[static_cast<std::size_t>(k - 1)] >= fam.norms[static_cast<std::size_t>(k - 1)])) {
                pass = false;
                detail += "optimality k=" + std::to_string(k) + " M=" + std::to_string(m) + "; ";
            }
        }
    }
    report(5, pass, "synthesized family biorthogonal (<=1e-6), Plancherel-consistent, dominates minimal norms",
           detail.empty() ? std::to_string(seconds_since(t0)) + "s" : detail);
}

// ---- criterion 6: Weierstrass product oracle ------------------------------

void criterion_6() {
    PrecisionContext ctx{512};
    PrecisionScope scope(ctx);
    auto seq = gen_quadratic(1, 0);
    bool pass = true;
    std::string detail;

    Real tol = Real(1) / Real("1e30");
    auto f1_at_1 = product_fk(seq, 1, Complex(Real(1)), tol, ctx);
    Real err = mp::abs(f1_at_1.value.re - Real(1) / 2);
    if (!(err < Real(1) / Real("1e20"))) {
        pass = false;
        detail += "f_1(1) error " + format_real(err, 3) + "; ";
    }

    // 50-point grid against the sine closed form, within the reported bound
    Real pi = pi_value();
    std::int64_t checked = 0;
    for (std::int64_t k : {1, 2}) {
        for (int i = 0; i < 25; ++i) {
            Real z = Real(-40) + Real(i) * Real(16) / 5; // -40 .. 36.8
            if (z > 0) {
                Real s = mp::sqrt(z);
                if (mp::abs(s - mp::floor(s + Real(1) / 2)) < Real(1) / 50) continue; // near a zero
            }
            auto got = product_fk(seq, k, Complex(z), tol, ctx);
            Real full;
            if (z == 0) full = 1;
            else if (z > 0) {
                Real s = mp::sqrt(z);
                full = mp::sin(pi * s) / (pi * s);
            } else {
                Real s = mp::sqrt(-z);
                full = mp::sinh(pi * s) / (pi * s);
            }
            Real want = full / (1 - z / (Real(static_cast<long>(k)) * k));
            Real allowed = mp::abs(want) * (mp::exp(got.log_tail_bound) - 1) + tol * (1 + mp::abs(want));
            if (!(mp::abs(got.value.re - want) <= allowed)) {
                pass = false;
                detail += "grid z=" + std::to_string(static_cast<double>(z)) + "; ";
            }
            ++checked;
        }
    }
    if (checked < 40) {
        pass = false;
        detail += "only " + std::to_string(checked) + " usable grid points; ";
    }
    report(6, pass, "product matches sin(pi sqrt z)/(pi sqrt z) closed form; f_1(1)=1/2 to 1e-20", detail);
}

// ---- criterion 8: moment identities ---------------------------------------

void criterion_8() {
    PrecisionContext ctx{512};
    PrecisionScope scope(ctx);
    bool pass = true;
    std::string detail;

    std::vector<EigenSequence> catalog = {gen_quadratic(1, 0), gen_grouped(2), gen_grouped(3), gen_grouped(4),
                                          gen_dirichlet_pair(2), gen_perturbed(Rational(1, 2)),
                                          gen_phase_field(1, 1, 1, 64).sequence};
    for (auto& seq : catalog) {
        for (std::int64_t m = 1; m <= 12; ++m) {
            auto a = guichal_coefficients(seq, m + 1);
            std::vector<Complex> terms;
            for (std::int64_t i = 1; i <= m + 1; ++i) terms.push_back(seq.term(i));
            // scale: largest intermediate magnitude of the top moment sum
            Real scale = 0;
            for (std::int64_t n = 0; n <= m; ++n) {
                Real mag = abs(a[static_cast<std::size_t>(n)]) * mp::pow(abs(terms[static_cast<std::size_t>(n)]), static_cast<long>(m));
                if (mag > scale) scale = mag;
            }
            if (scale < 1) scale = 1;
            Real resid = guichal_moment_residual(a, terms);
            if (!(resid / scale < Real(1) / Real("1e15"))) {
                pass = false;
                detail += seq.label() + " M=" + std::to_string(m) + "; ";
            }
        }
    }

    // exact rational verification on the squares
    auto squares = gen_quadratic(1, 0);
    for (std::int64_t m = 1; m <= 12; ++m) {
        auto a = guichal_coefficients_exact(squares, m + 1);
        for (std::int64_t j = 0; j <= m; ++j) {
            Rational sum = 0;
            for (std::int64_t n = 0; n <= m; ++n) {
                Rational pw = 1;
                Rational lam = -squares.exact_term(n + 1);
                for (std::int64_t i = 0; i < j; ++i) pw *= lam;
                sum += a[static_cast<std::size_t>(n)] * pw;
            }
            Rational want = (j == m) ? 1 : 0;
            if (sum != want) {
                pass = false;
                detail += "exact M=" + std::to_string(m) + " j=" + std::to_string(j) + "; ";
            }
        }
    }
    report(8, pass, "Guichal moment identities hold to 1e-15 (and exactly on the squares)", detail);
}

// ---- criterion 9: cost monotonicity and scaling bands ----------------------

void criterion_9() {
    auto t0 = std::chrono::steady_clock::now();
    PrecisionContext ctx{512};
    bool pass = true;
    std::string detail;
    // The certified truncation is fixed across each grid: K_M(T) at fixed M
    // is nonincreasing in T, and M = 64 has every probe mode of the grid well
    // inside (k0 <= 7 for gamma <= 0.75, T >= 0.3).
    const std::int64_t m_fixed = 64;

    // monotone in T at the common truncation
    {
        auto seq = gen_perturbed(Rational(3, 4));
        Real prev = std::numeric_limits<Real>::infinity();
        for (int i = 3; i <= 10; ++i) {
            Real t_final = Real(i) / 10;
            ControlProblem problem{seq, Real(1), Real(1), t_final, 0};
            auto v = control_cost_truncated(problem, m_fixed, ctx);
            if (!(v.k_value <= prev)) {
                pass = false;
                detail += "monotonicity at T=" + std::to_string(i / 10.0) + "; ";
            }
            prev = v.k_value;
        }
    }

    // fitted slopes ordered in gamma: positive against each gamma's own
    // condensation abscissa, and compared on the common (gamma = 0.75)
    // abscissa so the ordering measures the data rather than the axis change
    {
        std::vector<Real> grid;
        for (int i = 3; i <= 10; ++i) grid.push_back(Real(i) / 10);
        auto rep60 = cost_scaling_experiment(Rational(3, 5), grid, ctx, Real(1) / 50, 200, m_fixed);
        auto rep75 = cost_scaling_experiment(Rational(3, 4), grid, ctx, Real(1) / 50, 200, m_fixed);
        if (!(rep75.fit_scaled.slope > 0) || !(rep60.fit_scaled.slope > 0)) {
            pass = false;
            detail += "scaled slope nonpositive; ";
        }
        auto slope_common = [](const CostReport& r, double expo) {
            std::vector<std::pair<double, double>> pts;
            for (auto& pt : r.points) pts.emplace_back(std::pow(pt.t, -expo), pt.log_k);
            return fit_affine(pts).slope;
        };
        double expo = 3.0; // 0.75/(1-0.75)
        if (!(slope_common(rep75, expo) > slope_common(rep60, expo))) {
            pass = false;
            detail += "slope(0.75) <= slope(0.6) on the common abscissa; ";
        }
        // cost ratio between gammas nondecreasing as T decreases
        for (std::size_t i = 1; i < rep60.points.size(); ++i) {
            double d_prev = rep75.points[i - 1].log_k - rep60.points[i - 1].log_k;
            double d_here = rep75.points[i].log_k - rep60.points[i].log_k;
            if (!(d_prev > d_here - 1e-9)) {
                pass = false;
                detail += "ratio monotonicity at grid index " + std::to_string(i) + "; ";
            }
        }
    }

    // resonant phase-field band
    {
        std::vector<Real> grid;
        for (int i = 2; i <= 10; ++i) grid.push_back(Real(i) / 10);
        auto rep = phase_field_cost(1, 1, 1, grid, ctx, Real(1) / 50, 200, m_fixed);
        if (!(rep.band_min > 0)) {
            pass = false;
            detail += "phase-field band min nonpositive; ";
        }
        if (!(rep.band_max <= 4 * rep.band_min)) {
            pass = false;
            detail += "phase-field band ratio " + std::to_string(rep.band_max / rep.band_min) + " > 4; ";
        }
    }
    report(9, pass, "cost monotone in T; gamma-ordered scaling slopes; phase-field T log K band bounded",
           detail.empty() ? std::to_string(seconds_since(t0)) + "s" : detail);
}

// ---- criterion 10: lemma suite --------------------------------------------

void criterion_10() {
    PrecisionContext ctx{256};
    PrecisionScope scope(ctx);
    bool pass = true;
    std::string detail;

    // integral bound
    for (int n_pow = 1; n_pow <= 20; ++n_pow) {
        for (double lam : {0.1, 1.0, 10.0}) {
            for (double t_d : {0.5, 1.0, 2.0}) {
                Real t_final(t_d);
                auto q = integrate(
                    [&](const Real& t) {
                        Real p = 1;
                        for (int i = 0; i < n_pow; ++i) p *= t;
                        return Complex(p * mp::exp(-Real(lam) * t));
                    },
                    Real(0), t_final, 8, 16);
                Real bound = 2 * mp::pow(t_final, n_pow + 1) / (n_pow + 1 + Real(lam) * t_final);
                if (!(q.value.re <= bound)) {
                    pass = false;
                    detail += "integral N=" + std::to_string(n_pow) + "; ";
                }
            }
        }
    }

    // exponential tail bound with exact partial sums
    for (int n_low = 1; n_low <= 15; ++n_low) {
        for (double x_d : {0.5, 1.0, 2.0, 3.5, 5.0}) {
            Real x(x_d);
            Real lhs = mp::pow(x / (1 + x), n_low) * mp::exp(x) / factorial(n_low);
            Real head = 0, p = 1;
            for (int n = 0; n < n_low; ++n) {
                head += p / factorial(n);
                p *= x;
            }
            if (!(lhs <= mp::exp(x) - head)) {
                pass = false;
                detail += "tail N=" + std::to_string(n_low) + "; ";
            }
        }
    }

    // probe-mode inequality on admissible grids
    for (double g : {0.6, 0.75, 0.9}) {
        Real gamma(g);
        Real tau0 = gamma * mp::pow((mp::sqrt(Real(2)) - 1) / mp::sqrt(Real(2)), 2 * (1 - gamma));
        for (int i = 1; i <= 8; ++i) {
            Real t_final = tau0 * i / 10;
            auto probe = probe_mode(gamma, t_final);
            if (!probe.feasible || !probe.k0) {
                pass = false;
                detail += "probe infeasible gamma=" + std::to_string(g) + "; ";
                continue;
            }
            Real k0(static_cast<long>(*probe.k0));
            Real lhs = -k0 * k0 * t_final + mp::pow(k0, 2 * gamma);
            Real rhs = (1 + mp::log(Real(2))) / (2 * mp::exp(Real(1))) * (1 - gamma) /
                       mp::pow(t_final, gamma / (1 - gamma));
            if (!(lhs >= rhs)) {
                pass = false;
                detail += "probe gamma=" + std::to_string(g) + " i=" + std::to_string(i) + "; ";
            }
        }
    }
    report(10, pass, "distance-chain lemmas and the probe-mode inequality verified on the stated grids", detail);
}

} // namespace

int main() {
    std::printf("biortho acceptance suite\n");
    criterion_1();
    criterion_2();
    criteria_3_4_7();
    criterion_5();
    criterion_6();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%s (%d failures)\n", failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT", failures);
    return failures == 0 ? 0 : 1;
}
