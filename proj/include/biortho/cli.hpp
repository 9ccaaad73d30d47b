#pragma once

// Batch front-end: JSON experiment configs in, CSV/JSON/SVG artifacts out,
// every run echoed into a manifest with full provenance.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include "biortho/biortho.hpp"
#include "biortho/serialize.hpp"

namespace biortho::cli {

namespace fs = std::filesystem;

struct RunOptions {
    fs::path out_dir = "out";
    std::optional<unsigned> precision_override;
    std::optional<int> threads_override;
};

namespace detail {

inline unsigned precision_of(const json& cfg, const RunOptions& opt) {
    if (opt.precision_override) return *opt.precision_override;
    if (cfg.contains("precision_bits")) return cfg.at("precision_bits").get<unsigned>();
    return 512;
}

inline std::string hash_key(const json& j) {
    // FNV-1a over the canonical dump; cache filenames only.
    std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ComputeFailed("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

inline void write_manifest(const fs::path& dir, const json& resolved) {
    write_json(dir / "manifest.json", resolved);
}

inline std::vector<Real> parse_t_grid(const json& cfg) {
    std::vector<Real> grid;
    if (!cfg.contains("T_grid") || !cfg.at("T_grid").is_array() || cfg.at("T_grid").empty())
        throw ConfigInvalid("'T_grid' must be a nonempty array");
    for (const auto& t : cfg.at("T_grid")) grid.push_back(to_real(Rational(t.get<double>())));
    return grid;
}

inline const char* status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "PASS(prefix-verified)";
        case CheckStatus::Fail: return "FAIL";
        default: return "SKIPPED";
    }
}

} // namespace detail

// ---- classify ----------------------------------------------------------

inline int run_classify(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg, {"command", "sequence", "prefix", "precision_bits", "q_counterexample"},
                         "classify config");
    auto spec = parse_sequence_spec(cfg.at("sequence"));
    std::int64_t prefix = cfg.contains("prefix") ? cfg.at("prefix").get<std::int64_t>() : 500;
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};

    EigenSequence seq = make_sequence(spec);
    if (!seq.params()) throw ConfigInvalid("sequence kind '" + spec.kind + "' carries no class parameters");
    auto rep = check_class(seq, *seq.params(), prefix, ctx);

    CsvWriter csv(bits);
    csv.header({"hypothesis", "status", "witness_k", "witness_n", "witness_r", "margin"});
    auto emit = [&](const char* name, const HypothesisResult& h) {
        auto row = csv.row();
        row.add(std::string(name)).add(std::string(detail::status_name(h.status)));
        row.add(h.witness ? h.witness->k : 0).add(h.witness ? h.witness->n : 0);
        row.add(h.witness ? h.witness->r : 0.0).add(h.margin);
        csv.push(row);
    };
    emit("H1", rep.h1);
    emit("H2", rep.h2);
    emit("H3", rep.h3);
    emit("H4", rep.h4);
    emit("H5", rep.h5);
    emit("H6", rep.h6);
    emit("item6", rep.item6);

    // the q-1 counterexample scan requested for grouped-style sequences
    json extra = json::object();
    if (cfg.contains("q_counterexample") && cfg.at("q_counterexample").get<bool>()) {
        ClassParameters smaller = *seq.params();
        if (smaller.q > 1) {
            smaller.q -= 1;
            auto rep_q = check_class(seq, smaller, prefix, ctx);
            auto row = csv.row();
            row.add(std::string("H5(q-1)")).add(std::string(detail::status_name(rep_q.h5.status)));
            row.add(rep_q.h5.witness ? rep_q.h5.witness->k : 0).add(rep_q.h5.witness ? rep_q.h5.witness->n : 0);
            row.add(0.0).add(rep_q.h5.margin);
            csv.push(row);
            extra["q_minus_one_h5"] = detail::status_name(rep_q.h5.status);
        }
    }

    fs::create_directories(opt.out_dir);
    csv.write((opt.out_dir / "results.csv").string());

    json resolved = {{"command", "classify"},
                     {"sequence", spec.to_json()},
                     {"prefix", prefix},
                     {"precision_bits", bits},
                     {"exact_arithmetic", rep.exact_arithmetic},
                     {"counting_margin", rep.counting_margin},
                     {"fitted_condi_c", rep.fitted_condi_c},
                     {"all_pass", rep.all_pass()}};
    if (!extra.empty()) resolved["extra"] = extra;
    detail::write_manifest(opt.out_dir, resolved);
    return rep.all_pass() ? 0 : 0; // failures are report entries, not errors
}

// ---- biortho ------------------------------------------------------------

inline int run_biortho(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg, {"command", "sequence", "T", "k_max", "rtol", "M_max", "precision_bits"},
                         "biortho config");
    auto spec = parse_sequence_spec(cfg.at("sequence"));
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};
    Real t_final = to_real(Rational(cfg.contains("T") ? cfg.at("T").get<double>() : 1.0));
    std::int64_t k_max = cfg.contains("k_max") ? cfg.at("k_max").get<std::int64_t>() : 10;
    Real rtol = cfg.contains("rtol") ? Real(cfg.at("rtol").get<double>()) : Real(1) / 20;
    std::int64_t m_max = cfg.contains("M_max") ? cfg.at("M_max").get<std::int64_t>() : 200;

    EigenSequence seq = make_sequence(spec);
    const auto* params = seq.params() ? &*seq.params() : nullptr;

    CsvWriter csv(bits);
    csv.header({"k", "T", "M_star", "norm", "distance", "P_k", "lower_bound", "certified", "lower_satisfied"});
    json records = json::array();
    double residual_max = 0;
    for (std::int64_t k = 1; k <= k_max; ++k) {
        auto conv = converge_truncation(seq, k, t_final, rtol, ctx, m_max);
        residual_max = std::max(residual_max, static_cast<double>(conv.residual_max));
        Real p_k = 1, lower = 0;
        bool certified = false, satisfied = true;
        if (params) {
            PrecisionScope scope(ctx);
            auto lb = evaluate_lower_bounds(k, params->q, to_real(params->nu), to_real(params->delta), seq,
                                            t_final);
            p_k = lb.p_k;
            lower = lb.combined;
            certified = k >= 3;
            satisfied = conv.norm >= lower * (1 - Real(1) / Real("1e30"));
        }
        auto row = csv.row();
        row.add(k).add(t_final).add(conv.m_star).add(conv.norm).add(1 / conv.norm).add(p_k).add(lower);
        row.add(std::string(certified ? "yes" : "raw"));
        row.add(std::string(satisfied ? "yes" : "VIOLATED"));
        csv.push(row);
        records.push_back({{"k", k},
                           {"M_star", conv.m_star},
                           {"norm", static_cast<double>(conv.norm)},
                           {"distance", static_cast<double>(1 / conv.norm)}});
    }

    fs::create_directories(opt.out_dir);
    csv.write((opt.out_dir / "results.csv").string());
    json resolved = {{"command", "biortho"}, {"sequence", spec.to_json()},
                     {"T", static_cast<double>(t_final)}, {"k_max", k_max},
                     {"rtol", static_cast<double>(rtol)}, {"M_max", m_max},
                     {"precision_bits", bits}, {"residual_max", residual_max},
                     {"records", records}};
    detail::write_manifest(opt.out_dir, resolved);
    return 0;
}

// ---- pw -----------------------------------------------------------------

inline int run_pw(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg,
                         {"command", "sequence", "T", "k_max", "residual_n_max", "theta0", "theta1", "theta2",
                          "precision_bits"},
                         "pw config");
    auto spec = parse_sequence_spec(cfg.at("sequence"));
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};
    Real t_final = to_real(Rational(cfg.contains("T") ? cfg.at("T").get<double>() : 1.0));
    std::int64_t k_max = cfg.contains("k_max") ? cfg.at("k_max").get<std::int64_t>() : 4;
    SynthesisOptions sopt;
    if (cfg.contains("residual_n_max")) sopt.residual_n_max = cfg.at("residual_n_max").get<std::int64_t>();
    double th0 = cfg.contains("theta0") ? cfg.at("theta0").get<double>() : 1.0;
    double th1 = cfg.contains("theta1") ? cfg.at("theta1").get<double>() : 8.0;
    double th2 = cfg.contains("theta2") ? cfg.at("theta2").get<double>() : 2.0;

    EigenSequence seq = make_sequence(spec);
    if (!seq.params()) throw ConfigInvalid("pw command needs a sequence with class parameters");

    fs::create_directories(opt.out_dir);
    CsvWriter summary(bits);
    summary.header({"k", "window_x", "norm_time", "norm_freq", "residual_max", "decay_coefficient"});
    json meta = json::array();
    for (std::int64_t k = 1; k <= k_max; ++k) {
        PrecisionScope scope(ctx);
        auto cfg_m = MollifierConfig::make(t_final, choose_N(t_final, to_real(seq.params()->p2), th0, th1), th0,
                                           th1, th2);
        auto fam = synthesize_qk(seq, k, t_final, cfg_m, sopt, ctx);

        CsvWriter samples(bits);
        samples.header({"t", "re_qk", "im_qk"});
        for (auto& [t, v] : fam.samples) {
            auto row = samples.row();
            row.add(t).add(v.re).add(v.im);
            samples.push(row);
        }
        samples.write((opt.out_dir / ("qk_samples_" + std::to_string(k) + ".csv")).string());

        auto row = summary.row();
        row.add(k).add(fam.window_x).add(fam.norm_time).add(fam.norm_freq).add(fam.residual_max);
        row.add(fam.decay_coefficient);
        summary.push(row);

        json residuals = json::array();
        for (auto& r : fam.residual_row) residuals.push_back(static_cast<double>(abs(r)));
        meta.push_back({{"k", k},
                        {"N", fam.n_start},
                        {"theta0", fam.theta0},
                        {"theta1", fam.theta1},
                        {"theta2", fam.theta2},
                        {"window_x", static_cast<double>(fam.window_x)},
                        {"precision_bits", fam.precision_bits},
                        {"residuals", residuals}});
    }
    summary.write((opt.out_dir / "results.csv").string());
    json resolved = {{"command", "pw"}, {"sequence", spec.to_json()}, {"T", static_cast<double>(t_final)},
                     {"k_max", k_max}, {"precision_bits", bits}, {"theta0", th0}, {"theta1", th1},
                     {"theta2", th2}, {"families", meta}};
    detail::write_manifest(opt.out_dir, resolved);
    return 0;
}

// ---- bounds -------------------------------------------------------------

inline int run_bounds(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg, {"command", "sequence", "T_grid", "k_min", "k_max", "rtol", "M_max", "precision_bits"},
                         "bounds config");
    auto spec = parse_sequence_spec(cfg.at("sequence"));
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};
    auto t_grid = detail::parse_t_grid(cfg);
    std::int64_t k_min = cfg.contains("k_min") ? cfg.at("k_min").get<std::int64_t>() : 3;
    std::int64_t k_max = cfg.contains("k_max") ? cfg.at("k_max").get<std::int64_t>() : 12;
    Real rtol = cfg.contains("rtol") ? Real(cfg.at("rtol").get<double>()) : Real(1) / 20;
    std::int64_t m_max = cfg.contains("M_max") ? cfg.at("M_max").get<std::int64_t>() : 200;

    EigenSequence seq = make_sequence(spec);
    if (!seq.params()) throw ConfigInvalid("bounds command needs a sequence with class parameters");
    const ClassParameters& params = *seq.params();

    std::vector<BoundObservation> observations;
    std::vector<BoundReport> rows;
    for (const Real& t_final : t_grid) {
        for (std::int64_t k = k_min; k <= k_max; ++k) {
            auto conv = converge_truncation(seq, k, t_final, rtol, ctx, m_max);
            PrecisionScope scope(ctx);
            auto lb = evaluate_lower_bounds(k, params.q, to_real(params.nu), to_real(params.delta), seq, t_final);
            BoundReport r;
            r.k = k;
            r.t_final = static_cast<double>(t_final);
            r.p_k = static_cast<double>(lb.p_k);
            r.h1 = static_cast<double>(bound_h1(params, true));
            r.h2 = static_cast<double>(bound_h2(params, t_final, true));
            r.h3 = static_cast<double>(bound_h3(params, true));
            r.b_k = static_cast<double>(lb.b_k);
            r.e_k = static_cast<double>(lb.e_k);
            r.d_k = static_cast<double>(guichal_d_k(k, params.q, to_real(params.nu), to_real(params.delta),
                                                    abs(seq.term(1)), t_final, lb.p_k));
            r.lower = static_cast<double>(lb.combined);
            r.observed_norm = static_cast<double>(conv.norm);
            r.certified = k >= 3;
            rows.push_back(r);
            observations.push_back({k, t_final, conv.norm, lb.p_k, abs(seq.term(k))});
        }
    }

    Real c_fit;
    std::vector<Real> slack;
    {
        PrecisionScope scope(ctx);
        auto fit = fit_constant_C(observations, params, true);
        c_fit = fit.c_fit;
        slack = std::move(fit.slack);
    }

    CsvWriter csv(bits);
    csv.header({"k", "T", "P_k", "B_k", "E_k", "lower", "observed", "upper_form_at_C_fit", "slack", "certified"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        PrecisionScope scope(ctx);
        const auto& r = rows[i];
        Real upper = evaluate_upper_form(params, observations[i].lam_k_abs, observations[i].t_final,
                                         observations[i].p_k, c_fit, true);
        auto row = csv.row();
        row.add(r.k).add(r.t_final).add(r.p_k).add(r.b_k).add(r.e_k).add(r.lower).add(r.observed_norm);
        row.add(upper).add(slack[i]).add(std::string(r.certified ? "yes" : "raw"));
        csv.push(row);
    }
    fs::create_directories(opt.out_dir);
    csv.write((opt.out_dir / "results.csv").string());

    json report_rows = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        report_rows.push_back({{"k", r.k},
                               {"T", r.t_final},
                               {"P_k", r.p_k},
                               {"B_k", r.b_k},
                               {"E_k", r.e_k},
                               {"lower", r.lower},
                               {"observed", r.observed_norm},
                               {"slack", static_cast<double>(slack[i])},
                               {"certified", r.certified}});
    }
    json resolved = {{"command", "bounds"},     {"sequence", spec.to_json()},
                     {"k_min", k_min},          {"k_max", k_max},
                     {"precision_bits", bits},  {"rtol", static_cast<double>(rtol)},
                     {"M_max", m_max},          {"C_fit", static_cast<double>(c_fit)},
                     {"reports", report_rows}};
    json tg = json::array();
    for (auto& t : t_grid) tg.push_back(static_cast<double>(t));
    resolved["T_grid"] = tg;
    detail::write_manifest(opt.out_dir, resolved);
    return 0;
}

// ---- cost ---------------------------------------------------------------

inline int run_cost(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg,
                         {"command", "system", "gamma", "xi", "rho", "tau", "T_grid", "rtol", "M_max",
                          "M_fixed", "precision_bits"},
                         "cost config");
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};
    auto t_grid = detail::parse_t_grid(cfg);
    Real rtol = cfg.contains("rtol") ? Real(cfg.at("rtol").get<double>()) : Real(1) / 50;
    std::int64_t m_max = cfg.contains("M_max") ? cfg.at("M_max").get<std::int64_t>() : 200;
    // Default is a fixed certified truncation: the K_M exhaustion plateau is
    // out of reach at desk scale (see README); pass "M_fixed": 0 to request it.
    std::int64_t m_fixed = cfg.contains("M_fixed") ? cfg.at("M_fixed").get<std::int64_t>() : 64;
    std::string system = cfg.contains("system") ? cfg.at("system").get<std::string>() : "perturbed";

    CostReport rep;
    if (system == "perturbed") {
        if (!cfg.contains("gamma")) throw ConfigInvalid("perturbed system needs 'gamma'");
        rep = cost_scaling_experiment(Rational(cfg.at("gamma").get<double>()), t_grid, ctx, rtol, m_max,
                                      m_fixed);
    } else if (system == "phase_field") {
        for (const char* key : {"xi", "rho", "tau"})
            if (!cfg.contains(key)) throw ConfigInvalid(std::string("phase_field system needs '") + key + "'");
        rep = phase_field_cost(Rational(cfg.at("xi").get<double>()), Rational(cfg.at("rho").get<double>()),
                               Rational(cfg.at("tau").get<double>()), t_grid, ctx, rtol, m_max, m_fixed);
    } else {
        throw ConfigInvalid("unknown system '" + system + "' (perturbed | phase_field)");
    }

    fs::create_directories(opt.out_dir);
    CsvWriter csv(bits);
    csv.header({"T", "log_K", "M_star", "precision_bits", "probe_k0", "T_log_K"});
    for (auto& pt : rep.points) {
        auto row = csv.row();
        row.add(pt.t).add(pt.log_k).add(pt.m_star).add(static_cast<std::int64_t>(pt.precision_bits));
        row.add(pt.probe_k0 ? *pt.probe_k0 : 0).add(pt.t * pt.log_k);
        csv.push(row);
    }
    csv.write((opt.out_dir / "results.csv").string());

    CsvWriter p1(bits), p2(bits);
    p1.header({"inv_T", "log_K"});
    p2.header({"scaled_abscissa", "log_K"});
    std::vector<std::pair<double, double>> pts1, pts2;
    for (auto& pt : rep.points) {
        double x1 = 1.0 / pt.t;
        pts1.emplace_back(x1, pt.log_k);
        auto r1 = p1.row();
        r1.add(x1).add(pt.log_k);
        p1.push(r1);
        if (rep.gamma > 0) {
            double x2 = std::pow(pt.t, -rep.gamma / (1.0 - rep.gamma));
            pts2.emplace_back(x2, pt.log_k);
            auto r2 = p2.row();
            r2.add(x2).add(pt.log_k);
            p2.push(r2);
        }
    }
    p1.write((opt.out_dir / "plot_logK_vs_invT.csv").string());
    if (rep.gamma > 0) p2.write((opt.out_dir / "plot_logK_vs_scaled.csv").string());
    write_svg_polyline((opt.out_dir / "logK_vs_invT.svg").string(), pts1, "1/T", "log K");

    json resolved = {{"command", "cost"},
                     {"system", system},
                     {"precision_bits", bits},
                     {"rtol", static_cast<double>(rtol)},
                     {"M_max", m_max},
                     {"M_fixed", m_fixed},
                     {"fit_inv_T", {{"slope", rep.fit_inv_t.slope}, {"intercept", rep.fit_inv_t.intercept}}},
                     {"fit_scaled", {{"slope", rep.fit_scaled.slope}, {"intercept", rep.fit_scaled.intercept}}},
                     {"band_T_logK", {{"min", rep.band_min}, {"max", rep.band_max}}},
                     {"minimal_time", rep.minimal_time_estimate},
                     {"pk_fit_exponent", rep.pk_fit_exponent}};
    if (cfg.contains("gamma")) resolved["gamma"] = cfg.at("gamma");
    for (const char* key : {"xi", "rho", "tau"})
        if (cfg.contains(key)) resolved[key] = cfg.at(key);
    json tg = json::array();
    for (auto& t : t_grid) tg.push_back(static_cast<double>(t));
    resolved["T_grid"] = tg;
    detail::write_manifest(opt.out_dir, resolved);
    return 0;
}

// ---- sweep --------------------------------------------------------------

inline int run_sweep(const json& cfg, const RunOptions& opt) {
    biortho::detail::require_keys(cfg,
                         {"command", "gammas", "T_grid", "rtol", "M_max", "M_fixed", "precision_bits", "threads"},
                         "sweep config");
    if (!cfg.contains("gammas") || !cfg.at("gammas").is_array() || cfg.at("gammas").empty())
        throw ConfigInvalid("'gammas' must be a nonempty array");
    unsigned bits = detail::precision_of(cfg, opt);
    PrecisionContext ctx{bits};
    auto t_grid = detail::parse_t_grid(cfg);
    Real rtol = cfg.contains("rtol") ? Real(cfg.at("rtol").get<double>()) : Real(1) / 50;
    std::int64_t m_max = cfg.contains("M_max") ? cfg.at("M_max").get<std::int64_t>() : 200;
    std::int64_t m_fixed = cfg.contains("M_fixed") ? cfg.at("M_fixed").get<std::int64_t>() : 64;
    int threads = opt.threads_override ? *opt.threads_override
                                       : (cfg.contains("threads") ? cfg.at("threads").get<int>() : 2);

    struct Task {
        double gamma;
        double t;
        std::size_t index;
    };
    std::vector<Task> tasks;
    for (const auto& g : cfg.at("gammas"))
        for (const auto& t : cfg.at("T_grid")) tasks.push_back({g.get<double>(), t.get<double>(), tasks.size()});

    struct Result {
        bool failed = false;
        std::string error;
        double log_k = 0;
        std::int64_t m_star = 0;
        std::string cache_key;
    };
    std::vector<Result> results(tasks.size());

    fs::create_directories(opt.out_dir / "cache");
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            Result& res = results[task.index];
            json key = {{"kind", "perturbed_cost"},
                        {"gamma", task.gamma},
                        {"T", task.t},
                        {"M_max", m_max},
                        {"M_fixed", m_fixed},
                        {"precision_bits", bits}};
            res.cache_key = detail::hash_key(key);
            try {
                auto seq = gen_perturbed(Rational(task.gamma));
                ControlProblem problem{seq, Real(1), Real(1), to_real(Rational(task.t)), 0};
                if (m_fixed > 0) {
                    auto v = control_cost_truncated(problem, m_fixed, ctx);
                    res.log_k = static_cast<double>(mp::log(v.k_value));
                    res.m_star = m_fixed;
                } else {
                    auto plateau = control_cost(problem, rtol, ctx, m_max);
                    res.log_k = static_cast<double>(mp::log(plateau.k_value));
                    res.m_star = plateau.m_star;
                }
                json record = {{"key", key}, {"log_K", res.log_k}, {"M_star", res.m_star}};
                detail::write_json(opt.out_dir / "cache" / (res.cache_key + ".json"), record);
            } catch (const std::exception& e) {
                res.failed = true;
                res.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < std::max(1, threads); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    CsvWriter csv(bits);
    csv.header({"gamma", "T", "log_K", "M_star", "status", "cache_key"});
    bool any_failed = false;
    std::map<double, std::vector<std::pair<double, double>>> series;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& task = tasks[i];
        const Result& res = results[i];
        auto row = csv.row();
        row.add(task.gamma).add(task.t);
        if (res.failed) {
            any_failed = true;
            row.add(std::string("nan")).add(static_cast<std::int64_t>(0)).add("ERROR:" + res.error);
        } else {
            row.add(res.log_k).add(res.m_star).add(std::string("ok"));
            series[task.gamma].emplace_back(1.0 / task.t, res.log_k);
        }
        row.add(res.cache_key);
        csv.push(row);
    }
    csv.write((opt.out_dir / "results.csv").string());

    for (auto& [gamma, pts] : series) {
        auto sorted = pts;
        std::sort(sorted.begin(), sorted.end());
        std::ostringstream name;
        name << "sweep_gamma_" << gamma << ".svg";
        write_svg_polyline((opt.out_dir / name.str()).string(), sorted, "1/T", "log K");
    }

    json resolved = {{"command", "sweep"},   {"gammas", cfg.at("gammas")}, {"T_grid", cfg.at("T_grid")},
                     {"precision_bits", bits}, {"rtol", static_cast<double>(rtol)}, {"M_max", m_max},
                     {"M_fixed", m_fixed},   {"threads", threads},
                     {"status", any_failed ? "PartialFailure" : "ok"}};
    detail::write_manifest(opt.out_dir, resolved);
    return any_failed ? 3 : 0;
}

// ---- dispatcher ---------------------------------------------------------

inline int run(const json& cfg, const RunOptions& opt) {
    if (!cfg.is_object()) throw ConfigInvalid("config must be a JSON object");
    if (!cfg.contains("command") || !cfg.at("command").is_string())
        throw ConfigInvalid("config needs a 'command' string");
    std::string cmd = cfg.at("command").get<std::string>();
    if (cmd == "classify") return run_classify(cfg, opt);
    if (cmd == "biortho") return run_biortho(cfg, opt);
    if (cmd == "pw") return run_pw(cfg, opt);
    if (cmd == "bounds") return run_bounds(cfg, opt);
    if (cmd == "cost") return run_cost(cfg, opt);
    if (cmd == "sweep") return run_sweep(cfg, opt);
    throw ConfigInvalid("unknown command '" + cmd + "'");
}

} // namespace biortho::cli
