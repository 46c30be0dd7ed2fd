#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfp/bounds.hpp"
#include "kfp/config.hpp"
#include "kfp/estimators.hpp"
#include "kfp/girsanov.hpp"
#include "kfp/integrate.hpp"
#include "kfp/model.hpp"
#include "kfp/observables.hpp"
#include "kfp/ou_oracle.hpp"

namespace kfp {

// One CSV record. passed is -1 for plain estimates (no pass semantics), else
// 0/1. For margin rows the stderr column carries the tolerance.
struct ResultRow {
    std::string experiment;
    std::string quantity;
    double value = 0.0;
    double std_err = 0.0;
    std::int64_t n = 0;
    double ess = 0.0;
    int passed = -1;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<BoundReport> reports;
    bool any_check = false;
    bool all_passed = true;
};

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("no results to emit");
    std::ostringstream out;
    out << "experiment,quantity,value,stderr,n,ess,passed\n";
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.quantity << ',' << format_g17(r.value) << ','
            << format_g17(r.std_err) << ',' << r.n << ',' << format_g17(r.ess) << ',';
        if (r.passed >= 0) out << r.passed;
        out << '\n';
    }
    return out.str();
}

inline std::string json_escape(const std::string& s) {
    std::ostringstream out;
    for (char c : s) {
        switch (c) {
            case '"': out << "\\\""; break;
            case '\\': out << "\\\\"; break;
            case '\n': out << "\\n"; break;
            case '\t': out << "\\t"; break;
            case '\r': out << "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out << buf;
                } else {
                    out << c;
                }
        }
    }
    return out.str();
}

// Structured mirror of the CSV: the full config echo (so a run can be
// reproduced from the JSON alone, master_seed included), every result row,
// and every BoundReport. Emitted by hand so all floats carry 17 significant
// digits, same as the CSV.
inline std::string to_json(const ExperimentConfig& cfg, const RunOutput& out) {
    std::ostringstream j;
    j << "{\n  \"master_seed\": " << cfg.master_seed << ",\n";
    j << "  \"config\": {";
    bool first_sec = true;
    for (const auto& [section, entries] : cfg.raw.sections) {
        j << (first_sec ? "\n" : ",\n") << "    \"" << json_escape(section) << "\": {";
        first_sec = false;
        bool first_key = true;
        for (const auto& [k, v] : entries) {
            j << (first_key ? "\n" : ",\n") << "      \"" << json_escape(k) << "\": \""
              << json_escape(v) << '"';
            first_key = false;
        }
        j << (first_key ? "}" : "\n    }");
    }
    j << (first_sec ? "},\n" : "\n  },\n");
    j << "  \"results\": [";
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const ResultRow& r = out.rows[i];
        j << (i == 0 ? "\n" : ",\n") << "    {\"experiment\": \""
          << json_escape(r.experiment) << "\", \"quantity\": \""
          << json_escape(r.quantity) << "\", \"value\": " << format_g17(r.value)
          << ", \"stderr\": " << format_g17(r.std_err) << ", \"n\": " << r.n
          << ", \"ess\": " << format_g17(r.ess) << ", \"passed\": "
          << (r.passed < 0 ? "null" : r.passed ? "true" : "false") << '}';
    }
    j << (out.rows.empty() ? "],\n" : "\n  ],\n");
    auto estimate_json = [](const Estimate& e) {
        std::ostringstream s;
        s << "{\"mean\": " << format_g17(e.mean) << ", \"stderr\": "
          << format_g17(e.std_err) << ", \"n\": " << e.n << ", \"ess\": "
          << format_g17(e.ess) << '}';
        return s.str();
    };
    j << "  \"reports\": [";
    for (std::size_t i = 0; i < out.reports.size(); ++i) {
        const BoundReport& r = out.reports[i];
        j << (i == 0 ? "\n" : ",\n") << "    {\"name\": \"" << json_escape(r.name)
          << "\", \"lhs\": " << estimate_json(r.lhs) << ", \"rhs\": "
          << estimate_json(r.rhs) << ", \"margin\": " << format_g17(r.margin)
          << ", \"tolerance\": " << format_g17(r.tolerance) << ", \"passed\": "
          << (r.passed ? "true" : "false") << ", \"note\": \"" << json_escape(r.note)
          << "\"}";
    }
    j << (out.reports.empty() ? "]\n" : "\n  ]\n") << "}\n";
    return j.str();
}

namespace detail {

inline void add_estimate_row(RunOutput& out, const std::string& kind,
                             const std::string& quantity, const Estimate& e) {
    out.rows.push_back({kind, quantity, e.mean, e.std_err, e.n, e.ess, -1});
}

inline void add_report(RunOutput& out, const std::string& kind, const BoundReport& r) {
    out.reports.push_back(r);
    out.rows.push_back(
        {kind, r.name + ".lhs", r.lhs.mean, r.lhs.std_err, r.lhs.n, r.lhs.ess, -1});
    out.rows.push_back(
        {kind, r.name + ".rhs", r.rhs.mean, r.rhs.std_err, r.rhs.n, r.rhs.ess, -1});
    out.rows.push_back(
        {kind, r.name + ".margin", r.margin, r.tolerance, 0, 0.0, r.passed ? 1 : 0});
    out.any_check = true;
    out.all_passed = out.all_passed && r.passed;
}

inline State initial_state(const ExperimentConfig& cfg, const SystemSpec& sys) {
    State p;
    p.x = cfg.initial_x.size() ? cfg.initial_x : Eigen::VectorXd::Zero(sys.m()).eval();
    p.y = cfg.initial_y.size() ? cfg.initial_y : Eigen::VectorXd::Zero(sys.d()).eval();
    if (p.x.size() != sys.m() || p.y.size() != sys.d())
        throw ConfigError(0, "initial point dimensions do not match the system");
    return p;
}

inline Direction direction(const ExperimentConfig& cfg, const SystemSpec& sys) {
    Direction h;
    h.h1 = cfg.h1.size() ? cfg.h1 : Eigen::VectorXd::Ones(sys.m()).eval();
    h.h2 = cfg.h2.size() ? cfg.h2 : Eigen::VectorXd::Zero(sys.d()).eval();
    if (h.h1.size() != sys.m() || h.h2.size() != sys.d())
        throw ConfigError(0, "direction dimensions do not match the system");
    return h;
}

inline McConfig mc_config(const ExperimentConfig& cfg, const std::string& stream) {
    McConfig mc;
    mc.n_paths = cfg.n_paths;
    mc.master_seed = stream.empty() ? cfg.master_seed
                                    : seed_from_name(cfg.master_seed, stream);
    mc.grid = PathGrid(cfg.t, cfg.n_steps);
    return mc;
}

inline bool has_ou_oracle(const ExperimentConfig& cfg) {
    return cfg.system_name == "linear_ou" &&
           (cfg.f_name == "x_clipped" || cfg.f_name == "sqnorm_clipped");
}

inline OuObservable oracle_tag(const ExperimentConfig& cfg) {
    return cfg.f_name == "x_clipped" ? OuObservable::linear_x : OuObservable::quadratic;
}

inline void run_simulate(const ExperimentConfig& cfg, const SystemSpec& sys,
                         RunOutput& out) {
    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    State p0 = initial_state(cfg, sys);
    Estimate est = estimate_semigroup(sys, obs.fn, p0, mc_config(cfg, ""));
    add_estimate_row(out, cfg.kind, "pt_f", est);
    if (has_ou_oracle(cfg)) {
        double exact = ou_exact_semigroup(oracle_tag(cfg), p0, cfg.t);
        out.rows.push_back({cfg.kind, "pt_f_exact", exact, 0.0, 0, 0.0, -1});
    }
    if (cfg.expected_mean) {
        add_report(out, cfg.kind,
                   make_agreement("mean_matches_expected", est,
                                  exact_value(*cfg.expected_mean)));
    }
}

inline void run_gradient(const ExperimentConfig& cfg, const SystemSpec& sys,
                         RunOutput& out) {
    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    State p0 = initial_state(cfg, sys);
    Direction h = direction(cfg, sys);
    bool want_cubic = cfg.weight == "cubic" || cfg.weight == "both";
    bool want_zhang = cfg.weight == "zhang" || cfg.weight == "both";

    Estimate bismut;
    if (want_cubic || want_zhang) {
        bismut = estimate_gradient_bismut(sys, obs.fn, p0, h, mc_config(cfg, ""));
        add_estimate_row(out, cfg.kind, "bismut", bismut);
    }
    Estimate fd = estimate_gradient_fd(sys, obs.fn, p0, h, mc_config(cfg, "gradient.fd"),
                                       cfg.fd_step);
    add_estimate_row(out, cfg.kind, "fd", fd);
    add_report(out, cfg.kind, make_agreement("bismut_vs_fd", bismut, fd));

    if (has_ou_oracle(cfg)) {
        double exact = ou_exact_gradient(oracle_tag(cfg), p0, h, cfg.t);
        out.rows.push_back({cfg.kind, "exact", exact, 0.0, 0, 0.0, -1});
        // The oracle comparisons need an explicit discretization allowance on
        // top of the statistical band: with common random numbers the FD
        // estimator is exactly deterministic on a linear system, so its
        // standard error collapses and the Euler bias would dominate. The
        // weight integrand scales like 1/t^2 through u'', and the measured
        // bias slope on the linear system stays below 12*dt at t = 0.25, so
        // 8*dt*(1 + t + 1/t^2) keeps at least a 3x margin.
        double dt = cfg.t / cfg.n_steps;
        double allow = 8.0 * dt * (1.0 + cfg.t + 1.0 / (cfg.t * cfg.t));
        add_report(out, cfg.kind,
                   make_agreement("bismut_vs_exact", bismut, exact_value(exact), allow));
        add_report(out, cfg.kind,
                   make_agreement("fd_vs_exact", fd, exact_value(exact), allow));
    }
    if (want_zhang) {
        Estimate zhang =
            estimate_gradient_zhang(sys, obs.fn, p0, h, mc_config(cfg, "gradient.zhang"));
        add_estimate_row(out, cfg.kind, "zhang", zhang);
        add_report(out, cfg.kind,
                   make_agreement("zhang_vs_bismut", zhang, bismut, 0.0,
                                  "cross-check of the reorganized-statement weight; a "
                                  "failure here surfaces the transcription discrepancy "
                                  "documented in the README"));
    }
}

inline void run_couple(const ExperimentConfig& cfg, const SystemSpec& sys,
                       RunOutput& out) {
    State p0 = initial_state(cfg, sys);
    Direction h = direction(cfg, sys);
    Eigen::VectorXd z = sys.min_norm_preimage(h.h1);

    auto residual_at = [&](int n_steps) {
        PathGrid grid(cfg.t, n_steps);
        ControlPair ctrl = cubic_controls(cfg.t);
        PathRng rng(cfg.master_seed, 0);
        BrownianPath bp = sample_brownian(sys.d(), grid, rng);
        auto [base, shifted] =
            simulate_coupled(sys, p0, h, cfg.epsilon, ctrl, grid, bp, z);
        return shift_residual(sys, base, shifted, h, z, cfg.epsilon, ctrl);
    };
    double res = residual_at(cfg.n_steps);
    double res_half = residual_at(2 * cfg.n_steps);
    double ratio = res > 0.0 ? res_half / res : 0.0;
    out.rows.push_back({cfg.kind, "shift_residual", res, 0.0, 1, 0.0, -1});
    out.rows.push_back({cfg.kind, "shift_residual_half_dt", res_half, 0.0, 1, 0.0, -1});
    out.rows.push_back({cfg.kind, "residual_ratio", ratio, 0.0, 1, 0.0, -1});
    BoundReport halving;
    halving.name = "residual_halving";
    halving.lhs = exact_value(ratio);
    halving.rhs = exact_value(0.5);
    halving.margin = -std::abs(ratio - 0.5);
    halving.tolerance = 0.1;
    halving.passed = halving.margin >= -halving.tolerance;
    add_report(out, cfg.kind, halving);

    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    ShiftedExpectation se =
        shifted_expectation(sys, obs.fn, p0, h, cfg.epsilon, mc_config(cfg, ""));
    add_estimate_row(out, cfg.kind, "girsanov_mean", se.density_mean);
    add_estimate_row(out, cfg.kind, "weighted", se.weighted);
    add_estimate_row(out, cfg.kind, "direct", se.direct);
    add_report(out, cfg.kind,
               make_agreement("r_normalization", se.density_mean, exact_value(1.0)));
    add_report(out, cfg.kind, make_agreement("weighted_vs_direct", se.weighted, se.direct));
}

inline void run_harnack(const ExperimentConfig& cfg, const SystemSpec& sys,
                        RunOutput& out) {
    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    if (!obs.positive)
        throw ConfigError(0, "harnack needs a positive observable");
    State a{cfg.a_x.size() ? cfg.a_x : Eigen::VectorXd::Zero(sys.m()).eval(),
            cfg.a_y.size() ? cfg.a_y : Eigen::VectorXd::Zero(sys.d()).eval()};
    State b{cfg.b_x.size() ? cfg.b_x : a.x, cfg.b_y.size() ? cfg.b_y : a.y};
    BoundConstants c = constants_for(sys, cfg.k1, cfg.k2);
    add_report(out, cfg.kind,
               check_harnack(sys, obs.fn, a, b, cfg.alpha, mc_config(cfg, ""), c));
}

inline void run_bounds(const ExperimentConfig& cfg, const SystemSpec& sys,
                       RunOutput& out) {
    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    State p0 = initial_state(cfg, sys);
    Direction h = direction(cfg, sys);
    if (!cfg.has_constants && !cfg.has_point_b)
        throw ConfigError(0, "bounds experiment needs k1/k2 constants or a point pair");
    if (cfg.has_constants) {
        BoundConstants c = constants_for(sys, cfg.k1, cfg.k2);
        add_report(out, cfg.kind,
                   check_gradient_bound(sys, obs.fn, p0, h, mc_config(cfg, ""), c));
        if (obs.positive) {
            for (const auto& rep : check_entropy_gradient(sys, obs.fn, p0, h,
                                                          mc_config(cfg, ""), c,
                                                          cfg.delta))
                add_report(out, cfg.kind, rep);
        }
    }
    if (cfg.has_point_b) {
        if (!obs.positive)
            throw ConfigError(0, "log-harnack needs a positive observable");
        State a{cfg.a_x.size() ? cfg.a_x : p0.x, cfg.a_y.size() ? cfg.a_y : p0.y};
        State b{cfg.b_x, cfg.b_y};
        if (cfg.has_constants) {
            BoundConstants c = constants_for(sys, cfg.k1, cfg.k2);
            add_report(out, cfg.kind,
                       check_log_harnack(sys, obs.fn, a, b, mc_config(cfg, ""),
                                         LogHarnackRoute::phi_constants, &c));
        }
        add_report(out, cfg.kind,
                   check_log_harnack(sys, obs.fn, a, b, mc_config(cfg, ""),
                                     LogHarnackRoute::girsanov_entropy));
    }
}

inline void run_lyapunov(const ExperimentConfig& cfg, const SystemSpec& sys,
                         RunOutput& out) {
    GridSpec grid;
    int dims = sys.m() + sys.d();
    grid.lo = Eigen::VectorXd::Constant(dims, cfg.grid_lo);
    grid.hi = Eigen::VectorXd::Constant(dims, cfg.grid_hi);
    grid.points_per_dim = cfg.grid_points;
    add_report(out, cfg.kind, lyapunov_check(sys, grid));
    if (cfg.system_name == "cubic") {
        GridSpec plane;
        plane.lo = Eigen::VectorXd::Constant(2, cfg.grid_lo);
        plane.hi = Eigen::VectorXd::Constant(2, cfg.grid_hi);
        plane.points_per_dim = cfg.grid_points;
        TildeWResult tw = tilde_w_check(cfg.tw_a, cfg.tw_b, cfg.tw_eps, plane);
        out.rows.push_back({cfg.kind, "tilde_w_alpha", tw.alpha, 0.0, 0, 0.0, -1});
        out.rows.push_back({cfg.kind, "tilde_w_K", tw.K, 0.0, 0, 0.0, -1});
        out.rows.push_back(
            {cfg.kind, "tilde_w_display_diff", tw.display_max_diff, 0.0, 0, 0.0, -1});
        add_report(out, cfg.kind, tw.report);
    }
}

inline void run_variance_compare(const ExperimentConfig& cfg, const SystemSpec& sys,
                                 RunOutput& out) {
    Observable obs = make_observable(cfg.f_name, cfg.clip_radius);
    State p0 = initial_state(cfg, sys);
    Direction h = direction(cfg, sys);
    Eigen::VectorXd z = sys.min_norm_preimage(h.h1);
    std::vector<double> log_t, log_var;
    for (double t : cfg.t_list) {
        McConfig mc;
        mc.n_paths = cfg.n_paths;
        mc.master_seed = seed_from_name(cfg.master_seed, "variance." + format_g17(t));
        mc.grid = PathGrid(t, cfg.n_steps);
        ControlPair ctrl = cubic_controls(t);
        auto values = collect_path_values(mc.n_paths, mc.master_seed, [&](PathRng& rng) {
            BrownianPath bp = sample_brownian(sys.d(), mc.grid, rng);
            Trajectory traj = simulate(sys, p0, mc.grid, bp);
            return obs.fn(traj.terminal()) *
                   bismut_weight(sys, traj, bp, ctrl, h, z).weight;
        });
        Estimate est = summarize(values);
        double var = est.std_err * est.std_err * est.n;
        double var_se = var * std::sqrt(2.0 / (est.n - 1));
        std::ostringstream name;
        name << "variance_t_" << format_g17(t);
        out.rows.push_back({cfg.kind, name.str(), var, var_se, est.n, est.ess, -1});
        log_t.push_back(std::log(t));
        log_var.push_back(std::log(var));
    }
    double n = static_cast<double>(log_t.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
        sx += log_t[i];
        sy += log_var[i];
        sxx += log_t[i] * log_t[i];
        sxy += log_t[i] * log_var[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.rows.push_back({cfg.kind, "variance_slope", slope, 0.0, 0, 0.0, -1});
    BoundReport band;
    band.name = "variance_slope_band";
    band.lhs = exact_value(slope);
    band.rhs = exact_value(-3.0);
    band.margin = std::min(slope - (-3.5), (-2.5) - slope);
    band.tolerance = 0.0;
    band.passed = band.margin >= 0.0;
    std::ostringstream note;
    note << "band [-3.5, -2.5]; slope=" << slope;
    band.note = note.str();
    add_report(out, cfg.kind, band);
}

}  // namespace detail

// Execute one experiment described by a resolved config.
inline RunOutput run_experiment(const ExperimentConfig& cfg) {
    SystemSpec sys = build_system(cfg);
    RunOutput out;
    if (cfg.kind == "simulate")
        detail::run_simulate(cfg, sys, out);
    else if (cfg.kind == "gradient")
        detail::run_gradient(cfg, sys, out);
    else if (cfg.kind == "couple")
        detail::run_couple(cfg, sys, out);
    else if (cfg.kind == "harnack")
        detail::run_harnack(cfg, sys, out);
    else if (cfg.kind == "bounds")
        detail::run_bounds(cfg, sys, out);
    else if (cfg.kind == "lyapunov")
        detail::run_lyapunov(cfg, sys, out);
    else if (cfg.kind == "variance-compare")
        detail::run_variance_compare(cfg, sys, out);
    else
        throw ConfigError(0, "unknown experiment kind: " + cfg.kind);
    if (out.rows.empty()) throw std::runtime_error("experiment produced no results");
    return out;
}

}  // namespace kfp
