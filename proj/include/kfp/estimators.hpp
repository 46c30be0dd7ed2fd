#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kfp/controls.hpp"
#include "kfp/integrate.hpp"
#include "kfp/model.hpp"
#include "kfp/parallel.hpp"
#include "kfp/rng.hpp"
#include "kfp/weights.hpp"

namespace kfp {

using ObservableFn = std::function<double(const State&)>;

// Monte Carlo run parameters. Path i always draws from the stream
// (master_seed, i), so every estimate is a pure function of this struct.
struct McConfig {
    std::int64_t n_paths = 0;
    std::uint64_t master_seed = 0;
    PathGrid grid;
};

// Sample mean with its standard error and an effective sample size (equal to
// n for unweighted estimates, degraded by weight imbalance otherwise).
struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::int64_t n = 0;
    double ess = 0.0;
};

// Mean/stderr of per-path values, accumulated in path-index order so the
// result does not depend on the thread count.
inline Estimate summarize(const std::vector<double>& values) {
    std::int64_t n = static_cast<std::int64_t>(values.size());
    if (n < 2) throw std::invalid_argument("need at least two paths");
    double sum = 0.0;
    for (double v : values) sum += v;
    double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    Estimate e;
    e.mean = mean;
    e.std_err = std::sqrt(ss / (n - 1) / n);
    e.n = n;
    e.ess = static_cast<double>(n);
    return e;
}

// As summarize, but values are products weight * payoff and the effective
// sample size n * mean(w)^2 / mean(w^2) reports how unbalanced the weights are.
inline Estimate summarize_weighted(const std::vector<double>& values,
                                   const std::vector<double>& weights) {
    Estimate e = summarize(values);
    double sw = 0.0, sw2 = 0.0;
    for (double w : weights) {
        sw += w;
        sw2 += w * w;
    }
    e.ess = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    return e;
}

// Fill one slot per path from its dedicated stream; the loop body runs under
// parallel_for_index but the slots are reduced in order by the caller.
template <class PerPath>
std::vector<double> collect_path_values(std::int64_t n_paths, std::uint64_t master_seed,
                                        PerPath&& per_path) {
    if (n_paths < 2) throw std::invalid_argument("need at least two paths");
    std::vector<double> values(static_cast<std::size_t>(n_paths));
    parallel_for_index(n_paths, [&](std::int64_t i) {
        PathRng rng(master_seed, static_cast<std::uint64_t>(i));
        values[static_cast<std::size_t>(i)] = per_path(rng);
    });
    return values;
}

// Plain Monte Carlo estimate of P_t f(initial) over cfg.grid.
inline Estimate estimate_semigroup(const SystemSpec& system, const ObservableFn& f,
                                   const State& initial, const McConfig& cfg) {
    auto values = collect_path_values(cfg.n_paths, cfg.master_seed, [&](PathRng& rng) {
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        Trajectory traj = simulate(system, initial, cfg.grid, bp);
        return f(traj.terminal());
    });
    return summarize(values);
}

// Derivative estimate E[ f(path_t) * weight ] with the polynomial-control
// weight. controls/z default to the cubic pair on [0, t] and the minimum-norm
// preimage of h1.
inline Estimate estimate_gradient_bismut(const SystemSpec& system, const ObservableFn& f,
                                         const State& initial, const Direction& h,
                                         const McConfig& cfg,
                                         std::optional<ControlPair> controls = {},
                                         std::optional<Eigen::VectorXd> z_opt = {}) {
    ControlPair ctrl = controls ? *controls : cubic_controls(cfg.grid.t_final);
    Eigen::VectorXd z = z_opt ? *z_opt : system.min_norm_preimage(h.h1);
    auto values = collect_path_values(cfg.n_paths, cfg.master_seed, [&](PathRng& rng) {
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        Trajectory traj = simulate(system, initial, cfg.grid, bp);
        return f(traj.terminal()) * bismut_weight(system, traj, bp, ctrl, h, z).weight;
    });
    return summarize(values);
}

// Derivative estimate with the reorganized (Zhang) weight; same sampling plan.
inline Estimate estimate_gradient_zhang(const SystemSpec& system, const ObservableFn& f,
                                        const State& initial, const Direction& h,
                                        const McConfig& cfg) {
    auto values = collect_path_values(cfg.n_paths, cfg.master_seed, [&](PathRng& rng) {
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        Trajectory traj = simulate(system, initial, cfg.grid, bp);
        return f(traj.terminal()) * zhang_weight(system, traj, bp, h).weight;
    });
    return summarize(values);
}

// Central-difference derivative along h with common random numbers: both
// displaced paths of a pair reuse one Brownian path, and the standard error is
// taken over the per-path differenced values.
inline Estimate estimate_gradient_fd(const SystemSpec& system, const ObservableFn& f,
                                     const State& initial, const Direction& h,
                                     const McConfig& cfg, double fd_step = 0.0) {
    double scale = std::sqrt(initial.x.squaredNorm() + initial.y.squaredNorm());
    double step = fd_step > 0.0 ? fd_step : 1e-2 * (1.0 + scale);
    State plus{initial.x + step * h.h1, initial.y + step * h.h2};
    State minus{initial.x - step * h.h1, initial.y - step * h.h2};
    auto values = collect_path_values(cfg.n_paths, cfg.master_seed, [&](PathRng& rng) {
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        Trajectory up = simulate(system, plus, cfg.grid, bp);
        Trajectory down = simulate(system, minus, cfg.grid, bp);
        return (f(up.terminal()) - f(down.terminal())) / (2.0 * step);
    });
    return summarize(values);
}

}  // namespace kfp
