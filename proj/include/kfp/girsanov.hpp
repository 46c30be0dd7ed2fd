#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "kfp/controls.hpp"
#include "kfp/estimators.hpp"
#include "kfp/integrate.hpp"
#include "kfp/model.hpp"

namespace kfp {

// Drift mismatch of the coupled pair at grid node k:
//   xi_k = Z(s_k, base_k) - Z(s_k, shifted_k) + eps*v''(s_k) h2 - eps*u''(s_k) z.
// Removing it by a change of measure makes the shifted leg a solution of the
// original equation started at initial + eps*h.
inline Eigen::VectorXd xi(const SystemSpec& system, const Trajectory& base,
                          const Trajectory& shifted, const ControlPair& controls,
                          double eps, const Direction& h, const Eigen::VectorXd& z,
                          int k) {
    double s = base.grid.time(k);
    return system.drift(s, base.state(k)) - system.drift(s, shifted.state(k)) +
           eps * controls.d2v(s) * h.h2 - eps * controls.d2u(s) * z;
}

// Girsanov density along one coupled pair, in log form, plus the relative
// entropy integrand (1/2) sum |sigma^{-1} xi_k|^2 dt.
struct DensityResult {
    double log_density = 0.0;
    double entropy_integrand = 0.0;
};

inline DensityResult density(const SystemSpec& system, const Trajectory& base,
                             const Trajectory& shifted, const BrownianPath& brownian,
                             const ControlPair& controls, double eps, const Direction& h,
                             const Eigen::VectorXd& z) {
    const int n = base.grid.n_steps;
    const double dt = base.grid.dt();
    if (brownian.increments.cols() != n)
        throw std::invalid_argument("Brownian path does not match trajectory");
    DensityResult out;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd g = system.sigma_inv() * xi(system, base, shifted, controls,
                                                    eps, h, z, k);
        out.log_density += -g.dot(brownian.increments.col(k)) - 0.5 * g.squaredNorm() * dt;
        out.entropy_integrand += 0.5 * g.squaredNorm() * dt;
    }
    return out;
}

// The two routes to P_t f(initial + eps*h): reweighting coupled paths started
// at initial (weighted) and plain Monte Carlo started at the shifted point
// (direct). Both consume the same per-path streams; at eps = 0 they coincide
// path by path, and in general the common noise only tightens the comparison.
struct ShiftedExpectation {
    Estimate weighted;
    Estimate direct;
    Estimate density_mean;  // mean of the Girsanov weights; 1 in expectation
};

inline ShiftedExpectation shifted_expectation(const SystemSpec& system,
                                              const ObservableFn& f, const State& initial,
                                              const Direction& h, double eps,
                                              const McConfig& cfg,
                                              std::optional<ControlPair> controls = {},
                                              std::optional<Eigen::VectorXd> z_opt = {}) {
    ControlPair ctrl = controls ? *controls : cubic_controls(cfg.grid.t_final);
    Eigen::VectorXd z = z_opt ? *z_opt : system.min_norm_preimage(h.h1);
    if (cfg.n_paths < 2) throw std::invalid_argument("need at least two paths");
    std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<double> weighted_vals(n), direct_vals(n), densities(n);
    State shifted_start{initial.x + eps * h.h1, initial.y + eps * h.h2};
    parallel_for_index(cfg.n_paths, [&](std::int64_t i) {
        PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(i));
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        auto [base, shifted] =
            simulate_coupled(system, initial, h, eps, ctrl, cfg.grid, bp, z);
        double r = std::exp(density(system, base, shifted, bp, ctrl, eps, h, z).log_density);
        Trajectory direct = simulate(system, shifted_start, cfg.grid, bp);
        weighted_vals[i] = r * f(base.terminal());
        densities[i] = r;
        direct_vals[i] = f(direct.terminal());
    });
    ShiftedExpectation out;
    out.weighted = summarize_weighted(weighted_vals, densities);
    out.direct = summarize(direct_vals);
    out.density_mean = summarize(densities);
    return out;
}

// Monte Carlo value of the entropy functional E_Q [ (1/2) int |sigma^{-1} xi|^2 ds ]
// for the coupling from base to tilde over [0, t] (eps = 1, h = tilde - base).
// This is the right-hand side of the entropy route to the log-Harnack bound.
inline Estimate log_harnack_entropy(const SystemSpec& system, const State& base_point,
                                    const State& tilde_point, const McConfig& cfg) {
    Direction h{tilde_point.x - base_point.x, tilde_point.y - base_point.y};
    ControlPair ctrl = cubic_controls(cfg.grid.t_final);
    Eigen::VectorXd z = system.min_norm_preimage(h.h1);
    if (cfg.n_paths < 2) throw std::invalid_argument("need at least two paths");
    std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<double> values(n), densities(n);
    parallel_for_index(cfg.n_paths, [&](std::int64_t i) {
        PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(i));
        BrownianPath bp = sample_brownian(system.d(), cfg.grid, rng);
        auto [base, shifted] =
            simulate_coupled(system, base_point, h, 1.0, ctrl, cfg.grid, bp, z);
        DensityResult dr = density(system, base, shifted, bp, ctrl, 1.0, h, z);
        double r = std::exp(dr.log_density);
        values[i] = r * dr.entropy_integrand;
        densities[i] = r;
    });
    return summarize_weighted(values, densities);
}

}  // namespace kfp
