#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "kfp/controls.hpp"
#include "kfp/integrate.hpp"
#include "kfp/model.hpp"

namespace kfp {

// A discretized stochastic integral M = sum_k <g(s_k), dB_k> together with its
// quadratic variation sum_k |g(s_k)|^2 dt, which E[M^2] must match.
struct WeightResult {
    double weight = 0.0;
    double quadratic_variation = 0.0;
};

// Integrand of the derivative-formula martingale, evaluated along one path:
//   g(s) = sigma^{-1} { u''(s) z - v''(s) h2 + dZ(s, path_s)[Theta(h, z, s)] }.
// E[ f(path_t) * weight ] is the directional derivative of P_t f along h.
inline WeightResult bismut_weight(const SystemSpec& system, const Trajectory& traj,
                                  const BrownianPath& brownian,
                                  const ControlPair& controls, const Direction& h,
                                  const Eigen::VectorXd& z) {
    const int n = traj.grid.n_steps;
    const double dt = traj.grid.dt();
    if (brownian.increments.cols() != n)
        throw std::invalid_argument("Brownian path does not match trajectory");
    WeightResult out;
    for (int k = 0; k < n; ++k) {
        double s = traj.grid.time(k);
        Direction th = theta(controls, h, z, s, system.A());
        Eigen::VectorXd bracket =
            lambda_term(controls, z, h.h2, s) +
            system.drift_dir_deriv(s, traj.state(k), th);
        Eigen::VectorXd g = system.sigma_inv() * bracket;
        out.weight += g.dot(brownian.increments.col(k));
        out.quadratic_variation += g.squaredNorm() * dt;
    }
    return out;
}

namespace detail {
// Piecewise slopes and antiderivatives of the reorganized-coupling rates
//   gamma1(s) = 2 (t - 2s)^+ + s - t,  gamma2(s) = (4/t) (s min (t - s)).
// At the kink s = t/2 the right-hand slope is used, matching left-endpoint
// quadrature of an integrand that is constant on each half of the grid.
inline double gamma1(double s, double t) {
    double plus = t - 2.0 * s > 0.0 ? t - 2.0 * s : 0.0;
    return 2.0 * plus + s - t;
}
inline double dgamma1(double s, double t) { return s < 0.5 * t ? -3.0 : 1.0; }
inline double gamma2(double s, double t) {
    double m = s < t - s ? s : t - s;
    return 4.0 * m / t;
}
inline double dgamma2(double s, double t) { return s < 0.5 * t ? 4.0 / t : -4.0 / t; }
inline double int_gamma1(double s, double t) {
    if (s <= 0.5 * t) return t * s - 1.5 * s * s;
    return 0.5 * s * s - t * s + 0.5 * t * t;
}
inline double int_gamma2(double s, double t) {
    if (s <= 0.5 * t) return 2.0 * s * s / t;
    return 4.0 * s - 2.0 * s * s / t - t;
}
}  // namespace detail

// Alternative derivative weight transcribed from a reorganized statement of
// the same formula, restricted to m = d with A = I:
//   (1/t) int_0^t < sigma^{-1} { dZ[Theta_s] - gamma1'(s) h1 + gamma2'(s) h2 }, dB_s >,
//   Theta_s = (h1 G1(s) + h2 t + h2 G2(s), gamma1(s) h1 - gamma2(s) h2),
// with G1, G2 the running integrals of gamma1, gamma2. Kept verbatim so it can
// be cross-checked against the polynomial-control weight; see the gradient
// experiment, which flags the discrepancy the comparison uncovers.
inline WeightResult zhang_weight(const SystemSpec& system, const Trajectory& traj,
                                 const BrownianPath& brownian, const Direction& h) {
    if (!system.identity_A())
        throw std::runtime_error("Zhang weight requires m=d, A=I");
    const int n = traj.grid.n_steps;
    if (n % 2 != 0)
        throw std::invalid_argument("Zhang weight needs an even n_steps (node at t/2)");
    if (brownian.increments.cols() != n)
        throw std::invalid_argument("Brownian path does not match trajectory");
    const double t = traj.grid.t_final;
    const double dt = traj.grid.dt();
    WeightResult out;
    for (int k = 0; k < n; ++k) {
        double s = traj.grid.time(k);
        Direction th;
        th.h1 = detail::int_gamma1(s, t) * h.h1 + (t + detail::int_gamma2(s, t)) * h.h2;
        th.h2 = detail::gamma1(s, t) * h.h1 - detail::gamma2(s, t) * h.h2;
        Eigen::VectorXd bracket = system.drift_dir_deriv(s, traj.state(k), th) -
                                  detail::dgamma1(s, t) * h.h1 +
                                  detail::dgamma2(s, t) * h.h2;
        Eigen::VectorXd g = (system.sigma_inv() * bracket) / t;
        out.weight += g.dot(brownian.increments.col(k));
        out.quadratic_variation += g.squaredNorm() * dt;
    }
    return out;
}

}  // namespace kfp
