#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "kfp/controls.hpp"
#include "kfp/model.hpp"
#include "kfp/rng.hpp"

namespace kfp {

// Uniform grid 0 = s_0 < ... < s_n = t. dt is derived, never stored, so
// n_steps * dt reproduces t_final exactly up to the final node, which is
// pinned to t_final itself.
struct PathGrid {
    double t_final = 1.0;
    int n_steps = 1;

    PathGrid() = default;
    PathGrid(double t, int n) : t_final(t), n_steps(n) {
        if (!(t > 0.0)) throw std::invalid_argument("time horizon must be positive");
        if (n < 1) throw std::invalid_argument("n_steps must be positive");
    }
    double dt() const { return t_final / n_steps; }
    double time(int k) const { return k == n_steps ? t_final : k * dt(); }
};

// Increments of a d-dimensional Brownian motion over the grid; column k holds
// B_{s_{k+1}} - B_{s_k}.
struct BrownianPath {
    PathGrid grid;
    Eigen::MatrixXd increments;
};

// Draw the n_steps * d Gaussians in a fixed order (step-major, component-minor)
// so a path is a pure function of its PathRng.
inline BrownianPath sample_brownian(int d, const PathGrid& grid, PathRng& rng) {
    BrownianPath bp;
    bp.grid = grid;
    bp.increments.resize(d, grid.n_steps);
    double root_dt = std::sqrt(grid.dt());
    for (int k = 0; k < grid.n_steps; ++k)
        for (int i = 0; i < d; ++i) bp.increments(i, k) = root_dt * rng.gaussian();
    return bp;
}

// Euler-Maruyama path of one system; column k of states is (X_{s_k}; Y_{s_k}).
struct Trajectory {
    PathGrid grid;
    int m = 0;
    int d = 0;
    Eigen::MatrixXd states;

    Eigen::VectorXd x(int k) const { return states.col(k).head(m); }
    Eigen::VectorXd y(int k) const { return states.col(k).tail(d); }
    State state(int k) const { return State{x(k), y(k)}; }
    State terminal() const { return state(grid.n_steps); }
};

namespace detail {
inline void throw_explosion(int k) {
    throw std::runtime_error("explosion at step " + std::to_string(k));
}
}  // namespace detail

// X_{k+1} = X_k + A Y_k dt, Y_{k+1} = Y_k + sigma dB_k + Z(s_k, X_k, Y_k) dt.
inline Trajectory simulate(const SystemSpec& system, const State& initial,
                           const PathGrid& grid, const BrownianPath& brownian) {
    const int m = system.m(), d = system.d(), n = grid.n_steps;
    if (brownian.increments.cols() != n || brownian.increments.rows() != d)
        throw std::invalid_argument("Brownian path does not match grid/system");
    Trajectory traj;
    traj.grid = grid;
    traj.m = m;
    traj.d = d;
    traj.states.resize(m + d, n + 1);
    traj.states.col(0).head(m) = initial.x;
    traj.states.col(0).tail(d) = initial.y;
    double dt = grid.dt();
    State cur{initial.x, initial.y};
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd z = system.drift(grid.time(k), cur);
        cur.x += system.A() * cur.y * dt;
        cur.y += system.sigma() * brownian.increments.col(k) + z * dt;
        if (!cur.x.allFinite() || !cur.y.allFinite()) detail::throw_explosion(k + 1);
        traj.states.col(k + 1).head(m) = cur.x;
        traj.states.col(k + 1).tail(d) = cur.y;
    }
    return traj;
}

// Coupled pair sharing one Brownian path. The shifted leg starts at
// initial + eps*h, keeps evaluating the drift on the BASE path, and adds the
// control term eps*(v''(s_k) h2 - u''(s_k) z) dt to its velocity update. With
// these controls the difference of the two legs is the deterministic flow
// eps*Theta(h, z, s) and the legs coincide at time t.
inline std::pair<Trajectory, Trajectory> simulate_coupled(
    const SystemSpec& system, const State& initial, const Direction& h, double eps,
    const ControlPair& controls, const PathGrid& grid, const BrownianPath& brownian,
    const Eigen::VectorXd& z) {
    const int m = system.m(), d = system.d(), n = grid.n_steps;
    if (brownian.increments.cols() != n || brownian.increments.rows() != d)
        throw std::invalid_argument("Brownian path does not match grid/system");
    Trajectory base, shifted;
    for (Trajectory* tr : {&base, &shifted}) {
        tr->grid = grid;
        tr->m = m;
        tr->d = d;
        tr->states.resize(m + d, n + 1);
    }
    State cb{initial.x, initial.y};
    State cs{initial.x + eps * h.h1, initial.y + eps * h.h2};
    base.states.col(0).head(m) = cb.x;
    base.states.col(0).tail(d) = cb.y;
    shifted.states.col(0).head(m) = cs.x;
    shifted.states.col(0).tail(d) = cs.y;
    double dt = grid.dt();
    for (int k = 0; k < n; ++k) {
        double s = grid.time(k);
        Eigen::VectorXd zb = system.drift(s, cb);
        Eigen::VectorXd control = eps * (controls.d2v(s) * h.h2 - controls.d2u(s) * z);
        Eigen::VectorXd noise = system.sigma() * brownian.increments.col(k);
        cb.x += system.A() * cb.y * dt;
        cb.y += noise + zb * dt;
        cs.x += system.A() * cs.y * dt;
        cs.y += noise + (zb + control) * dt;
        if (!cb.x.allFinite() || !cb.y.allFinite() || !cs.x.allFinite() ||
            !cs.y.allFinite())
            detail::throw_explosion(k + 1);
        base.states.col(k + 1).head(m) = cb.x;
        base.states.col(k + 1).tail(d) = cb.y;
        shifted.states.col(k + 1).head(m) = cs.x;
        shifted.states.col(k + 1).tail(d) = cs.y;
    }
    return {std::move(base), std::move(shifted)};
}

// Largest deviation over the grid between the realized difference of the two
// legs and the intended deterministic shift eps*Theta(h, z, s_k). For the
// Euler scheme this is O(dt) and fully deterministic (the noise cancels).
inline double shift_residual(const SystemSpec& system, const Trajectory& base,
                             const Trajectory& shifted, const Direction& h,
                             const Eigen::VectorXd& z, double eps,
                             const ControlPair& controls) {
    const int n = base.grid.n_steps;
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
        Direction th = theta(controls, h, z, base.grid.time(k), system.A());
        Eigen::VectorXd expect(base.m + base.d);
        expect.head(base.m) = eps * th.h1;
        expect.tail(base.d) = eps * th.h2;
        double dev = (shifted.states.col(k) - base.states.col(k) - expect).norm();
        if (dev > worst) worst = dev;
    }
    return worst;
}

}  // namespace kfp
