// Acceptance gate for the library: thirteen numbered end-to-end checks, one
// printed line each, exit status 0 only if every one passes. Tolerances are
// pinned here as literals; every c*dt discretization allowance states the
// measured bias slope it covers. Statistical checks use fixed seeds so the
// binary is deterministic run to run.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "kfp/kfp.hpp"

namespace fs = std::filesystem;
using kfp::Direction;
using kfp::Estimate;
using kfp::McConfig;
using kfp::State;

namespace {

struct Criterion {
    std::string name;
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << (detail.str().empty() ? "" : "; ") << "FAILED: " << what;
        }
    }
    void note(const std::string& what) {
        if (passed && detail.str().empty()) detail << what;
    }
};

State st(double x, double y) {
    State p;
    p.x = Eigen::VectorXd::Constant(1, x);
    p.y = Eigen::VectorXd::Constant(1, y);
    return p;
}

Direction dir(double h1, double h2) {
    Direction h;
    h.h1 = Eigen::VectorXd::Constant(1, h1);
    h.h2 = Eigen::VectorXd::Constant(1, h2);
    return h;
}

McConfig mc(double t, int n_steps, std::int64_t n_paths, std::uint64_t seed) {
    McConfig cfg;
    cfg.grid = kfp::PathGrid(t, n_steps);
    cfg.n_paths = n_paths;
    cfg.master_seed = seed;
    return cfg;
}

kfp::BrownianPath zero_noise(int d, const kfp::PathGrid& grid) {
    kfp::BrownianPath bp;
    bp.grid = grid;
    bp.increments = Eigen::MatrixXd::Zero(d, grid.n_steps);
    return bp;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

// --- 1. control-pair boundary law ------------------------------------------

Criterion criterion_controls() {
    Criterion c{"control-pair boundary law"};
    const double tol = 1e-12;
    for (double t : {0.1, 1.0, 10.0}) {
        kfp::ControlPair cp = kfp::cubic_controls(t);
        std::array<double, 8> residuals = {
            cp.u(t) - 1.0, cp.u(0.0),  cp.du(0.0),       cp.du(t),
            cp.v(0.0),     cp.v(t),    cp.dv(0.0) - 1.0, cp.dv(t)};
        for (double r : residuals)
            c.require(std::abs(r) <= tol, "boundary residual " + fmt(r) + " at t=" + fmt(t));
        kfp::SystemSpec sys = kfp::linear_ou();
        Direction h = dir(0.7, -0.3);
        Eigen::VectorXd z = sys.min_norm_preimage(h.h1);
        Direction at0 = kfp::theta(cp, h, z, 0.0, sys.A());
        Direction att = kfp::theta(cp, h, z, t, sys.A());
        c.require(at0.h1(0) == h.h1(0) && at0.h2(0) == h.h2(0), "theta(0) != h at t=" + fmt(t));
        c.require(att.h1(0) == 0.0 && att.h2(0) == 0.0, "theta(t) != 0 at t=" + fmt(t));
    }
    c.note("eight boundary conditions within 1e-12 at t=0.1,1,10; theta endpoints exact");
    return c;
}

// --- 2. coupling shift identity ---------------------------------------------

Criterion criterion_coupling() {
    Criterion c{"coupling shift identity"};
    const double eps = 0.1, t = 1.0;
    Direction h = dir(1.0, 1.0);
    for (const kfp::SystemSpec& sys : {kfp::linear_ou(), kfp::cubic_example()}) {
        State p0 = st(0.5, 0.25);
        Eigen::VectorXd z = sys.min_norm_preimage(h.h1);
        kfp::ControlPair ctrl = kfp::cubic_controls(t);
        auto residual = [&](int n) {
            kfp::PathGrid grid(t, n);
            kfp::BrownianPath bp = zero_noise(sys.d(), grid);
            auto [base, shifted] = kfp::simulate_coupled(sys, p0, h, eps, ctrl, grid, bp, z);
            return kfp::shift_residual(sys, base, shifted, h, z, eps, ctrl);
        };
        double r1 = residual(128), r2 = residual(256);
        // residual <= c*dt with c = 10 (1+|h|)(1+|z0|); the measured constant
        // on both systems is below 2, so the factor-10 bound has wide margin.
        double hn = std::hypot(h.h1.norm(), h.h2.norm());
        double bound = 10.0 * (1.0 + hn) * (1.0 + p0.x.norm() + p0.y.norm());
        c.require(r1 <= bound * (t / 128), sys.name() + ": residual " + fmt(r1) +
                                               " above c*dt=" + fmt(bound * (t / 128)));
        double ratio = r2 / r1;
        c.require(ratio >= 0.4 && ratio <= 0.6,
                  sys.name() + ": halving ratio " + fmt(ratio) + " outside [0.4,0.6]");
        c.detail << (c.detail.str().empty() ? "" : "; ") << sys.name() << ": residual "
                 << fmt(r1) << " at dt=1/128, ratio " << fmt(ratio);
    }
    return c;
}

// --- 3. Girsanov normalization ----------------------------------------------

Criterion criterion_girsanov_mean() {
    Criterion c{"girsanov normalization"};
    std::vector<kfp::SystemSpec> systems;
    systems.push_back(kfp::linear_ou());
    systems.push_back(kfp::kinetic_fokker_planck(kfp::power_potential(0.5), 1));
    kfp::ObservableFn one = [](const State&) { return 1.0; };
    std::uint64_t seed = 0xacc3;
    for (const auto& sys : systems)
        for (double eps : {0.01, 0.1}) {
            kfp::ShiftedExpectation se = kfp::shifted_expectation(
                sys, one, st(0.3, 0.2), dir(1.0, 1.0), eps, mc(1.0, 64, 100000, seed++));
            double gap = std::abs(se.density_mean.mean - 1.0);
            c.require(gap <= 3.0 * se.density_mean.std_err,
                      sys.name() + " eps=" + fmt(eps) + ": |mean(R)-1|=" + fmt(gap) +
                          " > 3*se=" + fmt(3.0 * se.density_mean.std_err));
        }
    c.note("|mean(R)-1| <= 3 stderr at n=1e5 for eps=0.01,0.1 on both systems");
    return c;
}

// --- 4. shifted-expectation identity ----------------------------------------

Criterion criterion_shifted_expectation() {
    Criterion c{"shifted-expectation identity"};
    kfp::SystemSpec sys = kfp::linear_ou();
    const double eps = 0.1, t = 1.0;
    const int n_steps = 256;
    // Richardson measurement of the weighted-vs-direct bias difference on this
    // system gives a slope below 0.4*dt; c = 2 keeps a 5x margin.
    const double c_dt = 2.0 * (t / n_steps);
    std::uint64_t seed = 0x5e11;
    for (const char* name : {"tanh_x", "gauss_bump", "x_clipped"}) {
        kfp::Observable obs = kfp::make_observable(name);
        kfp::ShiftedExpectation se = kfp::shifted_expectation(
            sys, obs.fn, st(0.5, 0.0), dir(1.0, 1.0), eps, mc(t, n_steps, 20000, seed++));
        double gap = std::abs(se.weighted.mean - se.direct.mean);
        double tol = 3.0 * kfp::combined_stderr(se.weighted, se.direct) + 2.0 * c_dt;
        c.require(gap <= tol, std::string(name) + ": |weighted-direct|=" + fmt(gap) +
                                  " > " + fmt(tol));
        c.detail << (c.detail.str().empty() ? "" : "; ") << name << ": gap " << fmt(gap)
                 << " tol " << fmt(tol);
    }
    return c;
}

// --- 5. derivative formula vs oracles ---------------------------------------

Criterion criterion_gradient_oracle() {
    Criterion c{"derivative formula vs oracles"};
    kfp::SystemSpec ou = kfp::linear_ou();
    State p0 = st(0.3, 0.1);
    // Discrete-weight expectation bias measured against the continuum value
    // stays below 12*dt over this (f, t, h) grid at dt = t/max(64, 256 t);
    // c = 40 keeps a better than 3x margin.
    const double c_bias = 40.0;
    std::uint64_t seed = 0x9a0c;
    struct FCase {
        kfp::OuObservable tag;
        const char* obs_name;
    };
    for (FCase fc : {FCase{kfp::OuObservable::linear_x, "x_clipped"},
                     FCase{kfp::OuObservable::quadratic, "sqnorm_clipped"}}) {
        kfp::Observable obs = kfp::make_observable(fc.obs_name);
        for (double t : {0.25, 1.0, 4.0}) {
            int n_steps = std::max(64, static_cast<int>(256 * t));
            for (auto [h1, h2] : {std::pair{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}) {
                Direction h = dir(h1, h2);
                Estimate est = kfp::estimate_gradient_bismut(
                    ou, obs.fn, p0, h, mc(t, n_steps, 10000, seed++));
                double exact = kfp::ou_exact_gradient(fc.tag, p0, h, t);
                double tol = 3.0 * est.std_err + c_bias * (t / n_steps);
                double gap = std::abs(est.mean - exact);
                c.require(gap <= tol, std::string(fc.obs_name) + " t=" + fmt(t) + " h=(" +
                                          fmt(h1) + "," + fmt(h2) + "): |est-exact|=" +
                                          fmt(gap) + " > " + fmt(tol));
            }
        }
    }
    kfp::SystemSpec kin = kfp::kinetic_fokker_planck(kfp::power_potential(1.0), 1);
    kfp::Observable bump = kfp::make_observable("gauss_bump");
    State k0 = st(0.4, 0.1);
    Direction h = dir(1.0, 0.0);
    Estimate bi = kfp::estimate_gradient_bismut(kin, bump.fn, k0, h, mc(1.0, 256, 10000, 0xb1));
    Estimate fd = kfp::estimate_gradient_fd(kin, bump.fn, k0, h, mc(1.0, 256, 10000, 0xfd), 1e-3);
    double gap = std::abs(bi.mean - fd.mean);
    double tol = 3.0 * kfp::combined_stderr(bi, fd);
    c.require(gap <= tol, "kinetic bismut vs fd: gap " + fmt(gap) + " > 3*se=" + fmt(tol));
    c.note("18 linear-system oracle cases within 3 stderr + 40*dt; kinetic FD cross-check "
           "gap " + fmt(gap) + " <= " + fmt(tol));
    return c;
}

// --- 6. reorganized-weight cross-check --------------------------------------

// For the linear system both stochastic-integral weights have deterministic
// integrands, so E[x_t * weight] equals int_0^t K(t-s) g(s) ds with the
// noise-to-position kernel K(tau) = (e^{tau M})_{0,1}. Simpson quadrature of
// that integral gives an independent continuum value for each weight.
double linear_response_integral(double t, const std::function<double(double)>& g) {
    Eigen::Matrix2d M;
    M << 0.0, 1.0, -1.0, -1.0;
    const int panels = 2000;
    double hstep = t / panels, acc = 0.0;
    for (int i = 0; i <= 2 * panels; ++i) {
        double s = 0.5 * hstep * i;
        double w = i == 0 || i == 2 * panels ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double kernel = ((t - s) * M).exp()(0, 1);
        acc += w * kernel * g(s);
    }
    return acc * hstep / 6.0;
}

Criterion criterion_zhang_crosscheck() {
    Criterion c{"reorganized-weight cross-check"};
    kfp::SystemSpec sys = kfp::linear_ou();
    kfp::Observable obs = kfp::make_observable("x_clipped");
    State p0 = st(0.3, 0.1);
    Direction h = dir(1.0, 0.0);
    const double t = 1.0;
    const int n_steps = 256;
    Estimate bi = kfp::estimate_gradient_bismut(sys, obs.fn, p0, h, mc(t, n_steps, 20000, 0x2a1));
    Estimate zh = kfp::estimate_gradient_zhang(sys, obs.fn, p0, h, mc(t, n_steps, 20000, 0x2a2));
    double gap = std::abs(bi.mean - zh.mean);
    double tol = 3.0 * kfp::combined_stderr(bi, zh);
    if (gap <= tol) {
        c.detail << "estimators agree: gap " << fmt(gap) << " <= " << fmt(tol);
        return c;
    }
    // Disagreement branch: the comparison report must surface it, and each
    // estimator must match its own quadrature oracle so the gap is a property
    // of the two formulas rather than an implementation artifact.
    kfp::BoundReport rep = kfp::make_agreement("zhang_vs_bismut", zh, bi);
    c.require(!rep.passed, "agreement report did not flag the discrepancy");
    kfp::ControlPair cp = kfp::cubic_controls(t);
    double z = 1.0;
    auto g_cubic = [&](double s) {
        Direction th = kfp::theta(cp, h, z * Eigen::VectorXd::Ones(1), s, sys.A());
        return cp.d2u(s) * z - cp.d2v(s) * h.h2(0) - th.h1(0) - th.h2(0);
    };
    auto g_reorg = [&](double s) {
        double th1 = kfp::detail::int_gamma1(s, t) * h.h1(0) +
                     (t + kfp::detail::int_gamma2(s, t)) * h.h2(0);
        double th2 = kfp::detail::gamma1(s, t) * h.h1(0) -
                     kfp::detail::gamma2(s, t) * h.h2(0);
        return (-(th1 + th2) - kfp::detail::dgamma1(s, t) * h.h1(0) +
                kfp::detail::dgamma2(s, t) * h.h2(0)) /
               t;
    };
    double oracle_cubic = linear_response_integral(t, g_cubic);
    double oracle_reorg = linear_response_integral(t, g_reorg);
    double exact =
        kfp::ou_exact_gradient(kfp::OuObservable::linear_x, p0, h, t);
    c.require(std::abs(oracle_cubic - exact) <= 1e-6,
              "control-weight quadrature oracle off the exact gradient");
    c.require(std::abs(oracle_reorg - exact) > 0.05,
              "quadrature oracles coincide; disagreement would be an implementation bug");
    c.require(std::abs(bi.mean - oracle_cubic) <= 3.0 * bi.std_err + 20.0 * (t / n_steps),
              "control-weight estimator off its own oracle");
    c.require(std::abs(zh.mean - oracle_reorg) <= 3.0 * zh.std_err + 20.0 * (t / n_steps),
              "reorganized estimator off its own oracle");
    c.detail << "discrepancy surfaced: estimators " << fmt(zh.mean) << " vs " << fmt(bi.mean)
             << ", quadrature oracles " << fmt(oracle_reorg) << " vs " << fmt(oracle_cubic)
             << ", exact " << fmt(exact)
             << "; each estimator matches its own integrand, so the reorganized "
                "statement itself differs";
    return c;
}

// --- 7. Ito isometry ---------------------------------------------------------

Criterion criterion_isometry() {
    Criterion c{"ito isometry of the weight"};
    std::vector<kfp::SystemSpec> systems;
    systems.push_back(kfp::linear_ou());
    systems.push_back(kfp::cubic_example());
    systems.push_back(kfp::kinetic_fokker_planck(kfp::power_potential(1.0), 1));
    const double t = 1.0;
    const int n_paths = 20000, n_steps = 64;
    Direction h = dir(1.0, 1.0);
    std::uint64_t seed = 0x150;
    for (const auto& sys : systems) {
        State p0 = st(0.3, 0.1);
        Eigen::VectorXd z = sys.min_norm_preimage(h.h1);
        kfp::ControlPair ctrl = kfp::cubic_controls(t);
        kfp::PathGrid grid(t, n_steps);
        std::vector<double> sq(n_paths), qv(n_paths);
        for (int i = 0; i < n_paths; ++i) {
            kfp::PathRng rng(seed, i);
            kfp::BrownianPath bp = kfp::sample_brownian(sys.d(), grid, rng);
            kfp::Trajectory traj = kfp::simulate(sys, p0, grid, bp);
            kfp::WeightResult w = kfp::bismut_weight(sys, traj, bp, ctrl, h, z);
            sq[i] = w.weight * w.weight;
            qv[i] = w.quadratic_variation;
        }
        Estimate esq = kfp::summarize(sq), eqv = kfp::summarize(qv);
        double gap = std::abs(esq.mean - eqv.mean);
        double tol = 3.0 * kfp::combined_stderr(esq, eqv);
        c.require(gap <= tol, sys.name() + ": |E[M^2]-E[<M>]|=" + fmt(gap) + " > " + fmt(tol));
        seed++;
    }
    c.note("E[M^2] matches E[<M>] within 3 combined stderr on all three built-ins");
    return c;
}

// --- 8. gradient bound --------------------------------------------------------

Criterion criterion_gradient_bound() {
    Criterion c{"explicit gradient bound"};
    kfp::SystemSpec sys = kfp::linear_ou();
    kfp::BoundConstants bc = kfp::constants_for(sys, 1.0, 1.0);
    kfp::Observable obs = kfp::make_observable("tanh_x");
    std::uint64_t seed = 0x6b0;
    for (double t : {0.5, 1.0, 2.0})
        for (auto [h1, h2] : {std::pair{1.0, 0.0}, {0.0, 1.0}}) {
            kfp::BoundReport rep = kfp::check_gradient_bound(
                sys, obs.fn, st(0.3, 0.1), dir(h1, h2), mc(t, 128, 4000, seed++), bc);
            c.require(rep.passed, "t=" + fmt(t) + " h=(" + fmt(h1) + "," + fmt(h2) +
                                      "): margin " + fmt(rep.margin));
        }
    c.note("|grad P_t f|^2 <= (P_t f^2) Phi_t holds for f=tanh(x), t=0.5,1,2, both axes");
    return c;
}

// --- 9. variance blowup exponent ---------------------------------------------

Criterion criterion_variance_slope() {
    Criterion c{"variance blowup exponent"};
    kfp::SystemSpec sys = kfp::linear_ou();
    kfp::Observable obs = kfp::make_observable("tanh_x");
    Direction h = dir(1.0, 0.0);
    std::vector<double> ts = {0.05, 0.1, 0.2, 0.4};
    std::vector<double> lx, ly;
    std::uint64_t seed = 0x51093;
    for (double t : ts) {
        Estimate est = kfp::estimate_gradient_bismut(sys, obs.fn, st(0.3, 0.1), h,
                                                     mc(t, 256, 10000, seed++));
        double variance = est.std_err * est.std_err * static_cast<double>(est.n);
        lx.push_back(std::log(t));
        ly.push_back(std::log(variance));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= ly.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    double slope = num / den;
    c.require(slope >= -3.5 && slope <= -2.5, "log-log slope " + fmt(slope));
    c.detail << "estimator variance ~ t^" << fmt(slope) << " over t in [0.05,0.4]";
    return c;
}

// --- 10. power Harnack ---------------------------------------------------------

Criterion criterion_harnack() {
    Criterion c{"power-Harnack inequality"};
    kfp::SystemSpec ou = kfp::linear_ou();
    kfp::BoundConstants bc = kfp::constants_for(ou, 1.0, 1.0);
    std::uint64_t seed = 0xa10;
    for (const char* name : {"gauss_bump", "one_plus_tanh_sq_x"}) {
        kfp::Observable obs = kfp::make_observable(name);
        for (double alpha : {1.5, 2.0, 4.0})
            for (auto [ax, ay] : {std::pair{0.5, 0.0}, {0.0, 0.5}}) {
                kfp::BoundReport rep = kfp::check_harnack(ou, obs.fn, st(ax, ay), st(0, 0),
                                                          alpha, mc(1.0, 128, 2000, seed++), bc);
                c.require(rep.passed, std::string(name) + " alpha=" + fmt(alpha) + " a=(" +
                                          fmt(ax) + "," + fmt(ay) + "): margin " +
                                          fmt(rep.margin));
            }
    }
    std::vector<kfp::SystemSpec> systems;
    systems.push_back(kfp::linear_ou());
    systems.push_back(kfp::cubic_example());
    systems.push_back(kfp::kinetic_fokker_planck(kfp::power_potential(1.0), 1));
    kfp::Observable bump = kfp::make_observable("gauss_bump");
    for (const auto& sys : systems)
        for (double alpha : {1.5, 2.0, 4.0}) {
            kfp::BoundReport rep = kfp::check_harnack(
                sys, bump.fn, st(0.3, 0.1), st(0.3, 0.1), alpha, mc(1.0, 128, 4000, seed++),
                kfp::constants_for(sys, 1.0, 1.0));
            c.require(rep.passed, sys.name() + " coincident alpha=" + fmt(alpha) +
                                      ": margin " + fmt(rep.margin));
        }
    c.note("12 distinct-point cases and the coincident Jensen case on all systems pass");
    return c;
}

// --- 11. log-Harnack ------------------------------------------------------------

Criterion criterion_log_harnack() {
    Criterion c{"log-Harnack inequality"};
    kfp::Observable obs = kfp::make_observable("one_plus_tanh_sq_x");
    kfp::SystemSpec ou = kfp::linear_ou();
    kfp::BoundConstants bc = kfp::constants_for(ou, 1.0, 1.0);
    State a = st(0.3, 0.0), b = st(0.0, 0.0);
    kfp::BoundReport phi_route = kfp::check_log_harnack(
        ou, obs.fn, a, b, mc(1.0, 128, 100000, 0x10a), kfp::LogHarnackRoute::phi_constants, &bc);
    c.require(phi_route.passed, "phi route margin " + fmt(phi_route.margin));
    kfp::BoundReport ent_route_ou = kfp::check_log_harnack(
        ou, obs.fn, a, b, mc(1.0, 128, 100000, 0x10b), kfp::LogHarnackRoute::girsanov_entropy);
    c.require(ent_route_ou.passed, "entropy route margin " + fmt(ent_route_ou.margin));
    kfp::SystemSpec cubic = kfp::cubic_example();
    kfp::BoundReport ent_route_cubic = kfp::check_log_harnack(
        cubic, obs.fn, a, b, mc(1.0, 128, 100000, 0x10c),
        kfp::LogHarnackRoute::girsanov_entropy);
    c.require(ent_route_cubic.passed,
              "cubic entropy route margin " + fmt(ent_route_cubic.margin));
    c.detail << "linear system margins " << fmt(phi_route.margin) << " (phi) / "
             << fmt(ent_route_ou.margin) << " (entropy); cubic entropy margin "
             << fmt(ent_route_cubic.margin);
    return c;
}

// --- 12. Lyapunov structure ------------------------------------------------------

Criterion criterion_lyapunov() {
    Criterion c{"Lyapunov structure"};
    // Kinetic identity LW = d*W, recomputed through the chain rule with the
    // potential inserted term by term so the cancellation happens in floating
    // point here rather than inside the library.
    for (double l : {1.0, 2.0}) {
        kfp::SystemSpec sys = kfp::kinetic_fokker_planck(kfp::power_potential(l), 1);
        double worst = 0.0;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                double x = -3.0 + 6.0 * i / 9.0, y = -3.0 + 6.0 * j / 9.0;
                double vp = 2.0 * l * x * std::pow(1.0 + x * x, l - 1.0);
                double w = std::exp(2.0 * std::pow(1.0 + x * x, l) + y * y);
                double chain = w * (2.0 * vp * y) + w * 2.0 * y * (-vp - y) +
                               w * (1.0 + 2.0 * y * y);
                double lw = sys.lyapunov().LW(st(x, y));
                worst = std::max({worst, std::abs(chain - lw) / w,
                                  std::abs(lw - 1.0 * sys.lyapunov().W(st(x, y))) / w});
            }
        c.require(worst <= 1e-8, "l=" + fmt(l) + ": worst relative defect " + fmt(worst));
        c.detail << (c.detail.str().empty() ? "" : "; ") << "kinetic l=" << fmt(l)
                 << " LW=d*W defect " << fmt(worst);
    }
    kfp::SystemSpec cubic = kfp::cubic_example();
    kfp::GridSpec grid;
    grid.lo = Eigen::VectorXd::Constant(2, -3.0);
    grid.hi = Eigen::VectorXd::Constant(2, 3.0);
    grid.points_per_dim = 21;
    for (int i = 0; i < 21; ++i)
        for (int j = 0; j < 21; ++j) {
            double x = -3.0 + 6.0 * i / 20.0, y = -3.0 + 6.0 * j / 20.0;
            double lw = cubic.lyapunov().LW(st(x, y));
            c.require(std::abs(lw - (1.0 - 2.0 * y * y)) <= 1e-12 * (1.0 + std::abs(lw)),
                      "cubic LW differs from 1-2y^2");
            c.require(lw <= cubic.lyapunov().W(st(x, y)), "cubic LW > W on the box");
        }
    c.require(kfp::lyapunov_check(cubic, grid).passed, "cubic grid certificate failed");
    kfp::GridSpec tw_grid;
    tw_grid.lo = Eigen::VectorXd::Constant(2, -6.0);
    tw_grid.hi = Eigen::VectorXd::Constant(2, 6.0);
    tw_grid.points_per_dim = 41;
    kfp::TildeWResult tw = kfp::tilde_w_check(0.5, 0.1, 1.0, tw_grid);
    c.require(tw.alpha > 0.0 && std::isfinite(tw.K) && tw.report.passed,
              "tilde-W fit: alpha=" + fmt(tw.alpha) + " K=" + fmt(tw.K));
    c.detail << "; cubic LW=1-2y^2<=W on the box; tilde-W fit alpha=" << fmt(tw.alpha)
             << " K=" << fmt(tw.K);
    return c;
}

// --- 13. reproducibility over the golden configs ---------------------------------

struct GoldenConfig {
    const char* file;
    int expected_exit;
};

Criterion criterion_reproducibility() {
    Criterion c{"golden-config reproducibility"};
    const std::vector<GoldenConfig> suite = {
        {"simulate_linear.ini", 0},  {"gradient_linear.ini", 0},
        {"gradient_reorganized.ini", 2}, {"couple_linear.ini", 0},
        {"harnack_linear.ini", 0},   {"bounds_linear.ini", 0},
        {"lyapunov_cubic.ini", 0},   {"lyapunov_kinetic.ini", 0},
        {"variance_linear.ini", 0},  {"fail_statistical.ini", 2},
        {"invalid_alpha.ini", 1},
    };
    fs::path work = fs::current_path() / "acceptance_runs";
    std::error_code ec;
    fs::remove_all(work, ec);
    auto run_suite = [&](const fs::path& dst) {
        fs::create_directories(dst);
        for (const GoldenConfig& g : suite) {
            std::string cmd = "cd \"" + dst.string() + "\" && \"" KFP_CLI_PATH "\" run \"" +
                              (fs::path(KFP_CONFIG_DIR) / g.file).string() +
                              "\" >> run_log.txt 2>&1";
            int status = std::system(cmd.c_str());
            int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            c.require(code == g.expected_exit, std::string(g.file) + ": exit " +
                                                   std::to_string(code) + ", expected " +
                                                   std::to_string(g.expected_exit));
        }
    };
    run_suite(work / "first");
    run_suite(work / "second");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(work / "first")) {
        std::string ext = entry.path().extension().string();
        if (ext != ".csv" && ext != ".json") continue;
        fs::path twin = work / "second" / entry.path().filename();
        c.require(fs::exists(twin), entry.path().filename().string() + " missing in rerun");
        if (fs::exists(twin)) {
            c.require(slurp(entry.path()) == slurp(twin),
                      entry.path().filename().string() + " differs between runs");
            ++compared;
        }
    }
    c.require(compared >= 10, "only " + std::to_string(compared) + " output files compared");
    c.detail << suite.size() << " configs, expected exit codes observed, " << compared
             << " output files byte-identical across two runs";
    return c;
}

}  // namespace

int main() {
    std::vector<Criterion (*)()> criteria = {
        criterion_controls,       criterion_coupling,      criterion_girsanov_mean,
        criterion_shifted_expectation, criterion_gradient_oracle, criterion_zhang_crosscheck,
        criterion_isometry,       criterion_gradient_bound, criterion_variance_slope,
        criterion_harnack,        criterion_log_harnack,   criterion_lyapunov,
        criterion_reproducibility,
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Criterion c = criteria[i]();
        failures += c.passed ? 0 : 1;
        std::printf("[%2zu/13] %s  %s  (%s)\n", i + 1, c.passed ? "PASS" : "FAIL",
                    c.name.c_str(), c.detail.str().c_str());
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("acceptance: 13/13 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", failures);
    return 1;
}
