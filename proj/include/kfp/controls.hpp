#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

#include "kfp/model.hpp"

namespace kfp {

// Control pair (u, v) on [0, t] with the boundary law
//   u(0) = 0, u(t) = 1, u'(0) = u'(t) = 0,
//   v(0) = v(t) = 0, v'(0) = 1, v'(t) = 0,
// together with first and second derivatives.
struct ControlPair {
    double t = 1.0;
    std::function<double(double)> u, du, d2u;
    std::function<double(double)> v, dv, d2v;
};

// Polynomial controls u(s) = s^2 (3t - 2s) / t^3 and v(s) = s (t - s)^2 / t^2.
// u and u' are evaluated through r = s/t (u = r^2 (3 - 2r), u' = 6 r (1-r) / t)
// and v, v' keep the factor (t - s), so all eight boundary values of the
// control law come out exact in floating point, not merely to rounding.
inline ControlPair cubic_controls(double t) {
    if (!(t > 0.0)) throw std::invalid_argument("time horizon must be positive");
    ControlPair c;
    c.t = t;
    double t2 = t * t;
    c.u = [t](double s) {
        double r = s / t;
        return r * r * (3.0 - 2.0 * r);
    };
    c.du = [t](double s) {
        double r = s / t;
        return 6.0 * r * (1.0 - r) / t;
    };
    c.d2u = [t, t2](double s) { return 6.0 * (1.0 - 2.0 * s / t) / t2; };
    c.v = [t, t2](double s) { return s * (t - s) * (t - s) / t2; };
    c.dv = [t, t2](double s) { return (t - s) * (t - 3.0 * s) / t2; };
    c.d2v = [t, t2](double s) { return 2.0 * (3.0 * s - 2.0 * t) / t2; };
    return c;
}

// The control part of the Bismut integrand: u''(s) z - v''(s) h2.
inline Eigen::VectorXd lambda_term(const ControlPair& controls, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& h2, double s) {
    return controls.d2u(s) * z - controls.d2v(s) * h2;
}

// Deterministic shift Theta(h, z, s) = ((1 - u(s)) h1 + v(s) A h2,
//                                       v'(s) h2 - u'(s) z).
// Theta(., 0) = h and Theta(., t) = 0 by the boundary law.
inline Direction theta(const ControlPair& controls, const Direction& h,
                       const Eigen::VectorXd& z, double s, const Eigen::MatrixXd& A) {
    Direction out;
    out.h1 = (1.0 - controls.u(s)) * h.h1 + controls.v(s) * (A * h.h2);
    out.h2 = controls.dv(s) * h.h2 - controls.du(s) * z;
    return out;
}

}  // namespace kfp
