#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "kfp/model.hpp"

namespace kfp {

using Eigen::Matrix2d;
using Eigen::Vector2d;

// Gaussian law of (X_t, Y_t) for the linear system dX = Y dt, dY = dB - (X+Y) dt.
struct OuLaw {
    Vector2d mean;
    Matrix2d cov;
};

// Drift matrix M of the linear system: d(X,Y) = M (X,Y) dt + (0, dB).
inline Matrix2d ou_drift_matrix() {
    Matrix2d M;
    M << 0.0, 1.0, -1.0, -1.0;
    return M;
}

// mean = e^{tM} (x, y), cov = int_0^t e^{sM} N e^{sM^T} ds with N = diag(0, 1).
// The covariance integral is evaluated by composite Simpson quadrature with
// panels panels (the integrand is entire, so the error is negligible well
// below the tolerances the oracle is used at).
inline OuLaw ou_exact_mean_cov(double t, const State& initial, int panels = 10000) {
    if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
    if (initial.x.size() != 1 || initial.y.size() != 1)
        throw std::invalid_argument("oracle is for the 1+1 dimensional linear system");
    Matrix2d M = ou_drift_matrix();
    Vector2d z0(initial.x(0), initial.y(0));
    OuLaw law;
    if (t == 0.0) {
        law.mean = z0;
        law.cov = Matrix2d::Zero();
        return law;
    }
    law.mean = (t * M).exp() * z0;
    if (panels % 2 == 1) ++panels;
    Matrix2d N = Matrix2d::Zero();
    N(1, 1) = 1.0;
    double h = t / panels;
    Matrix2d acc = Matrix2d::Zero();
    for (int k = 0; k <= panels; ++k) {
        Matrix2d E = (k * h * M).exp();
        double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        acc += w * (E * N * E.transpose());
    }
    law.cov = (h / 3.0) * acc;
    return law;
}

enum class OuObservable { linear_x, linear_y, quadratic };

// Exact semigroup value P_t f at the initial point for the supported f.
inline double ou_exact_semigroup(OuObservable f, const State& initial, double t) {
    OuLaw law = ou_exact_mean_cov(t, initial);
    switch (f) {
        case OuObservable::linear_x: return law.mean(0);
        case OuObservable::linear_y: return law.mean(1);
        case OuObservable::quadratic:
            return law.mean.squaredNorm() + law.cov.trace();
    }
    throw std::logic_error("unreachable");
}

// Exact directional derivative of P_t f at the initial point along h.
// P_t f depends on the start only through mean(t) = e^{tM} (x, y), so for
// f = x or f = y the derivative is a row of e^{tM} applied to h, and for
// f = x^2 + y^2 it is 2 <mean(t), e^{tM} h>.
inline double ou_exact_gradient(OuObservable f, const State& initial, const Direction& h,
                                double t) {
    if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
    Matrix2d E = (t * ou_drift_matrix()).exp();
    Vector2d hv(h.h1(0), h.h2(0));
    Vector2d Eh = E * hv;
    switch (f) {
        case OuObservable::linear_x: return Eh(0);
        case OuObservable::linear_y: return Eh(1);
        case OuObservable::quadratic: {
            Vector2d z0(initial.x(0), initial.y(0));
            return 2.0 * (E * z0).dot(Eh);
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace kfp
