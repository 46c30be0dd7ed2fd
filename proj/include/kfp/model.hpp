#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace kfp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Point of the state space: x is the position block (dimension m), y the
// velocity block (dimension d).
struct State {
    VectorXd x;
    VectorXd y;
};

// Direction of differentiation h = (h1, h2) with h1 in R^m, h2 in R^d.
struct Direction {
    VectorXd h1;
    VectorXd h2;
};

// Lyapunov data attached to a system: W >= 1, its analytic image LW under the
// generator, and a constant C with LW <= C*W on the region of interest.
struct LyapunovSpec {
    std::function<double(const State&)> W;
    std::function<double(const State&)> LW;
    double growth_constant = 0.0;
};

// Scalar potential and its gradient, used to build kinetic systems with
// velocity drift -grad V(x) - y.
struct PotentialSpec {
    std::function<double(const VectorXd&)> V;
    std::function<VectorXd(const VectorXd&)> gradV;
};

// Minimum-norm solution z of A z = h1, i.e. z = A^T (A A^T)^{-1} h1.
inline VectorXd min_norm_preimage(const MatrixXd& A, const VectorXd& h1) {
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-13 * sv(0) || sv(0) == 0.0)
        throw std::runtime_error("rank deficiency");
    return svd.solve(h1);
}

// Operator norm of A^{-1} in the pseudo-inverse sense: 1 / smallest singular value.
inline double inv_norm(const MatrixXd& A) {
    Eigen::JacobiSVD<MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-13 * sv(0) || sv(0) == 0.0)
        throw std::runtime_error("rank deficiency");
    return 1.0 / sv(sv.size() - 1);
}

// Operator norm (largest singular value).
inline double op_norm(const MatrixXd& A) {
    Eigen::JacobiSVD<MatrixXd> svd(A);
    return svd.singularValues().size() == 0 ? 0.0 : svd.singularValues()(0);
}

// Coefficients of the degenerate diffusion
//   dX = A Y dt,   dY = sigma dB + Z(s, X, Y) dt
// with A an m x d matrix of full row rank and sigma invertible d x d.
// drift_dir_deriv(s, p, theta) is the directional derivative of Z at p along
// the state-space direction theta = (theta1, theta2).
class SystemSpec {
  public:
    using Drift = std::function<VectorXd(double, const State&)>;
    using DriftDirDeriv = std::function<VectorXd(double, const State&, const Direction&)>;

    SystemSpec(std::string name, MatrixXd A, MatrixXd sigma, Drift drift,
               DriftDirDeriv drift_dir_deriv,
               std::optional<std::pair<double, double>> lipschitz = {},
               std::optional<LyapunovSpec> lyapunov = {})
        : name_(std::move(name)),
          A_(std::move(A)),
          sigma_(std::move(sigma)),
          drift_(std::move(drift)),
          drift_dir_deriv_(std::move(drift_dir_deriv)),
          lipschitz_(lipschitz),
          lyapunov_(std::move(lyapunov)) {
        if (A_.rows() == 0 || A_.cols() == 0 || A_.rows() > A_.cols())
            throw std::runtime_error("rank deficiency");
        Eigen::JacobiSVD<MatrixXd> asvd(A_);
        const auto& sv = asvd.singularValues();
        if (sv(sv.size() - 1) <= 1e-13 * sv(0) || sv(0) == 0.0)
            throw std::runtime_error("rank deficiency");
        smin_A_ = sv(sv.size() - 1);
        smax_A_ = sv(0);
        if (sigma_.rows() != sigma_.cols() || sigma_.rows() != A_.cols())
            throw std::runtime_error("sigma not invertible");
        Eigen::FullPivLU<MatrixXd> lu(sigma_);
        if (!lu.isInvertible()) throw std::runtime_error("sigma not invertible");
        sigma_inv_ = lu.inverse();
        aat_solver_.compute(A_ * A_.transpose());
    }

    const std::string& name() const { return name_; }
    int m() const { return static_cast<int>(A_.rows()); }
    int d() const { return static_cast<int>(A_.cols()); }
    const MatrixXd& A() const { return A_; }
    const MatrixXd& sigma() const { return sigma_; }
    const MatrixXd& sigma_inv() const { return sigma_inv_; }

    VectorXd drift(double s, const State& p) const { return drift_(s, p); }
    VectorXd drift_dir_deriv(double s, const State& p, const Direction& theta) const {
        return drift_dir_deriv_(s, p, theta);
    }

    // z = A^T (A A^T)^{-1} h1 using the factorization cached at construction.
    VectorXd min_norm_preimage(const VectorXd& h1) const {
        return A_.transpose() * aat_solver_.solve(h1);
    }

    double inv_norm_A() const { return 1.0 / smin_A_; }
    double norm_A() const { return smax_A_; }
    double norm_sigma_inv() const { return op_norm(sigma_inv_); }

    // True when m = d and A is exactly the identity (the square case some
    // couplings are restricted to).
    bool identity_A() const {
        return A_.rows() == A_.cols() &&
               (A_ - MatrixXd::Identity(A_.rows(), A_.cols())).cwiseAbs().maxCoeff() == 0.0;
    }

    bool has_lipschitz() const { return lipschitz_.has_value(); }
    double lipschitz_x() const { return lipschitz_->first; }
    double lipschitz_y() const { return lipschitz_->second; }

    bool has_lyapunov() const { return lyapunov_.has_value(); }
    const LyapunovSpec& lyapunov() const { return *lyapunov_; }

  private:
    std::string name_;
    MatrixXd A_;
    MatrixXd sigma_;
    Drift drift_;
    DriftDirDeriv drift_dir_deriv_;
    std::optional<std::pair<double, double>> lipschitz_;
    std::optional<LyapunovSpec> lyapunov_;
    MatrixXd sigma_inv_;
    double smin_A_ = 0.0;
    double smax_A_ = 0.0;
    Eigen::LDLT<MatrixXd> aat_solver_;
};

// Kinetic system in R^dim x R^dim: A = sigma = I, Z = -grad V(x) - y.
// The Hessian action needed by the directional derivative is taken by forward
// finite differences of gradV along theta1 with step 1e-6 * (1 + |x|).
// Lyapunov function W = exp(2 V(x) + |y|^2) satisfies LW = dim * W.
inline SystemSpec kinetic_fokker_planck(const PotentialSpec& potential, int dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    MatrixXd eye = MatrixXd::Identity(dim, dim);
    auto V = potential.V;
    auto gradV = potential.gradV;
    auto drift = [gradV](double, const State& p) -> VectorXd {
        return -gradV(p.x) - p.y;
    };
    auto dd = [gradV](double, const State& p, const Direction& th) -> VectorXd {
        VectorXd out = -th.h2;
        if (th.h1.size() > 0 && th.h1.cwiseAbs().maxCoeff() > 0.0) {
            double step = 1e-6 * (1.0 + p.x.norm());
            out -= (gradV(p.x + step * th.h1) - gradV(p.x)) / step;
        }
        return out;
    };
    LyapunovSpec lyap;
    lyap.W = [V](const State& p) { return std::exp(2.0 * V(p.x) + p.y.squaredNorm()); };
    lyap.LW = [V, dim](const State& p) {
        return dim * std::exp(2.0 * V(p.x) + p.y.squaredNorm());
    };
    lyap.growth_constant = static_cast<double>(dim);
    return SystemSpec("kinetic_fp", eye, eye, drift, dd, {}, lyap);
}

// Potential V(x) = (1 + |x|^2)^l with gradient 2 l x (1 + |x|^2)^{l-1}.
inline PotentialSpec power_potential(double l) {
    PotentialSpec p;
    p.V = [l](const VectorXd& x) { return std::pow(1.0 + x.squaredNorm(), l); };
    p.gradV = [l](const VectorXd& x) -> VectorXd {
        return 2.0 * l * std::pow(1.0 + x.squaredNorm(), l - 1.0) * x;
    };
    return p;
}

// One-dimensional system with cubic velocity drift Z = -x^3 - y.
// W = 1 + x^4/2 + y^2 gives LW = 1 - 2 y^2 <= W.
inline SystemSpec cubic_example() {
    MatrixXd one = MatrixXd::Identity(1, 1);
    auto drift = [](double, const State& p) -> VectorXd {
        VectorXd z(1);
        z(0) = -p.x(0) * p.x(0) * p.x(0) - p.y(0);
        return z;
    };
    auto dd = [](double, const State& p, const Direction& th) -> VectorXd {
        VectorXd z(1);
        z(0) = -3.0 * p.x(0) * p.x(0) * th.h1(0) - th.h2(0);
        return z;
    };
    LyapunovSpec lyap;
    lyap.W = [](const State& p) {
        double x = p.x(0), y = p.y(0);
        return 1.0 + 0.5 * x * x * x * x + y * y;
    };
    lyap.LW = [](const State& p) { return 1.0 - 2.0 * p.y(0) * p.y(0); };
    lyap.growth_constant = 1.0;
    return SystemSpec("cubic", one, one, drift, dd, {}, lyap);
}

// Linear system Z = -x - y in one position and one velocity dimension. The
// pair (X, Y) is then an exact Gaussian process, which supplies closed-form
// oracles. Global Lipschitz constants of Z are K1 = K2 = 1.
inline SystemSpec linear_ou() {
    MatrixXd one = MatrixXd::Identity(1, 1);
    auto drift = [](double, const State& p) -> VectorXd {
        VectorXd z(1);
        z(0) = -p.x(0) - p.y(0);
        return z;
    };
    auto dd = [](double, const State&, const Direction& th) -> VectorXd {
        VectorXd z(1);
        z(0) = -th.h1(0) - th.h2(0);
        return z;
    };
    LyapunovSpec lyap;
    lyap.W = [](const State& p) { return 1.0 + p.x(0) * p.x(0) + p.y(0) * p.y(0); };
    lyap.LW = [](const State& p) { return 1.0 - 2.0 * p.y(0) * p.y(0); };
    lyap.growth_constant = 1.0;
    return SystemSpec("linear_ou", one, one, drift, dd, std::make_pair(1.0, 1.0), lyap);
}

}  // namespace kfp
