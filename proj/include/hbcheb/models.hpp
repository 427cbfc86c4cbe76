#pragma once

// Benchmark model catalog. All models are mass-normalized and forced by
// cosine excitation, so the one-sided harmonic-1 coefficient is half the
// cosine amplitude.

#include <hbcheb/model.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hbcheb {

/// Softening Duffing oscillator
///   q'' + 0.12 q' + q - 0.1 q^3 = 0.2 cos(Omega t).
[[nodiscard]] inline ModelSpec duffing() {
  ModelSpec m;
  m.name = "duffing";
  m.d = 1;
  m.D = Eigen::MatrixXd::Constant(1, 1, 0.12);
  m.K = Eigen::MatrixXd::Identity(1, 1);
  m.f_nl = [](const Eigen::VectorXd& q) {
    return Eigen::VectorXd::Constant(1, -0.1 * q(0) * q(0) * q(0)).eval();
  };
  m.jacobian = [](const Eigen::VectorXd& q) {
    return Eigen::MatrixXd::Constant(1, 1, -0.3 * q(0) * q(0)).eval();
  };
  m.f_ex = Eigen::MatrixXcd::Zero(1, 2);
  m.f_ex(0, 1) = 0.1;
  m.omega1 = 1.0;
  m.output = Eigen::RowVectorXd::Ones(1);
  m.poly_harmonic_degree = 3;
  // |J(q+s) - J(q)| <= 0.3 ((Qmax + delta)^2 - Qmax^2) with the coefficient
  // sum Qmax bounding |q(tau)| from above.
  m.delta_bound = [](const FourierSeries& q, double delta) {
    double Q = std::abs(q.coef(0, 0));
    for (int k = 1; k <= q.harmonics(); ++k) Q += 2.0 * std::abs(q.coef(0, k));
    return 0.3 * ((Q + delta) * (Q + delta) - Q * Q);
  };
  return m;
}

namespace detail {

inline double stop_force(double q1, double eps) {
  const double s = 100.0 * (q1 - 1.0);
  return 0.5 * s + std::sqrt(0.25 * s * s + eps);
}

inline double stop_slope(double q1, double eps) {
  const double s = 100.0 * (q1 - 1.0);
  return 50.0 * (1.0 + s / std::sqrt(s * s + 4.0 * eps));
}

}  // namespace detail

/// Two-DOF oscillator chain with a regularized unilateral stop of stiffness
/// 100 at unit clearance on q1, forced by 0.1 cos(Omega t) on q2.
[[nodiscard]] inline ModelSpec two_dof_stop(double eps_reg = 0.2) {
  if (!(eps_reg > 0.0)) {
    throw std::invalid_argument("regularization parameter must be positive");
  }
  ModelSpec m;
  m.name = "two_dof_stop";
  m.d = 2;
  m.D.resize(2, 2);
  m.D << 0.03, -0.03, -0.03, 0.06;
  m.K.resize(2, 2);
  m.K << 1.0, -1.0, -1.0, 2.0;
  m.f_nl = [eps_reg](const Eigen::VectorXd& q) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2);
    f(0) = detail::stop_force(q(0), eps_reg);
    return f;
  };
  m.jacobian = [eps_reg](const Eigen::VectorXd& q) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, 2);
    J(0, 0) = detail::stop_slope(q(0), eps_reg);
    return J;
  };
  m.f_ex = Eigen::MatrixXcd::Zero(2, 2);
  m.f_ex(1, 1) = 0.05;
  m.omega1 = std::sqrt((3.0 - std::sqrt(5.0)) / 2.0);
  m.output.resize(2);
  m.output << 1.0, 0.0;
  m.aft_pow2 = 13;
  m.poly_harmonic_degree = 0;
  // The slope is monotone increasing, so the one-sided difference evaluated
  // on a dense grid bounds the Jacobian variation; the transition region is
  // narrow, hence the sampling safety factor.
  m.delta_bound = [eps_reg](const FourierSeries& q, double delta) {
    if (delta == 0.0) return 0.0;
    double worst = 0.0;
    const auto scan = [&](int n_grid) {
      for (int n = 0; n < n_grid; ++n) {
        const double q1 = q.eval(kTwoPi * n / n_grid)(0);
        worst = std::max(worst, detail::stop_slope(q1 + delta, eps_reg) -
                                    detail::stop_slope(q1, eps_reg));
      }
    };
    scan(1 << 12);
    scan(1 << 13);
    return 1.05 * worst;
  };
  return m;
}

/// Linear model with zero nonlinearity; the closed-form FRF oracle of the
/// solver and continuation tests.
[[nodiscard]] inline ModelSpec linear_model(const Eigen::MatrixXd& D,
                                            const Eigen::MatrixXd& K,
                                            const Eigen::VectorXd& fex_cos) {
  ModelSpec m;
  m.name = "linear";
  m.d = static_cast<int>(K.rows());
  m.D = D;
  m.K = K;
  m.f_nl = [d = m.d](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(d).eval();
  };
  m.jacobian = [d = m.d](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(d, d).eval();
  };
  m.f_ex = Eigen::MatrixXcd::Zero(m.d, 2);
  m.f_ex.col(1) = 0.5 * fex_cos.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  m.omega1 = std::sqrt(es.eigenvalues()(0));
  m.output = Eigen::RowVectorXd::Zero(m.d);
  m.output(0) = 1.0;
  m.poly_harmonic_degree = 1;
  m.delta_bound = [](const FourierSeries&, double) { return 0.0; };
  return m;
}

}  // namespace hbcheb
