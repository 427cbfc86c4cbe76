#pragma once

// Mass-normalized second-order model
//   Omega^2 q'' + Omega D q' + K q + f_nl(q) = f_ex(tau),
// with ' = d/dtau and a displacement-only nonlinear force.

#include <hbcheb/fourier.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <string>

namespace hbcheb {

struct ModelSpec {
  std::string name;
  int d = 0;
  Eigen::MatrixXd D;  // d x d damping
  Eigen::MatrixXd K;  // d x d stiffness
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f_nl;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::MatrixXcd f_ex;  // one-sided excitation coefficients, d x (K_ex+1)

  double omega1 = 1.0;          // reference natural frequency for axes
  Eigen::RowVectorXd output;    // amplitude channel weights

  // AFT sampling policy: polynomial forces use the alias-safe 4H+1 rule,
  // non-polynomial ones a fixed power-of-two grid.
  int aft_pow2 = 0;
  // Highest harmonic a polynomial force can generate per retained harmonic
  // (3 for a cubic); 0 marks a non-polynomial force.
  int poly_harmonic_degree = 3;

  // Monotone bound Delta(delta) on the Jacobian variation within a
  // delta-ball around the given orbit.
  std::function<double(const FourierSeries&, double)> delta_bound;

  [[nodiscard]] int n_aft(int H) const {
    return aft_pow2 > 0 ? (1 << aft_pow2) : 4 * H + 1;
  }

  [[nodiscard]] int h_plus(int H) const {
    return poly_harmonic_degree > 0 ? poly_harmonic_degree * H
                                    : n_aft(H) / 2 - 1;
  }

  /// Excitation coefficients zero-padded or truncated to H+1 columns.
  [[nodiscard]] Eigen::MatrixXcd excitation(int H) const {
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(d, H + 1);
    const int keep = std::min<int>(H + 1, static_cast<int>(f_ex.cols()));
    f.leftCols(keep) = f_ex.leftCols(keep);
    return f;
  }
};

}  // namespace hbcheb
