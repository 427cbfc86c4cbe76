#pragma once

// Truncated Fourier representation of periodic states in normalized time
// tau = Omega * t, stored one-sided with implied conjugate symmetry:
// q(tau) = c(0) + sum_{k=1..H} 2 Re( c(k) e^{i k tau} ).

#include <hbcheb/chebyshev.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace hbcheb {

struct FourierSeries {
  double Omega = 1.0;
  Eigen::MatrixXcd coef;  // d x (H+1), column k = coefficient of e^{i k tau}

  FourierSeries() = default;
  FourierSeries(int d, int H, double omega)
      : Omega(omega), coef(Eigen::MatrixXcd::Zero(d, H + 1)) {}

  [[nodiscard]] int harmonics() const { return static_cast<int>(coef.cols()) - 1; }
  [[nodiscard]] int dof() const { return static_cast<int>(coef.rows()); }

  [[nodiscard]] Eigen::VectorXd eval(double tau) const {
    Eigen::VectorXd q = coef.col(0).real();
    const std::complex<double> w(std::cos(tau), std::sin(tau));
    std::complex<double> p = w;
    for (int k = 1; k <= harmonics(); ++k) {
      q.noalias() += 2.0 * (coef.col(k) * p).real();
      p *= w;
    }
    return q;
  }

  /// d q / d tau.
  [[nodiscard]] Eigen::VectorXd eval_derivative(double tau) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dof());
    const std::complex<double> w(std::cos(tau), std::sin(tau));
    std::complex<double> p = w;
    for (int k = 1; k <= harmonics(); ++k) {
      u.noalias() += 2.0 * (coef.col(k) * (std::complex<double>(0.0, k) * p)).real();
      p *= w;
    }
    return u;
  }

  /// Same series with the harmonic count padded or truncated to H.
  [[nodiscard]] FourierSeries with_harmonics(int H) const {
    FourierSeries out(dof(), H, Omega);
    const int keep = std::min(H, harmonics());
    out.coef.leftCols(keep + 1) = coef.leftCols(keep + 1);
    return out;
  }
};

/// Real unknown vector of dimension d*(2H+1):
/// [Re c0; Re c1; Im c1; ...; Re cH; Im cH] block-wise over the d DOFs.
[[nodiscard]] inline Eigen::VectorXd pack_series(const FourierSeries& q) {
  const int d = q.dof(), H = q.harmonics();
  Eigen::VectorXd x(d * (2 * H + 1));
  x.head(d) = q.coef.col(0).real();
  for (int k = 1; k <= H; ++k) {
    x.segment(d + (k - 1) * 2 * d, d) = q.coef.col(k).real();
    x.segment(d + (k - 1) * 2 * d + d, d) = q.coef.col(k).imag();
  }
  return x;
}

[[nodiscard]] inline FourierSeries unpack_series(const Eigen::VectorXd& x,
                                                 int d, int H, double Omega) {
  if (x.size() != d * (2 * H + 1)) {
    throw std::invalid_argument("packed state length mismatch");
  }
  FourierSeries q(d, H, Omega);
  q.coef.col(0) = x.head(d).cast<std::complex<double>>();
  for (int k = 1; k <= H; ++k) {
    q.coef.col(k) = x.segment(d + (k - 1) * 2 * d, d) +
                    std::complex<double>(0, 1) *
                        x.segment(d + (k - 1) * 2 * d + d, d).eval();
  }
  return q;
}

/// Peak of |w . q(tau)| over a dense equidistant grid; the amplitude measure
/// attached to branch points.
[[nodiscard]] inline double max_abs_output(const FourierSeries& q,
                                           const Eigen::RowVectorXd& w,
                                           int n_grid = 2048) {
  double peak = 0.0;
  for (int n = 0; n < n_grid; ++n) {
    const double tau = kTwoPi * n / n_grid;
    peak = std::max(peak, std::abs(w * q.eval(tau)));
  }
  return peak;
}

inline nlohmann::json series_to_json(const FourierSeries& q) {
  nlohmann::json j;
  j["H"] = q.harmonics();
  j["d"] = q.dof();
  j["Omega"] = q.Omega;
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int k = 0; k <= q.harmonics(); ++k) {
    nlohmann::json rk = nlohmann::json::array(), ik = nlohmann::json::array();
    for (int i = 0; i < q.dof(); ++i) {
      rk.push_back(q.coef(i, k).real());
      ik.push_back(q.coef(i, k).imag());
    }
    re.push_back(rk);
    im.push_back(ik);
  }
  j["re"] = re;
  j["im"] = im;
  return j;
}

inline FourierSeries series_from_json(const nlohmann::json& j) {
  const int H = j.at("H").get<int>();
  const int d = j.at("d").get<int>();
  FourierSeries q(d, H, j.at("Omega").get<double>());
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != H + 1 ||
      static_cast<int>(im.size()) != H + 1) {
    throw std::invalid_argument("harmonic count does not match re/im arrays");
  }
  for (int k = 0; k <= H; ++k) {
    for (int i = 0; i < d; ++i) {
      q.coef(i, k) = {re[k][i].get<double>(), im[k][i].get<double>()};
    }
  }
  return q;
}

}  // namespace hbcheb
