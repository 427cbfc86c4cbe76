#pragma once

// Harmonic balance core: alternating frequency/time evaluation of nonlinear
// force coefficients, residual blocks, the analytic real-block Jacobian, and
// a plain Newton solver at fixed frequency.

#include <hbcheb/fourier.hpp>
#include <hbcheb/model.hpp>

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbcheb {

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One-sided Fourier coefficients (harmonics 0..H_out) of fn(q(tau)) sampled
/// on the N-point equidistant grid tau_n = 2 pi n / N. Direct DFT; N must
/// resolve H_out.
[[nodiscard]] inline Eigen::MatrixXcd aft(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const FourierSeries& q, int N, int H_out) {
  if (N <= 2 * H_out) {
    throw std::invalid_argument("AFT grid N=" + std::to_string(N) +
                                " cannot resolve harmonic " +
                                std::to_string(H_out));
  }
  const int d = q.dof();
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(d, H_out + 1);
  for (int n = 0; n < N; ++n) {
    const double tau = kTwoPi * n / N;
    const Eigen::VectorXd f = fn(q.eval(tau));
    const std::complex<double> w(std::cos(tau), -std::sin(tau));
    std::complex<double> p(1.0, 0.0);
    for (int k = 0; k <= H_out; ++k) {
      F.col(k) += f * p;
      p *= w;
    }
  }
  return F / double(N);
}

/// Residual blocks r(k) = (-k^2 Omega^2 I + i k Omega D + K) c(k)
///                        + f_nl(k) - f_ex(k),  k = 0..H.
[[nodiscard]] inline Eigen::MatrixXcd hb_residual(const ModelSpec& model,
                                                  const FourierSeries& q) {
  const int H = q.harmonics();
  const double Omega = q.Omega;
  const Eigen::MatrixXcd fnl = aft(model.f_nl, q, model.n_aft(H), H);
  const Eigen::MatrixXcd fex = model.excitation(H);
  Eigen::MatrixXcd r(model.d, H + 1);
  for (int k = 0; k <= H; ++k) {
    const Eigen::MatrixXcd S =
        (model.K - double(k) * k * Omega * Omega *
                       Eigen::MatrixXd::Identity(model.d, model.d))
            .cast<std::complex<double>>() +
        std::complex<double>(0.0, k * Omega) * model.D;
    r.col(k) = S * q.coef.col(k) + fnl.col(k) - fex.col(k);
  }
  return r;
}

/// Euclidean norm over all stored blocks, counting k >= 1 twice for the
/// implied conjugates.
[[nodiscard]] inline double aggregate_norm(const Eigen::MatrixXcd& blocks) {
  double s = blocks.col(0).real().squaredNorm();
  for (int k = 1; k < blocks.cols(); ++k) s += 2.0 * blocks.col(k).squaredNorm();
  return std::sqrt(s);
}

/// Residual blocks packed into the real unknown layout of pack_series().
[[nodiscard]] inline Eigen::VectorXd pack_blocks(const Eigen::MatrixXcd& r) {
  const int d = static_cast<int>(r.rows());
  const int H = static_cast<int>(r.cols()) - 1;
  Eigen::VectorXd v(d * (2 * H + 1));
  v.head(d) = r.col(0).real();
  for (int k = 1; k <= H; ++k) {
    v.segment(d + (k - 1) * 2 * d, d) = r.col(k).real();
    v.segment(d + (k - 1) * 2 * d + d, d) = r.col(k).imag();
  }
  return v;
}

/// Analytic Jacobian of the packed residual with respect to the packed
/// unknowns. The nonlinear contribution comes from the DFT of the sampled
/// force Jacobian: d fnl(k) / d c(m) couples through J(k-m) and J(k+m).
[[nodiscard]] inline Eigen::MatrixXd hb_jacobian(const ModelSpec& model,
                                                 const FourierSeries& q) {
  const int H = q.harmonics();
  const int d = model.d;
  const int n = d * (2 * H + 1);
  const double Omega = q.Omega;
  const int N = model.n_aft(H);

  // DFT of the Jacobian samples, harmonics 0..2H.
  std::vector<Eigen::MatrixXcd> Jp(2 * H + 1,
                                   Eigen::MatrixXcd::Zero(d, d));
  for (int s = 0; s < N; ++s) {
    const double tau = kTwoPi * s / N;
    const Eigen::MatrixXd Js = model.jacobian(q.eval(tau));
    const std::complex<double> w(std::cos(tau), -std::sin(tau));
    std::complex<double> p(1.0, 0.0);
    for (int k = 0; k <= 2 * H; ++k) {
      Jp[k] += Js * p;
      p *= w;
    }
  }
  for (auto& J : Jp) J /= double(N);
  const auto Jat = [&](int p) -> Eigen::MatrixXcd {
    return p >= 0 ? Jp[p] : Jp[-p].conjugate();
  };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const auto row_of = [&](int k) { return k == 0 ? 0 : d + (k - 1) * 2 * d; };

  for (int k = 0; k <= H; ++k) {
    const int r0 = row_of(k);
    for (int m = 0; m <= H; ++m) {
      const int c0 = row_of(m);
      Eigen::MatrixXcd Ga =
          m == 0 ? Jat(k) : Eigen::MatrixXcd(Jat(k - m) + Jat(k + m));
      Eigen::MatrixXcd Gb =
          std::complex<double>(0, 1) *
          (m == 0 ? Eigen::MatrixXcd::Zero(d, d).eval()
                  : Eigen::MatrixXcd(Jat(k - m) - Jat(k + m)));
      if (m == k) {
        const Eigen::MatrixXcd S =
            (model.K - double(k) * k * Omega * Omega *
                           Eigen::MatrixXd::Identity(d, d))
                .cast<std::complex<double>>() +
            std::complex<double>(0.0, k * Omega) * model.D;
        Ga += S;
        if (k >= 1) Gb += std::complex<double>(0, 1) * S;
      }
      if (k == 0) {
        A.block(r0, c0, d, d) = Ga.real();
        if (m >= 1) A.block(r0, c0 + d, d, d) = Gb.real();
      } else {
        A.block(r0, c0, d, d) = Ga.real();
        A.block(r0 + d, c0, d, d) = Ga.imag();
        if (m >= 1) {
          A.block(r0, c0 + d, d, d) = Gb.real();
          A.block(r0 + d, c0 + d, d, d) = Gb.imag();
        }
      }
    }
  }
  return A;
}

/// d residual / d Omega at fixed coefficients (used by the continuation
/// corrector): per harmonic (-2 k^2 Omega I + i k D) c(k).
[[nodiscard]] inline Eigen::VectorXd hb_domega(const ModelSpec& model,
                                               const FourierSeries& q) {
  const int H = q.harmonics();
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(model.d, H + 1);
  for (int k = 1; k <= H; ++k) {
    r.col(k) = (-2.0 * k * k * q.Omega *
                    Eigen::MatrixXd::Identity(model.d, model.d)
                        .cast<std::complex<double>>() +
                std::complex<double>(0.0, k) * model.D) *
               q.coef.col(k);
  }
  return pack_blocks(r);
}

struct NewtonSettings {
  double tol = 1e-10;  // aggregate residual norm
  int max_iter = 20;
};

struct NewtonResult {
  FourierSeries q;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Newton iteration at fixed Omega. Throws SolverFailure on divergence or a
/// singular iteration matrix.
[[nodiscard]] inline NewtonResult newton_solve(const ModelSpec& model,
                                               const FourierSeries& guess,
                                               const NewtonSettings& settings = {}) {
  FourierSeries q = guess;
  const int H = q.harmonics();
  double norm = 0.0;
  for (int iter = 0; iter <= settings.max_iter; ++iter) {
    const Eigen::MatrixXcd r = hb_residual(model, q);
    norm = aggregate_norm(r);
    if (std::isfinite(norm) && norm <= settings.tol) {
      return {q, iter, norm};
    }
    if (!std::isfinite(norm) || iter == settings.max_iter) break;
    const Eigen::MatrixXd J = hb_jacobian(model, q);
    const Eigen::VectorXd dx = J.partialPivLu().solve(-pack_blocks(r));
    if (!dx.allFinite()) {
      throw SolverFailure("singular harmonic balance Jacobian at Omega=" +
                          std::to_string(q.Omega));
    }
    q = unpack_series(pack_series(q) + dx, model.d, H, q.Omega);
  }
  throw SolverFailure("harmonic balance Newton did not converge at Omega=" +
                      std::to_string(q.Omega) + " (H=" + std::to_string(H) +
                      ", residual=" + std::to_string(norm) + ")");
}

}  // namespace hbcheb
