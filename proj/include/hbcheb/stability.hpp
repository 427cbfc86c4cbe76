#pragma once

// Floquet stability of periodic orbits: monodromy matrices by piecewise
// matrix exponentials, by Newmark time stepping of the variational equation,
// and by a Chebyshev collocation solve in integrated form; plus a shooting
// reference that closes orbits by time integration.

#include <hbcheb/chebyshev.hpp>
#include <hbcheb/hb.hpp>
#include <hbcheb/model.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hbcheb {

enum class BifurcationHint { none, turning_point, period_doubling, torus };

[[nodiscard]] inline const char* to_string(BifurcationHint h) {
  switch (h) {
    case BifurcationHint::turning_point: return "turning_point";
    case BifurcationHint::period_doubling: return "period_doubling";
    case BifurcationHint::torus: return "torus";
    default: return "none";
  }
}

struct JacobianTrajectory {
  Eigen::VectorXd grid;  // tau points in [0, 2pi]
  std::vector<Eigen::MatrixXd> samples;
  double Omega = 1.0;
};

/// Left-endpoint equidistant grid with N points, tau_n = 2 pi (n-1)/N.
[[nodiscard]] inline Eigen::VectorXd mexp_grid(int N) {
  if (N < 1) throw std::invalid_argument("grid needs at least one point");
  Eigen::VectorXd g(N);
  for (int i = 0; i < N; ++i) g(i) = kTwoPi * i / N;
  return g;
}

/// Step-endpoint grid with N steps, both interval ends included.
[[nodiscard]] inline Eigen::VectorXd ntp_grid(int N) {
  if (N < 1) throw std::invalid_argument("grid needs at least one step");
  Eigen::VectorXd g(N + 1);
  for (int i = 0; i <= N; ++i) g(i) = kTwoPi * i / N;
  return g;
}

[[nodiscard]] inline JacobianTrajectory sample_jacobian(
    const ModelSpec& model, const FourierSeries& q,
    const Eigen::VectorXd& grid) {
  JacobianTrajectory traj;
  traj.grid = grid;
  traj.Omega = q.Omega;
  traj.samples.reserve(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    if (grid(i) < -1e-12 || grid(i) > kTwoPi + 1e-12) {
      throw std::invalid_argument("trajectory grid leaves the period");
    }
    traj.samples.push_back(model.jacobian(q.eval(grid(i))));
  }
  return traj;
}

struct FloquetResult {
  Eigen::MatrixXd monodromy;
  Eigen::VectorXcd multipliers;  // sorted by |.| desc, then Re, then Im
  bool stable = false;
  BifurcationHint hint = BifurcationHint::none;
  std::string method;
  int resolution = 0;
};

/// Multiplier threshold: a multiplier sitting on the unit circle at a
/// bifurcation must not flip the verdict from round-off drift.
inline constexpr double kStabilityMargin = 1e-6;

[[nodiscard]] inline FloquetResult floquet_classify(
    const Eigen::MatrixXd& monodromy, std::string method = "",
    int resolution = 0) {
  if (monodromy.rows() != monodromy.cols() || monodromy.rows() == 0) {
    throw std::invalid_argument("monodromy must be square");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(monodromy);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("monodromy eigensolution failed");
  }
  FloquetResult out;
  out.monodromy = monodromy;
  out.multipliers = es.eigenvalues();
  std::vector<std::complex<double>> mu(out.multipliers.data(),
                                       out.multipliers.data() +
                                           out.multipliers.size());
  std::sort(mu.begin(), mu.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  for (int i = 0; i < out.multipliers.size(); ++i) out.multipliers(i) = mu[i];
  const std::complex<double> lead = out.multipliers(0);
  out.stable = std::abs(lead) <= 1.0 + kStabilityMargin;
  if (!out.stable) {
    if (std::abs(lead.imag()) <= 1e-9 * std::max(1.0, std::abs(lead))) {
      out.hint = lead.real() > 0.0 ? BifurcationHint::turning_point
                                   : BifurcationHint::period_doubling;
    } else {
      out.hint = BifurcationHint::torus;
    }
  }
  out.method = std::move(method);
  out.resolution = resolution;
  return out;
}

/// First-order form of the variational equation:
/// d/dtau [dq; du] = [[0, I], [-(K+J)/Omega^2, -D/Omega]] [dq; du].
[[nodiscard]] inline Eigen::MatrixXd state_matrix(const ModelSpec& model,
                                                  const Eigen::MatrixXd& J,
                                                  double Omega) {
  const int d = model.d;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  A.topRightCorner(d, d).setIdentity();
  A.bottomLeftCorner(d, d) = -(model.K + J) / (Omega * Omega);
  A.bottomRightCorner(d, d) = -model.D / Omega;
  return A;
}

namespace detail {

inline void require_equidistant(const Eigen::VectorXd& grid, double first,
                                double step) {
  for (int i = 0; i < grid.size(); ++i) {
    if (std::abs(grid(i) - (first + step * i)) > 1e-9) {
      throw std::invalid_argument("grid is not the expected equidistant one");
    }
  }
}

}  // namespace detail

/// Frozen-coefficient product of matrix exponentials, factors applied from
/// the left in grid order.
[[nodiscard]] inline FloquetResult monodromy_mexp(
    const ModelSpec& model, const JacobianTrajectory& traj) {
  const int N = static_cast<int>(traj.grid.size());
  detail::require_equidistant(traj.grid, 0.0, kTwoPi / N);
  const double h = kTwoPi / N;
  Eigen::MatrixXd Phi =
      Eigen::MatrixXd::Identity(2 * model.d, 2 * model.d);
  for (int n = 0; n < N; ++n) {
    const Eigen::MatrixXd E =
        (state_matrix(model, traj.samples[n], traj.Omega) * h).exp();
    if (!E.allFinite()) {
      throw std::range_error("matrix exponential left the numeric range");
    }
    Phi = E * Phi;
  }
  return floquet_classify(Phi, "mexp", N);
}

/// Constant-average-acceleration stepping of the variational equation with
/// unit initial blocks; the monodromy is the end-of-period state sensitivity.
[[nodiscard]] inline FloquetResult monodromy_ntp(
    const ModelSpec& model, const JacobianTrajectory& traj) {
  const int N = static_cast<int>(traj.grid.size()) - 1;
  if (N < 1) throw std::invalid_argument("need at least one step");
  detail::require_equidistant(traj.grid, 0.0, kTwoPi / N);
  const int d = model.d;
  const double Omega = traj.Omega;
  const double c1 = N / kPi;              // 2/h
  const double c2 = c1 * c1;              // 4/h^2
  const double w2 = Omega * Omega;

  Eigen::MatrixXd dq(d, 2 * d), du(d, 2 * d), da(d, 2 * d);
  dq.setZero();
  du.setZero();
  dq.leftCols(d).setIdentity();
  du.rightCols(d).setIdentity();
  da = -((model.K + traj.samples[0]) * dq / w2 + model.D * du / Omega);

  for (int n = 0; n < N; ++n) {
    const Eigen::MatrixXd S = w2 * c2 * Eigen::MatrixXd::Identity(d, d) +
                              Omega * c1 * model.D + model.K +
                              traj.samples[n + 1];
    const Eigen::MatrixXd b =
        w2 * (c2 * dq + 2.0 * c1 * du + da) + Omega * model.D * (c1 * dq + du);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
    const Eigen::MatrixXd dq1 = lu.solve(b);
    if (!dq1.allFinite()) {
      throw std::runtime_error("singular step matrix in variational pass");
    }
    const Eigen::MatrixXd du1 = c1 * (dq1 - dq) - du;
    const Eigen::MatrixXd da1 = c2 * (dq1 - dq) - 2.0 * c1 * du - da;
    dq = dq1;
    du = du1;
    da = da1;
  }

  Eigen::MatrixXd Phi(2 * d, 2 * d);
  Phi.topRows(d) = dq;
  Phi.bottomRows(d) = du;
  return floquet_classify(Phi, "ntp", N);
}

/// Fundamental matrix as Chebyshev series: column stacks of displacement and
/// velocity coefficients for the 2d unit initial conditions, plus endpoint
/// values.
struct ChebFlow {
  int dim = 0;  // state dimension
  double Omega = 1.0;
  std::shared_ptr<const ChebOps> ops;
  Eigen::MatrixXd coef;       // C x dim^2, column a + dim*b = entry (a,b)
  Eigen::MatrixXd monodromy;  // dim x dim
};

/// Solve the doubly integrated variational equation for all unit initial
/// conditions in one linear system of dimension C*d.
[[nodiscard]] inline ChebFlow cheb_flow(const ModelSpec& model,
                                        const JacobianTrajectory& traj) {
  const int C = static_cast<int>(traj.grid.size());
  if (C < 3) throw std::invalid_argument("collocation flow needs C >= 3");
  const auto ops = cheb_ops(C);
  if ((traj.grid - ops->grid).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("trajectory grid is not the Chebyshev grid");
  }
  const int d = model.d;
  const double Omega = traj.Omega;
  const double w2 = Omega * Omega;
  const Eigen::MatrixXd& Gt = ops->Gt;
  const Eigen::MatrixXd& Gt2 = ops->Gt2;

  // Chebyshev coefficients of each Jacobian entry over the period.
  std::vector<Eigen::VectorXd> Jc(d * d);
  {
    Eigen::VectorXd samples(C);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        for (int n = 0; n < C; ++n) samples(n) = traj.samples[n](i, j);
        Jc[i + d * j] = ops->to_coeffs(samples);
      }
    }
  }

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(C * d, C * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Eigen::MatrixXd block = model.K(i, j) * Gt2 +
                              Gt2 * product_matrix(Jc[i + d * j]);
      block += Omega * model.D(i, j) * Gt;
      if (i == j) block += w2 * Eigen::MatrixXd::Identity(C, C);
      L.block(i * C, j * C, C, C) = block;
    }
  }

  // Right-hand sides for dq(0) = [I 0], dq'(0) = [0 I] as constant series.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(C * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    B(i * C, i) += w2;                       // Omega^2 dq(0)
    B.col(d + i).segment(i * C, C) += w2 * Gt.col(0);  // Omega^2 tau dq'(0)
    for (int r = 0; r < d; ++r) {
      B.col(i).segment(r * C, C) += Omega * model.D(r, i) * Gt.col(0);
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  const Eigen::MatrixXd X = lu.solve(B);
  if (!X.allFinite()) {
    throw std::runtime_error("singular collocation system");
  }

  // Velocities from the once-integrated equation, avoiding differentiation.
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(C * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    V(i * C, d + i) += 1.0;  // dq'(0)
    for (int j = 0; j < d; ++j) {
      const Eigen::MatrixXd coupling =
          model.K(i, j) * Gt + Gt * product_matrix(Jc[i + d * j]);
      V.block(i * C, 0, C, 2 * d) -=
          (coupling * X.block(j * C, 0, C, 2 * d)) / w2;
      V.block(i * C, 0, C, 2 * d) -=
          (Omega * model.D(i, j) / w2) * X.block(j * C, 0, C, 2 * d);
    }
    for (int j = 0; j < d; ++j) {
      // subtract the constant D dq(0) part of D (dq - dq(0))
      V(i * C, j) += Omega * model.D(i, j) / w2;
    }
  }

  ChebFlow flow;
  flow.dim = 2 * d;
  flow.Omega = Omega;
  flow.ops = ops;
  flow.coef.resize(C, 4 * d * d);
  for (int b = 0; b < 2 * d; ++b) {
    for (int i = 0; i < d; ++i) {
      flow.coef.col(i + 2 * d * b) = X.col(b).segment(i * C, C);
      flow.coef.col(d + i + 2 * d * b) = V.col(b).segment(i * C, C);
    }
  }
  flow.monodromy.resize(2 * d, 2 * d);
  for (int b = 0; b < 2 * d; ++b) {
    for (int a = 0; a < 2 * d; ++a) {
      flow.monodromy(a, b) = flow.coef.col(a + 2 * d * b).sum();
    }
  }
  return flow;
}

[[nodiscard]] inline FloquetResult monodromy_cheby(
    const ModelSpec& model, const JacobianTrajectory& traj) {
  const ChebFlow flow = cheb_flow(model, traj);
  return floquet_classify(flow.monodromy, "cheby",
                          static_cast<int>(traj.grid.size()));
}

struct ShootingResult {
  Eigen::VectorXd x0;      // periodic initial state [q; q']
  double amplitude = 0.0;  // max |output . q| along the orbit
  FloquetResult floquet;
  int iterations = 0;
};

/// Close a periodic orbit by Newton on the initial state; one nonlinear
/// Newmark pass per iteration, with the variational pass on the same grid
/// supplying the exact discrete sensitivity.
[[nodiscard]] inline ShootingResult shoot_periodic(const ModelSpec& model,
                                                   const FourierSeries& guess,
                                                   int N,
                                                   double tol = 1e-10) {
  if (N < 2) throw std::invalid_argument("need at least two steps");
  const int d = model.d;
  const double Omega = guess.Omega;
  const double w2 = Omega * Omega;
  const double h = kTwoPi / N;
  const double c1 = 2.0 / h;
  const double c2 = c1 * c1;

  FourierSeries fex(d, static_cast<int>(model.f_ex.cols()) - 1, Omega);
  fex.coef = model.f_ex;

  Eigen::VectorXd x0(2 * d);
  x0.head(d) = guess.eval(0.0);
  x0.tail(d) = guess.eval_derivative(0.0);

  JacobianTrajectory traj;
  traj.grid = ntp_grid(N);
  traj.samples.assign(N + 1, Eigen::MatrixXd::Zero(d, d));
  traj.Omega = Omega;

  ShootingResult out;
  for (int iter = 0; iter <= 30; ++iter) {
    Eigen::VectorXd q = x0.head(d), u = x0.tail(d);
    Eigen::VectorXd a =
        (fex.eval(0.0) - Omega * model.D * u - model.K * q - model.f_nl(q)) /
        w2;
    traj.samples[0] = model.jacobian(q);
    double amp = std::abs(model.output * q);

    for (int n = 0; n < N; ++n) {
      const double tau1 = traj.grid(n + 1);
      const Eigen::VectorXd f1 = fex.eval(tau1);
      Eigen::VectorXd q1 = q + h * u + 0.5 * h * h * a;
      for (int inner = 0;; ++inner) {
        const Eigen::VectorXd a1 = c2 * (q1 - q) - 2.0 * c1 * u - a;
        const Eigen::VectorXd u1 = c1 * (q1 - q) - u;
        const Eigen::VectorXd R = w2 * a1 + Omega * model.D * u1 +
                                  model.K * q1 + model.f_nl(q1) - f1;
        const Eigen::MatrixXd S = w2 * c2 * Eigen::MatrixXd::Identity(d, d) +
                                  Omega * c1 * model.D + model.K +
                                  model.jacobian(q1);
        const Eigen::VectorXd dq = S.partialPivLu().solve(R);
        q1 -= dq;
        if (!q1.allFinite()) {
          throw SolverFailure("time step diverged in shooting");
        }
        if (dq.norm() <= 1e-12 * (1.0 + q1.norm())) break;
        if (inner == 30) {
          throw SolverFailure("time step Newton stalled in shooting");
        }
      }
      const Eigen::VectorXd u1 = c1 * (q1 - q) - u;
      const Eigen::VectorXd a1 = c2 * (q1 - q) - 2.0 * c1 * u - a;
      traj.samples[n + 1] = model.jacobian(q1);
      amp = std::max(amp, std::abs(model.output * q1));
      q = q1;
      u = u1;
      a = a1;
    }

    Eigen::VectorXd rho(2 * d);
    rho.head(d) = q - x0.head(d);
    rho.tail(d) = u - x0.tail(d);
    const FloquetResult fl = monodromy_ntp(model, traj);

    if (rho.norm() <= tol * (1.0 + x0.norm())) {
      out.x0 = x0;
      out.amplitude = amp;
      out.floquet = fl;
      out.floquet.method = "shooting";
      out.iterations = iter;
      return out;
    }
    if (iter == 30) break;
    const Eigen::MatrixXd J =
        fl.monodromy - Eigen::MatrixXd::Identity(2 * d, 2 * d);
    x0 -= J.partialPivLu().solve(rho);
    if (!x0.allFinite()) throw SolverFailure("shooting update diverged");
  }
  throw SolverFailure("shooting did not close the orbit at Omega=" +
                      std::to_string(Omega));
}

}  // namespace hbcheb
