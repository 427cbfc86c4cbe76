#pragma once

// Pseudo-arclength continuation of periodic branches in the excitation
// frequency: secant prediction in group-scaled coordinates, a bordered
// Newton corrector with the frequency as an extra unknown, and step
// adaptation from the corrector iteration count. Closed curves (isolas)
// are detected by return to the start point.

#include <hbcheb/stability.hpp>
#include <hbcheb/urabe.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hbcheb {

struct ContinuationSettings {
  double Omega_start = 0.0;
  double Omega_end = 0.0;
  double ds0 = 1e-2;
  double ds_min = 1e-6;
  double ds_max = 0.1;
  int target_iterations = 4;
  int direction = 1;  // initial sweep direction in Omega
  int max_points = 10000;
  NewtonSettings corrector;
};

struct BranchPoint {
  double Omega = 0.0;
  FourierSeries q;
  double amplitude = 0.0;
  std::optional<FloquetResult> stability;
  std::optional<UrabeMeasures> urabe;
  int H_used = 0;
};

struct BranchResult {
  std::vector<BranchPoint> points;
  bool complete = false;  // reached a window edge or closed on itself
  bool closed = false;    // the branch is an isolated loop
  std::string warning;
  int turning_points = 0;
};

/// Linear response at the excitation harmonics, the default branch seed.
[[nodiscard]] inline FourierSeries initial_guess(const ModelSpec& model,
                                                 double Omega, int H) {
  FourierSeries q(model.d, H, Omega);
  const Eigen::MatrixXcd fex = model.excitation(H);
  const Eigen::MatrixXcd I =
      Eigen::MatrixXd::Identity(model.d, model.d).cast<std::complex<double>>();
  for (int k = 0; k <= H; ++k) {
    if (fex.col(k).norm() == 0.0) continue;
    const Eigen::MatrixXcd S =
        model.K.cast<std::complex<double>>() - (k * k * Omega * Omega) * I +
        std::complex<double>(0.0, k * Omega) * model.D;
    q.coef.col(k) = S.partialPivLu().solve(fex.col(k));
  }
  return q;
}

namespace detail {

/// Zero-pad or truncate to H harmonics.
[[nodiscard]] inline FourierSeries resize_series(const FourierSeries& q,
                                                 int H) {
  if (q.harmonics() == H) return q;
  FourierSeries out(q.dof(), H, q.Omega);
  const int keep = std::min(H, q.harmonics());
  out.coef.leftCols(keep + 1) = q.coef.leftCols(keep + 1);
  return out;
}

[[nodiscard]] inline Eigen::VectorXd resize_packed(const Eigen::VectorXd& x,
                                                   int d, int H_from,
                                                   int H_to) {
  if (H_from == H_to) return x;
  return pack_series(resize_series(unpack_series(x, d, H_from, 1.0), H_to));
}

}  // namespace detail

/// One predicted location on the branch together with the tangent and the
/// scaling that define the corrector's constraint plane.
struct PredictorStep {
  FourierSeries q_hat;  // predicted coefficients, carries the frequency
  double Omega_hat = 0.0;
  Eigen::VectorXd t_x;  // unit tangent in scaled coordinates
  double t_Omega = 0.0;
  double s_x = 1.0;
  double s_Omega = 1.0;
};

/// Bordered Newton solve for the point selected by a prediction, at a
/// possibly different retained order (tangent and anchor are zero-padded
/// or truncated to match). Returns the accepted point and the iteration
/// count that drives step adaptation.
struct CorrectedPoint {
  BranchPoint point;
  int iterations = 0;
};

[[nodiscard]] inline CorrectedPoint correct_at(const ModelSpec& model,
                                               const PredictorStep& pred,
                                               int H,
                                               const NewtonSettings& settings) {
  const int d = model.d;
  const int H0 = pred.q_hat.harmonics();
  FourierSeries q = detail::resize_series(pred.q_hat, H);
  q.Omega = pred.Omega_hat;
  const Eigen::VectorXd anchor = pack_series(q);
  const Eigen::VectorXd t_x = detail::resize_packed(pred.t_x, d, H0, H);
  const int n = d * (2 * H + 1);
  double Omega = pred.Omega_hat;

  for (int iter = 0; iter <= settings.max_iter; ++iter) {
    q.Omega = Omega;
    const Eigen::MatrixXcd r = hb_residual(model, q);
    const double rn = aggregate_norm(r);
    const Eigen::VectorXd x = pack_series(q);
    const double c = t_x.dot(x - anchor) / pred.s_x +
                     pred.t_Omega * (Omega - pred.Omega_hat) / pred.s_Omega;
    if (std::isfinite(rn) && std::isfinite(c) && rn <= settings.tol &&
        std::abs(c) <= settings.tol) {
      BranchPoint p;
      p.Omega = Omega;
      p.q = q;
      p.amplitude = max_abs_output(q, model.output);
      p.H_used = H;
      return {p, iter};
    }
    if (!std::isfinite(rn) || !std::isfinite(c) ||
        iter == settings.max_iter) {
      break;
    }
    Eigen::MatrixXd M(n + 1, n + 1);
    M.topLeftCorner(n, n) = hb_jacobian(model, q);
    M.topRightCorner(n, 1) = hb_domega(model, q);
    M.bottomLeftCorner(1, n) = (t_x / pred.s_x).transpose();
    M(n, n) = pred.t_Omega / pred.s_Omega;
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -pack_blocks(r);
    rhs(n) = -c;
    const Eigen::VectorXd delta = M.partialPivLu().solve(rhs);
    if (!delta.allFinite()) {
      throw SolverFailure("singular bordered system at Omega=" +
                          std::to_string(Omega));
    }
    q = unpack_series(x + delta.head(n), d, H, Omega);
    Omega += delta(n);
  }
  throw SolverFailure("bordered corrector did not converge at Omega=" +
                      std::to_string(Omega) + " (H=" + std::to_string(H) +
                      ")");
}

/// Hook applied to every accepted point; may re-solve it (mutating the
/// point) and choose the retained order for the next prediction.
using PointRefiner =
    std::function<void(const PredictorStep&, double ds, BranchPoint& point,
                       int& next_H)>;

/// Sweep one branch across [Omega_start, Omega_end] from a seed guess. The
/// seed's frequency is the anchor (an interior seed traces an isolated
/// loop); its retained order is carried until a refiner changes it.
[[nodiscard]] inline BranchResult trace_branch(const ModelSpec& model,
                                               const ContinuationSettings& cs,
                                               const FourierSeries& seed,
                                               const PointRefiner& refiner = {}) {
  if (!(cs.Omega_start < cs.Omega_end)) {
    throw std::invalid_argument("empty frequency window");
  }
  if (!(cs.ds_min > 0.0) || cs.ds_min > cs.ds0 || cs.ds0 > cs.ds_max) {
    throw std::invalid_argument("need 0 < ds_min <= ds0 <= ds_max");
  }
  if (cs.direction != 1 && cs.direction != -1) {
    throw std::invalid_argument("direction must be +1 or -1");
  }
  if (cs.target_iterations < 1 || cs.max_points < 1) {
    throw std::invalid_argument("need target_iterations and max_points >= 1");
  }
  if (seed.Omega < cs.Omega_start || seed.Omega > cs.Omega_end) {
    throw std::invalid_argument("seed frequency outside the sweep window");
  }
  if (seed.dof() != model.d) {
    throw std::invalid_argument("seed dimension mismatch");
  }

  BranchResult out;
  const int d = model.d;
  int H = seed.harmonics();

  const NewtonResult first = newton_solve(model, seed, cs.corrector);
  {
    BranchPoint p;
    p.Omega = first.q.Omega;
    p.q = first.q;
    p.amplitude = max_abs_output(first.q, model.output);
    p.H_used = H;
    if (refiner) {
      PredictorStep at_seed;
      at_seed.q_hat = seed;
      at_seed.Omega_hat = seed.Omega;
      at_seed.t_x = Eigen::VectorXd::Zero(d * (2 * H + 1));
      at_seed.t_Omega = static_cast<double>(cs.direction);
      at_seed.s_x = std::max(pack_series(first.q).norm(), 1e-8);
      at_seed.s_Omega = std::max(std::abs(first.q.Omega), 1e-8);
      refiner(at_seed, cs.ds0, p, H);
    }
    out.points.push_back(std::move(p));
  }

  double ds = cs.ds0;
  double arclength = 0.0;
  int prev_sign = 0;
  Eigen::VectorXd t_x = Eigen::VectorXd::Zero(d * (2 * H + 1));
  double t_Omega = static_cast<double>(cs.direction);

  while (static_cast<int>(out.points.size()) < cs.max_points) {
    const BranchPoint& last = out.points.back();
    const double s_x = std::max(pack_series(last.q).norm(), 1e-8);
    const double s_Omega = std::max(std::abs(last.Omega), 1e-8);

    if (out.points.size() >= 2) {
      const BranchPoint& prev = out.points[out.points.size() - 2];
      const Eigen::VectorXd dx =
          pack_series(detail::resize_series(last.q, H)) -
          pack_series(detail::resize_series(prev.q, H));
      Eigen::VectorXd tx = dx / s_x;
      double tw = (last.Omega - prev.Omega) / s_Omega;
      const double norm = std::sqrt(tx.squaredNorm() + tw * tw);
      if (norm > 0.0) {
        t_x = tx / norm;
        t_Omega = tw / norm;
      }
    } else {
      t_x = Eigen::VectorXd::Zero(d * (2 * H + 1));
    }

    PredictorStep pred;
    pred.t_x = t_x;
    pred.t_Omega = t_Omega;
    pred.s_x = s_x;
    pred.s_Omega = s_Omega;

    bool accepted = false;
    while (!accepted) {
      pred.Omega_hat = last.Omega + ds * s_Omega * t_Omega;
      pred.q_hat = unpack_series(
          pack_series(detail::resize_series(last.q, H)) + ds * s_x * t_x, d,
          H, pred.Omega_hat);
      try {
        CorrectedPoint cp = correct_at(model, pred, H, cs.corrector);
        // independent recheck before accepting
        const double rn = aggregate_norm(hb_residual(model, cp.point.q));
        if (!std::isfinite(rn) || rn > 10.0 * cs.corrector.tol) {
          throw SolverFailure("residual recheck failed");
        }
        if (refiner) refiner(pred, ds, cp.point, H);

        const double dW = cp.point.Omega - last.Omega;
        const int sign = dW > 1e-14 ? 1 : (dW < -1e-14 ? -1 : 0);
        if (sign != 0 && prev_sign != 0 && sign != prev_sign) {
          ++out.turning_points;
        }
        if (sign != 0) prev_sign = sign;

        arclength += ds;
        const int iters = std::max(cp.iterations, 1);
        ds = std::clamp(
            ds * std::clamp(static_cast<double>(cs.target_iterations) / iters,
                            0.5, 2.0),
            cs.ds_min, cs.ds_max);
        out.points.push_back(std::move(cp.point));
        accepted = true;
      } catch (const SolverFailure&) {
        ds *= 0.5;
        if (ds < cs.ds_min) {
          out.warning = "step size underflow at Omega=" +
                        std::to_string(last.Omega);
          return out;
        }
      }
    }

    const BranchPoint& now = out.points.back();
    if (now.Omega < cs.Omega_start || now.Omega > cs.Omega_end) {
      out.complete = true;  // crossing point kept
      return out;
    }
    if (out.points.size() > 6 && arclength > 10.0 * cs.ds0) {
      const BranchPoint& origin = out.points.front();
      const Eigen::VectorXd gap =
          pack_series(detail::resize_series(now.q, H)) -
          pack_series(detail::resize_series(origin.q, H));
      const double dist = std::sqrt(
          gap.squaredNorm() / (s_x * s_x) +
          std::pow((now.Omega - origin.Omega) / s_Omega, 2));
      if (dist < 0.5 * ds) {
        out.closed = true;
        out.complete = true;
        return out;
      }
    }
  }
  out.warning = "maximum number of points reached";
  return out;
}

}  // namespace hbcheb
