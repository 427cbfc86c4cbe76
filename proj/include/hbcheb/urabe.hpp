#pragma once

// A-posteriori existence certification for periodic approximations after
// Urabe: a residual bound r, an error-propagation measure M over one cycle,
// and the tightest delta-neighborhood in which exactly one periodic solution
// is guaranteed. M is evaluated from the Chebyshev form of the fundamental
// matrix with the product and integration operational matrices.

#include <hbcheb/hb.hpp>
#include <hbcheb/stability.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace hbcheb {

struct UrabeMeasures {
  double r = 0.0;  // time-domain residual bound
  double M = 0.0;  // error propagation over one cycle
  std::optional<double> delta;  // tightest certified neighborhood radius
  std::optional<double> kappa;  // contraction factor at delta
  int H = 0;
  bool feasible = false;
  double worst_rcond = 1.0;  // conditioning of the pointwise flow inverses
};

struct SingularResolvent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sum of Euclidean norms of the residual coefficient blocks, harmonics
/// k >= 1 doubled to cover the conjugate side: the retained blocks come from
/// the converged balance residual, the tail H < k <= h_plus from the
/// nonlinear-force coefficients on an alias-safe grid.
[[nodiscard]] inline double residual_bound(const ModelSpec& model,
                                           const FourierSeries& q,
                                           int h_plus) {
  const int H = q.harmonics();
  if (h_plus < H) {
    throw std::invalid_argument("tail order below the retained order");
  }
  if (model.poly_harmonic_degree > 0 &&
      h_plus < model.poly_harmonic_degree * H) {
    throw std::invalid_argument(
        "tail order " + std::to_string(h_plus) + " misses force harmonics up"
        " to " + std::to_string(model.poly_harmonic_degree * H));
  }

  const Eigen::MatrixXcd retained = hb_residual(model, q);
  double r = retained.col(0).norm();
  for (int k = 1; k <= H; ++k) r += 2.0 * retained.col(k).norm();

  if (h_plus == H) return r;

  int N;
  if (model.poly_harmonic_degree > 0) {
    // force content tops out at degree*H; keep every tail coefficient free
    // of aliased content
    const int content = model.poly_harmonic_degree * H;
    N = std::max({model.n_aft(H), 2 * h_plus + 2, content + h_plus + 1});
  } else {
    N = model.n_aft(H);
    if (N <= 2 * h_plus) {
      throw std::invalid_argument("sampling grid cannot resolve the tail");
    }
  }
  const Eigen::MatrixXcd fnl = aft(model.f_nl, q, N, h_plus);
  const Eigen::MatrixXcd fex = model.excitation(h_plus);
  for (int k = H + 1; k <= h_plus; ++k) {
    r += 2.0 * (fnl.col(k) - fex.col(k)).norm();
  }
  return r;
}

struct MMeasure {
  double M = 0.0;
  double worst_rcond = 1.0;
};

namespace detail {

/// trace(Phi^T Phi S) for the symmetric kernel sum S.
inline double kernel_trace(const Eigen::MatrixXd& Phi,
                           const Eigen::MatrixXd& S) {
  return ((Phi * S).array() * Phi.array()).sum();
}

}  // namespace detail

/// M = sqrt(2 pi * max_tau integral_0^{2pi} sum_kl H_kl^2(tau, s) ds) with
/// the piecewise kernel H built from the flow: the s-integrals are carried
/// as running Chebyshev integrals of B B^T and B2 B2^T, the max over tau is
/// taken on the nodes and sharpened by golden-section refinement.
[[nodiscard]] inline MMeasure m_measure(const ChebFlow& flow) {
  const int n = flow.dim;
  const int C = flow.ops->C;

  {
    const Eigen::VectorXcd mult =
        Eigen::EigenSolver<Eigen::MatrixXd>(flow.monodromy).eigenvalues();
    for (int i = 0; i < n; ++i) {
      if (std::abs(mult(i) - 1.0) < 1e-8) {
        throw SingularResolvent(
            "monodromy has a multiplier at +1; the periodic resolvent does"
            " not exist");
      }
    }
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = (I - flow.monodromy).partialPivLu().solve(I);
  const Eigen::MatrixXd R2 = R * flow.monodromy;

  // node values of Phi, then B = R Phi^{-1} and B2 = R Phi(2pi) Phi^{-1}
  // by pointwise inversion
  const Eigen::MatrixXd values = flow.ops->eval * flow.coef;
  Eigen::MatrixXd Bs(C, n * n), B2s(C, n * n);
  double worst = 1.0;
  Eigen::MatrixXd Phi(n, n);
  for (int s = 0; s < C; ++s) {
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) Phi(a, b) = values(s, a + n * b);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        Phi, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double rc =
        svd.singularValues()(n - 1) / svd.singularValues()(0);
    if (!(rc > 0.0) || !std::isfinite(rc)) {
      throw SingularResolvent("fundamental matrix is singular at a node");
    }
    worst = std::min(worst, rc);
    const Eigen::MatrixXd Pinv = svd.solve(I);
    const Eigen::MatrixXd Bn = R * Pinv;
    const Eigen::MatrixXd B2n = R2 * Pinv;
    for (int b = 0; b < n; ++b) {
      for (int a = 0; a < n; ++a) {
        Bs(s, a + n * b) = Bn(a, b);
        B2s(s, a + n * b) = B2n(a, b);
      }
    }
  }
  const Eigen::MatrixXd Bc = flow.ops->lu.solve(Bs);
  const Eigen::MatrixXd B2c = flow.ops->lu.solve(B2s);

  // running integrals W1 = int_0^tau B B^T and V = int_0^tau B2 B2^T,
  // entrywise as Chebyshev coefficients; both are symmetric
  Eigen::MatrixXd W1 = Eigen::MatrixXd::Zero(C, n * n);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(C, n * n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const Eigen::MatrixXd P = product_matrix(Bc.col(i + n * k));
      const Eigen::MatrixXd P2 = product_matrix(B2c.col(i + n * k));
      for (int j = i; j < n; ++j) {
        W1.col(i + n * j) += P * Bc.col(j + n * k);
        V.col(i + n * j) += P2 * B2c.col(j + n * k);
      }
    }
  }
  const Eigen::MatrixXd& Gt = flow.ops->Gt;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      W1.col(i + n * j) = (Gt * W1.col(i + n * j)).eval();
      V.col(i + n * j) = (Gt * V.col(i + n * j)).eval();
      if (i != j) {
        W1.col(j + n * i) = W1.col(i + n * j);
        V.col(j + n * i) = V.col(i + n * j);
      }
    }
  }
  Eigen::VectorXd V_end(n * n);
  for (int e = 0; e < n * n; ++e) V_end(e) = V.col(e).sum();

  const auto g_at = [&](const Eigen::MatrixXd& phi_row,
                        const Eigen::MatrixXd& w1_row,
                        const Eigen::MatrixXd& v_row) {
    Eigen::MatrixXd P(n, n), S(n, n);
    for (int b = 0; b < n; ++b) {
      for (int a = 0; a < n; ++a) {
        P(a, b) = phi_row(a + n * b);
        S(a, b) = w1_row(a + n * b) + V_end(a + n * b) - v_row(a + n * b);
      }
    }
    return detail::kernel_trace(P, S);
  };

  const Eigen::MatrixXd w1v = flow.ops->eval * W1;
  const Eigen::MatrixXd vv = flow.ops->eval * V;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int t = 0; t < C; ++t) {
    const double g = g_at(values.row(t), w1v.row(t), vv.row(t));
    if (g > best) {
      best = g;
      best_i = t;
    }
  }

  // golden-section sharpening between the neighbors of the best node
  const auto g_of = [&](double tau) {
    Eigen::MatrixXd phi_row(1, n * n), w1_row(1, n * n), v_row(1, n * n);
    for (int e = 0; e < n * n; ++e) {
      phi_row(e) = cheb_eval(flow.coef.col(e), tau);
      w1_row(e) = cheb_eval(W1.col(e), tau);
      v_row(e) = cheb_eval(V.col(e), tau);
    }
    return g_at(phi_row, w1_row, v_row);
  };
  double a = flow.ops->grid(std::max(0, best_i - 1));
  double b = flow.ops->grid(std::min(C - 1, best_i + 1));
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = g_of(x1), f2 = g_of(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = g_of(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = g_of(x1);
    }
  }
  best = std::max({best, f1, f2});

  MMeasure out;
  out.M = std::sqrt(kTwoPi * best);
  out.worst_rcond = worst;
  return out;
}

/// Smallest delta with M*Delta(delta) < 1 and delta*(1 - M*Delta(delta))
/// >= M*r, bracketed geometrically from delta0 = M*r and bisected to 1e-3
/// relative width. Absent when nothing below cap_factor*delta0 qualifies.
[[nodiscard]] inline std::optional<std::pair<double, double>> tightest_delta(
    double r, double M, const std::function<double(double)>& Delta,
    double cap_factor = 1e3) {
  if (!(r >= 0.0) || !(M > 0.0)) {
    throw std::invalid_argument("need r >= 0 and M > 0");
  }
  const double floor = M * r;
  const auto admissible = [&](double dlt) {
    const double k = M * Delta(dlt);
    return k < 1.0 && dlt * (1.0 - k) >= floor;
  };
  if (admissible(floor)) return std::make_pair(floor, M * Delta(floor));
  // a variation bound already too large at radius zero cannot improve
  // outward, and the geometric scan cannot leave zero
  if (floor == 0.0) return std::nullopt;

  double lo = floor, hi = 0.0;
  bool found = false;
  const double cap = cap_factor * floor;
  for (double t = floor * 1.05; t <= cap * (1.0 + 1e-12); t *= 1.05) {
    if (admissible(t)) {
      hi = t;
      found = true;
      break;
    }
    lo = t;
  }
  if (!found) {
    if (!admissible(cap)) return std::nullopt;
    hi = cap;
  }
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::make_pair(hi, M * Delta(hi));
}

struct CertifySettings {
  int c_factor = 5;  // collocation order per retained harmonic
  int c_min = 8;
  double delta_cap_factor = 1e3;
  int h_plus = 0;  // 0: take the model's tail policy
};

/// Full certification of one converged point: r, M, and the tightest
/// certified neighborhood if the existence condition is satisfiable.
[[nodiscard]] inline UrabeMeasures certify_point(
    const ModelSpec& model, const FourierSeries& q,
    const CertifySettings& cs = {}) {
  const int H = q.harmonics();
  UrabeMeasures out;
  out.H = H;
  out.r = residual_bound(model, q,
                         cs.h_plus > 0 ? cs.h_plus : model.h_plus(H));
  const int C = std::max(cs.c_min, cs.c_factor * H);
  const ChebFlow flow =
      cheb_flow(model, sample_jacobian(model, q, cheb_grid(C)));
  const MMeasure mm = m_measure(flow);
  out.M = mm.M;
  out.worst_rcond = mm.worst_rcond;
  const auto bound =
      tightest_delta(out.r, out.M,
                     [&](double dlt) { return model.delta_bound(q, dlt); },
                     cs.delta_cap_factor);
  if (bound) {
    out.delta = bound->first;
    out.kappa = bound->second;
    out.feasible = true;
  }
  return out;
}

}  // namespace hbcheb
