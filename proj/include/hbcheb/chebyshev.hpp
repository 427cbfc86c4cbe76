#pragma once

// Chebyshev collocation toolkit on [0, 2*pi]: modified extrema-type grid,
// series evaluation, sample<->coefficient transforms, and the integration /
// product operational matrices used by the monodromy and certification code.
//
// Conventions: a series of order C stores coefficients c(1..C) (0-based in
// memory), where coefficient j multiplies the Chebyshev polynomial of degree
// j-1 in x = (tau - pi)/pi, x in [-1, 1].

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>

namespace hbcheb {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

using ChebSeries = Eigen::VectorXd;

namespace detail {

inline void require_order(int C) {
  if (C < 2) {
    throw std::invalid_argument("Chebyshev order must be at least 2, got " +
                                std::to_string(C));
  }
}

// Fractional node index mapped to [0, 1]: the grid uses half-integer first
// and last indices so that the endpoints 0 and 2*pi are collocation points.
inline double node_fraction(int C, int i) {
  if (i == 0) return 0.0;
  if (i == C - 1) return 1.0;
  return (i + 0.5) / C;
}

}  // namespace detail

/// Collocation grid with C nodes on [0, 2*pi]. Endpoints are exact.
[[nodiscard]] inline Eigen::VectorXd cheb_grid(int C) {
  detail::require_order(C);
  Eigen::VectorXd tau(C);
  tau(0) = 0.0;
  for (int i = 1; i + 1 < C; ++i) {
    tau(i) = kPi * (1.0 - std::cos(detail::node_fraction(C, i) * kPi));
  }
  tau(C - 1) = kTwoPi;
  return tau;
}

/// Evaluation matrix T with T(i, j) = value of the degree-j polynomial at
/// grid node i. Closed form: cos(j * (s_i - 1) * pi) with s_i the node
/// fraction, so no trigonometric recursion error accumulates.
[[nodiscard]] inline Eigen::MatrixXd cheb_eval_matrix(int C) {
  detail::require_order(C);
  Eigen::MatrixXd T(C, C);
  for (int i = 0; i < C; ++i) {
    const double s = detail::node_fraction(C, i);
    for (int j = 0; j < C; ++j) {
      T(i, j) = std::cos(j * (s - 1.0) * kPi);
    }
  }
  return T;
}

/// Clenshaw evaluation of a coefficient vector at an arbitrary tau.
[[nodiscard]] inline double cheb_eval(const ChebSeries& c, double tau) {
  const int C = static_cast<int>(c.size());
  detail::require_order(C);
  const double x = (tau - kPi) / kPi;
  double b1 = 0.0, b2 = 0.0;
  for (int j = C - 1; j >= 1; --j) {
    const double b0 = c(j) + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c(0) + x * b1 - b2;
}

/// Value at tau = 2*pi equals the plain coefficient sum; at tau = 0 the
/// alternating sum. Exposed because endpoint evaluation is on the hot path
/// of every monodromy assembly.
[[nodiscard]] inline double cheb_sum_at_end(const ChebSeries& c) {
  return c.sum();
}

[[nodiscard]] inline double cheb_alternating_at_start(const ChebSeries& c) {
  double s = 0.0;
  for (int j = 0; j < c.size(); ++j) s += (j % 2 == 0) ? c(j) : -c(j);
  return s;
}

/// Integration operational matrix, C x C, exactly as printed: row j holds
/// pi times the coefficients of the antiderivative of the degree-(j-1)
/// polynomial that vanishes at tau = 0. Coefficient vectors are integrated
/// by the transpose: see integrate_coeffs(). The last row truncates its
/// top-degree term but keeps the untruncated constant, so the integral of a
/// series with a nonzero top coefficient c misses zero at tau = 0 by
/// pi*c/(2C); spectral series have negligible top coefficients there.
[[nodiscard]] inline Eigen::MatrixXd integration_matrix(int C) {
  if (C < 3) {
    throw std::invalid_argument("integration matrix needs order C >= 3");
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(C, C);
  G(0, 0) = kPi;
  G(0, 1) = kPi;
  G(1, 0) = -kPi / 4.0;
  G(1, 2) = kPi / 4.0;
  for (int m = 2; m < C; ++m) {
    // Antiderivative of degree m: T_{m+1}/(2(m+1)) - T_{m-1}/(2(m-1)),
    // plus the constant fixing F(0) = 0.
    G(m, 0) = kPi * ((m % 2 == 0) ? -1.0 : 1.0) / (double(m) * m - 1.0);
    G(m, m - 1) = -kPi / (2.0 * (m - 1));
    if (m + 1 < C) G(m, m + 1) = kPi / (2.0 * (m + 1));
  }
  return G;
}

/// Coefficients of the running integral from tau = 0, truncated to order C.
[[nodiscard]] inline ChebSeries integrate_coeffs(const Eigen::MatrixXd& G,
                                                 const ChebSeries& c) {
  if (G.rows() != c.size()) {
    throw std::invalid_argument("integration matrix order mismatch");
  }
  return G.transpose() * c;
}

/// Product operational matrix P(a): coefficients of a(tau) * b(tau) are
/// P(a) * b, truncated to order C. Built from
/// T_m T_n = (T_{m+n} + T_{|m-n|}) / 2.
[[nodiscard]] inline Eigen::MatrixXd product_matrix(const ChebSeries& a) {
  const int C = static_cast<int>(a.size());
  detail::require_order(C);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(C, C);
  for (int q = 0; q < C; ++q) {
    for (int p = 0; p < C; ++p) {
      const double half = 0.5 * a(p);
      if (p + q < C) P(p + q, q) += half;
      P(std::abs(p - q), q) += half;
    }
  }
  return P;
}

// ============================================================================
// Cached per-order factorizations
// ============================================================================

/// Everything the collocation code needs at a fixed order C. Instances are
/// immutable after construction and shared through cheb_ops().
struct ChebOps {
  int C = 0;
  Eigen::VectorXd grid;
  Eigen::MatrixXd eval;          // node values of each basis polynomial
  Eigen::MatrixXd G;             // integration matrix as printed
  Eigen::MatrixXd Gt;            // G^T, the coefficient-space integrator
  Eigen::MatrixXd Gt2;           // G^T * G^T, double integration
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // factorization of eval
  double rcond = 0.0;            // reciprocal condition estimate of eval

  explicit ChebOps(int order)
      : C(order),
        grid(cheb_grid(order)),
        eval(cheb_eval_matrix(order)),
        G(order >= 3 ? integration_matrix(order) : Eigen::MatrixXd()),
        Gt(G.transpose()),
        Gt2(Gt * Gt),
        lu(eval) {
    rcond = lu.rcond();
    if (!(rcond > 0.0) || !std::isfinite(rcond)) {
      throw std::runtime_error("Chebyshev transform factorization failed at C=" +
                               std::to_string(order));
    }
  }

  /// Samples at the grid nodes -> coefficients.
  [[nodiscard]] ChebSeries to_coeffs(const Eigen::VectorXd& samples) const {
    if (samples.size() != C) {
      throw std::invalid_argument("sample vector length " +
                                  std::to_string(samples.size()) +
                                  " does not match order " + std::to_string(C));
    }
    return lu.solve(samples);
  }

  [[nodiscard]] Eigen::VectorXd to_samples(const ChebSeries& c) const {
    if (c.size() != C) {
      throw std::invalid_argument("coefficient vector length mismatch");
    }
    return eval * c;
  }
};

/// Shared, memoized operational matrices for a given order. Concurrent reads
/// take a shared lock; the first request for a new order builds under an
/// exclusive lock.
[[nodiscard]] inline std::shared_ptr<const ChebOps> cheb_ops(int C) {
  detail::require_order(C);
  static std::shared_mutex mutex;
  static std::map<int, std::shared_ptr<const ChebOps>> cache;
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(C); it != cache.end()) return it->second;
  }
  std::unique_lock lock(mutex);
  if (auto it = cache.find(C); it != cache.end()) return it->second;
  auto ops = std::make_shared<const ChebOps>(C);
  cache.emplace(C, ops);
  return ops;
}

}  // namespace hbcheb
