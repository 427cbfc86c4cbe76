#pragma once

// Two collinear cantilevers joined at a common node, each clamped at its
// outer end, with a quadratic+cubic grounded spring and a concentrated
// harmonic load acting on the joint transverse displacement. Assembled with
// cubic Hermite bending elements and reduced by modal truncation.

#include <hbcheb/model.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hbcheb {

struct EclBeamConfig {
  double rho = 7800.0;
  double E = 205e9;
  double h1 = 0.014;  // primary thickness in the bending direction
  double z = 0.014;   // width, both beams
  double h2 = 0.0005;
  double L1 = 0.7;
  double L2 = 0.04;
  int elements = 1000;  // split between the beams in proportion to length
  int modes = 1;
  double k2 = -1.05e7;
  double k3 = 8e9;
  double alpha = 3e-7;  // stiffness-proportional damping coefficient
  double beta = 5.0;    // mass-proportional damping coefficient
  double f_ex = 1.0;    // cosine amplitude of the joint load

  void validate() const {
    if (elements < 10) throw std::invalid_argument("element count < 10");
    for (double v : {rho, E, h1, z, h2, L1, L2, k3}) {
      if (!(v > 0.0)) throw std::invalid_argument("non-positive beam constant");
    }
    if (alpha < 0.0 || beta < 0.0) {
      throw std::invalid_argument("negative damping coefficient");
    }
  }
};

/// Assembled free-free-eliminated system: clamped DOFs are removed, so K is
/// positive definite.
struct FeBeam {
  Eigen::SparseMatrix<double> K;
  Eigen::SparseMatrix<double> M;
  int joint_w = -1;  // free-DOF index of the joint transverse displacement
  int n1 = 0;
  int n2 = 0;
};

namespace detail {

inline void hermite_element(double EI, double rhoA, double h,
                            Eigen::Matrix4d& Ke, Eigen::Matrix4d& Me) {
  Ke << 12, 6 * h, -12, 6 * h,
      6 * h, 4 * h * h, -6 * h, 2 * h * h,
      -12, -6 * h, 12, -6 * h,
      6 * h, 2 * h * h, -6 * h, 4 * h * h;
  Ke *= EI / (h * h * h);
  Me << 156, 22 * h, 54, -13 * h,
      22 * h, 4 * h * h, 13 * h, -3 * h * h,
      54, 13 * h, 156, -22 * h,
      -13 * h, -3 * h * h, -22 * h, 4 * h * h;
  Me *= rhoA * h / 420.0;
}

}  // namespace detail

[[nodiscard]] inline FeBeam ecl_assemble(const EclBeamConfig& cfg) {
  cfg.validate();
  const double I1 = cfg.z * cfg.h1 * cfg.h1 * cfg.h1 / 12.0;
  const double I2 = cfg.z * cfg.h2 * cfg.h2 * cfg.h2 / 12.0;
  const double A1 = cfg.h1 * cfg.z;
  const double A2 = cfg.h2 * cfg.z;
  const int n1 = std::max<int>(
      2, static_cast<int>(std::lround(cfg.elements * cfg.L1 /
                                      (cfg.L1 + cfg.L2))));
  const int n2 = std::max(2, cfg.elements - n1);
  const int n_nodes = n1 + n2 + 1;
  const int n_full = 2 * n_nodes;

  // Clamp both outer nodes; free DOFs keep interior order.
  const auto free_index = [&](int full) { return full - 2; };
  const int n_free = n_full - 4;

  std::vector<Eigen::Triplet<double>> tk, tm;
  tk.reserve(16 * (n1 + n2));
  tm.reserve(16 * (n1 + n2));
  Eigen::Matrix4d Ke, Me;
  for (int e = 0; e < n1 + n2; ++e) {
    if (e < n1) {
      detail::hermite_element(cfg.E * I1, cfg.rho * A1, cfg.L1 / n1, Ke, Me);
    } else {
      detail::hermite_element(cfg.E * I2, cfg.rho * A2, cfg.L2 / n2, Ke, Me);
    }
    const int dof[4] = {2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3};
    for (int a = 0; a < 4; ++a) {
      if (dof[a] < 2 || dof[a] >= n_full - 2) continue;
      for (int b = 0; b < 4; ++b) {
        if (dof[b] < 2 || dof[b] >= n_full - 2) continue;
        tk.emplace_back(free_index(dof[a]), free_index(dof[b]), Ke(a, b));
        tm.emplace_back(free_index(dof[a]), free_index(dof[b]), Me(a, b));
      }
    }
  }

  FeBeam fe;
  fe.K.resize(n_free, n_free);
  fe.M.resize(n_free, n_free);
  fe.K.setFromTriplets(tk.begin(), tk.end());
  fe.M.setFromTriplets(tm.begin(), tm.end());
  fe.joint_w = free_index(2 * n1);
  fe.n1 = n1;
  fe.n2 = n2;
  return fe;
}

/// Lowest generalized eigenpairs of (K, M), K positive definite, by subspace
/// iteration with Rayleigh-Ritz projection. Vectors are M-normalized.
/// Deterministic start, no randomness.
[[nodiscard]] inline std::pair<Eigen::VectorXd, Eigen::MatrixXd>
lowest_modes(const Eigen::SparseMatrix<double>& K,
             const Eigen::SparseMatrix<double>& M, int count) {
  const int n = static_cast<int>(K.rows());
  if (count < 1 || count > n) throw std::invalid_argument("bad mode count");
  const int m = std::min(n, count + 8);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("stiffness factorization failed");
  }

  Eigen::MatrixXd X(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      X(i, j) = std::sin((j + 1) * kPi * (i + 1) / (n + 1));
    }
  }

  Eigen::VectorXd values = Eigen::VectorXd::Zero(count);
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::MatrixXd MX = M * X;
    const Eigen::MatrixXd Y = ldlt.solve(MX);
    const Eigen::MatrixXd MY = M * Y;
    Eigen::MatrixXd A = Y.transpose() * MX;
    Eigen::MatrixXd B = Y.transpose() * MY;
    A = 0.5 * (A + A.transpose()).eval();
    B = 0.5 * (B + B.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
    if (ges.info() != Eigen::Success) {
      throw std::runtime_error("Ritz projection failed");
    }
    X = Y * ges.eigenvectors();
    const Eigen::VectorXd lam = ges.eigenvalues().head(count);
    if (iter > 0 &&
        ((lam - values).cwiseAbs().array() <=
         1e-12 * lam.cwiseAbs().array().max(1e-300))
            .all()) {
      values = lam;
      break;
    }
    values = lam;
    if (iter == 499) throw std::runtime_error("subspace iteration stalled");
  }

  Eigen::MatrixXd V = X.leftCols(count);
  for (int j = 0; j < count; ++j) {
    V.col(j) /= std::sqrt(V.col(j).dot(M * V.col(j)));
  }
  return {values, V};
}

/// Modal truncation of the assembled beam to the lowest bending modes.
/// Mode signs are fixed so the joint displacement component is positive.
[[nodiscard]] inline ModelSpec ecl_modal_reduce(const EclBeamConfig& cfg) {
  if (cfg.modes != 1 && cfg.modes != 3) {
    throw std::invalid_argument("retained mode count must be 1 or 3");
  }
  const FeBeam fe = ecl_assemble(cfg);
  auto [lam, V] = lowest_modes(fe.K, fe.M, cfg.modes);
  const int d = cfg.modes;
  for (int j = 0; j < d; ++j) {
    if (V(fe.joint_w, j) < 0.0) V.col(j) = -V.col(j);
  }
  Eigen::RowVectorXd phi_j = V.row(fe.joint_w);

  ModelSpec m;
  m.name = "ecl_d" + std::to_string(d);
  m.d = d;
  m.K = lam.asDiagonal();
  m.D = (cfg.alpha * lam.array() + cfg.beta).matrix().asDiagonal();
  const double k2 = cfg.k2, k3 = cfg.k3;
  m.f_nl = [phi_j, k2, k3](const Eigen::VectorXd& q) {
    const double w = phi_j * q;
    return (phi_j.transpose() * (k2 * w * w + k3 * w * w * w)).eval();
  };
  m.jacobian = [phi_j, k2, k3](const Eigen::VectorXd& q) {
    const double w = phi_j * q;
    return (phi_j.transpose() * (2.0 * k2 * w + 3.0 * k3 * w * w) * phi_j)
        .eval();
  };
  m.f_ex = Eigen::MatrixXcd::Zero(d, 2);
  m.f_ex.col(1) =
      (0.5 * cfg.f_ex * phi_j.transpose()).cast<std::complex<double>>();
  m.omega1 = std::sqrt(lam(0));
  m.output = phi_j;
  m.poly_harmonic_degree = 3;
  // Variation of the joint-spring slope g'(w) = 2 k2 w + 3 k3 w^2 over a
  // delta-ball: the difference is affine in w and quadratic in the shift s,
  // so the maximum over |w| <= W, |s| <= S sits at vertex/endpoint
  // candidates. W from the coefficient sum, S = |phi_j| delta.
  m.delta_bound = [phi_j, k2, k3](const FourierSeries& q, double delta) {
    const double S = phi_j.norm() * delta;
    const Eigen::RowVectorXcd w_hat = phi_j.cast<std::complex<double>>() *
                                      q.coef;
    double W = std::abs(w_hat(0));
    for (int k = 1; k < w_hat.size(); ++k) W += 2.0 * std::abs(w_hat(k));
    double worst = 0.0;
    for (double w : {-W, W}) {
      const double a = 2.0 * k2 + 6.0 * k3 * w;
      const auto diff = [&](double s) { return std::abs(a * s + 3.0 * k3 * s * s); };
      worst = std::max({worst, diff(-S), diff(S)});
      const double sv = -a / (6.0 * k3);
      if (std::abs(sv) <= S) worst = std::max(worst, diff(sv));
    }
    return phi_j.squaredNorm() * worst;
  };
  return m;
}

}  // namespace hbcheb
