#include <hbcheb/chebyshev.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using hbcheb::ChebSeries;
using hbcheb::kPi;
using hbcheb::kTwoPi;

// Column-action integration oracle: the classic coefficient recurrence
// b1 = a0 - a2/2, bk = (a_{k-1} - a_{k+1}) / (2k), with b0 fixing F(0) = 0,
// scaled by pi for the [0, 2*pi] interval. Independent of the row-wise
// matrix construction under test.
ChebSeries integrate_recurrence(const ChebSeries& a) {
  const int C = static_cast<int>(a.size());
  auto at = [&](int k) { return (k >= 0 && k < C) ? a(k) : 0.0; };
  ChebSeries b = ChebSeries::Zero(C);
  if (C >= 2) b(1) = at(0) - at(2) / 2.0;
  for (int k = 2; k < C; ++k) b(k) = (at(k - 1) - at(k + 1)) / (2.0 * k);
  double alt = 0.0;
  for (int k = 1; k < C; ++k) alt += (k % 2 == 0 ? 1.0 : -1.0) * b(k);
  b(0) = -alt;
  return kPi * b;
}

ChebSeries random_series(int C, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ChebSeries c(C);
  for (int j = 0; j < C; ++j) c(j) = u(rng);
  return c;
}

TEST(ChebGrid, SmallOrdersAndEndpoints) {
  const Eigen::VectorXd g2 = hbcheb::cheb_grid(2);
  ASSERT_EQ(g2.size(), 2);
  EXPECT_EQ(g2(0), 0.0);
  EXPECT_EQ(g2(1), kTwoPi);

  const Eigen::VectorXd g3 = hbcheb::cheb_grid(3);
  ASSERT_EQ(g3.size(), 3);
  EXPECT_EQ(g3(0), 0.0);
  EXPECT_NEAR(g3(1), kPi, 1e-15);
  EXPECT_EQ(g3(2), kTwoPi);
}

TEST(ChebGrid, FirstInteriorNodeAtOrder35) {
  const Eigen::VectorXd g = hbcheb::cheb_grid(35);
  EXPECT_NEAR(g(1), kPi * (1.0 - std::cos(1.5 * kPi / 35.0)), 1e-15);
}

TEST(ChebGrid, StrictlyIncreasing) {
  for (int C : {2, 3, 8, 21, 64}) {
    const Eigen::VectorXd g = hbcheb::cheb_grid(C);
    for (int i = 1; i < C; ++i) EXPECT_LT(g(i - 1), g(i)) << "C=" << C;
  }
}

TEST(ChebGrid, RejectsDegenerateOrder) {
  EXPECT_THROW(hbcheb::cheb_grid(1), std::invalid_argument);
  EXPECT_THROW(hbcheb::cheb_grid(0), std::invalid_argument);
}

TEST(ChebEval, MatrixStructure) {
  const int C = 12;
  const Eigen::MatrixXd T = hbcheb::cheb_eval_matrix(C);
  for (int i = 0; i < C; ++i) EXPECT_NEAR(T(i, 0), 1.0, 1e-15);
  for (int j = 0; j < C; ++j) {
    EXPECT_NEAR(T(C - 1, j), 1.0, 1e-15);                      // tau = 2*pi
    EXPECT_NEAR(T(0, j), (j % 2 == 0) ? 1.0 : -1.0, 1e-15);    // tau = 0
  }
}

TEST(ChebEval, EndpointIdentities) {
  const ChebSeries c = random_series(17, 42);
  EXPECT_NEAR(hbcheb::cheb_eval(c, kTwoPi), hbcheb::cheb_sum_at_end(c), 1e-12);
  EXPECT_NEAR(hbcheb::cheb_eval(c, 0.0), hbcheb::cheb_alternating_at_start(c),
              1e-12);
}

TEST(ChebEval, ClenshawMatchesClosedFormOnGrid) {
  const int C = 20;
  const auto ops = hbcheb::cheb_ops(C);
  const ChebSeries c = random_series(C, 7);
  const Eigen::VectorXd s = ops->to_samples(c);
  for (int i = 0; i < C; ++i) {
    EXPECT_NEAR(hbcheb::cheb_eval(c, ops->grid(i)), s(i), 1e-12);
  }
}

TEST(ChebTransform, ConstantAndRamp) {
  const int C = 9;
  const auto ops = hbcheb::cheb_ops(C);
  ChebSeries c = ops->to_coeffs(Eigen::VectorXd::Constant(C, 3.5));
  EXPECT_NEAR(c(0), 3.5, 1e-13);
  for (int j = 1; j < C; ++j) EXPECT_NEAR(c(j), 0.0, 1e-13);

  // tau itself expands as pi*(T0 + T1).
  c = ops->to_coeffs(ops->grid);
  EXPECT_NEAR(c(0), kPi, 1e-12);
  EXPECT_NEAR(c(1), kPi, 1e-12);
  for (int j = 2; j < C; ++j) EXPECT_NEAR(c(j), 0.0, 1e-12);
}

TEST(ChebTransform, QuinticRecoveredExactly) {
  // p(x) = x^5 - 2x^4 + x^3/2 + 3x^2 - x + 1/4 in x = (tau - pi)/pi has the
  // exact expansion below (all entries are exact doubles).
  const double expected[6] = {1.0, 0.0, 0.5, 0.4375, -0.25, 0.0625};
  const int C = 8;
  const auto ops = hbcheb::cheb_ops(C);
  Eigen::VectorXd samples(C);
  for (int i = 0; i < C; ++i) {
    const double x = (ops->grid(i) - kPi) / kPi;
    samples(i) =
        ((((x - 2.0) * x + 0.5) * x + 3.0) * x - 1.0) * x + 0.25;
  }
  const ChebSeries c = ops->to_coeffs(samples);
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(c(j), expected[j], 1e-12);
  EXPECT_NEAR(c(6), 0.0, 1e-12);
  EXPECT_NEAR(c(7), 0.0, 1e-12);
}

TEST(ChebTransform, RoundTrip) {
  for (int C : {2, 5, 23, 64}) {
    const auto ops = hbcheb::cheb_ops(C);
    const ChebSeries c = random_series(C, 100 + C);
    const ChebSeries back = ops->to_coeffs(ops->to_samples(c));
    EXPECT_LT((back - c).cwiseAbs().maxCoeff(), 1e-12) << "C=" << C;
  }
}

TEST(ChebTransform, ShapeMismatchRejected) {
  const auto ops = hbcheb::cheb_ops(6);
  EXPECT_THROW(ops->to_coeffs(Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST(ChebTransform, ConditioningReported) {
  for (int C : {8, 21, 64}) {
    const auto ops = hbcheb::cheb_ops(C);
    EXPECT_GT(ops->rcond, 1e-8) << "C=" << C;
    EXPECT_TRUE(std::isfinite(ops->rcond));
  }
}

TEST(ChebOpsCache, SharedInstances) {
  const auto a = hbcheb::cheb_ops(21);
  const auto b = hbcheb::cheb_ops(21);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_NE(a.get(), hbcheb::cheb_ops(22).get());
}

TEST(IntegrationMatrix, PrintedEntries) {
  const int C = 10;
  const Eigen::MatrixXd G = hbcheb::integration_matrix(C);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(C);

  row(0) = 1.0;
  row(1) = 1.0;
  EXPECT_LT((G.row(0).transpose() - kPi * row).cwiseAbs().maxCoeff(), 1e-15);

  row.setZero();
  row(0) = -0.25;
  row(2) = 0.25;
  EXPECT_LT((G.row(1).transpose() - kPi * row).cwiseAbs().maxCoeff(), 1e-15);

  row.setZero();
  row(0) = -1.0 / 3.0;
  row(1) = -0.5;
  row(3) = 1.0 / 6.0;
  EXPECT_LT((G.row(2).transpose() - kPi * row).cwiseAbs().maxCoeff(), 1e-15);

  row.setZero();
  row(0) = 0.125;
  row(2) = -0.25;
  row(4) = 0.125;
  EXPECT_LT((G.row(3).transpose() - kPi * row).cwiseAbs().maxCoeff(), 1e-15);

  // Last row: constant term sign alternates, sub-diagonal -pi/(2(C-2)),
  // truncated super-diagonal.
  const double first = kPi * ((C % 2 == 0) ? 1.0 : -1.0) / (double(C) * (C - 2));
  EXPECT_NEAR(G(C - 1, 0), first, 1e-15);
  EXPECT_NEAR(G(C - 1, C - 2), -kPi / (2.0 * (C - 2)), 1e-15);
  EXPECT_NEAR(G(C - 1, C - 1), 0.0, 0.0);
}

TEST(IntegrationMatrix, MatchesRecurrenceUpTo64) {
  for (int C = 3; C <= 64; ++C) {
    const Eigen::MatrixXd G = hbcheb::integration_matrix(C);
    for (int m = 0; m + 1 < C; ++m) {
      ChebSeries e = ChebSeries::Zero(C);
      e(m) = 1.0;
      const ChebSeries via_matrix = hbcheb::integrate_coeffs(G, e);
      const ChebSeries via_recurrence = integrate_recurrence(e);
      EXPECT_LT((via_matrix - via_recurrence).cwiseAbs().maxCoeff(), 1e-12)
          << "C=" << C << " m=" << m;
    }
    // Top degree: the matrix truncates the degree-C term but keeps the
    // untruncated constant; everything else matches the recurrence.
    ChebSeries e = ChebSeries::Zero(C);
    e(C - 1) = 1.0;
    const ChebSeries via_matrix = hbcheb::integrate_coeffs(G, e);
    const ChebSeries via_recurrence = integrate_recurrence(e);
    EXPECT_LT(
        (via_matrix - via_recurrence).tail(C - 1).cwiseAbs().maxCoeff(), 1e-12)
        << "C=" << C;
    const double constant =
        hbcheb::kPi * ((C % 2 == 0) ? 1.0 : -1.0) / (double(C) * (C - 2));
    EXPECT_NEAR(via_matrix(0), constant, 1e-14) << "C=" << C;
  }
}

TEST(IntegrationMatrix, ConstantIntegratesToRamp) {
  const int C = 7;
  const Eigen::MatrixXd G = hbcheb::integration_matrix(C);
  ChebSeries one = ChebSeries::Zero(C);
  one(0) = 1.0;
  const ChebSeries ramp = hbcheb::integrate_coeffs(G, one);
  EXPECT_NEAR(ramp(0), kPi, 1e-14);
  EXPECT_NEAR(ramp(1), kPi, 1e-14);
  for (int j = 2; j < C; ++j) EXPECT_NEAR(ramp(j), 0.0, 1e-14);
}

TEST(IntegrationMatrix, IntegralVanishesAtZero) {
  const int C = 24;
  const Eigen::MatrixXd G = hbcheb::integration_matrix(C);
  for (unsigned seed = 0; seed < 100; ++seed) {
    // Random series below the truncation edge: integration from zero exact.
    ChebSeries c = random_series(C, seed);
    c(C - 1) = 0.0;
    const ChebSeries F = hbcheb::integrate_coeffs(G, c);
    EXPECT_LE(std::abs(hbcheb::cheb_eval(F, 0.0)), 1e-11 * (1.0 + F.norm()));
  }
  // Top degree alone leaves exactly the documented pi/(2C) residue.
  ChebSeries top = ChebSeries::Zero(C);
  top(C - 1) = 1.0;
  const ChebSeries F = hbcheb::integrate_coeffs(G, top);
  EXPECT_NEAR(std::abs(hbcheb::cheb_eval(F, 0.0)), hbcheb::kPi / (2.0 * C),
              1e-12);
}

TEST(IntegrationMatrix, DerivativeOfIntegralRecoversFunction) {
  // Central differences of the integrated series against the original,
  // checked away from the endpoints on a smooth low-degree series.
  const int C = 16;
  const Eigen::MatrixXd G = hbcheb::integration_matrix(C);
  ChebSeries c = ChebSeries::Zero(C);
  c(0) = 0.4;
  c(1) = -1.1;
  c(3) = 0.6;
  c(5) = 0.25;
  const ChebSeries F = hbcheb::integrate_coeffs(G, c);
  const double h = 1e-5;
  for (double tau = 0.4; tau < kTwoPi - 0.4; tau += 0.37) {
    const double deriv =
        (hbcheb::cheb_eval(F, tau + h) - hbcheb::cheb_eval(F, tau - h)) /
        (2.0 * h);
    EXPECT_NEAR(deriv, hbcheb::cheb_eval(c, tau), 1e-6);
  }
}

TEST(ProductMatrix, ConstantActsAsScaledIdentity) {
  const int C = 9;
  ChebSeries a = ChebSeries::Zero(C);
  a(0) = 2.25;
  const Eigen::MatrixXd P = hbcheb::product_matrix(a);
  EXPECT_LT((P - 2.25 * Eigen::MatrixXd::Identity(C, C)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ProductMatrix, DegreeOneSquare) {
  // T1 * T1 = (T0 + T2) / 2.
  const int C = 6;
  ChebSeries a = ChebSeries::Zero(C);
  a(1) = 1.0;
  const ChebSeries c = hbcheb::product_matrix(a) * a;
  EXPECT_NEAR(c(0), 0.5, 1e-15);
  EXPECT_NEAR(c(2), 0.5, 1e-15);
  EXPECT_NEAR(c(1), 0.0, 0.0);
  for (int j = 3; j < C; ++j) EXPECT_NEAR(c(j), 0.0, 0.0);
}

TEST(ProductMatrix, PrintedEntryPattern) {
  const int C = 7;
  const ChebSeries a = random_series(C, 3);
  const Eigen::MatrixXd P = hbcheb::product_matrix(a);
  EXPECT_NEAR(P(0, 0), a(0), 1e-15);
  for (int j = 1; j < C; ++j) EXPECT_NEAR(P(0, j), a(j) / 2.0, 1e-15);
  for (int i = 1; i < C; ++i) EXPECT_NEAR(P(i, 0), a(i), 1e-15);
  EXPECT_NEAR(P(1, 1), a(0) + a(2) / 2.0, 1e-15);
  EXPECT_NEAR(P(2, 1), (a(1) + a(3)) / 2.0, 1e-15);
  EXPECT_NEAR(P(1, C - 1), a(C - 2) / 2.0, 1e-15);
}

TEST(ProductMatrix, TruncationFreeProductMatchesPointwise) {
  // deg 3 times deg 4 inside order 8: exact, checked pointwise.
  const int C = 8;
  ChebSeries a = ChebSeries::Zero(C), b = ChebSeries::Zero(C);
  a.head(4) << 0.7, -0.3, 0.2, 1.1;
  b.head(5) << -0.2, 0.9, 0.05, -0.6, 0.33;
  const ChebSeries c = hbcheb::product_matrix(a) * b;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int k = 0; k < 50; ++k) {
    const double tau = u(rng);
    EXPECT_NEAR(hbcheb::cheb_eval(c, tau),
                hbcheb::cheb_eval(a, tau) * hbcheb::cheb_eval(b, tau), 1e-12);
  }
}

TEST(ModifiedGrid, SuppressesEquidistantOscillation) {
  // Interpolating a steep regularized-contact derivative profile: the
  // modified grid must beat equidistant nodes of equal order.
  const int C = 30;
  const auto g = [](double w) {
    const double s = 100.0 * (w - 1.0);
    return 50.0 * (1.0 + s / std::sqrt(s * s + 0.8));
  };
  const auto q1 = [](double tau) { return 1.0 + 0.8 * std::cos(tau); };

  const auto ops = hbcheb::cheb_ops(C);
  Eigen::VectorXd samples(C);
  for (int i = 0; i < C; ++i) samples(i) = g(q1(ops->grid(i)));
  const ChebSeries cheb_coef = ops->to_coeffs(samples);

  Eigen::VectorXd tau_eq(C);
  Eigen::MatrixXd basis_eq(C, C);
  for (int i = 0; i < C; ++i) {
    tau_eq(i) = kTwoPi * i / (C - 1);
    const double x = (tau_eq(i) - kPi) / kPi;
    double tm2 = 1.0, tm1 = x;
    basis_eq(i, 0) = 1.0;
    if (C > 1) basis_eq(i, 1) = x;
    for (int j = 2; j < C; ++j) {
      const double t = 2.0 * x * tm1 - tm2;
      basis_eq(i, j) = t;
      tm2 = tm1;
      tm1 = t;
    }
  }
  Eigen::VectorXd samples_eq(C);
  for (int i = 0; i < C; ++i) samples_eq(i) = g(q1(tau_eq(i)));
  const ChebSeries eq_coef = basis_eq.partialPivLu().solve(samples_eq);

  double err_cheb = 0.0, err_eq = 0.0;
  for (int k = 0; k <= 4000; ++k) {
    const double tau = kTwoPi * k / 4000.0;
    const double truth = g(q1(tau));
    err_cheb = std::max(err_cheb, std::abs(hbcheb::cheb_eval(cheb_coef, tau) - truth));
    err_eq = std::max(err_eq, std::abs(hbcheb::cheb_eval(eq_coef, tau) - truth));
  }
  EXPECT_LT(err_cheb, err_eq);
}

}  // namespace
