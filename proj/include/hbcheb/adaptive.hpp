#pragma once

// Adaptive choice of the retained harmonic order, driven by the certified
// error bound (or, optionally, by the residual bound alone). The order is
// raised in fixed steps until the measure crosses the threshold, with a
// hysteresis check that the previous order did not already satisfy it, and
// lowered when the starting order is finer than necessary. Solver failures
// flag the point instead of aborting a sweep.

#include <hbcheb/continuation.hpp>

#include <algorithm>
#include <limits>
#include <optional>

namespace hbcheb {

enum class AdaptiveCriterion { delta, residual };

[[nodiscard]] inline const char* to_string(AdaptiveCriterion c) {
  return c == AdaptiveCriterion::delta ? "delta" : "residual";
}

struct AdaptiveHSettings {
  int H_min = 1;
  int H_max = 100;
  int step = 2;
  double threshold = 1e-3;
  AdaptiveCriterion criterion = AdaptiveCriterion::delta;
  CertifySettings certify;
  NewtonSettings corrector;
};

struct AdaptivePointResult {
  FourierSeries q;
  UrabeMeasures measures;
  bool conclusive = false;
  bool flagged = false;  // a re-solve failed; data is from the last good order
};

namespace detail {

inline void validate(const AdaptiveHSettings& as) {
  if (as.H_min < 1) throw std::invalid_argument("H_min must be positive");
  if (as.H_max < as.H_min) throw std::invalid_argument("H_max below H_min");
  if (as.step < 1) throw std::invalid_argument("order step must be positive");
  if (!(as.threshold > 0))
    throw std::invalid_argument("threshold must be positive");
}

[[nodiscard]] inline UrabeMeasures evaluate_point(
    const ModelSpec& model, const FourierSeries& q,
    const AdaptiveHSettings& as) {
  const int H = q.harmonics();
  const int hp = as.certify.h_plus > 0 ? as.certify.h_plus : model.h_plus(H);
  if (as.criterion == AdaptiveCriterion::residual) {
    UrabeMeasures um;
    um.H = H;
    um.r = residual_bound(model, q, hp);
    return um;
  }
  try {
    return certify_point(model, q, as.certify);
  } catch (const SingularResolvent&) {
    // amplification is unbounded at this order; no bound, keep climbing
    UrabeMeasures um;
    um.H = H;
    um.r = residual_bound(model, q, hp);
    um.M = std::numeric_limits<double>::infinity();
    return um;
  }
}

[[nodiscard]] inline double criterion_value(const UrabeMeasures& um,
                                            const AdaptiveHSettings& as) {
  if (as.criterion == AdaptiveCriterion::residual) return um.r;
  return um.feasible ? *um.delta : std::numeric_limits<double>::infinity();
}

/// The raise/lower state machine shared by the fixed-frequency and the
/// continuation-refiner entry points. `resolve(H)` re-converges the point
/// at another order, or fails.
template <class Resolve>
[[nodiscard]] AdaptivePointResult run_adaptive(const ModelSpec& model,
                                               const AdaptiveHSettings& as,
                                               FourierSeries q,
                                               Resolve&& resolve) {
  AdaptivePointResult st;
  int H = std::clamp(q.harmonics(), as.H_min, as.H_max);
  if (H != q.harmonics()) {
    const std::optional<FourierSeries> rq = resolve(H);
    if (!rq) {
      st.q = std::move(q);
      st.measures = evaluate_point(model, st.q, as);
      st.flagged = true;
      return st;
    }
    q = *rq;
  }
  st.q = std::move(q);

  bool increased = false;
  double prev_value = std::numeric_limits<double>::infinity();
  const int guard = 2 * (as.H_max - as.H_min) / std::max(as.step, 1) + 8;
  for (int round = 0; round < guard; ++round) {
    st.measures = evaluate_point(model, st.q, as);
    const double v = criterion_value(st.measures, as);
    if (v <= as.threshold) {
      if ((increased && prev_value > as.threshold) || H == as.H_min) {
        st.conclusive = true;
        return st;
      }
      const int Hn = std::max(H - as.step, as.H_min);
      const std::optional<FourierSeries> rq = resolve(Hn);
      if (!rq) {
        // the current order already carries a bound below the threshold
        st.conclusive = true;
        st.flagged = true;
        return st;
      }
      H = Hn;
      st.q = *rq;
      increased = false;
    } else {
      if (H >= as.H_max) return st;  // inconclusive at the cap
      prev_value = v;
      const int Hn = std::min(H + as.step, as.H_max);
      const std::optional<FourierSeries> rq = resolve(Hn);
      if (!rq) {
        st.flagged = true;
        return st;
      }
      H = Hn;
      st.q = *rq;
      increased = true;
    }
  }
  st.flagged = true;
  return st;
}

}  // namespace detail

/// Adaptive certification of one solution at fixed frequency, re-solving
/// with plain Newton when the order changes.
[[nodiscard]] inline AdaptivePointResult adapt_point(
    const ModelSpec& model, const FourierSeries& start,
    const AdaptiveHSettings& as = {}) {
  detail::validate(as);
  FourierSeries current = start;
  const auto resolve = [&](int H) -> std::optional<FourierSeries> {
    try {
      current =
          newton_solve(model, detail::resize_series(current, H), as.corrector)
              .q;
      return current;
    } catch (const SolverFailure&) {
      return std::nullopt;
    }
  };
  return detail::run_adaptive(model, as, start, resolve);
}

/// Continuation hook: every accepted point is re-certified and, when the
/// order changes, re-corrected inside the same constraint plane. The chosen
/// order is carried to the next prediction.
[[nodiscard]] inline PointRefiner adaptive_refiner(const ModelSpec& model,
                                                   const AdaptiveHSettings& as = {}) {
  detail::validate(as);
  return [model, as](const PredictorStep& pred, double /*ds*/,
                     BranchPoint& point, int& next_H) {
    const auto resolve = [&](int H) -> std::optional<FourierSeries> {
      try {
        return correct_at(model, pred, H, as.corrector).point.q;
      } catch (const SolverFailure&) {
        return std::nullopt;
      }
    };
    const AdaptivePointResult st =
        detail::run_adaptive(model, as, point.q, resolve);
    point.q = st.q;
    point.Omega = st.q.Omega;
    point.H_used = st.q.harmonics();
    point.amplitude = max_abs_output(st.q, model.output);
    point.urabe = st.measures;
    next_H = st.q.harmonics();
  };
}

}  // namespace hbcheb
