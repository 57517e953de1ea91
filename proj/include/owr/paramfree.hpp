#pragma once

// Parameter-free scalar learner: coin betting with an online-Newton-tuned
// betting fraction. Gradients are normalized by the coordinate's hint, so the
// prediction sequence depends only on g_t / hint.
//
// With u = c - c_1, V = sum (g_t/hint)^2 and wealth0 = eps, the regret against
// any c satisfies
//   sum g_t (c_t - c) <= |u| (C1 sqrt(sum g_t^2) + C2 hint) + hint eps + hint e a [u != 0]
// where gamma = (2 - ln 3)/2, a = eps e^{-gamma/8} (1 + 4V)^{-1/(2 gamma)},
//   C1 = 2 sqrt(ln(e + |u| sqrt(V) / a)),   C2 = 4 ln(max(1, 2|u|/a)).
// The constants are logarithmic in |u|, T and 1/eps; see PfBound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "owr/errors.hpp"

namespace owr {

/// Terms of the regret guarantee for one comparator.
struct PfBound {
  double c1 = 0;        // multiplies |u| sqrt(sum g^2)
  double c2 = 0;        // multiplies |u| hint
  double additive = 0;  // comparator-free slack (initial wealth)
  double total = 0;
};

class PfLearner {
 public:
  static constexpr double kGamma = 0.45069385332046727;  // (2 - ln 3) / 2
  static constexpr double kMaxFraction = 0.5;
  /// Past this multiple of the initial wealth the stake stops growing, so wealth
  /// grows at most linearly. Such a learner is far ahead of any bounded
  /// comparator, and rounding in the wealth recursion stays negligible.
  static constexpr double kMaxWealthRatio = 0x1p32;

  explicit PfLearner(double hint = 1.0, double anchor = 0.0, double initial_wealth = 1.0)
      : hint_(hint), anchor_(anchor), wealth0_(initial_wealth), wealth_(initial_wealth) {
    if (!(hint > 0.0) || !std::isfinite(hint)) throw ConfigError("learner hint must be positive and finite");
    if (!(initial_wealth > 0.0) || !std::isfinite(initial_wealth))
      throw ConfigError("learner initial wealth must be positive and finite");
    if (!std::isfinite(anchor)) throw NumericError("learner anchor must be finite");
  }

  double predict() const { return anchor_ + offset(); }
  /// Displacement from the anchor, independent of the anchor value.
  double offset() const { return played_fraction() * wealth_; }

  void update(double g) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient passed to PfLearner::update");
    ++t_;
    sum_g_ += g;
    sum_g2_ += g * g;
    if (std::abs(g) > hint_) ++clips_;
    const double gn = std::clamp(g / hint_, -1.0, 1.0);
    sum_gn2_ += gn * gn;
    if (gn == 0.0) return;
    const double factor = 1.0 - gn * played_fraction();
    wealth_ *= factor;
    const double z = gn / factor;
    a_ += z * z;
    beta_ = std::clamp(beta_ - z / (kGamma * a_), -kMaxFraction, kMaxFraction);
  }

  /// Restart at a new anchor with fresh wealth.
  void reset(double anchor) { *this = PfLearner(hint_, anchor, wealth0_); }

  double hint() const { return hint_; }
  double anchor() const { return anchor_; }
  double initial_wealth() const { return wealth0_; }
  double wealth() const { return wealth_; }
  double fraction() const { return beta_; }
  /// Fraction actually bet: the ONS iterate, scaled so the stake is at most beta * cap.
  double played_fraction() const { return beta_ * std::min(1.0, kMaxWealthRatio * wealth0_ / wealth_); }
  double sum_g() const { return sum_g_; }
  double sum_g2() const { return sum_g2_; }
  /// sum of squared normalized (clipped) gradients.
  double sum_normalized_g2() const { return sum_gn2_; }
  std::int64_t t() const { return t_; }
  std::int64_t clips() const { return clips_; }

  /// Documented regret bound against comparator c at the current state.
  PfBound bound(double c) const { return bound_for(c - anchor_, sum_gn2_, hint_, wealth0_); }

  static PfBound bound_for(double u, double v, double hint, double wealth0) {
    PfBound b;
    const double au = std::abs(u);
    b.additive = hint * wealth0;
    if (au > 0.0) {
      const double a = wealth0 * std::exp(-kGamma / 8.0) * std::pow(1.0 + 4.0 * v, -1.0 / (2.0 * kGamma));
      b.c1 = 2.0 * std::sqrt(std::log(std::exp(1.0) + au * std::sqrt(v) / a));
      b.c2 = 4.0 * std::log(std::max(1.0, 2.0 * au / a));
      b.additive += hint * std::exp(1.0) * a;
    }
    b.total = au * (b.c1 * hint * std::sqrt(v) + b.c2 * hint) + b.additive;
    return b;
  }

 private:
  double hint_;
  double anchor_;
  double wealth0_;
  double wealth_;
  double beta_ = 0.0;
  double a_ = 1.0;
  double sum_g_ = 0.0;
  double sum_g2_ = 0.0;
  double sum_gn2_ = 0.0;
  std::int64_t t_ = 0;
  std::int64_t clips_ = 0;
};

struct PfAuditResult {
  /// max over c != c_1 of regret / (|c - c_1| (sqrt(sum (g/hint)^2) + 1) hint).
  double ratio = 0;
  /// max over all c of regret / documented bound; <= 1 when the bound holds.
  double bound_utilization = 0;
  double worst_regret = 0;
  std::int64_t clips = 0;
};

/// Replays gs through a copy of state0 and measures regret against each
/// comparator by direct summation.
inline PfAuditResult pf_regret_audit(std::span<const double> gs, std::span<const double> comparators,
                                     const PfLearner& state0) {
  PfAuditResult out;
  if (gs.empty()) return out;
  PfLearner learner = state0;
  std::vector<double> regret(comparators.size(), 0.0);
  for (double g : gs) {
    const double p = learner.predict();
    for (std::size_t i = 0; i < comparators.size(); ++i) regret[i] += g * (p - comparators[i]);
    learner.update(g);
  }
  out.clips = learner.clips();
  const double v = learner.sum_normalized_g2();
  for (std::size_t i = 0; i < comparators.size(); ++i) {
    const double u = comparators[i] - state0.anchor();
    const auto b = PfLearner::bound_for(u, v, state0.hint(), state0.initial_wealth());
    out.worst_regret = std::max(out.worst_regret, regret[i]);
    out.bound_utilization = std::max(out.bound_utilization, regret[i] / b.total);
    if (u != 0.0)
      out.ratio = std::max(out.ratio, regret[i] / (std::abs(u) * (std::sqrt(v) + 1.0) * state0.hint()));
  }
  return out;
}

}  // namespace owr
