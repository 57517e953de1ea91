#pragma once

// Squint aggregation with a uniform prior over experts and over a geometric
// learning-rate grid eta_i = 2^-(i+1), i < M. With r_e = (mix - grad_e) / (2 Gt),
// R_e = sum r_e and V_e = sum r_e^2, the weight of expert e is proportional to
//   sum_i eta_i exp(eta_i R_e - eta_i^2 V_e).
// Because sum_i pi_i exp(eta_i R_e - eta_i^2 V_e) stays below |E| M, every expert satisfies
//   sum (mix - grad_e) <= 3 sqrt(L sum (mix - grad_e)^2) + 8 Gt L,   L = ln|E| + ln M,
// provided M >= ceil(log2(T)/2) + 1. In the form C3 sqrt(ln|E| V) + C4 Gt this is
// C3 = 3 sqrt(L / ln|E|), C4 = 8 L.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "owr/errors.hpp"

namespace owr {

/// w_e / sum_{active} w on the active set, zero elsewhere.
inline std::vector<double> agg_reduce(std::span<const double> w, std::span<const std::size_t> active) {
  if (active.empty()) throw ConfigError("reduce needs a nonempty active set");
  std::vector<double> out(w.size(), 0.0);
  double s = 0.0;
  for (auto e : active) s += w[e];
  if (!(s > 0.0)) throw InternalError("all active weights are zero");
  for (auto e : active) out[e] = w[e] / s;
  return out;
}

struct SquintConstants {
  double L = 0;
  double c3 = 0;
  double c4 = 0;
};

class SquintWeights {
 public:
  static constexpr double kFloor = 1e-300;

  SquintWeights(std::size_t experts, double gtilde, std::int64_t horizon)
      : gtilde_(gtilde), regret_(experts, 0.0), variance_(experts, 0.0), logpot_(experts, 0.0),
        w_(experts, experts ? 1.0 / static_cast<double>(experts) : 0.0) {
    if (experts == 0) throw ConfigError("aggregator needs at least one expert");
    if (!(gtilde > 0.0)) throw ConfigError("aggregator gradient bound must be positive");
    if (horizon < 1) throw ConfigError("aggregator horizon must be positive");
    const int m = static_cast<int>(std::ceil(0.5 * std::log2(static_cast<double>(horizon)))) + 1;
    for (int i = 0; i < m; ++i) eta_.push_back(std::ldexp(1.0, -(i + 1)));
    for (std::size_t e = 0; e < experts; ++e) logpot_[e] = potential(0.0, 0.0);
  }

  std::size_t size() const { return w_.size(); }
  int grid_size() const { return static_cast<int>(eta_.size()); }
  double gtilde() const { return gtilde_; }
  std::span<const double> weights() const { return w_; }
  double weight(std::size_t e) const { return w_[e]; }
  std::int64_t clips() const { return clips_; }
  std::int64_t rounds() const { return rounds_; }

  /// Cumulative sum (mix - grad_e) and sum (mix - grad_e)^2, unnormalized.
  double regret(std::size_t e) const { return 2.0 * gtilde_ * regret_[e]; }
  double variance(std::size_t e) const { return 4.0 * gtilde_ * gtilde_ * variance_[e]; }

  SquintConstants constants() const {
    SquintConstants c;
    const double lnk = std::log(static_cast<double>(size()));
    c.L = lnk + std::log(static_cast<double>(eta_.size()));
    c.c3 = lnk > 0 ? 3.0 * std::sqrt(c.L / lnk) : 0.0;
    c.c4 = 8.0 * c.L;
    return c;
  }

  /// Documented bound on regret(e) at the current state.
  double bound(std::size_t e) const {
    const auto c = constants();
    return 3.0 * std::sqrt(c.L * variance(e)) + c.c4 * gtilde_;
  }

  /// Weights renormalized over the active set, zero elsewhere.
  std::vector<double> reduce(std::span<const std::size_t> active) const { return agg_reduce(w_, active); }

  /// Update with the mixture loss taken as grad . w.
  void update(std::span<const double> grad) {
    double mix = 0.0;
    for (std::size_t e = 0; e < size(); ++e) mix += grad[e] * w_[e];
    update(grad, mix);
  }

  /// Update with an explicit mixture gradient. Experts with grad_e == mix
  /// (asleep experts) keep their statistics bit-for-bit.
  void update(std::span<const double> grad, double mix) {
    if (grad.size() != size()) throw ConfigError("gradient length does not match expert count");
    ++rounds_;
    bool changed = false;
    for (std::size_t e = 0; e < size(); ++e) {
      if (!std::isfinite(grad[e])) throw NumericError("non-finite aggregator gradient");
      double r = (mix - grad[e]) / (2.0 * gtilde_);
      if (r == 0.0) continue;
      if (std::abs(r) > 1.0) {
        ++clips_;
        r = std::clamp(r, -1.0, 1.0);
      }
      regret_[e] += r;
      variance_[e] += r * r;
      logpot_[e] = potential(regret_[e], variance_[e]);
      changed = true;
    }
    if (changed) renormalize();
  }

 private:
  double potential(double r, double v) const {
    double hi = -std::numeric_limits<double>::infinity();
    for (double eta : eta_) hi = std::max(hi, std::log(eta) + eta * r - eta * eta * v);
    double acc = 0.0;
    for (double eta : eta_) acc += std::exp(std::log(eta) + eta * r - eta * eta * v - hi);
    return hi + std::log(acc);
  }

  void renormalize() {
    const double hi = *std::max_element(logpot_.begin(), logpot_.end());
    double s = 0.0;
    for (std::size_t e = 0; e < size(); ++e) {
      w_[e] = std::exp(logpot_[e] - hi);
      s += w_[e];
    }
    double s2 = 0.0;
    for (auto& w : w_) {
      w = std::max(w / s, kFloor);
      s2 += w;
    }
    for (auto& w : w_) w /= s2;
  }

  double gtilde_;
  std::vector<double> eta_;
  std::vector<double> regret_, variance_, logpot_;
  std::vector<double> w_;
  std::int64_t clips_ = 0;
  std::int64_t rounds_ = 0;
};

/// Convex combination of clipped predictions, kept inside [-B, B].
inline double agg_mix(std::span<const double> weights, std::span<const double> preds, double B) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * preds[i];
  return std::clamp(acc, -B, B);
}

struct SleepingGradient {
  std::vector<double> grad;  // one entry per expert
  double mix = 0.0;          // sum over active of w_reduced * grad
};

/// Gradient of the linearized loss w -> l'(yhat) * sum w_e f_e. Active experts get
/// l' [f_e]_B; asleep experts get the mixture gradient itself, so their
/// instantaneous regret is exactly zero.
inline SleepingGradient sleeping_gradient(std::size_t experts, std::span<const std::size_t> active,
                                          std::span<const double> clipped_preds,
                                          std::span<const double> reduced_weights, double loss_deriv) {
  SleepingGradient out;
  double mix = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) mix += reduced_weights[i] * (loss_deriv * clipped_preds[i]);
  out.grad.assign(experts, mix);
  for (std::size_t i = 0; i < active.size(); ++i) out.grad[active[i]] = loss_deriv * clipped_preds[i];
  out.mix = mix;
  return out;
}

inline void write_weights_csv_row(std::ostream& os, std::int64_t t, const SquintWeights& w) {
  char buf[32];
  for (std::size_t e = 0; e < w.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", w.weight(e));
    os << t << ',' << e << ',' << buf << '\n';
  }
}

}  // namespace owr
