#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "owr/errors.hpp"

namespace owr {

enum class LossKind { Absolute, Square, Pinball };

/// Convex Lipschitz losses l(yhat, y). Square loss clips the target to [-B, B]
/// and continues with slope 4B outside [-B, B] in yhat, so |l'| <= 4B and
/// predictions beyond the bound are always pushed back.
struct LossSpec {
  LossKind kind = LossKind::Square;
  double bound = 1.0;  // B, used by Square
  double tau = 0.5;    // quantile level, used by Pinball

  static LossSpec absolute() { return {LossKind::Absolute, 1.0, 0.5}; }
  static LossSpec square(double B) {
    if (!(B > 0.0)) throw ConfigError("square loss needs B > 0");
    return {LossKind::Square, B, 0.5};
  }
  static LossSpec pinball(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball tau must lie in (0, 1)");
    return {LossKind::Pinball, 1.0, tau};
  }

  static LossSpec from_name(std::string_view name, double B, double tau = 0.5) {
    if (name == "absolute") return absolute();
    if (name == "square") return square(B);
    if (name == "pinball") return pinball(tau);
    throw ConfigError("unknown loss '" + std::string(name) + "'");
  }

  std::string name() const {
    switch (kind) {
      case LossKind::Absolute: return "absolute";
      case LossKind::Square: return "square";
      case LossKind::Pinball: return "pinball";
    }
    return "?";
  }

  double clip(double v) const { return std::clamp(v, -bound, bound); }

  double value(double yhat, double y) const {
    switch (kind) {
      case LossKind::Absolute: return std::abs(yhat - y);
      case LossKind::Square: {
        const double yc = clip(y), pc = clip(yhat);
        const double r = pc - yc;
        return r * r + 4.0 * bound * std::abs(yhat - pc);
      }
      case LossKind::Pinball:
        return y >= yhat ? tau * (y - yhat) : (1.0 - tau) * (yhat - y);
    }
    return 0.0;
  }

  /// A subgradient in yhat; 0 where the loss has a kink at equality.
  double derivative(double yhat, double y) const {
    switch (kind) {
      case LossKind::Absolute: return yhat > y ? 1.0 : (yhat < y ? -1.0 : 0.0);
      case LossKind::Square:
        if (yhat > bound) return 4.0 * bound;
        if (yhat < -bound) return -4.0 * bound;
        return 2.0 * (yhat - clip(y));
      case LossKind::Pinball: return y > yhat ? -tau : (yhat > y ? 1.0 - tau : 0.0);
    }
    return 0.0;
  }

  /// G with |l'| <= G.
  double lipschitz() const {
    switch (kind) {
      case LossKind::Absolute: return 1.0;
      case LossKind::Square: return 4.0 * bound;
      case LossKind::Pinball: return std::max(tau, 1.0 - tau);
    }
    return 0.0;
  }
};

}  // namespace owr
