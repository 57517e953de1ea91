#pragma once

// Data streams for the online protocol: a target function, an input law and
// optional bounded noise, all reproducible from a single seed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "owr/analysis.hpp"
#include "owr/errors.hpp"
#include "owr/wavelets.hpp"

namespace owr {

enum class TargetKind { HolderPower, AbsPower, PiecewiseHolder, DyadicStep, Custom };

/// A |sin(pi (x - a) / (b - a))|^s bump on [a, b): zero at both ends, with
/// Hoelder exponent s at the endpoints and smooth inside.
struct Segment {
  double a = 0.0, b = 1.0;
  double s = 1.0;
  double amplitude = 1.0;
};

struct TargetSpec {
  TargetKind kind = TargetKind::HolderPower;
  double s = 1.0;
  double amplitude = 1.0;
  std::array<double, kMaxDim> center{0.5, 0.5, 0.5};
  std::vector<Segment> segments;  // PiecewiseHolder, along the first coordinate
  int level = 0;                  // DyadicStep
  std::vector<double> values;     // DyadicStep cell values; empty means constant amplitude
  std::shared_ptr<const CoeffTable> table;  // Custom
  std::shared_ptr<const WaveletBasis> table_basis;

  static TargetSpec holder_power(double s, double amplitude = 1.0) {
    TargetSpec t;
    t.kind = TargetKind::HolderPower;
    t.s = s;
    t.amplitude = amplitude;
    return t;
  }
  static TargetSpec abs_power(double s, double center = 0.5, double amplitude = 1.0) {
    TargetSpec t;
    t.kind = TargetKind::AbsPower;
    t.s = s;
    t.center = {center, center, center};
    t.amplitude = amplitude;
    return t;
  }
  static TargetSpec dyadic_step(int level, std::vector<double> values = {}, double amplitude = 1.0) {
    TargetSpec t;
    t.kind = TargetKind::DyadicStep;
    t.level = level;
    t.values = std::move(values);
    t.amplitude = amplitude;
    return t;
  }
  static TargetSpec piecewise(std::vector<Segment> segs) {
    TargetSpec t;
    t.kind = TargetKind::PiecewiseHolder;
    t.segments = std::move(segs);
    return t;
  }
  /// Five regions with exponents 0.5, 0.8, 3, 5/6, 0.9, laid out like the
  /// inhomogeneous example figure (region centres near 0.1, 0.53, 1.2, 2.1 and
  /// 2.9 on a [0, 3] axis, rescaled to [0, 1]).
  static TargetSpec fig3(double amplitude = 1.0) {
    const double br[6] = {0.0, 0.102, 0.237, 0.525, 0.839, 1.0};
    const double ex[5] = {0.5, 0.8, 3.0, 5.0 / 6.0, 0.9};
    std::vector<Segment> segs;
    for (int i = 0; i < 5; ++i) segs.push_back({br[i], br[i + 1], ex[i], amplitude});
    return piecewise(std::move(segs));
  }
  static TargetSpec custom(std::shared_ptr<const CoeffTable> table, std::shared_ptr<const WaveletBasis> basis) {
    TargetSpec t;
    t.kind = TargetKind::Custom;
    t.table = std::move(table);
    t.table_basis = std::move(basis);
    return t;
  }

  std::string kind_name() const {
    switch (kind) {
      case TargetKind::HolderPower: return "holder_power";
      case TargetKind::AbsPower: return "abs_power";
      case TargetKind::PiecewiseHolder: return "piecewise_holder";
      case TargetKind::DyadicStep: return "dyadic_step";
      case TargetKind::Custom: return "custom";
    }
    return "?";
  }

  /// Index of the segment containing x (first coordinate), or -1.
  int segment_of(double x) const {
    for (std::size_t i = 0; i < segments.size(); ++i)
      if (x >= segments[i].a && (x < segments[i].b || (i + 1 == segments.size() && x <= segments[i].b)))
        return static_cast<int>(i);
    return -1;
  }

  /// HolderPower and AbsPower average the 1-d profile over coordinates, so
  /// every target takes values in [-amplitude, amplitude].
  double operator()(Point x) const {
    const int d = static_cast<int>(x.size());
    switch (kind) {
      case TargetKind::HolderPower: {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) acc += std::pow(x[i], s);
        return amplitude * acc / d;
      }
      case TargetKind::AbsPower: {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
          const double reach = std::max(center[i], 1.0 - center[i]);
          acc += std::pow(std::abs(x[i] - center[i]) / reach, s);
        }
        return amplitude * acc / d;
      }
      case TargetKind::PiecewiseHolder: {
        const int i = segment_of(x[0]);
        if (i < 0) return 0.0;
        const auto& g = segments[static_cast<std::size_t>(i)];
        return g.amplitude * std::pow(std::abs(std::sin(M_PI * (x[0] - g.a) / (g.b - g.a))), g.s);
      }
      case TargetKind::DyadicStep: {
        if (values.empty()) return amplitude;
        const std::int64_t n = std::int64_t{1} << level;
        std::int64_t flat = 0;
        for (int i = d - 1; i >= 0; --i) flat = flat * n + std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(x[i] * n));
        return values[static_cast<std::size_t>(flat)];
      }
      case TargetKind::Custom: return table->reconstruct(*table_basis, x);
    }
    return 0.0;
  }

  void validate(int d, double B) const {
    switch (kind) {
      case TargetKind::HolderPower:
      case TargetKind::AbsPower:
        if (!(s > 0.0)) throw ConfigError("target exponent must be positive");
        if (kind == TargetKind::AbsPower)
          for (int i = 0; i < d; ++i)
            if (!(center[i] >= 0.0 && center[i] <= 1.0)) throw ConfigError("abs_power centre must lie in [0, 1]");
        if (std::abs(amplitude) > B) throw ConfigError("target amplitude exceeds B");
        break;
      case TargetKind::PiecewiseHolder:
        if (segments.empty()) throw ConfigError("piecewise target needs segments");
        for (std::size_t i = 0; i < segments.size(); ++i) {
          const auto& g = segments[i];
          if (!(g.b > g.a) || !(g.s > 0.0)) throw ConfigError("bad segment");
          if (i > 0 && g.a < segments[i - 1].b) throw ConfigError("segments overlap");
          if (std::abs(g.amplitude) > B) throw ConfigError("segment amplitude exceeds B");
        }
        break;
      case TargetKind::DyadicStep: {
        if (level < 0 || level * d > 24) throw ConfigError("dyadic step level out of range");
        if (values.empty()) {
          if (std::abs(amplitude) > B) throw ConfigError("target amplitude exceeds B");
          break;
        }
        if (values.size() != (std::size_t{1} << (level * d)))
          throw ConfigError("dyadic step needs 2^(level d) values");
        for (double v : values)
          if (std::abs(v) > B) throw ConfigError("dyadic step value exceeds B");
        break;
      }
      case TargetKind::Custom:
        if (!table || !table_basis) throw ConfigError("custom target needs a coefficient table");
        if (table->dim() != d || table_basis->dim() != d) throw ConfigError("custom table dimension mismatch");
        break;
    }
  }
};

enum class InputLaw { UniformIID, EquiSpaced, AdversarialNearSingularity };

struct InputSpec {
  InputLaw law = InputLaw::UniformIID;
  double concentration = 4.0;  // power applied to |u|; larger packs points closer to the centre
  std::array<double, kMaxDim> center{0.5, 0.5, 0.5};

  std::string law_name() const {
    switch (law) {
      case InputLaw::UniformIID: return "uniform";
      case InputLaw::EquiSpaced: return "equispaced";
      case InputLaw::AdversarialNearSingularity: return "near_singularity";
    }
    return "?";
  }
};

struct NoiseSpec {
  double eta = 0.0;  // zero disables noise; otherwise y = f + U(-eta, eta)
};

struct StreamSpec {
  TargetSpec target;
  InputSpec inputs;
  NoiseSpec noise;
  int dim = 1;
  std::int64_t T = 1024;
  double B = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("stream dimension must be in 1..3");
    if (T < 1) throw ConfigError("stream horizon must be positive");
    if (!(B > 0.0)) throw ConfigError("stream bound B must be positive");
    if (!(noise.eta >= 0.0)) throw ConfigError("noise level must be non-negative");
    if (inputs.law == InputLaw::AdversarialNearSingularity && !(inputs.concentration >= 1.0))
      throw ConfigError("concentration must be at least 1");
    target.validate(dim, B);
  }
};

struct Sample {
  std::array<double, kMaxDim> x{};
  double y = 0.0;
  double f = 0.0;  // comparator value f(x)
};

/// Uniform double in [0, 1) from the top 53 bits; fixed across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

inline std::vector<Sample> generate_stream(const StreamSpec& spec) {
  spec.validate();
  const int d = spec.dim;
  auto xrng = substream(spec.seed, 1);
  auto nrng = substream(spec.seed, 2);
  // Equi-spaced inputs walk a lattice of m^d midpoints; for d = 1 this is (t - 1/2) / T.
  const auto m = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(spec.T), 1.0 / d) - 1e-9));
  std::vector<Sample> out(static_cast<std::size_t>(spec.T));
  for (std::int64_t t = 0; t < spec.T; ++t) {
    Sample& s = out[static_cast<std::size_t>(t)];
    switch (spec.inputs.law) {
      case InputLaw::UniformIID:
        for (int i = 0; i < d; ++i) s.x[i] = unit_uniform(xrng);
        break;
      case InputLaw::EquiSpaced: {
        std::int64_t rest = t;
        for (int i = 0; i < d; ++i) {
          s.x[i] = (static_cast<double>(rest % m) + 0.5) / static_cast<double>(m);
          rest /= m;
        }
        break;
      }
      case InputLaw::AdversarialNearSingularity:
        for (int i = 0; i < d; ++i) {
          const double u = 2.0 * unit_uniform(xrng) - 1.0;
          const double c = spec.inputs.center[i];
          const double reach = u < 0 ? c : 1.0 - c;
          const double v = c + std::copysign(std::pow(std::abs(u), spec.inputs.concentration) * reach, u);
          s.x[i] = std::clamp(v, 0.0, std::nextafter(1.0, 0.0));
        }
        break;
    }
    s.f = spec.target(Point(s.x.data(), d));
    s.y = s.f;
    if (spec.noise.eta > 0.0) s.y += spec.noise.eta * (2.0 * unit_uniform(nrng) - 1.0);
  }
  return out;
}

}  // namespace owr
