#pragma once

// Online wavelet decomposition: one parameter-free learner per basis
// coefficient, created the first time its function is active.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "owr/errors.hpp"
#include "owr/loss.hpp"
#include "owr/paramfree.hpp"
#include "owr/wavelets.hpp"

namespace owr {

inline constexpr int kDefaultMaxLevel = 16;

/// ceil((S / (d eps)) log2 T), uncapped.
inline int theorem_level(double T, double S, int d, double eps) {
  if (!(eps > 0.0)) throw ConfigError("level margin eps must be positive");
  if (!(T >= 1.0)) throw ConfigError("horizon must be at least 1");
  const double raw = S / (d * eps) * std::log2(T);
  return static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
}

/// theorem_level capped at J_max; levels past input resolution carry no signal.
inline int default_level(double T, double S, int d, double eps, int j_max = kDefaultMaxLevel) {
  return std::min(theorem_level(T, S, d, eps), j_max);
}

/// Initial wealth of the learner at level j: wealth0 * B * 2^{-jd/2} * 2^{-jd kappa}.
/// Fine levels start with little to bet, which keeps their additive regret summable.
struct LearnerSchedule {
  double wealth0 = 1.0;
  double kappa = 1.0;

  double wealth(int level, int d, double B) const {
    return wealth0 * B * std::exp2(-level * d * (0.5 + kappa));
  }
};

struct ModelConfig {
  int j0 = 0;
  int J = 0;
  double G = 1.0;  // loss Lipschitz constant
  double B = 1.0;  // comparator sup bound, scales initial wealth
  LearnerSchedule schedule{};
};

struct SnapshotRow {
  BasisIndex index;
  double coefficient;
};

/// Active set at one point with values and the model's prediction there.
struct Evaluation {
  std::vector<WaveletBasis::ActiveEntry> active;
  double prediction = 0.0;
};

struct StepResult {
  double prediction = 0.0;
  double loss_derivative = 0.0;
  std::size_t active = 0;
};

class CoeffModel {
 public:
  CoeffModel(const WaveletBasis& basis, ModelConfig cfg, Box domain)
      : basis_(&basis), cfg_(cfg), domain_(domain) {
    if (cfg.j0 < 0) throw ConfigError("j0 must be non-negative");
    if (cfg.J < cfg.j0) throw ConfigError("J (" + std::to_string(cfg.J) + ") below j0 (" + std::to_string(cfg.j0) + ")");
    if (cfg.J * basis.dim() > 60) throw ConfigError("J too large for 64-bit translations");
    if (!(cfg.G > 0.0) || !(cfg.B > 0.0)) throw ConfigError("G and B must be positive");
    if (domain.dim != basis.dim()) throw ConfigError("model domain dimension mismatch");
    const int d = basis.dim();
    const unsigned masks = 1u << d;
    hints_.resize(static_cast<std::size_t>(cfg.J + 1) * masks);
    for (int j = 0; j <= cfg.J; ++j) {
      for (unsigned m = 0; m < masks; ++m) {
        double h = cfg.G;
        for (int i = 0; i < d; ++i) h *= half_power_of_two(j) * basis.periodized_sup((m >> i) & 1u, j);
        hints_[static_cast<std::size_t>(j) * masks + m] = h;
      }
    }
  }

  CoeffModel(const WaveletBasis& basis, ModelConfig cfg) : CoeffModel(basis, cfg, Box::unit(basis.dim())) {}

  const WaveletBasis& basis() const { return *basis_; }
  const ModelConfig& config() const { return cfg_; }
  const Box& domain() const { return domain_; }
  int j0() const { return cfg_.j0; }
  int J() const { return cfg_.J; }

  /// |g| bound for the coordinate: G 2^{jd/2} prod_i sup|periodized g^{eps_i}|.
  double hint(const BasisIndex& idx) const {
    return hints_[static_cast<std::size_t>(idx.level) * (1u << basis_->dim()) + idx.eps_mask()];
  }

  void set_anchor(const BasisIndex& idx, double value) {
    if (!idx.is_scaling() || idx.level != cfg_.j0) throw ConfigError("anchors apply to scaling indices at j0");
    anchors_[idx] = value;
    if (auto it = learners_.find(idx); it != learners_.end()) it->second.reset(value);
  }

  double anchor(const BasisIndex& idx) const {
    if (anchors_.empty()) return 0.0;
    auto it = anchors_.find(idx);
    return it == anchors_.end() ? 0.0 : it->second;
  }

  double coefficient(const BasisIndex& idx) const {
    auto it = learners_.find(idx);
    return it == learners_.end() ? anchor(idx) : it->second.predict();
  }

  /// Restarts the coordinate's learner at c, so the coefficient reads c.
  void force_coefficient(const BasisIndex& idx, double c) { learner(idx).reset(c); }

  void evaluate(Point x, Evaluation& out) const {
    check_point(x);
    out.active.clear();
    double acc = 0.0;
    basis_->for_each_active(cfg_.j0, cfg_.J, x, [&](const BasisIndex& idx, double v) {
      out.active.push_back({idx, v});
      acc += coefficient(idx) * v;
    });
    out.prediction = acc;
  }

  double predict(Point x) const {
    Evaluation e;
    evaluate(x, e);
    return e.prediction;
  }

  /// Per-coefficient gradients loss_deriv * value at x, zeros omitted.
  std::vector<std::pair<BasisIndex, double>> gradients(Point x, double loss_deriv) const {
    check_point(x);
    std::vector<std::pair<BasisIndex, double>> out;
    if (loss_deriv == 0.0) return out;
    basis_->for_each_active(cfg_.j0, cfg_.J, x, [&](const BasisIndex& idx, double v) {
      const double g = loss_deriv * v;
      if (g != 0.0) out.emplace_back(idx, g);
    });
    return out;
  }

  /// Updates the learners of an evaluated active set with l'(prediction).
  void apply(const Evaluation& e, double loss_deriv) {
    if (!std::isfinite(loss_deriv)) throw NumericError("non-finite loss derivative");
    if (loss_deriv == 0.0) return;
    for (const auto& [idx, v] : e.active) {
      const double g = loss_deriv * v;
      if (g != 0.0) learner(idx).update(g);
    }
  }

  StepResult step(Point x, const LossSpec& loss, double y) {
    evaluate(x, scratch_);
    StepResult r;
    r.prediction = scratch_.prediction;
    r.loss_derivative = loss.derivative(r.prediction, y);
    r.active = scratch_.active.size();
    apply(scratch_, r.loss_derivative);
    return r;
  }

  std::size_t learner_count() const { return learners_.size(); }
  const std::unordered_map<BasisIndex, PfLearner, BasisIndexHash>& learners() const { return learners_; }

  std::int64_t clip_count() const {
    std::int64_t c = 0;
    for (const auto& [idx, l] : learners_) c += l.clips();
    return c;
  }

  /// Materialized coefficients sorted by index.
  std::vector<SnapshotRow> snapshot() const {
    std::vector<SnapshotRow> rows;
    rows.reserve(learners_.size());
    for (const auto& [idx, l] : learners_) rows.push_back({idx, l.predict()});
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return rows;
  }

 private:
  PfLearner& learner(const BasisIndex& idx) {
    auto it = learners_.find(idx);
    if (it != learners_.end()) return it->second;
    if (idx.level < cfg_.j0 || idx.level > cfg_.J || (idx.is_scaling() && idx.level != cfg_.j0))
      throw DomainError("basis index outside the model's level range");
    const double w = cfg_.schedule.wealth(idx.level, basis_->dim(), cfg_.B);
    return learners_.emplace(idx, PfLearner(hint(idx), anchor(idx), w)).first->second;
  }

  void check_point(Point x) const {
    if (static_cast<int>(x.size()) < basis_->dim()) throw DomainError("point has too few coordinates");
    for (int i = 0; i < basis_->dim(); ++i) {
      if (!std::isfinite(x[i])) throw NumericError("non-finite input coordinate");
      if (x[i] < 0.0 || x[i] > 1.0) throw DomainError("input outside [0,1]^d");
    }
    if (!domain_.contains(x)) throw DomainError("input outside the model's domain");
  }

  const WaveletBasis* basis_;
  ModelConfig cfg_;
  Box domain_;
  std::vector<double> hints_;
  std::unordered_map<BasisIndex, double, BasisIndexHash> anchors_;
  std::unordered_map<BasisIndex, PfLearner, BasisIndexHash> learners_;
  Evaluation scratch_;
};

/// CSV rows kind,j,k1..kd,e1..ed,value.
inline void write_index_csv_header(std::ostream& os, int d) {
  os << "kind,j";
  for (int i = 1; i <= d; ++i) os << ",k" << i;
  for (int i = 1; i <= d; ++i) os << ",e" << i;
  os << ",value\n";
}

inline void write_index_csv_row(std::ostream& os, const BasisIndex& idx, int d, double value) {
  char buf[32];
  os << (idx.is_scaling() ? "scaling" : "detail") << ',' << idx.level;
  for (int i = 0; i < d; ++i) os << ',' << idx.k[i];
  for (int i = 0; i < d; ++i) os << ',' << static_cast<int>(idx.eps[i]);
  std::snprintf(buf, sizeof buf, "%.17g", value);
  os << ',' << buf << '\n';
}

inline void write_snapshot_csv(std::ostream& os, const CoeffModel& model) {
  const int d = model.basis().dim();
  write_index_csv_header(os, d);
  for (const auto& row : model.snapshot()) write_index_csv_row(os, row.index, d, row.coefficient);
}

}  // namespace owr
