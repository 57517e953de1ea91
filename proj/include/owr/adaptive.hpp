#pragma once

// Locally adaptive regression: one wavelet model per (dyadic cell, anchor)
// pair, aggregated as sleeping experts. An expert is awake when x falls in its
// cell; asleep experts are charged the mixture's own loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "owr/aggregator.hpp"
#include "owr/errors.hpp"
#include "owr/loss.hpp"
#include "owr/owd.hpp"
#include "owr/wavelets.hpp"

namespace owr {

using NodeId = std::int64_t;

/// Complete 2^d-ary tree of dyadic cubes down to depth J0. Nodes are numbered
/// level by level; within a level the cell vector c is flattened as
/// c_1 + c_2 2^l + c_3 2^{2l}.
class DyadicTree {
 public:
  DyadicTree(int depth, int dim) : depth_(depth), dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("tree dimension must be in 1..3");
    if (depth < 0 || depth * dim > 30) throw ConfigError("tree depth out of range");
    offsets_.push_back(0);
    for (int l = 0; l <= depth; ++l) offsets_.push_back(offsets_.back() + cells(l));
  }

  int depth() const { return depth_; }
  int dim() const { return dim_; }
  NodeId node_count() const { return offsets_.back(); }
  NodeId cells(int level) const { return NodeId{1} << (level * dim_); }
  NodeId root() const { return 0; }

  int level_of(NodeId n) const {
    check(n);
    int l = 0;
    while (offsets_[l + 1] <= n) ++l;
    return l;
  }

  std::array<std::int64_t, kMaxDim> cell_of(NodeId n) const {
    const int l = level_of(n);
    std::int64_t flat = n - offsets_[l];
    const std::int64_t side = std::int64_t{1} << l;
    std::array<std::int64_t, kMaxDim> c{};
    for (int i = 0; i < dim_; ++i) {
      c[i] = flat % side;
      flat /= side;
    }
    return c;
  }

  NodeId node(int level, const std::array<std::int64_t, kMaxDim>& c) const {
    const std::int64_t side = std::int64_t{1} << level;
    std::int64_t flat = 0;
    for (int i = dim_ - 1; i >= 0; --i) flat = flat * side + c[i];
    return offsets_[level] + flat;
  }

  /// Level-l cell containing x; cells are half-open except at the right edge of the domain.
  NodeId node_of(Point x, int level) const {
    if (level < 0 || level > depth_) throw DomainError("tree level out of range");
    const std::int64_t side = std::int64_t{1} << level;
    std::array<std::int64_t, kMaxDim> c{};
    for (int i = 0; i < dim_; ++i) {
      if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw DomainError("point outside [0,1]^d");
      c[i] = std::min(static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level))), side - 1);
    }
    return node(level, c);
  }

  Box cube(NodeId n) const {
    const int l = level_of(n);
    const auto c = cell_of(n);
    Box b;
    b.dim = dim_;
    for (int i = 0; i < dim_; ++i) {
      b.lo[i] = std::ldexp(static_cast<double>(c[i]), -l);
      b.hi[i] = std::ldexp(static_cast<double>(c[i] + 1), -l);
    }
    return b;
  }

  std::vector<NodeId> children(NodeId n) const {
    const int l = level_of(n);
    if (l == depth_) return {};
    const auto c = cell_of(n);
    std::vector<NodeId> out;
    for (unsigned m = 0; m < (1u << dim_); ++m) {
      std::array<std::int64_t, kMaxDim> cc{};
      for (int i = 0; i < dim_; ++i) cc[i] = 2 * c[i] + ((m >> i) & 1u);
      out.push_back(node(l + 1, cc));
    }
    return out;
  }

  NodeId parent(NodeId n) const {
    const int l = level_of(n);
    if (l == 0) throw DomainError("root has no parent");
    auto c = cell_of(n);
    for (int i = 0; i < dim_; ++i) c[i] /= 2;
    return node(l - 1, c);
  }

  bool is_ancestor_or_self(NodeId a, NodeId n) const {
    int la = level_of(a), ln = level_of(n);
    while (ln > la) {
      n = parent(n);
      --ln;
    }
    return n == a;
  }

 private:
  void check(NodeId n) const {
    if (n < 0 || n >= node_count()) throw DomainError("node id out of range");
  }

  int depth_;
  int dim_;
  std::vector<NodeId> offsets_;
};

/// Leaves of a pruned tree; valid when their cubes partition [0,1]^d.
struct Pruning {
  std::vector<NodeId> leaves;

  bool is_root() const { return leaves.size() == 1 && leaves[0] == 0; }

  void validate(const DyadicTree& tree) const {
    if (leaves.empty()) throw ConfigError("pruning has no leaves");
    double volume = 0.0;
    for (std::size_t a = 0; a < leaves.size(); ++a) {
      if (leaves[a] < 0 || leaves[a] >= tree.node_count()) throw ConfigError("pruning leaf outside the tree");
      volume += tree.cube(leaves[a]).volume();
      for (std::size_t b = 0; b < leaves.size(); ++b)
        if (a != b && tree.is_ancestor_or_self(leaves[a], leaves[b]))
          throw ConfigError("pruning leaves overlap");
    }
    // Dyadic cubes that form an antichain are disjoint; full volume means they cover.
    if (std::abs(volume - 1.0) > 1e-12) throw ConfigError("pruning leaves do not cover the domain");
  }

  NodeId leaf_of(const DyadicTree& tree, Point x) const {
    for (NodeId n : leaves)
      if (tree.node_of(x, tree.level_of(n)) == n) return n;
    throw InternalError("point not covered by pruning");
  }
};

/// P(l) = 1 + P(l+1)^{2^d} with P(depth) = 1.
inline double pruning_count(int depth, int dim) {
  double p = 1.0;
  for (int l = depth - 1; l >= 0; --l) p = 1.0 + std::pow(p, static_cast<double>(1 << dim));
  return p;
}

/// Calls fn for every pruning of the top `depth` levels with at most max_leaves leaves.
inline void for_each_pruning(const DyadicTree& tree, int depth, std::size_t max_leaves,
                             const std::function<void(const Pruning&)>& fn, double limit = 1e7) {
  if (depth > tree.depth()) throw ConfigError("pruning depth exceeds tree depth");
  if (pruning_count(depth, tree.dim()) > limit) throw ConfigError("too many prunings to enumerate");
  // All partial leaf lists for a subtree, built bottom-up.
  std::function<std::vector<std::vector<NodeId>>(NodeId)> rec = [&](NodeId n) {
    std::vector<std::vector<NodeId>> out{{n}};
    if (tree.level_of(n) == depth) return out;
    std::vector<std::vector<NodeId>> acc{{}};
    for (NodeId c : tree.children(n)) {
      const auto sub = rec(c);
      std::vector<std::vector<NodeId>> next;
      for (const auto& a : acc)
        for (const auto& s : sub) {
          if (a.size() + s.size() > max_leaves) continue;
          auto v = a;
          v.insert(v.end(), s.begin(), s.end());
          next.push_back(std::move(v));
        }
      acc = std::move(next);
    }
    for (auto& a : acc) out.push_back(std::move(a));
    return out;
  };
  for (auto& leaves : rec(tree.root()))
    if (leaves.size() <= max_leaves) fn(Pruning{std::move(leaves)});
}

inline std::vector<Pruning> enumerate_prunings(const DyadicTree& tree, int depth,
                                               std::size_t max_leaves = std::numeric_limits<std::size_t>::max()) {
  std::vector<Pruning> out;
  for_each_pruning(tree, depth, max_leaves, [&](const Pruning& p) { out.push_back(p); });
  return out;
}

struct AdaptiveConfig {
  int J0 = 0;
  int J = 0;
  double B = 1.0;
  int grid_size = 1;  // anchors per scaling coefficient; 0 selects the B T^{-1/2} step
  std::int64_t horizon = 1;
  std::int64_t max_experts = 1 << 16;
  LearnerSchedule schedule{};
};

struct Expert {
  NodeId node = 0;
  std::vector<std::pair<BasisIndex, double>> anchors;
  std::unique_ptr<CoeffModel> model;
};

struct AdaptiveStep {
  double prediction = 0.0;
  double loss_derivative = 0.0;
  std::size_t active_experts = 0;
  std::size_t top_expert = 0;
};

class AdaptiveRegressor {
 public:
  AdaptiveRegressor(const WaveletBasis& basis, const LossSpec& loss, AdaptiveConfig cfg)
      : basis_(&basis), loss_(loss), cfg_(cfg), tree_(cfg.J0, basis.dim()) {
    if (cfg.J < cfg.J0) throw ConfigError("adaptive J must be at least J0");
    if (!(cfg.B > 0.0)) throw ConfigError("B must be positive");
    if (cfg.grid_size < 0) throw ConfigError("grid_size must be non-negative");
    const std::int64_t count = expert_count();
    if (count > cfg.max_experts)
      throw ConfigError("expert set of size " + std::to_string(count) + " exceeds budget " +
                        std::to_string(cfg.max_experts));
    build_experts();
    weights_ = std::make_unique<SquintWeights>(experts_.size(), loss.lipschitz() * cfg.B, std::max<std::int64_t>(cfg.horizon, 1));
    cum_loss_.assign(experts_.size(), 0.0);
    awake_.assign(experts_.size(), 0);
  }

  /// Scaling functions at the node's level whose support overlaps the cell.
  std::vector<BasisIndex> node_scaling_indices(NodeId n) const {
    const int l = tree_.level_of(n);
    const Box cell = tree_.cube(n);
    const auto c = tree_.cell_of(n);
    const std::int64_t side = std::int64_t{1} << l;
    const int len = basis_->family().support_length();
    std::array<std::vector<std::int64_t>, kMaxDim> ks;
    for (int i = 0; i < basis_->dim(); ++i) {
      for (std::int64_t k = c[i] - len + 1; k <= c[i]; ++k) {
        const std::int64_t kk = floor_mod(k, side);
        if (std::find(ks[i].begin(), ks[i].end(), kk) == ks[i].end()) ks[i].push_back(kk);
      }
      std::sort(ks[i].begin(), ks[i].end());
    }
    std::vector<BasisIndex> out;
    BasisIndex idx;
    idx.level = l;
    std::function<void(int)> rec = [&](int i) {
      if (i == basis_->dim()) {
        const auto boxes = basis_->support(idx);
        if (std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.overlaps(cell); }))
          out.push_back(idx);
        return;
      }
      for (auto k : ks[i]) {
        idx.k[i] = k;
        rec(i + 1);
      }
    };
    rec(0);
    return out;
  }

  int anchor_grid_size(int level) const {
    if (cfg_.grid_size > 0) return cfg_.grid_size;
    // Step B / sqrt(T) across [-half_width, half_width].
    const double step = cfg_.B / std::sqrt(static_cast<double>(std::max<std::int64_t>(cfg_.horizon, 1)));
    return 1 + 2 * static_cast<int>(std::floor(anchor_half_width(level) / step));
  }

  /// 2^{-l d/2} ||phi||_1^d B bounds |<f, phi_{l,k}>| for ||f||_inf <= B.
  double anchor_half_width(int level) const {
    return std::exp2(-0.5 * level * basis_->dim()) * std::pow(basis_->generator_l1(0), basis_->dim()) * cfg_.B;
  }

  std::vector<double> anchor_grid(int level) const {
    const int g = anchor_grid_size(level);
    if (g == 1) return {0.0};
    const double hw = anchor_half_width(level);
    std::vector<double> out;
    for (int i = 0; i < g; ++i) out.push_back(hw * (2.0 * i / (g - 1) - 1.0));
    return out;
  }

  /// sum over nodes of grid_size^{lambda_n}.
  std::int64_t expert_count() const {
    double total = 0.0;
    for (NodeId n = 0; n < tree_.node_count(); ++n) {
      const int l = tree_.level_of(n);
      const auto g = static_cast<double>(anchor_grid_size(l));
      total += g == 1 ? 1.0 : std::pow(g, static_cast<double>(node_scaling_indices(n).size()));
      if (total > 9e18) break;
    }
    return static_cast<std::int64_t>(std::min(total, 9e18));
  }

  AdaptiveStep step(Point x, double y) {
    AdaptiveStep out;
    collect_active(x);
    const std::size_t na = active_.size();
    out.active_experts = na;
    if (evals_.size() < na) evals_.resize(na);
    preds_.resize(na);
    clipped_.resize(na);
    for (std::size_t i = 0; i < na; ++i) {
      experts_[active_[i]].model->evaluate(x, evals_[i]);
      preds_[i] = evals_[i].prediction;
      clipped_[i] = std::clamp(preds_[i], -cfg_.B, cfg_.B);
    }
    const auto red = weights_->reduce(active_);
    reduced_.resize(na);
    for (std::size_t i = 0; i < na; ++i) reduced_[i] = red[active_[i]];
    out.prediction = agg_mix(reduced_, clipped_, cfg_.B);
    out.loss_derivative = loss_.derivative(out.prediction, y);
    const auto sg = sleeping_gradient(experts_.size(), active_, clipped_, reduced_, out.loss_derivative);
    weights_->update(sg.grad, sg.mix);
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t e = active_[i];
      cum_loss_[e] += loss_.value(clipped_[i], y);
      ++awake_[e];
      experts_[e].model->apply(evals_[i], loss_.derivative(preds_[i], y));
    }
    const auto w = weights_->weights();
    out.top_expert = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    return out;
  }

  /// The prediction step() would emit at x, without updating anything.
  double predict(Point x) const {
    const auto active = active_experts(x);
    const auto red = weights_->reduce(active);
    std::vector<double> w, p;
    Evaluation ev;
    for (auto e : active) {
      experts_[e].model->evaluate(x, ev);
      w.push_back(red[e]);
      p.push_back(std::clamp(ev.prediction, -cfg_.B, cfg_.B));
    }
    return agg_mix(w, p, cfg_.B);
  }

  /// Experts awake at x: one node per level, times that node's anchors.
  std::vector<std::size_t> active_experts(Point x) const {
    std::vector<std::size_t> out;
    for (int l = 0; l <= cfg_.J0; ++l) {
      const NodeId n = tree_.node_of(x, l);
      for (std::size_t e = node_first_[n]; e < node_first_[n + 1]; ++e) out.push_back(e);
    }
    return out;
  }

  const DyadicTree& tree() const { return tree_; }
  const AdaptiveConfig& config() const { return cfg_; }
  const LossSpec& loss() const { return loss_; }
  const SquintWeights& weights() const { return *weights_; }
  std::size_t size() const { return experts_.size(); }
  const Expert& expert(std::size_t e) const { return experts_[e]; }
  /// Experts [first, last) living at node n.
  std::pair<std::size_t, std::size_t> node_experts(NodeId n) const { return {node_first_[n], node_first_[n + 1]}; }
  /// Loss of each expert's clipped prediction summed over its awake rounds.
  const std::vector<double>& expert_losses() const { return cum_loss_; }
  /// Awake-round count |T_n| per expert.
  const std::vector<std::int64_t>& awake_counts() const { return awake_; }

  std::int64_t node_occupancy(NodeId n) const { return awake_[node_first_[n]]; }

  std::size_t learner_count() const {
    std::size_t c = 0;
    for (const auto& e : experts_) c += e.model->learner_count();
    return c;
  }

  std::int64_t clip_count() const {
    std::int64_t c = 0;
    for (const auto& e : experts_) c += e.model->clip_count();
    return c;
  }

 private:
  void collect_active(Point x) {
    active_.clear();
    for (int l = 0; l <= cfg_.J0; ++l) {
      const NodeId n = tree_.node_of(x, l);
      for (std::size_t e = node_first_[n]; e < node_first_[n + 1]; ++e) active_.push_back(e);
    }
  }

  void build_experts() {
    node_first_.assign(static_cast<std::size_t>(tree_.node_count()) + 1, 0);
    for (NodeId n = 0; n < tree_.node_count(); ++n) {
      node_first_[n] = experts_.size();
      const int l = tree_.level_of(n);
      ModelConfig mc;
      mc.j0 = l;
      mc.J = cfg_.J;
      mc.G = loss_.lipschitz();
      mc.B = cfg_.B;
      mc.schedule = cfg_.schedule;
      const auto grid = anchor_grid(l);
      const auto scal = grid.size() == 1 ? std::vector<BasisIndex>{} : node_scaling_indices(n);
      std::vector<std::size_t> digit(scal.size(), 0);
      while (true) {
        Expert e;
        e.node = n;
        e.model = std::make_unique<CoeffModel>(*basis_, mc, tree_.cube(n));
        for (std::size_t i = 0; i < scal.size(); ++i) {
          e.anchors.emplace_back(scal[i], grid[digit[i]]);
          e.model->set_anchor(scal[i], grid[digit[i]]);
        }
        experts_.push_back(std::move(e));
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == grid.size()) digit[i++] = 0;
        if (i == digit.size()) break;
      }
    }
    node_first_.back() = experts_.size();
  }

  const WaveletBasis* basis_;
  LossSpec loss_;
  AdaptiveConfig cfg_;
  DyadicTree tree_;
  std::vector<Expert> experts_;
  std::vector<std::size_t> node_first_;
  std::unique_ptr<SquintWeights> weights_;
  std::vector<double> cum_loss_;
  std::vector<std::int64_t> awake_;

  std::vector<std::size_t> active_;
  std::vector<Evaluation> evals_;
  std::vector<double> preds_, clipped_, reduced_;
};

/// Loss of the pruning-composite oracle: each leaf contributes the smallest
/// recorded loss among the experts living at that leaf.
inline double pruning_loss(const AdaptiveRegressor& reg, const Pruning& pruning) {
  pruning.validate(reg.tree());
  double total = 0.0;
  for (NodeId n : pruning.leaves) {
    const auto [first, last] = reg.node_experts(n);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = first; e < last; ++e) best = std::min(best, reg.expert_losses()[e]);
    total += best;
  }
  return total;
}

/// Algorithm loss minus the pruning oracle's loss.
inline double pruning_regret(const AdaptiveRegressor& reg, const Pruning& pruning, double algorithm_loss) {
  return algorithm_loss - pruning_loss(reg, pruning);
}

}  // namespace owr
