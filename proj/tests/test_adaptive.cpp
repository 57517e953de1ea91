#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "owr/adaptive.hpp"

using namespace owr;

namespace {

AdaptiveConfig acfg(int J0, int J, double B = 1.0, std::int64_t T = 1000) {
  AdaptiveConfig c;
  c.J0 = J0;
  c.J = J;
  c.B = B;
  c.horizon = T;
  return c;
}

// Counts valid prunings by testing every subset of nodes.
std::size_t brute_force_prunings(const DyadicTree& tree) {
  const auto n = static_cast<std::size_t>(tree.node_count());
  std::size_t count = 0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    Pruning p;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) p.leaves.push_back(static_cast<NodeId>(i));
    try {
      p.validate(tree);
      ++count;
    } catch (const ConfigError&) {
    }
  }
  return count;
}

}  // namespace

TEST(DyadicTree, NodeOf) {
  DyadicTree t1(3, 1);
  const double a[] = {0.3};
  const NodeId n = t1.node_of(a, 2);
  EXPECT_EQ(t1.cell_of(n)[0], 1);
  EXPECT_EQ(t1.cube(n).lo[0], 0.25);
  EXPECT_EQ(t1.cube(n).hi[0], 0.5);
  const double b[] = {1.0};
  EXPECT_EQ(t1.cell_of(t1.node_of(b, 1))[0], 1);
  DyadicTree t2(2, 2);
  const double c[] = {0.3, 0.8};
  const auto cell = t2.cell_of(t2.node_of(c, 1));
  EXPECT_EQ(cell[0], 0);
  EXPECT_EQ(cell[1], 1);
}

TEST(DyadicTree, LevelsTileAndChildrenPartition) {
  for (int d : {1, 2, 3}) {
    DyadicTree t(2, d);
    for (int l = 0; l <= 2; ++l) {
      double vol = 0;
      for (NodeId n = 0; n < t.node_count(); ++n)
        if (t.level_of(n) == l) vol += t.cube(n).volume();
      EXPECT_DOUBLE_EQ(vol, 1.0);
    }
    for (NodeId n = 0; n < t.node_count(); ++n) {
      const auto kids = t.children(n);
      if (t.level_of(n) == 2) {
        EXPECT_TRUE(kids.empty());
        continue;
      }
      ASSERT_EQ(kids.size(), std::size_t{1} << d);
      double vol = 0;
      for (NodeId k : kids) {
        vol += t.cube(k).volume();
        EXPECT_EQ(t.parent(k), n);
      }
      EXPECT_DOUBLE_EQ(vol, t.cube(n).volume());
    }
    std::mt19937_64 rng(d);
    std::uniform_real_distribution<double> u(0, 1);
    for (int rep = 0; rep < 100; ++rep) {
      double x[3] = {u(rng), u(rng), u(rng)};
      const Point p(x, d);
      for (int l = 0; l <= 2; ++l) {
        int hits = 0;
        for (NodeId n = 0; n < t.node_count(); ++n)
          if (t.level_of(n) == l && t.node_of(p, l) == n) ++hits;
        EXPECT_EQ(hits, 1);
        EXPECT_TRUE(t.cube(t.node_of(p, l)).contains(p));
      }
    }
  }
}

TEST(Experts, Counts) {
  WaveletBasis h1(WaveletFamily::haar(), 1, 10), h2(WaveletFamily::haar(), 2, 10);
  const auto loss = LossSpec::square(1.0);
  EXPECT_EQ(AdaptiveRegressor(h1, loss, acfg(2, 4)).size(), 7u);
  EXPECT_EQ(AdaptiveRegressor(h1, loss, acfg(0, 4)).size(), 1u);
  EXPECT_EQ(AdaptiveRegressor(h2, loss, acfg(1, 4)).size(), 5u);
  // Haar cells meet one scaling function each: grid_size^1 experts per node.
  auto c = acfg(2, 4);
  c.grid_size = 3;
  AdaptiveRegressor g(h1, loss, c);
  EXPECT_EQ(g.size(), 21u);
  EXPECT_EQ(g.expert_count(), 21);
  // db2 at level 2: each cell overlaps 3 periodized scaling supports.
  WaveletBasis d2(WaveletFamily::daubechies(2), 1, 10);
  auto c2 = acfg(2, 4);
  c2.grid_size = 2;
  AdaptiveRegressor g2(d2, loss, c2);
  EXPECT_EQ(g2.node_scaling_indices(3).size(), 3u);
  EXPECT_EQ(g2.size(), static_cast<std::size_t>(2 + 2 * 4 + 4 * 8));
}

TEST(Experts, BudgetGuard) {
  WaveletBasis h(WaveletFamily::haar(), 2, 10);
  auto c = acfg(4, 6);
  c.max_experts = 100;
  EXPECT_THROW(AdaptiveRegressor(h, LossSpec::square(1.0), c), ConfigError);
  EXPECT_THROW(AdaptiveRegressor(h, LossSpec::square(1.0), acfg(3, 2)), ConfigError);
}

TEST(Experts, AnchorGrid) {
  WaveletBasis h(WaveletFamily::haar(), 1, 10);
  auto c = acfg(1, 3, 2.0, 10000);
  c.grid_size = 0;
  AdaptiveRegressor r(h, LossSpec::square(2.0), c);
  // Half-width 2 at the root with step 2/100 gives 201 points.
  EXPECT_EQ(r.anchor_grid_size(0), 201);
  const auto g0 = r.anchor_grid(0);
  EXPECT_DOUBLE_EQ(g0.front(), -2.0);
  EXPECT_DOUBLE_EQ(g0.back(), 2.0);
  EXPECT_NEAR(g0[1] - g0[0], 0.02, 1e-12);
  c.grid_size = 1;
  AdaptiveRegressor one(h, LossSpec::square(2.0), c);
  EXPECT_EQ(one.anchor_grid(1), std::vector<double>{0.0});
}

TEST(Adaptive, FreshPredictsZero) {
  WaveletBasis b(WaveletFamily::daubechies(2), 1, 10);
  AdaptiveRegressor r(b, LossSpec::square(1.0), acfg(3, 6));
  const double x[] = {0.42};
  EXPECT_EQ(r.step(x, 0.9).prediction, 0.0);
}

TEST(Adaptive, SingleExpertMatchesGlobal) {
  WaveletBasis b(WaveletFamily::daubechies(2), 1, 12);
  const auto loss = LossSpec::square(1.0);
  AdaptiveRegressor r(b, loss, acfg(0, 6));
  ModelConfig mc;
  mc.J = 6;
  mc.G = loss.lipschitz();
  CoeffModel global(b, mc);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 2000; ++t) {
    const double x[] = {u(rng)};
    const double y = std::sin(6 * x[0]);
    const auto a = r.step(x, y);
    const auto g = global.step(x, loss, y);
    EXPECT_EQ(a.prediction, std::clamp(g.prediction, -1.0, 1.0));
    EXPECT_EQ(r.weights().weight(0), 1.0);
    EXPECT_EQ(a.active_experts, 1u);
  }
}

TEST(Adaptive, ActiveSetsClippingAndRestriction) {
  WaveletBasis b(WaveletFamily::daubechies(3), 2, 10);
  const auto loss = LossSpec::square(0.5);
  auto c = acfg(2, 4, 0.5, 400);
  AdaptiveRegressor r(b, loss, c);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 400; ++t) {
    const double x[] = {u(rng), u(rng)};
    const auto s = r.step(x, 3.0 * (u(rng) - 0.5));
    EXPECT_EQ(s.active_experts, 3u);
    EXPECT_LE(std::abs(s.prediction), 0.5);
  }
  for (std::size_t e = 0; e < r.size(); ++e) {
    const auto& ex = r.expert(e);
    const Box cell = r.tree().cube(ex.node);
    EXPECT_EQ(ex.model->j0(), r.tree().level_of(ex.node));
    for (const auto& [idx, l] : ex.model->learners()) {
      const auto boxes = b.support(idx);
      EXPECT_TRUE(std::any_of(boxes.begin(), boxes.end(), [&](const Box& bx) { return bx.intersects(cell); }));
    }
  }
}

TEST(Adaptive, WorstCaseCeiling) {
  WaveletBasis b(WaveletFamily::haar(), 1, 10);
  const double B = 1.0;
  const auto loss = LossSpec::square(B);
  AdaptiveRegressor r(b, loss, acfg(3, 8, B, 3000));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  double regret_zero = 0, regret_half = 0;
  const double G = loss.lipschitz();
  for (int t = 1; t <= 3000; ++t) {
    const double x[] = {u(rng)};
    // Adversary picks the target farthest from the current prediction.
    const auto active = r.active_experts(x);
    const double before = r.predict(x);
    const double y = before >= 0 ? -B : B;
    const auto s = r.step(x, y);
    EXPECT_EQ(s.prediction, before);
    regret_zero += loss.value(s.prediction, y) - loss.value(0.0, y);
    regret_half += loss.value(s.prediction, y) - loss.value(0.5 * B, y);
    EXPECT_LE(regret_zero, 2 * B * G * t);
    EXPECT_LE(regret_half, 2 * B * G * t);
    EXPECT_EQ(active.size(), 4u);
  }
}

TEST(Prunings, CountsMatchRecursionAndBruteForce) {
  EXPECT_EQ(enumerate_prunings(DyadicTree(1, 1), 1).size(), 2u);
  EXPECT_EQ(enumerate_prunings(DyadicTree(2, 1), 2).size(), 5u);
  EXPECT_EQ(enumerate_prunings(DyadicTree(1, 2), 1).size(), 2u);
  EXPECT_EQ(enumerate_prunings(DyadicTree(3, 1), 3).size(), 26u);
  EXPECT_EQ(enumerate_prunings(DyadicTree(2, 2), 2).size(), 17u);
  EXPECT_DOUBLE_EQ(pruning_count(3, 1), 26.0);
  EXPECT_DOUBLE_EQ(pruning_count(4, 1), 677.0);
  for (auto [depth, d] : {std::pair{1, 1}, {2, 1}, {3, 1}, {1, 2}}) {
    DyadicTree t(depth, d);
    EXPECT_EQ(brute_force_prunings(t), enumerate_prunings(t, depth).size());
    EXPECT_DOUBLE_EQ(pruning_count(depth, d), static_cast<double>(enumerate_prunings(t, depth).size()));
  }
  // Depth-limited enumeration inside a deeper tree.
  EXPECT_EQ(enumerate_prunings(DyadicTree(4, 1), 2).size(), 5u);
  EXPECT_EQ(enumerate_prunings(DyadicTree(3, 1), 3, 2).size(), 2u);
  EXPECT_THROW(enumerate_prunings(DyadicTree(4, 3), 4), ConfigError);
}

TEST(Prunings, PartitionCorrectness) {
  DyadicTree t(3, 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t n = 0;
  for_each_pruning(t, 2, 64, [&](const Pruning& p) {
    ++n;
    p.validate(t);
    double vol = 0;
    for (NodeId l : p.leaves) vol += t.cube(l).volume();
    EXPECT_NEAR(vol, 1.0, 1e-12);
    for (int rep = 0; rep < 10; ++rep) {
      const double x[] = {u(rng), u(rng)};
      int hits = 0;
      for (NodeId l : p.leaves)
        if (t.node_of(x, t.level_of(l)) == l) ++hits;
      EXPECT_EQ(hits, 1);
    }
  });
  EXPECT_EQ(n, 17u);
}

TEST(Prunings, InvalidRejected) {
  DyadicTree t(2, 1);
  EXPECT_THROW((Pruning{{1}}).validate(t), ConfigError);
  EXPECT_THROW((Pruning{{0, 1}}).validate(t), ConfigError);
  EXPECT_THROW((Pruning{{1, 2, 3}}).validate(t), ConfigError);
  EXPECT_NO_THROW((Pruning{{1, 5, 6}}).validate(t));
}

TEST(Prunings, LossAdditivity) {
  WaveletBasis b(WaveletFamily::haar(), 1, 10);
  const auto loss = LossSpec::square(1.0);
  AdaptiveRegressor r(b, loss, acfg(2, 6, 1.0, 2000));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  double alg = 0;
  for (int t = 0; t < 2000; ++t) {
    const double x[] = {u(rng)};
    const double y = x[0] < 0.5 ? 0.2 : std::sqrt(x[0]);
    alg += loss.value(r.step(x, y).prediction, y);
  }
  EXPECT_DOUBLE_EQ(pruning_loss(r, Pruning{{0}}), r.expert_losses()[0]);
  const double fine = pruning_loss(r, Pruning{{3, 4, 5, 6}});
  double sum = 0;
  for (int e = 3; e <= 6; ++e) sum += r.expert_losses()[e];
  EXPECT_DOUBLE_EQ(fine, sum);
  EXPECT_DOUBLE_EQ(pruning_regret(r, Pruning{{0}}, alg), alg - r.expert_losses()[0]);
  std::int64_t occ = 0;
  for (NodeId n = 3; n <= 6; ++n) occ += r.node_occupancy(n);
  EXPECT_EQ(occ, 2000);
  EXPECT_EQ(r.node_occupancy(0), 2000);
}
