// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "owr/owr.hpp"

using namespace owr;

namespace {

// Pinned tolerances.
constexpr double kFilterTol = 1e-12;
constexpr double kMomentTol = 1e-10;
constexpr double kTableQuadTol = 1e-4;
constexpr double kRefinementTol = 1e-6;
constexpr double kOrthoTol = 1e-3;
constexpr double kDecayTol = 0.15;
constexpr double kNtermTol = 0.2;
constexpr double kConvexExponentMax = 0.62;
constexpr double kLowRegExponentMax = 0.72;  // (1 - 0.8 / 2) + 0.12
constexpr double kAdaptiveRatioMax = 1.1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string trace_bytes(const RegretTrace& tr) {
  std::ostringstream os;
  write_trace_csv(os, tr);
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1

Outcome basis_validity() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::string> failures;
  int checks = 0;
  for (const char* name : {"haar", "db2", "db3", "db4", "db5", "db6"}) {
    const auto fam = WaveletFamily::from_name(name);
    const auto r = fam.check();
    ++checks;
    if (r.sum > kFilterTol || r.orthogonality > kFilterTol || r.moments > kMomentTol)
      failures.push_back(std::string(name) + " filter");
    for (int d : {1, 2}) {
      const WaveletBasis b(fam, d, 12);
      const auto diag = check_basis(b);
      const double quad = std::ldexp(1.0, -10);
      ++checks;
      if (std::abs(diag.phi_integral - 1) > quad || std::abs(diag.psi_integral) > quad ||
          std::abs(diag.phi_norm2 - 1) > kTableQuadTol || std::abs(diag.psi_norm2 - 1) > kTableQuadTol ||
          diag.partition_of_unity > kTableQuadTol || diag.refinement > kRefinementTol)
        failures.push_back(b.id() + " tables");

      // Active set equals the brute-force nonzero set, within the per-level bound.
      const int J = d == 1 ? 5 : 3;
      for (int rep = 0; rep < 25; ++rep) {
        double x[2] = {u(rng), u(rng)};
        const Point px(x, d);
        std::set<BasisIndex> fast;
        std::map<int, std::int64_t> per_level;
        b.for_each_active(0, J, px, [&](const BasisIndex& idx, double) {
          fast.insert(idx);
          ++per_level[idx.level];
        });
        std::set<BasisIndex> slow;
        auto scan = [&](int level, unsigned mask, IndexKind kind) {
          const std::int64_t n = std::int64_t{1} << level;
          for (std::int64_t f = 0; f < (d == 1 ? n : n * n); ++f) {
            BasisIndex idx;
            idx.kind = kind;
            idx.level = level;
            idx.k[0] = f % n;
            idx.k[1] = d == 2 ? f / n : 0;
            for (int i = 0; i < d; ++i) idx.eps[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
            if (b.eval(idx, px) != 0.0) slow.insert(idx);
          }
        };
        scan(0, 0, IndexKind::Scaling);
        for (int j = 0; j <= J; ++j)
          for (unsigned m = 1; m < (1u << d); ++m) scan(j, m, IndexKind::Detail);
        ++checks;
        if (fast != slow) failures.push_back(b.id() + " active set");
        for (const auto& [lvl, c] : per_level)
          if (c > 2 * b.per_level_active_bound()) failures.push_back(b.id() + " active bound");
        // Support boxes contain every point where the function is nonzero.
        for (const auto& idx : slow) {
          const auto boxes = b.support(idx);
          if (!std::any_of(boxes.begin(), boxes.end(), [&](const Box& bx) { return bx.contains(px); }))
            failures.push_back(b.id() + " support");
        }
      }
    }
    // Orthonormality on random 1-d pairs by a periodic rectangle rule.
    const WaveletBasis b1(fam, 1, 12);
    for (int rep = 0; rep < 12; ++rep) {
      const int j = static_cast<int>(rng() % 4);
      const auto a = BasisIndex::detail(j, {static_cast<std::int64_t>(rng() % (1u << j))});
      const int j2 = rep % 3 == 0 ? j : static_cast<int>(rng() % 4);
      const auto c = rep % 3 == 0 ? a : BasisIndex::detail(j2, {static_cast<std::int64_t>(rng() % (1u << j2))});
      const int n = 1 << 12;
      double ip = 0;
      for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) / n;
        ip += b1.eval(a, Point(&x, 1)) * b1.eval(c, Point(&x, 1));
      }
      ip /= n;
      ++checks;
      if (std::abs(ip - (a == c ? 1.0 : 0.0)) > kOrthoTol) failures.push_back(b1.id() + " orthonormality");
    }
  }
  return {failures.empty(), fmt("%d checks, %zu failures%s", checks, failures.size(),
                                failures.empty() ? "" : (" (first: " + failures[0] + ")").c_str())};
}

// ---------------------------------------------------------------- 2

Outcome assumption1_audit() {
  const double comps[] = {-10, -1, 0, 1, 10};
  const int T = 4096;
  double worst = 0.0;
  int violations = 0, sequences = 0;
  for (int kind = 0; kind < 10; ++kind) {
    for (int seed = 0; seed < 5; ++seed) {
      ++sequences;
      std::mt19937_64 rng(1000 * kind + seed);
      std::uniform_real_distribution<double> u(-1, 1);
      const double h = std::array<double, 5>{1.0, 0.5, 2.0, 1.0, 3.0}[seed];
      PfLearner l(h, 0.0, 1.0);
      std::array<double, 5> regret{};
      int sign = 1;
      for (int t = 0; t < T; ++t) {
        const double w = l.predict();
        double g = 0;
        switch (kind) {
          case 0: g = 1; break;
          case 1: g = -1; break;
          case 2: g = t % 2 ? 1 : -1; break;
          case 3: g = rng() % 2 ? 1 : -1; break;
          case 4: g = u(rng); break;
          case 5: g = w >= 0 ? 1 : -1; break;    // pushes against the current bet
          case 6: g = w < 10 ? -1 : 1; break;    // drags the learner towards +10
          case 7: g = w > -10 ? 1 : -1; break;   // and towards -10
          case 8:
            if (rng() % 64 == 0) sign = -sign;
            g = sign * (0.5 + 0.5 * std::abs(u(rng)));
            break;
          case 9: g = rng() % 20 == 0 ? (rng() % 3 ? 1 : -1) : 0.0; break;
        }
        g *= h;
        for (int i = 0; i < 5; ++i) regret[i] += g * (w - comps[i]);
        l.update(g);
        for (int i = 0; i < 5; ++i) {
          const double b = l.bound(comps[i]).total;
          worst = std::max(worst, regret[i] / b);
          if (regret[i] > b) ++violations;
        }
      }
    }
  }
  return {violations == 0, fmt("%d sequences x 5 comparators, anytime; max regret/bound = %.4f, violations %d",
                               sequences, worst, violations)};
}

// ---------------------------------------------------------------- 3

Outcome assumption2_audit() {
  const int T = 4096;
  const std::size_t K = 16;
  const double gt = 1.0;
  double worst = 0.0;
  long violations = 0, identity_breaks = 0, rounds = 0;
  for (int kind = 0; kind < 5; ++kind) {
    for (int seed = 0; seed < 4; ++seed) {
      std::mt19937_64 rng(77 * kind + seed);
      std::uniform_real_distribution<double> u(-1, 1);
      SquintWeights sq(K, gt, T);
      const std::size_t star = rng() % K;
      for (int t = 0; t < T; ++t) {
        std::vector<std::size_t> active;
        for (std::size_t e = 0; e < K; ++e) {
          const bool awake = kind == 4 ? ((t / 32 + e) % 4 != 0) : (kind == 0 || rng() % 5 != 0);
          if (awake) active.push_back(e);
        }
        if (active.empty()) active.push_back(rng() % K);
        std::vector<double> vals(active.size());
        std::size_t leader = active[0];
        for (auto e : active)
          if (sq.weight(e) > sq.weight(leader)) leader = e;
        for (std::size_t i = 0; i < active.size(); ++i) {
          const auto e = active[i];
          switch (kind) {
            case 0:
            case 1: vals[i] = gt * u(rng); break;
            case 2: vals[i] = e == star ? -0.5 * gt : gt * u(rng); break;
            case 3: vals[i] = e == leader ? gt : -gt; break;
            case 4: vals[i] = ((t / 128) % 2 ? 1.0 : -1.0) * (e % 2 ? gt : -gt) * std::abs(u(rng)); break;
          }
        }
        const auto red = sq.reduce(active);
        std::vector<double> aligned(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) aligned[i] = red[active[i]];
        const auto sg = sleeping_gradient(K, active, vals, aligned, 1.0);
        std::vector<double> r0(K), v0(K);
        for (std::size_t e = 0; e < K; ++e) {
          r0[e] = sq.regret(e);
          v0[e] = sq.variance(e);
        }
        sq.update(sg.grad, sg.mix);
        ++rounds;
        std::vector<bool> awake(K, false);
        for (auto e : active) awake[e] = true;
        for (std::size_t e = 0; e < K; ++e) {
          if (!awake[e] && (sq.regret(e) != r0[e] || sq.variance(e) != v0[e] || sg.grad[e] != sg.mix))
            ++identity_breaks;
          const double b = sq.bound(e);
          worst = std::max(worst, sq.regret(e) / b);
          if (sq.regret(e) > b) ++violations;
        }
      }
    }
  }
  const auto c = SquintWeights(K, gt, T).constants();
  return {violations == 0 && identity_breaks == 0,
          fmt("20 matrices, %ld rounds; C3 = %.3f, C4 = %.2f; max regret/bound = %.4f, violations %ld, "
              "sleeping identity breaks %ld",
              rounds, c.c3, c.c4, worst, violations, identity_breaks)};
}

// ---------------------------------------------------------------- 4

Outcome coefficient_decay() {
  // |sin(pi (x - 1/2))|^s behaves like pi^s |x - 1/2|^s at the singularity and
  // is smooth and periodic elsewhere, so periodization adds no boundary kink.
  const WaveletBasis b(WaveletFamily::daubechies(3), 1);
  bool ok = true;
  std::string detail;
  for (double s : {0.5, 1.5}) {
    auto f = [s](Point x) { return std::pow(std::abs(std::sin(M_PI * (x[0] - 0.5))), s); };
    const auto t = wavelet_coefficients(f, b, 0, 9);
    const double slope = decay_fit(t, 3, 9).slope;
    const double want = -(s + 0.5);
    ok = ok && std::abs(slope - want) <= kDecayTol;
    detail += fmt("s=%.1f slope %.3f (target %.2f) ", s, slope, want);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 5

Outcome nterm_rate() {
  // f = |sin(pi (x - 0.3))|: a Lipschitz kink (s = 1) at 0.3, periodic and
  // smooth elsewhere, analysed with Haar (one vanishing moment, so s matches
  // the basis regularity). The linear part grows with the budget: J* = log2 N.
  const double s = 1.0;
  const WaveletBasis b(WaveletFamily::haar(), 1);
  auto f = [](Point x) { return std::abs(std::sin(M_PI * (x[0] - 0.3))); };
  const auto t = wavelet_coefficients(f, b, 0, 12);
  std::vector<double> xs, ys;
  std::string errs;
  for (int N = 4; N <= 256; N *= 2) {
    const int jstar = static_cast<int>(std::log2(N));
    const auto sel = nterm_oracle(t, jstar, static_cast<std::size_t>(N), s, kInf);
    const double e = sup_error(f, sel.table, b, 20000).lower;
    xs.push_back(std::log2(N));
    ys.push_back(std::log2(e));
  }
  const double slope = least_squares(xs, ys).slope;
  return {std::abs(slope + s) <= kNtermTol, fmt("slope %.3f over N = 4..256 (target %.2f +- %.2f)", slope, -s, kNtermTol)};
}

// ---------------------------------------------------------------- 6, 7

ExperimentConfig convex_config() {
  ExperimentConfig c;
  c.name = "acceptance-convex";
  c.basis.family = "haar";
  c.loss = LossSpec::absolute();
  c.stream.T = 1 << 16;
  c.stream.target = TargetSpec::holder_power(1.0);
  return c;
}

ExperimentConfig lowreg_config() {
  ExperimentConfig c;
  c.name = "acceptance-lowreg";
  c.basis.family = "haar";
  c.basis.dim = c.stream.dim = 2;
  c.loss = LossSpec::square(1.0);
  c.stream.T = 1 << 16;
  c.stream.target = TargetSpec::abs_power(0.8);
  return c;
}

const std::vector<std::int64_t> kHorizons = {1 << 10, 1 << 12, 1 << 14, 1 << 16};
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

std::vector<std::string> g_convex_traces, g_adaptive_traces;

Outcome convex_slope() {
  const auto sw = sweep(convex_config(), kHorizons, kSeeds);
  for (const auto& tr : sw.traces) g_convex_traces.push_back(trace_bytes(tr));
  return {sw.fit.exponent <= kConvexExponentMax,
          fmt("exponent %.3f (<= %.2f), mean R_T = %.1f .. %.1f, J = %d", sw.fit.exponent, kConvexExponentMax,
              sw.mean_regret.front(), sw.mean_regret.back(), convex_config().level(1 << 16))};
}

Outcome lowreg_slope() {
  const auto sw = sweep(lowreg_config(), kHorizons, kSeeds);
  return {sw.fit.exponent <= kLowRegExponentMax,
          fmt("exponent %.3f (<= %.2f), mean R_T = %.1f .. %.1f, J = %d", sw.fit.exponent, kLowRegExponentMax,
              sw.mean_regret.front(), sw.mean_regret.back(), lowreg_config().level(1 << 16))};
}

// ---------------------------------------------------------------- 8

std::pair<ExperimentConfig, ExperimentConfig> paired_configs(const TargetSpec& target, std::uint64_t seed) {
  ExperimentConfig g;
  g.basis.family = "db2";
  g.loss = LossSpec::square(1.0);
  g.stream.T = 1 << 15;
  g.stream.target = target;
  g.stream.seed = seed;
  auto a = g;
  a.algorithm.kind = AlgorithmKind::Adaptive;
  a.algorithm.J0 = 4;
  a.algorithm.grid_size = 1;
  return {g, a};
}

Outcome local_adaptivity() {
  bool ok = true;
  std::string detail;
  const std::pair<const char*, TargetSpec> targets[] = {{"x^1.5", TargetSpec::holder_power(1.5)},
                                                        {"fig3", TargetSpec::fig3()}};
  for (const auto& [name, target] : targets) {
    std::vector<double> rg, ra;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto [g, a] = paired_configs(target, seed);
      const auto rep = compare_adaptive(g, a);
      rg.push_back(rep.a.final_regret());
      ra.push_back(rep.b.final_regret());
      g_adaptive_traces.push_back(trace_bytes(rep.a));
      g_adaptive_traces.push_back(trace_bytes(rep.b));
    }
    const double mg = median(rg), ma = median(ra);
    ok = ok && ma <= kAdaptiveRatioMax * mg;
    detail += fmt("%s: median adaptive %.1f vs global %.1f (ratio %.3f); ", name, ma, mg, ma / mg);
  }

  // Best pruning on the fig3 stream with a depth-3 tree. Three anchors per
  // scaling coefficient let a leaf expert start near the local mean instead of 0.
  auto [g, a] = paired_configs(TargetSpec::fig3(), 1);
  a.algorithm.J0 = 3;
  a.algorithm.grid_size = 3;
  const auto samples = generate_stream(a.stream);
  const WaveletBasis basis(WaveletFamily::daubechies(2), 1);
  AdaptiveConfig ac;
  ac.J0 = 3;
  ac.J = a.level(a.stream.T);
  ac.B = 1.0;
  ac.grid_size = a.algorithm.grid_size;
  ac.horizon = a.stream.T;
  AdaptiveRegressor reg(basis, a.loss, ac);
  for (const auto& s : samples) reg.step(Point(s.x.data(), 1), s.y);
  const auto prunings = enumerate_prunings(reg.tree(), 3);
  std::size_t best = 0;
  std::vector<double> losses;
  for (const auto& p : prunings) losses.push_back(pruning_loss(reg, p));
  for (std::size_t i = 1; i < prunings.size(); ++i)
    if (losses[i] < losses[best]) best = i;
  double root_loss = 0;
  for (std::size_t i = 0; i < prunings.size(); ++i)
    if (prunings[i].is_root()) root_loss = losses[i];
  const bool nonroot = !prunings[best].is_root();
  ok = ok && nonroot;
  detail += fmt("fig3 best of %zu prunings has %zu leaves, loss %.2f vs root %.2f", prunings.size(),
                prunings[best].leaves.size(), losses[best], root_loss);
  return {ok, detail};
}

// ---------------------------------------------------------------- 9

Outcome worst_case_ceiling() {
  const double B = 1.0;
  const WaveletBasis basis(WaveletFamily::daubechies(2), 1);
  std::vector<std::pair<const char*, std::function<double(double)>>> comps = {
      {"0", [](double) { return 0.0; }},
      {"+B", [B](double) { return B; }},
      {"-B", [B](double) { return -B; }},
      {"B sin", [B](double x) { return B * std::sin(2 * M_PI * x); }},
      {"ramp", [B](double x) { return B * (2 * x - 1); }},
      {"fig3", [](double x) { return TargetSpec::fig3()(Point(&x, 1)); }}};
  double worst = 0.0;
  long violations = 0;
  for (const auto& loss : {LossSpec::square(B), LossSpec::absolute()}) {
    AdaptiveConfig ac;
    ac.J0 = 3;
    ac.J = 8;
    ac.B = B;
    ac.grid_size = 1;
    ac.horizon = 4096;
    AdaptiveRegressor reg(basis, loss, ac);
    const double G = loss.lipschitz();
    std::mt19937_64 rng(9);
    std::vector<double> regret(comps.size(), 0.0);
    for (int t = 1; t <= 4096; ++t) {
      const double x = unit_uniform(rng);
      const Point px(&x, 1);
      const double before = reg.predict(px);
      const double y = before >= 0 ? -B : B;  // the label that maximizes this round's loss
      const auto s = reg.step(px, y);
      for (std::size_t c = 0; c < comps.size(); ++c) {
        regret[c] += loss.value(s.prediction, y) - loss.value(comps[c].second(x), y);
        const double ceiling = 2 * B * G * t;
        worst = std::max(worst, regret[c] / ceiling);
        if (regret[c] > ceiling) ++violations;
      }
    }
  }
  return {violations == 0, fmt("square and absolute loss, %zu comparators, T = 4096: max regret / 2BGt = %.4f, "
                               "violations %ld",
                               comps.size(), worst, violations)};
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  std::size_t same = 0, total = 0;
  const auto sw = sweep(convex_config(), kHorizons, kSeeds);
  for (std::size_t i = 0; i < sw.traces.size(); ++i) {
    ++total;
    same += i < g_convex_traces.size() && trace_bytes(sw.traces[i]) == g_convex_traces[i];
  }
  std::size_t k = 0;
  for (const auto& target : {TargetSpec::holder_power(1.5), TargetSpec::fig3()}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto [g, a] = paired_configs(target, seed);
      const auto rep = compare_adaptive(g, a);
      for (const auto* tr : {&rep.a, &rep.b}) {
        ++total;
        same += k < g_adaptive_traces.size() && trace_bytes(*tr) == g_adaptive_traces[k];
        ++k;
      }
    }
  }
  return {same == total && total == 3 + 20, fmt("%zu of %zu re-run traces byte-identical", same, total)};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"1 basis validity", basis_validity},
      {"2 parameter-free regret audit", assumption1_audit},
      {"3 aggregation regret audit", assumption2_audit},
      {"4 coefficient decay", coefficient_decay},
      {"5 N-term approximation rate", nterm_rate},
      {"6 regret slope, convex track", convex_slope},
      {"7 regret slope, low regularity", lowreg_slope},
      {"8 local adaptivity", local_adaptivity},
      {"9 worst-case ceiling", worst_case_ceiling},
      {"10 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed ? 1 : 0;
}
