#pragma once

// Experiment driver: runs the online protocol over a generated stream and
// keeps per-round regret against the stream's comparator.

#include <glob.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "owr/adaptive.hpp"
#include "owr/analysis.hpp"
#include "owr/config.hpp"
#include "owr/errors.hpp"
#include "owr/loss.hpp"
#include "owr/owd.hpp"
#include "owr/stream.hpp"
#include "owr/wavelets.hpp"

namespace owr {

struct TraceRow {
  std::int64_t t = 0;
  std::array<double, kMaxDim> x{};
  double y = 0.0;
  double yhat = 0.0;
  double loss = 0.0;
  double comp_loss = 0.0;
  double cum_regret = 0.0;
};

struct RegretTrace {
  int dim = 1;
  std::string fingerprint;
  std::string algorithm;
  std::vector<TraceRow> rows;

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
  double regret_at(std::int64_t t) const { return t <= 0 ? 0.0 : rows.at(static_cast<std::size_t>(t - 1)).cum_regret; }
};

namespace detail {

inline void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace detail

/// Header t,x1..xd,y,yhat,loss,comp_loss,cum_regret preceded by two comment
/// lines carrying the algorithm id and config fingerprint.
inline void write_trace_csv(std::ostream& os, const RegretTrace& tr) {
  os << "# algorithm " << tr.algorithm << "\n# fingerprint " << tr.fingerprint << "\n";
  os << 't';
  for (int i = 1; i <= tr.dim; ++i) os << ",x" << i;
  os << ",y,yhat,loss,comp_loss,cum_regret\n";
  for (const auto& r : tr.rows) {
    os << r.t;
    for (int i = 0; i < tr.dim; ++i) {
      os << ',';
      detail::put(os, r.x[i]);
    }
    for (double v : {r.y, r.yhat, r.loss, r.comp_loss, r.cum_regret}) {
      os << ',';
      detail::put(os, v);
    }
    os << '\n';
  }
}

inline RegretTrace read_trace_csv(std::istream& is) {
  RegretTrace tr;
  std::string line;
  while (std::getline(is, line) && line.starts_with("#")) {
    std::istringstream ss(line.substr(1));
    std::string key, value;
    ss >> key >> value;
    if (key == "algorithm") tr.algorithm = value;
    if (key == "fingerprint") tr.fingerprint = value;
  }
  if (!line.starts_with("t,")) throw ConfigError("trace CSV lacks its header");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  tr.dim = static_cast<int>(columns - 6);
  if (tr.dim < 1 || tr.dim > kMaxDim) throw ConfigError("bad trace header: " + line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<long>(v.size()) != columns) throw ConfigError("bad trace row: " + line);
    TraceRow r;
    r.t = static_cast<std::int64_t>(v[0]);
    for (int i = 0; i < tr.dim; ++i) r.x[i] = v[1 + i];
    std::size_t k = 1 + tr.dim;
    r.y = v[k++];
    r.yhat = v[k++];
    r.loss = v[k++];
    r.comp_loss = v[k++];
    r.cum_regret = v[k++];
    tr.rows.push_back(r);
  }
  return tr;
}

/// True when every stored cumulative regret equals the running sum of
/// loss - comp_loss, bit for bit.
inline bool regret_recomputes(const RegretTrace& tr) {
  double cum = 0.0;
  for (const auto& r : tr.rows) {
    cum += r.loss - r.comp_loss;
    if (cum != r.cum_regret) return false;
  }
  return true;
}

struct RunResult {
  RegretTrace trace;
  json summary;
};

namespace detail {

/// For learners that never clipped, the wealth identity
///   sum_t g_t (w_t - anchor) = h (W_0 - W_T)
/// gives their linear regret against anchor + u exactly.
inline json pf_measurements(const CoeffModel& model, double B) {
  double worst_ratio = 0.0, worst_util = 0.0;
  std::int64_t clipped = 0;
  const int d = model.basis().dim();
  for (const auto& [idx, l] : model.learners()) {
    if (l.clips() > 0) {
      ++clipped;
      continue;
    }
    const double h = l.hint();
    const double scale = B * std::exp2(-0.5 * idx.level * d);
    for (double u : {-scale, -0.1 * scale, 0.1 * scale, scale}) {
      const double regret = h * (l.initial_wealth() - l.wealth()) - u * l.sum_g();
      const double v = l.sum_normalized_g2();
      worst_ratio = std::max(worst_ratio, regret / (std::abs(u) * (std::sqrt(v) + 1.0) * h));
      const auto b = l.bound(l.anchor() + u);
      if (b.total > 0) worst_util = std::max(worst_util, regret / b.total);
    }
  }
  return {{"learners", model.learner_count()},
          {"clips", model.clip_count()},
          {"learners_with_clips", clipped},
          {"max_ratio", worst_ratio},
          {"max_bound_utilization", worst_util}};
}

inline json squint_measurements(const AdaptiveRegressor& reg) {
  const auto& w = reg.weights();
  const auto c = w.constants();
  double worst = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) worst = std::max(worst, w.regret(e) / w.bound(e));
  return {{"experts", w.size()},   {"grid_size", w.grid_size()}, {"L", c.L},
          {"c3", c.c3},            {"c4", c.c4},                 {"gtilde", w.gtilde()},
          {"clips", w.clips()},    {"max_bound_utilization", worst},
          {"learners", reg.learner_count()}, {"learner_clips", reg.clip_count()}};
}

inline json target_metadata(const TargetSpec& t) {
  json j{{"kind", t.kind_name()}};
  if (t.kind == TargetKind::PiecewiseHolder) {
    j["segment_exponents"] = json::array();
    j["breakpoints"] = json::array();
    for (const auto& s : t.segments) {
      j["segment_exponents"].push_back(s.s);
      j["breakpoints"].push_back(s.a);
    }
    j["breakpoints"].push_back(t.segments.back().b);
  } else if (t.kind == TargetKind::HolderPower || t.kind == TargetKind::AbsPower) {
    j["s"] = t.s;
  }
  return j;
}

}  // namespace detail

/// Runs the configured algorithm over a precomputed stream. `samples` may be
/// longer than cfg.stream.T; only the first T rounds are played.
inline RunResult run_on(const ExperimentConfig& cfg, const std::vector<Sample>& samples) {
  cfg.validate();
  const auto T = cfg.stream.T;
  if (static_cast<std::int64_t>(samples.size()) < T) throw ConfigError("stream shorter than horizon");
  const int d = cfg.basis.dim;
  const double B = cfg.bound();
  const int J = cfg.level(T);
  const WaveletBasis basis(cfg.basis.make_family(), d, cfg.basis.resolution);
  const LossSpec& loss = cfg.loss;

  std::unique_ptr<CoeffModel> global;
  std::unique_ptr<AdaptiveRegressor> adaptive;
  if (cfg.algorithm.kind == AlgorithmKind::Global) {
    ModelConfig mc;
    mc.j0 = cfg.algorithm.j0;
    mc.J = J;
    mc.G = loss.lipschitz();
    mc.B = B;
    mc.schedule = cfg.algorithm.schedule;
    global = std::make_unique<CoeffModel>(basis, mc);
  } else {
    AdaptiveConfig ac;
    ac.J0 = cfg.algorithm.J0;
    ac.J = J;
    ac.B = B;
    ac.grid_size = cfg.algorithm.grid_size;
    ac.horizon = T;
    ac.max_experts = cfg.algorithm.max_experts;
    ac.schedule = cfg.algorithm.schedule;
    adaptive = std::make_unique<AdaptiveRegressor>(basis, loss, ac);
  }

  RunResult out;
  auto& tr = out.trace;
  tr.dim = d;
  tr.algorithm = cfg.algorithm.id();
  tr.fingerprint = config_fingerprint(cfg);
  tr.rows.reserve(static_cast<std::size_t>(T));
  double cum = 0.0, alg_loss = 0.0, comp_loss = 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const auto& s = samples[static_cast<std::size_t>(t)];
    const Point x(s.x.data(), d);
    const double yhat = global ? global->step(x, loss, s.y).prediction : adaptive->step(x, s.y).prediction;
    TraceRow r;
    r.t = t + 1;
    r.x = s.x;
    r.y = s.y;
    r.yhat = yhat;
    r.loss = loss.value(yhat, s.y);
    r.comp_loss = loss.value(s.f, s.y);
    cum += r.loss - r.comp_loss;
    r.cum_regret = cum;
    alg_loss += r.loss;
    comp_loss += r.comp_loss;
    tr.rows.push_back(r);
  }

  auto& sm = out.summary;
  sm["name"] = cfg.name;
  sm["algorithm"] = tr.algorithm;
  sm["fingerprint"] = tr.fingerprint;
  sm["basis"] = basis.id();
  sm["loss"] = loss.name();
  sm["T"] = T;
  sm["J"] = J;
  sm["final_regret"] = cum;
  sm["algorithm_loss"] = alg_loss;
  sm["comparator_loss"] = comp_loss;
  sm["target"] = detail::target_metadata(cfg.stream.target);
  if (global) {
    sm["parameter_free"] = detail::pf_measurements(*global, B);
  } else {
    sm["J0"] = cfg.algorithm.J0;
    sm["aggregation"] = detail::squint_measurements(*adaptive);
  }
  return out;
}

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_on(cfg, generate_stream(cfg.stream));
}

/// Whitespace-separated "t cum_regret" columns for gnuplot.
inline void write_plot_data(std::ostream& os, const RegretTrace& tr) {
  os << "# t cum_regret\n";
  for (const auto& r : tr.rows) {
    os << r.t << ' ';
    detail::put(os, r.cum_regret);
    os << '\n';
  }
}

/// Writes the trace, summary and plot files named in cfg.output.
inline void write_outputs(const ExperimentConfig& cfg, const RunResult& r) {
  auto open = [](const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
  };
  if (!cfg.output.trace.empty()) {
    auto f = open(cfg.output.trace);
    write_trace_csv(f, r.trace);
  }
  if (!cfg.output.summary.empty()) {
    auto f = open(cfg.output.summary);
    f << r.summary.dump(2) << '\n';
  }
  if (!cfg.output.plot.empty()) {
    auto f = open(cfg.output.plot);
    write_plot_data(f, r.trace);
  }
}

struct RatePoint {
  double T = 0.0;
  double regret = 0.0;
};

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log2 of the constant in R_T = c T^exponent
  double residual = 0.0;
  std::size_t points = 0;
  double decades = 0.0;  // log10(T_max / T_min) over the points used
};

/// Least-squares slope of log R_T against log T. Nonpositive regrets are
/// dropped; fewer than four remaining points is an error.
inline RateFit fit_rate(const std::vector<RatePoint>& pts) {
  std::vector<double> xs, ys;
  double lo = kInf, hi = 0.0;
  for (const auto& p : pts) {
    if (!(p.regret > 0.0) || !(p.T > 0.0)) continue;
    xs.push_back(std::log2(p.T));
    ys.push_back(std::log2(p.regret));
    lo = std::min(lo, p.T);
    hi = std::max(hi, p.T);
  }
  if (xs.size() < 4) throw ConfigError("fit_rate needs at least 4 horizons with positive regret");
  const auto f = least_squares(xs, ys);
  return {f.slope, f.intercept, f.residual, f.points, std::log10(hi / lo)};
}

struct SweepResult {
  std::vector<std::int64_t> horizons;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> regrets;  // [seed][horizon]
  std::vector<double> mean_regret;           // per horizon
  RateFit fit;
  std::vector<RegretTrace> traces;  // one per seed, at the longest horizon
};

/// One run per seed at the longest horizon; shorter horizons read the
/// cumulative regret off the same trace, with J fixed at the longest
/// horizon's level.
inline SweepResult sweep(ExperimentConfig cfg, std::vector<std::int64_t> horizons, std::vector<std::uint64_t> seeds) {
  if (horizons.empty() || seeds.empty()) throw ConfigError("sweep needs horizons and seeds");
  std::sort(horizons.begin(), horizons.end());
  const auto Tmax = horizons.back();
  if (cfg.algorithm.J < 0) cfg.algorithm.J = cfg.level(Tmax);
  cfg.stream.T = Tmax;
  SweepResult out;
  out.horizons = horizons;
  out.seeds = seeds;
  out.mean_regret.assign(horizons.size(), 0.0);
  for (auto seed : seeds) {
    cfg.stream.seed = seed;
    auto r = run_experiment(cfg);
    std::vector<double> row;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      row.push_back(r.trace.regret_at(horizons[i]));
      out.mean_regret[i] += row.back() / static_cast<double>(seeds.size());
    }
    out.regrets.push_back(std::move(row));
    out.traces.push_back(std::move(r.trace));
  }
  std::vector<RatePoint> pts;
  for (std::size_t i = 0; i < horizons.size(); ++i) pts.push_back({static_cast<double>(horizons[i]), out.mean_regret[i]});
  out.fit = fit_rate(pts);
  return out;
}

/// Expands a glob(3) pattern, sorted.
inline std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw ConfigError("glob failed for " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

struct OccupancyRow {
  std::string region;
  double lo = 0.0, hi = 0.0;  // first-coordinate extent
  std::int64_t count = 0;
};

struct CompareReport {
  RegretTrace a, b;
  double final_ratio = 1.0;  // final regret of b over a
  std::vector<OccupancyRow> leaves;    // |T_n| over the depth-J0 cells of b
  std::vector<OccupancyRow> segments;  // rounds per target segment, when piecewise
  json summary_a, summary_b;
};

/// Paired runs on one stream. Both configs must agree on stream, seed and loss.
inline CompareReport compare_adaptive(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto stream_key = [](const ExperimentConfig& c) {
    auto j = config_to_json(c);
    return json{{"stream", j["stream"]}, {"seed", j["seed"]}, {"loss", j["loss"]}, {"d", c.basis.dim}}.dump();
  };
  if (stream_key(a) != stream_key(b)) throw ConfigError("compared configs use different streams or losses");
  const auto samples = generate_stream(a.stream);
  CompareReport rep;
  auto ra = run_on(a, samples);
  auto rb = run_on(b, samples);
  rep.a = std::move(ra.trace);
  rep.b = std::move(rb.trace);
  rep.summary_a = std::move(ra.summary);
  rep.summary_b = std::move(rb.summary);
  const double fa = rep.a.final_regret(), fb = rep.b.final_regret();
  rep.final_ratio = fa == fb ? 1.0 : fb / fa;

  const int d = a.basis.dim;
  const int depth = b.algorithm.kind == AlgorithmKind::Adaptive ? b.algorithm.J0 : 0;
  const DyadicTree tree(depth, d);
  const NodeId first = tree.node(depth, std::array<std::int64_t, kMaxDim>{});
  std::vector<std::int64_t> counts(static_cast<std::size_t>(tree.cells(depth)), 0);
  for (std::int64_t t = 0; t < a.stream.T; ++t) {
    const auto& s = samples[static_cast<std::size_t>(t)];
    ++counts[static_cast<std::size_t>(tree.node_of(Point(s.x.data(), d), depth) - first)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto box = tree.cube(first + static_cast<NodeId>(c));
    rep.leaves.push_back({"cell " + std::to_string(c), box.lo[0], box.hi[0], counts[c]});
  }
  const auto& tgt = a.stream.target;
  if (tgt.kind == TargetKind::PiecewiseHolder) {
    std::vector<std::int64_t> seg(tgt.segments.size() + 1, 0);
    for (std::int64_t t = 0; t < a.stream.T; ++t) {
      const int i = tgt.segment_of(samples[static_cast<std::size_t>(t)].x[0]);
      ++seg[i < 0 ? tgt.segments.size() : static_cast<std::size_t>(i)];
    }
    for (std::size_t i = 0; i < tgt.segments.size(); ++i)
      rep.segments.push_back({"segment " + std::to_string(i + 1) + " (s=" + std::to_string(tgt.segments[i].s) + ")",
                              tgt.segments[i].a, tgt.segments[i].b, seg[i]});
    if (seg.back() > 0) rep.segments.push_back({"uncovered", 0.0, 1.0, seg.back()});
  }
  return rep;
}

inline json compare_json(const CompareReport& r) {
  auto rows = [](const std::vector<OccupancyRow>& v) {
    json out = json::array();
    for (const auto& o : v) out.push_back({{"region", o.region}, {"lo", o.lo}, {"hi", o.hi}, {"count", o.count}});
    return out;
  };
  return {{"final_regret_a", r.a.final_regret()},
          {"final_regret_b", r.b.final_regret()},
          {"final_ratio", r.final_ratio},
          {"leaf_occupancy", rows(r.leaves)},
          {"segment_occupancy", rows(r.segments)},
          {"summary_a", r.summary_a},
          {"summary_b", r.summary_b}};
}

/// Paired cumulative regret, "t regret_a regret_b" per line.
inline void write_paired_curves(std::ostream& os, const CompareReport& r) {
  os << "# t regret_a regret_b\n";
  for (std::size_t i = 0; i < r.a.rows.size(); ++i) {
    os << r.a.rows[i].t << ' ';
    detail::put(os, r.a.rows[i].cum_regret);
    os << ' ';
    detail::put(os, r.b.rows[i].cum_regret);
    os << '\n';
  }
}

}  // namespace owr
