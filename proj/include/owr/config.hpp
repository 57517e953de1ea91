#pragma once

// Experiment configuration and its JSON form. Unknown keys are rejected so a
// typo never silently falls back to a default.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>

#include "owr/analysis.hpp"
#include "owr/errors.hpp"
#include "owr/loss.hpp"
#include "owr/owd.hpp"
#include "owr/stream.hpp"
#include "owr/wavelets.hpp"

namespace owr {

using json = nlohmann::json;

struct BasisSpec {
  std::string family = "db2";  // "haar", "dbN" or "daubechiesN"
  int dim = 1;
  int resolution = 12;

  WaveletFamily make_family() const { return WaveletFamily::from_name(family); }
};

enum class AlgorithmKind { Global, Adaptive };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::Global;
  int j0 = 0;
  int J = -1;  // -1 selects the level from the horizon
  int J0 = 0;  // adaptive tree depth
  int grid_size = 1;
  double B = 0.0;  // 0 inherits the stream bound
  double S = 0.0;  // 0 uses the family's vanishing moments
  double eps = 1.0;
  int j_max = -1;  // -1 caps at ceil(log2 T / d), the input resolution
  LearnerSchedule schedule{};
  std::int64_t max_experts = 1 << 16;

  std::string id() const { return kind == AlgorithmKind::Global ? "owd-global" : "owd-adaptive"; }
};

struct OutputSpec {
  std::string trace;
  std::string summary;
  std::string plot;
};

struct ExperimentConfig {
  std::string name;
  BasisSpec basis;
  AlgorithmSpec algorithm;
  LossSpec loss = LossSpec::square(1.0);
  StreamSpec stream;
  OutputSpec output;

  double bound() const { return algorithm.B > 0.0 ? algorithm.B : stream.B; }

  /// Finest level for a run of length T.
  int level(std::int64_t T) const {
    if (algorithm.J >= 0) return algorithm.J;
    const int d = basis.dim;
    const double S = algorithm.S > 0.0 ? algorithm.S : basis.make_family().vanishing_moments();
    const int cap = algorithm.j_max >= 0
                        ? algorithm.j_max
                        : static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::int64_t>(T, 2))) / d));
    const int floor_level = algorithm.kind == AlgorithmKind::Adaptive ? algorithm.J0 : algorithm.j0;
    return std::max(floor_level, default_level(static_cast<double>(T), S, d, algorithm.eps, cap));
  }

  void validate() const {
    if (basis.dim != stream.dim) throw ConfigError("basis and stream dimensions differ");
    (void)basis.make_family();
    stream.validate();
    const int J = level(stream.T);
    if (algorithm.j0 < 0) throw ConfigError("j0 must be non-negative");
    if (algorithm.kind == AlgorithmKind::Global && J < algorithm.j0)
      throw ConfigError("J (" + std::to_string(J) + ") below j0 (" + std::to_string(algorithm.j0) + ")");
    if (algorithm.kind == AlgorithmKind::Adaptive) {
      if (algorithm.J0 < 0) throw ConfigError("J0 must be non-negative");
      if (J < algorithm.J0) throw ConfigError("J (" + std::to_string(J) + ") below J0 (" + std::to_string(algorithm.J0) + ")");
      if (algorithm.grid_size < 0) throw ConfigError("grid_size must be non-negative");
    }
    if (!(algorithm.eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(algorithm.schedule.wealth0 > 0.0)) throw ConfigError("wealth0 must be positive");
    if (!(algorithm.schedule.kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
  }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline std::array<double, kMaxDim> point_or(const json& j, const char* key, std::array<double, kMaxDim> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) {
    const double c = v.get<double>();
    return {c, c, c};
  }
  if (!v.is_array() || v.empty() || v.size() > kMaxDim) throw ConfigError(std::string("bad point for '") + key + "'");
  std::array<double, kMaxDim> out = fallback;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].get<double>();
  return out;
}

inline TargetSpec parse_target(const json& j, int dim, const std::string& base_dir) {
  const auto kind = get_or<std::string>(j, "kind", "");
  if (kind == "holder_power") {
    check_keys(j, {"kind", "s", "amplitude"}, "target");
    return TargetSpec::holder_power(get_or(j, "s", 1.0), get_or(j, "amplitude", 1.0));
  }
  if (kind == "abs_power") {
    check_keys(j, {"kind", "s", "amplitude", "center"}, "target");
    auto t = TargetSpec::abs_power(get_or(j, "s", 1.0), 0.5, get_or(j, "amplitude", 1.0));
    t.center = point_or(j, "center", t.center);
    return t;
  }
  if (kind == "piecewise_holder") {
    check_keys(j, {"kind", "preset", "segments", "amplitude"}, "target");
    if (j.contains("preset")) {
      if (j.at("preset") != "fig3") throw ConfigError("unknown piecewise preset");
      if (j.contains("segments")) throw ConfigError("give either preset or segments");
      return TargetSpec::fig3(get_or(j, "amplitude", 1.0));
    }
    std::vector<Segment> segs;
    for (const auto& s : j.at("segments")) {
      check_keys(s, {"a", "b", "s", "amplitude"}, "segment");
      segs.push_back({s.at("a").get<double>(), s.at("b").get<double>(), s.at("s").get<double>(),
                      get_or(s, "amplitude", 1.0)});
    }
    return TargetSpec::piecewise(std::move(segs));
  }
  if (kind == "dyadic_step") {
    check_keys(j, {"kind", "level", "values", "amplitude"}, "target");
    return TargetSpec::dyadic_step(get_or(j, "level", 0), get_or(j, "values", std::vector<double>{}),
                                   get_or(j, "amplitude", 1.0));
  }
  if (kind == "custom") {
    check_keys(j, {"kind", "table", "family", "R"}, "target");
    std::string path = j.at("table").get<std::string>();
    if (!path.empty() && path.front() != '/' && !base_dir.empty()) path = base_dir + "/" + path;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open coefficient table " + path);
    auto table = std::make_shared<CoeffTable>(read_table_csv(in));
    auto basis = std::make_shared<WaveletBasis>(WaveletFamily::from_name(get_or<std::string>(j, "family", "haar")),
                                                table->dim(), get_or(j, "R", 12));
    auto t = TargetSpec::custom(std::move(table), std::move(basis));
    if (t.table->dim() != dim) throw ConfigError("custom table dimension mismatch");
    return t;
  }
  throw ConfigError("unknown target kind '" + kind + "'");
}

inline json target_to_json(const TargetSpec& t) {
  json j{{"kind", t.kind_name()}};
  switch (t.kind) {
    case TargetKind::HolderPower: j["s"] = t.s; j["amplitude"] = t.amplitude; break;
    case TargetKind::AbsPower:
      j["s"] = t.s;
      j["amplitude"] = t.amplitude;
      j["center"] = t.center;
      break;
    case TargetKind::PiecewiseHolder:
      j["segments"] = json::array();
      for (const auto& s : t.segments) j["segments"].push_back({{"a", s.a}, {"b", s.b}, {"s", s.s}, {"amplitude", s.amplitude}});
      break;
    case TargetKind::DyadicStep:
      j["level"] = t.level;
      j["values"] = t.values;
      j["amplitude"] = t.amplitude;
      break;
    case TargetKind::Custom: {
      std::ostringstream os;
      write_table_csv(os, *t.table);
      j["table_csv"] = os.str();
      j["family"] = t.table_basis->family().name();
      break;
    }
  }
  return j;
}

}  // namespace detail

/// Parses a config document. Relative table paths resolve against base_dir.
inline ExperimentConfig parse_config(const json& j, const std::string& base_dir = {}) {
  using detail::check_keys;
  using detail::get_or;
  check_keys(j, {"name", "basis", "algorithm", "loss", "stream", "seed", "output"}, "config");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", "");

  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    check_keys(b, {"family", "N", "d", "R"}, "basis");
    c.basis.family = get_or<std::string>(b, "family", c.basis.family);
    if (b.contains("N")) {
      if (c.basis.family != "daubechies") throw ConfigError("basis N applies to family 'daubechies'");
      c.basis.family = "db" + std::to_string(b.at("N").get<int>());
    }
    c.basis.dim = get_or(b, "d", 1);
    c.basis.resolution = get_or(b, "R", 12);
  }

  if (j.contains("algorithm")) {
    const auto& a = j.at("algorithm");
    check_keys(a, {"kind", "j0", "J", "J0", "grid_size", "B", "S", "eps", "j_max", "wealth0", "kappa", "max_experts"},
               "algorithm");
    const auto kind = get_or<std::string>(a, "kind", "global");
    if (kind == "global")
      c.algorithm.kind = AlgorithmKind::Global;
    else if (kind == "adaptive")
      c.algorithm.kind = AlgorithmKind::Adaptive;
    else
      throw ConfigError("unknown algorithm kind '" + kind + "'");
    c.algorithm.j0 = get_or(a, "j0", 0);
    if (a.contains("J") && !(a.at("J").is_string() && a.at("J") == "auto")) c.algorithm.J = get_or(a, "J", -1);
    c.algorithm.J0 = get_or(a, "J0", 0);
    c.algorithm.grid_size = get_or(a, "grid_size", 1);
    c.algorithm.B = get_or(a, "B", 0.0);
    c.algorithm.S = get_or(a, "S", 0.0);
    c.algorithm.eps = get_or(a, "eps", 1.0);
    c.algorithm.j_max = get_or(a, "j_max", -1);
    c.algorithm.schedule.wealth0 = get_or(a, "wealth0", 1.0);
    c.algorithm.schedule.kappa = get_or(a, "kappa", 1.0);
    c.algorithm.max_experts = get_or<std::int64_t>(a, "max_experts", 1 << 16);
  }

  if (j.contains("stream")) {
    const auto& s = j.at("stream");
    check_keys(s, {"T", "B", "target", "inputs", "noise"}, "stream");
    c.stream.dim = c.basis.dim;
    c.stream.T = get_or<std::int64_t>(s, "T", 1024);
    c.stream.B = get_or(s, "B", 1.0);
    if (s.contains("target")) c.stream.target = detail::parse_target(s.at("target"), c.basis.dim, base_dir);
    if (s.contains("inputs")) {
      const auto& in = s.at("inputs");
      check_keys(in, {"law", "concentration", "center"}, "inputs");
      const auto law = get_or<std::string>(in, "law", "uniform");
      if (law == "uniform")
        c.stream.inputs.law = InputLaw::UniformIID;
      else if (law == "equispaced")
        c.stream.inputs.law = InputLaw::EquiSpaced;
      else if (law == "near_singularity")
        c.stream.inputs.law = InputLaw::AdversarialNearSingularity;
      else
        throw ConfigError("unknown input law '" + law + "'");
      c.stream.inputs.concentration = get_or(in, "concentration", 4.0);
      c.stream.inputs.center = detail::point_or(in, "center", c.stream.inputs.center);
    }
    if (s.contains("noise")) {
      const auto& n = s.at("noise");
      check_keys(n, {"eta"}, "noise");
      c.stream.noise.eta = get_or(n, "eta", 0.0);
    }
  }
  c.stream.dim = c.basis.dim;
  c.stream.seed = get_or<std::uint64_t>(j, "seed", 1);

  const double B = c.bound();
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    if (l.is_string()) {
      c.loss = LossSpec::from_name(l.get<std::string>(), B);
    } else {
      check_keys(l, {"kind", "tau"}, "loss");
      c.loss = LossSpec::from_name(get_or<std::string>(l, "kind", "square"), B, get_or(l, "tau", 0.5));
    }
  } else {
    c.loss = LossSpec::square(B);
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"trace", "summary", "plot"}, "output");
    c.output.trace = get_or<std::string>(o, "trace", "");
    c.output.summary = get_or<std::string>(o, "summary", "");
    c.output.plot = get_or<std::string>(o, "plot", "");
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  const auto slash = path.find_last_of('/');
  return parse_config(j, slash == std::string::npos ? std::string{} : path.substr(0, slash));
}

/// Canonical form with every default resolved; output paths are left out so
/// the fingerprint only reflects what determines the trace.
inline json config_to_json(const ExperimentConfig& c) {
  const auto& a = c.algorithm;
  json j;
  j["name"] = c.name;
  j["basis"] = {{"family", c.basis.family}, {"d", c.basis.dim}, {"R", c.basis.resolution}};
  j["algorithm"] = {{"kind", a.kind == AlgorithmKind::Global ? "global" : "adaptive"},
                    {"j0", a.j0},
                    {"J", c.level(c.stream.T)},
                    {"J0", a.J0},
                    {"grid_size", a.grid_size},
                    {"B", c.bound()},
                    {"wealth0", a.schedule.wealth0},
                    {"kappa", a.schedule.kappa},
                    {"max_experts", a.max_experts}};
  j["loss"] = {{"kind", c.loss.name()}, {"tau", c.loss.tau}};
  j["stream"] = {{"T", c.stream.T},
                 {"B", c.stream.B},
                 {"target", detail::target_to_json(c.stream.target)},
                 {"inputs",
                  {{"law", c.stream.inputs.law_name()},
                   {"concentration", c.stream.inputs.concentration},
                   {"center", c.stream.inputs.center}}},
                 {"noise", {{"eta", c.stream.noise.eta}}}};
  j["seed"] = c.stream.seed;
  return j;
}

/// 64-bit FNV-1a of the canonical config, as 16 hex digits.
inline std::string config_fingerprint(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace owr
