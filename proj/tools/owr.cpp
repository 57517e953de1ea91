// Command-line front end: run, sweep, rate, compare, dump-basis.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "owr/owr.hpp"

namespace fs = std::filesystem;
using namespace owr;

namespace {

/// "2^k" or a plain integer.
std::int64_t parse_horizon(const std::string& s) {
  try {
    if (s.starts_with("2^")) {
      const int k = std::stoi(s.substr(2));
      if (k < 0 || k > 40) throw ConfigError("horizon exponent out of range: " + s);
      return std::int64_t{1} << k;
    }
    return std::stoll(s);
  } catch (const std::logic_error&) {
    throw ConfigError("bad horizon '" + s + "'");
  }
}

/// "2^10..2^16" expands to powers of two stepping the exponent by `every`;
/// otherwise a comma-separated list.
std::vector<std::int64_t> parse_horizons(const std::string& spec, int every) {
  std::vector<std::int64_t> out;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const auto lo = parse_horizon(spec.substr(0, dots)), hi = parse_horizon(spec.substr(dots + 2));
    if (lo < 1 || hi < lo || (lo & (lo - 1)) || (hi & (hi - 1))) throw ConfigError("range ends must be powers of two");
    for (auto t = lo; t <= hi; t <<= every) out.push_back(t);
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    out.push_back(parse_horizon(spec.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

json rate_json(const RateFit& f) {
  return {{"exponent", f.exponent}, {"intercept_log2", f.intercept}, {"residual", f.residual},
          {"points", f.points},     {"decades", f.decades}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online wavelet regression: experiments and diagnostics"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string run_config, run_trace, run_summary, run_plot;
  run->add_option("--config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--trace", run_trace, "Override trace CSV path");
  run->add_option("--summary", run_summary, "Override summary JSON path");
  run->add_option("--plot", run_plot, "Override plot data path");

  auto* sw = app.add_subcommand("sweep", "Regret at several horizons from one run per seed");
  std::string sw_config, sw_horizons = "2^10..2^16", sw_seeds, sw_out;
  int sw_every = 1;
  sw->add_option("--config", sw_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--horizons", sw_horizons, "Range 2^a..2^b or a comma list")->capture_default_str();
  sw->add_option("--every", sw_every, "Exponent step within a range")->capture_default_str()->check(CLI::PositiveNumber);
  sw->add_option("--seeds", sw_seeds, "Comma-separated seeds (default: the config seed)");
  sw->add_option("--out", sw_out, "Directory for per-seed traces and sweep.json");

  auto* rate = app.add_subcommand("rate", "Fit a regret exponent from trace files");
  std::string rate_glob;
  bool rate_prefixes = false;
  rate->add_option("--traces", rate_glob, "Glob matching trace CSV files")->required();
  rate->add_flag("--prefixes", rate_prefixes, "Also use the regret at every power-of-two t of each trace");

  auto* cmp = app.add_subcommand("compare", "Paired global/adaptive runs on one stream");
  std::string cmp_a, cmp_b, cmp_out, cmp_curves;
  cmp->add_option("--config-a", cmp_a, "Reference config, usually global")->required()->check(CLI::ExistingFile);
  cmp->add_option("--config-b", cmp_b, "Candidate config, usually adaptive")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", cmp_out, "Report JSON path");
  cmp->add_option("--curves", cmp_curves, "Paired regret curves (gnuplot columns)");

  auto* dump = app.add_subcommand("dump-basis", "Write sampled phi and psi tables");
  std::string dump_family = "db2", dump_out;
  int dump_R = 12;
  dump->add_option("--family", dump_family, "haar, dbN or daubechiesN")->capture_default_str();
  dump->add_option("--R", dump_R, "Cascade depth")->capture_default_str();
  dump->add_option("--out", dump_out, "CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = load_config(run_config);
      if (!run_trace.empty()) cfg.output.trace = run_trace;
      if (!run_summary.empty()) cfg.output.summary = run_summary;
      if (!run_plot.empty()) cfg.output.plot = run_plot;
      for (const auto* p : {&cfg.output.trace, &cfg.output.summary, &cfg.output.plot})
        if (const auto parent = fs::path(*p).parent_path(); !p->empty() && !parent.empty()) fs::create_directories(parent);
      const auto r = run_experiment(cfg);
      write_outputs(cfg, r);
      std::cout << r.summary.dump(2) << '\n';
    } else if (*sw) {
      const auto cfg = load_config(sw_config);
      const auto horizons = parse_horizons(sw_horizons, sw_every);
      std::vector<std::uint64_t> seeds;
      if (sw_seeds.empty()) {
        seeds.push_back(cfg.stream.seed);
      } else {
        for (auto t : parse_horizons(sw_seeds, 1)) seeds.push_back(static_cast<std::uint64_t>(t));
      }
      const auto res = sweep(cfg, horizons, seeds);
      json j{{"horizons", res.horizons}, {"seeds", res.seeds}, {"regret", res.regrets},
             {"mean_regret", res.mean_regret}, {"fit", rate_json(res.fit)}, {"J", cfg.level(horizons.back())}};
      if (res.fit.decades < 2.0) j["warning"] = "horizons span fewer than two decades";
      if (!sw_out.empty()) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
          auto f = open_out((fs::path(sw_out) / ("trace_seed" + std::to_string(seeds[i]) + ".csv")).string());
          write_trace_csv(f, res.traces[i]);
        }
        open_out((fs::path(sw_out) / "sweep.json").string()) << j.dump(2) << '\n';
      }
      std::cout << j.dump(2) << '\n';
    } else if (*rate) {
      const auto files = expand_glob(rate_glob);
      if (files.empty()) throw ConfigError("no traces match " + rate_glob);
      std::vector<RatePoint> pts;
      for (const auto& path : files) {
        std::ifstream in(path);
        const auto tr = read_trace_csv(in);
        if (tr.rows.empty()) continue;
        if (!regret_recomputes(tr)) std::cerr << "warning: " << path << " fails the regret recomputation check\n";
        if (rate_prefixes) {
          for (std::int64_t t = 1; t < static_cast<std::int64_t>(tr.rows.size()); t <<= 1)
            pts.push_back({static_cast<double>(t), tr.regret_at(t)});
        }
        pts.push_back({static_cast<double>(tr.rows.size()), tr.final_regret()});
      }
      const auto fit = fit_rate(pts);
      json j{{"files", files}, {"fit", rate_json(fit)}};
      if (fit.decades < 2.0) j["warning"] = "horizons span fewer than two decades";
      std::cout << j.dump(2) << '\n';
    } else if (*cmp) {
      const auto a = load_config(cmp_a), b = load_config(cmp_b);
      const auto rep = compare_adaptive(a, b);
      const auto j = compare_json(rep);
      if (!cmp_out.empty()) open_out(cmp_out) << j.dump(2) << '\n';
      if (!cmp_curves.empty()) {
        auto f = open_out(cmp_curves);
        write_paired_curves(f, rep);
      }
      std::cout << j.dump(2) << '\n';
    } else if (*dump) {
      const WaveletBasis basis(WaveletFamily::from_name(dump_family), 1, dump_R);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!dump_out.empty()) {
        file = open_out(dump_out);
        os = &file;
      }
      *os << "x,phi,psi\n";
      char buf[96];
      for (const auto& r : basis.table_rows()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.x, r.phi, r.psi);
        *os << buf;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
