#pragma once

// Offline wavelet analysis: quadrature coefficients, Besov sequence norms,
// best N-term selection, sup-norm probing and coefficient-decay fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "owr/errors.hpp"
#include "owr/owd.hpp"
#include "owr/wavelets.hpp"

namespace owr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Function = std::function<double(Point)>;

/// Dense scaling coefficients at j0 and detail coefficients at j0..J.
/// Detail vectors are laid out as (mask - 1) 2^{jd} + flat(k).
class CoeffTable {
 public:
  CoeffTable() = default;
  CoeffTable(int dim, int j0, int J, std::string basis_id = {})
      : basis_id_(std::move(basis_id)), dim_(dim), j0_(j0), J_(J) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("table dimension must be in 1..3");
    if (j0 < 0) throw ConfigError("table j0 must be non-negative");
    if (J < j0 - 1) throw ConfigError("table J must be at least j0 - 1");
    if (J * dim > 28) throw ConfigError("dense table too large");
    alpha_.assign(static_cast<std::size_t>(scaling_count(j0, dim)), 0.0);
    for (int j = j0; j <= J; ++j) beta_.emplace_back(static_cast<std::size_t>(detail_count(j, dim)), 0.0);
  }

  const std::string& basis_id() const { return basis_id_; }
  int dim() const { return dim_; }
  int j0() const { return j0_; }
  int J() const { return J_; }
  std::vector<double>& alpha() { return alpha_; }
  const std::vector<double>& alpha() const { return alpha_; }
  std::vector<double>& beta(int j) { return beta_.at(static_cast<std::size_t>(j - j0_)); }
  const std::vector<double>& beta(int j) const { return beta_.at(static_cast<std::size_t>(j - j0_)); }

  bool contains(const BasisIndex& idx) const {
    if (idx.is_scaling()) return idx.level == j0_;
    return idx.level >= j0_ && idx.level <= J_;
  }

  std::size_t flat(const BasisIndex& idx) const {
    std::size_t f = 0;
    for (int i = dim_ - 1; i >= 0; --i) f = (f << idx.level) + static_cast<std::size_t>(idx.k[i]);
    if (idx.is_scaling()) return f;
    return (static_cast<std::size_t>(idx.eps_mask()) - 1) * (std::size_t{1} << (idx.level * dim_)) + f;
  }

  BasisIndex detail_index(int j, std::size_t f) const {
    BasisIndex idx;
    idx.kind = IndexKind::Detail;
    idx.level = j;
    const std::size_t per = std::size_t{1} << (j * dim_);
    const unsigned mask = static_cast<unsigned>(f / per) + 1;
    std::size_t rest = f % per;
    for (int i = 0; i < dim_; ++i) {
      idx.k[i] = static_cast<std::int64_t>(rest & ((std::size_t{1} << j) - 1));
      rest >>= j;
      idx.eps[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
    }
    return idx;
  }

  BasisIndex scaling_index(std::size_t f) const {
    BasisIndex idx;
    idx.level = j0_;
    for (int i = 0; i < dim_; ++i) {
      idx.k[i] = static_cast<std::int64_t>(f & ((std::size_t{1} << j0_) - 1));
      f >>= j0_;
    }
    return idx;
  }

  double get(const BasisIndex& idx) const {
    if (!contains(idx)) return 0.0;
    return idx.is_scaling() ? alpha_[flat(idx)] : beta(idx.level)[flat(idx)];
  }

  double& at(const BasisIndex& idx) {
    if (!contains(idx)) throw DomainError("index outside the coefficient table");
    return idx.is_scaling() ? alpha_[flat(idx)] : beta(idx.level)[flat(idx)];
  }

  /// Sum of squared coefficients.
  double energy() const {
    double e = 0.0;
    for (double a : alpha_) e += a * a;
    for (const auto& b : beta_)
      for (double v : b) e += v * v;
    return e;
  }

  /// Reconstruction sum over active indices at x.
  double reconstruct(const WaveletBasis& basis, Point x) const {
    double acc = 0.0;
    basis.for_each_active(j0_, std::max(J_, j0_), x, [&](const BasisIndex& idx, double v) { acc += get(idx) * v; });
    return acc;
  }

 private:
  std::string basis_id_;
  int dim_ = 1, j0_ = 0, J_ = 0;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> beta_;
};

/// <f, basis function> for every index at levels j0..J by composite midpoint
/// quadrature. Each axis is sampled at step 2^-J / Q' where Q' is Q rounded
/// up to a power of two and capped at the table resolution, so every basis
/// function sees at least Q points per unit of its generator coordinate. For
/// piecewise-smooth f the error is O(Q^-2) away from singularities.
inline CoeffTable wavelet_coefficients(const Function& f, const WaveletBasis& basis, int j0, int J, int Q = 64) {
  if (Q < 64) throw ConfigError("quadrature needs Q >= 64");
  if (J < j0) throw ConfigError("J below j0");
  const int d = basis.dim();
  const int r = std::min(static_cast<int>(std::ceil(std::log2(static_cast<double>(Q)))), basis.resolution());
  const int per_axis_log = J + r;
  if (per_axis_log * d > 30) throw ConfigError("quadrature grid too large; lower J or Q");
  CoeffTable table(d, j0, J, basis.id());
  const std::int64_t m = std::int64_t{1} << per_axis_log;
  const std::int64_t total = std::int64_t{1} << (per_axis_log * d);
  const double w = std::ldexp(1.0, -per_axis_log * d);
  std::array<double, kMaxDim> x{};
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::int64_t rest = flat;
    for (int i = 0; i < d; ++i) {
      x[i] = (static_cast<double>(rest % m) + 0.5) / static_cast<double>(m);
      rest /= m;
    }
    const Point px(x.data(), d);
    const double fx = f(px) * w;
    if (fx == 0.0) continue;
    basis.for_each_active(j0, J, px, [&](const BasisIndex& idx, double v) { table.at(idx) += fx * v; });
  }
  return table;
}

inline double lp_norm(const std::vector<double>& v, double p) {
  if (p == kInf) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x), p);
  return std::pow(acc, 1.0 / p);
}

/// ||alpha||_p + || (2^{j s'} ||beta_j||_p)_j ||_q with s' = s + d/2 - d/p.
inline double besov_norm(const CoeffTable& t, double s, double p, double q) {
  if (!(s > 0.0)) throw ConfigError("Besov smoothness must be positive");
  if (!(p >= 1.0) || !(q >= 1.0)) throw ConfigError("Besov p and q must be in [1, inf]");
  const double d = t.dim();
  const double sp = s + d / 2.0 - (p == kInf ? 0.0 : d / p);
  std::vector<double> levels;
  for (int j = t.j0(); j <= t.J(); ++j) levels.push_back(std::exp2(j * sp) * lp_norm(t.beta(j), p));
  return lp_norm(t.alpha(), p) + lp_norm(levels, q);
}

struct OracleSelection {
  std::vector<BasisIndex> selected;  // ordered by decreasing weight
  CoeffTable table;                  // levels <= J* plus the selected detail terms
  double threshold = 0.0;            // smallest selected weight
};

/// Keeps every coefficient up to J* and the N fine-scale detail coefficients
/// with the largest |beta| 2^{j s'}; ties go to the lower (j, k).
inline OracleSelection nterm_oracle(const CoeffTable& t, int jstar, std::size_t N, double s, double p) {
  if (jstar > t.J()) throw ConfigError("J* above table depth");
  const double d = t.dim();
  const double sp = s + d / 2.0 - (p == kInf ? 0.0 : d / p);
  struct Cand {
    double v;
    BasisIndex idx;
  };
  std::vector<Cand> cands;
  for (int j = std::max(jstar + 1, t.j0()); j <= t.J(); ++j) {
    const auto& b = t.beta(j);
    const double scale = std::exp2(j * sp);
    for (std::size_t f = 0; f < b.size(); ++f) cands.push_back({std::abs(b[f]) * scale, t.detail_index(j, f)});
  }
  const std::size_t keep = std::min(N, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                    [](const Cand& a, const Cand& b) {
                      if (a.v != b.v) return a.v > b.v;
                      if (a.idx.level != b.idx.level) return a.idx.level < b.idx.level;
                      if (a.idx.k != b.idx.k) return a.idx.k < b.idx.k;
                      return a.idx.eps < b.idx.eps;
                    });
  OracleSelection out;
  out.table = CoeffTable(t.dim(), t.j0(), t.J(), t.basis_id());
  out.table.alpha() = t.alpha();
  for (int j = t.j0(); j <= std::min(jstar, t.J()); ++j) out.table.beta(j) = t.beta(j);
  for (std::size_t i = 0; i < keep; ++i) {
    out.selected.push_back(cands[i].idx);
    out.table.at(cands[i].idx) = t.get(cands[i].idx);
  }
  out.threshold = keep ? cands[keep - 1].v : 0.0;
  return out;
}

/// Point i (from 1) of the Halton sequence in the given prime base.
inline double halton(std::uint64_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

struct SupError {
  double lower = 0.0;     // max over probes; a lower bound on the true sup norm
  double inflated = 0.0;  // lower + lipschitz * probe spacing
};

/// Probes |f - reconstruction| on M Halton points.
inline SupError sup_error(const Function& f, const CoeffTable& t, const WaveletBasis& basis, std::size_t M = 10000,
                          double lipschitz = 0.0) {
  if (M < 10000) throw ConfigError("sup_error needs at least 10^4 probes");
  static constexpr unsigned primes[kMaxDim] = {2, 3, 5};
  const int d = basis.dim();
  SupError out;
  std::array<double, kMaxDim> x{};
  for (std::size_t i = 1; i <= M; ++i) {
    for (int c = 0; c < d; ++c) x[c] = halton(i, primes[c]);
    const Point px(x.data(), d);
    out.lower = std::max(out.lower, std::abs(f(px) - t.reconstruct(basis, px)));
  }
  out.inflated = out.lower + lipschitz * std::sqrt(static_cast<double>(d)) * std::pow(static_cast<double>(M), -1.0 / d);
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
  std::size_t points = 0;
};

inline LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

/// Slope of log2 max_k |beta_{j,k}| against j over [lo, hi] (default: all
/// levels). Levels whose maximum is below 1e-12 of the largest are numerical
/// zeros and are skipped.
inline LineFit decay_fit(const CoeffTable& t, int lo = -1, int hi = -1) {
  if (lo < 0) lo = t.j0();
  if (hi < 0) hi = t.J();
  lo = std::max(lo, t.j0());
  hi = std::min(hi, t.J());
  double top = 0.0;
  for (int j = lo; j <= hi; ++j) top = std::max(top, lp_norm(t.beta(j), kInf));
  std::vector<double> xs, ys;
  for (int j = lo; j <= hi; ++j) {
    const double m = lp_norm(t.beta(j), kInf);
    if (m > 1e-12 * top && m > 0.0) {
      xs.push_back(j);
      ys.push_back(std::log2(m));
    }
  }
  if (xs.size() < 3) throw ConfigError("decay_fit needs at least 3 levels with nonzero coefficients");
  return least_squares(xs, ys);
}

inline void write_table_csv(std::ostream& os, const CoeffTable& t) {
  write_index_csv_header(os, t.dim());
  for (std::size_t f = 0; f < t.alpha().size(); ++f) write_index_csv_row(os, t.scaling_index(f), t.dim(), t.alpha()[f]);
  for (int j = t.j0(); j <= t.J(); ++j)
    for (std::size_t f = 0; f < t.beta(j).size(); ++f) write_index_csv_row(os, t.detail_index(j, f), t.dim(), t.beta(j)[f]);
}

/// Reads rows written by write_table_csv; j0 and J come from the rows.
inline CoeffTable read_table_csv(std::istream& is, std::string basis_id = {}) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty coefficient CSV");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  const int d = static_cast<int>((columns - 3) / 2);
  if (d < 1 || d > kMaxDim || columns != 3 + 2 * d) throw ConfigError("bad coefficient CSV header: " + line);
  struct Row {
    BasisIndex idx;
    double v;
  };
  std::vector<Row> rows;
  int j0 = std::numeric_limits<int>::max(), J = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<long>(cells.size()) != columns) throw ConfigError("bad coefficient CSV row: " + line);
    Row r;
    r.idx.kind = cells[0] == "scaling" ? IndexKind::Scaling : IndexKind::Detail;
    if (cells[0] != "scaling" && cells[0] != "detail") throw ConfigError("bad index kind: " + cells[0]);
    r.idx.level = std::stoi(cells[1]);
    for (int i = 0; i < d; ++i) {
      r.idx.k[i] = std::stoll(cells[2 + i]);
      r.idx.eps[i] = static_cast<std::uint8_t>(std::stoi(cells[2 + d + i]));
    }
    r.v = std::stod(cells[2 + 2 * d]);
    if (r.idx.is_scaling())
      j0 = std::min(j0, r.idx.level);
    else
      J = std::max(J, r.idx.level);
    rows.push_back(r);
  }
  if (j0 == std::numeric_limits<int>::max()) throw ConfigError("coefficient CSV has no scaling rows");
  CoeffTable t(d, j0, std::max(J, j0 - 1), std::move(basis_id));
  for (const auto& r : rows) t.at(r.idx) = r.v;
  return t;
}

}  // namespace owr
