#pragma once

// Periodized orthonormal wavelet bases on [0,1]^d.
//
// The 1-d father/mother functions are sampled on a dyadic grid of step 2^-R by
// the cascade (refinement) recursion and evaluated by linear interpolation.
// Haar is evaluated in closed form. Multivariate functions are tensor products
// psi^eps(x) = g^{eps_1}(x_1) ... g^{eps_d}(x_d) with g^0 = phi, g^1 = psi,
// periodized one axis at a time.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "owr/errors.hpp"
#include "owr/filters.hpp"

namespace owr {

inline constexpr int kMaxDim = 3;

using Point = std::span<const double>;

/// 2^{j/2} without going through pow().
inline double half_power_of_two(int j) {
  return (j % 2 == 0) ? std::ldexp(1.0, j / 2)
                      : std::ldexp(1.4142135623730951, (j - 1) / 2);
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

enum class FamilyKind { Haar, Daubechies };

/// Residuals of the filter conditions, reported by WaveletFamily::check().
struct FilterResiduals {
  double sum = 0;          // |sum h - sqrt 2|
  double orthogonality = 0;// max_m |sum h_k h_{k+2m} - delta_m|
  double moments = 0;      // max_{m<N} |sum (-1)^k (k/(2N-1))^m h_k|
  double raw_moments = 0;  // same with unscaled k^m
};

class WaveletFamily {
 public:
  static WaveletFamily haar() { return WaveletFamily(FamilyKind::Haar, 1); }

  /// Daubechies wavelet with n vanishing moments; n = 1 is Haar.
  static WaveletFamily daubechies(int n) {
    if (n == 1) return haar();
    if (n < 2 || n > 10)
      throw ConfigError("Daubechies order must be in 1..10, got " +
                        std::to_string(n));
    return WaveletFamily(FamilyKind::Daubechies, n);
  }

  /// Accepts "haar", "dbN" and "daubechiesN".
  static WaveletFamily from_name(std::string_view name) {
    if (name == "haar" || name == "Haar") return haar();
    std::string_view digits;
    if (name.starts_with("db"))
      digits = name.substr(2);
    else if (name.starts_with("daubechies"))
      digits = name.substr(10);
    else
      throw ConfigError("unknown wavelet family '" + std::string(name) + "'");
    int n = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') throw ConfigError("bad family name '" + std::string(name) + "'");
      n = 10 * n + (c - '0');
    }
    if (digits.empty()) throw ConfigError("missing order in '" + std::string(name) + "'");
    return daubechies(n);
  }

  FamilyKind kind() const { return kind_; }
  int vanishing_moments() const { return n_; }
  std::span<const double> filter() const { return h_; }
  std::string name() const {
    return kind_ == FamilyKind::Haar ? "haar" : "db" + std::to_string(n_);
  }

  /// Generator supports: phi on [0, 2N-1], psi on [1-N, N].
  int support_begin(int eps) const { return eps == 0 ? 0 : 1 - n_; }
  int support_end(int eps) const { return eps == 0 ? 2 * n_ - 1 : n_; }
  int support_length() const { return 2 * n_ - 1; }

  FilterResiduals check() const {
    FilterResiduals r;
    const auto n = static_cast<int>(h_.size());
    double s = 0;
    for (double v : h_) s += v;
    r.sum = std::abs(s - std::sqrt(2.0));
    for (int m = 0; 2 * m < n; ++m) {
      double acc = 0;
      for (int k = 0; k + 2 * m < n; ++k) acc += h_[k] * h_[k + 2 * m];
      r.orthogonality = std::max(r.orthogonality, std::abs(acc - (m == 0 ? 1.0 : 0.0)));
    }
    const double scale = 1.0 / std::max(1, n - 1);
    for (int m = 0; m < n_; ++m) {
      double scaled = 0, raw = 0;
      for (int k = 0; k < n; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        scaled += sign * std::pow(k * scale, m) * h_[k];
        raw += sign * std::pow(static_cast<double>(k), m) * h_[k];
      }
      r.moments = std::max(r.moments, std::abs(scaled));
      r.raw_moments = std::max(r.raw_moments, std::abs(raw));
    }
    return r;
  }

  friend bool operator==(const WaveletFamily& a, const WaveletFamily& b) {
    return a.kind_ == b.kind_ && a.n_ == b.n_;
  }

 private:
  WaveletFamily(FamilyKind kind, int n) : kind_(kind), n_(n) {
    if (kind == FamilyKind::Haar) {
      h_ = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    } else {
      auto table = filters::daubechies(n);
      h_.assign(table.begin(), table.end());
    }
    const auto r = check();
    if (r.sum > 1e-12 || r.orthogonality > 1e-12 || r.moments > 1e-10)
      throw ConfigError("filter table for " + name() + " fails its invariants");
  }

  FamilyKind kind_;
  int n_;
  std::vector<double> h_;
};

/// Values of a compactly supported function on the grid begin + i 2^-R.
class SampledFunction {
 public:
  SampledFunction() = default;
  SampledFunction(double begin, double end, int resolution, std::vector<double> values)
      : begin_(begin), end_(end), resolution_(resolution), values_(std::move(values)) {}

  double begin() const { return begin_; }
  double end() const { return end_; }
  int resolution() const { return resolution_; }
  double step() const { return std::ldexp(1.0, -resolution_); }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double abscissa(std::size_t i) const { return begin_ + std::ldexp(static_cast<double>(i), -resolution_); }

  /// Linear interpolation; zero outside [begin, end].
  double at(double u) const {
    if (!(u >= begin_ && u <= end_)) return 0.0;
    const double pos = std::ldexp(u - begin_, resolution_);
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) return values_.back();
    const double frac = pos - static_cast<double>(i);
    return frac == 0.0 ? values_[i] : values_[i] + frac * (values_[i + 1] - values_[i]);
  }

  double trapezoid() const {
    double acc = 0;
    for (double v : values_) acc += v;
    acc -= 0.5 * (values_.front() + values_.back());
    return acc * step();
  }

  double trapezoid_squared() const {
    double acc = 0;
    for (double v : values_) acc += v * v;
    acc -= 0.5 * (values_.front() * values_.front() + values_.back() * values_.back());
    return acc * step();
  }

  double trapezoid_abs() const {
    double acc = 0;
    for (double v : values_) acc += std::abs(v);
    acc -= 0.5 * (std::abs(values_.front()) + std::abs(values_.back()));
    return acc * step();
  }

  double sup_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  double begin_ = 0, end_ = 0;
  int resolution_ = 0;
  std::vector<double> values_;
};

enum class IndexKind : std::uint8_t { Scaling = 0, Detail = 1 };

/// One scaling or detail function: level j, translation k in {0..2^j-1}^d and
/// direction eps in {0,1}^d (all zero for scaling, nonzero for detail).
struct BasisIndex {
  IndexKind kind = IndexKind::Scaling;
  int level = 0;
  std::array<std::int64_t, kMaxDim> k{};
  std::array<std::uint8_t, kMaxDim> eps{};

  static BasisIndex scaling(int j, std::initializer_list<std::int64_t> ks) {
    BasisIndex idx;
    idx.kind = IndexKind::Scaling;
    idx.level = j;
    std::copy(ks.begin(), ks.end(), idx.k.begin());
    return idx;
  }

  static BasisIndex detail(int j, std::initializer_list<std::int64_t> ks,
                           std::initializer_list<int> es = {1}) {
    BasisIndex idx;
    idx.kind = IndexKind::Detail;
    idx.level = j;
    std::copy(ks.begin(), ks.end(), idx.k.begin());
    int i = 0;
    for (int e : es) idx.eps[i++] = static_cast<std::uint8_t>(e);
    return idx;
  }

  bool is_scaling() const { return kind == IndexKind::Scaling; }

  /// eps packed as a bit mask, bit i for axis i.
  unsigned eps_mask() const {
    unsigned m = 0;
    for (int i = 0; i < kMaxDim; ++i) m |= static_cast<unsigned>(eps[i] & 1u) << i;
    return m;
  }

  friend auto operator<=>(const BasisIndex&, const BasisIndex&) = default;
  friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BasisIndex& idx) {
  os << (idx.is_scaling() ? "Scaling(" : "Detail(") << idx.level << ",[";
  for (int i = 0; i < kMaxDim; ++i) os << (i ? "," : "") << idx.k[i];
  os << "],eps=" << idx.eps_mask() << ")";
  return os;
}

struct BasisIndexHash {
  std::size_t operator()(const BasisIndex& idx) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(idx.level) + 1);
    h ^= static_cast<std::uint64_t>(idx.kind) << 7 | idx.eps_mask();
    for (auto v : idx.k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Axis-aligned box [lo, hi] in the first `dim` coordinates.
struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  static Box unit(int dim) {
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i) b.hi[i] = 1.0;
    return b;
  }

  bool contains(Point x) const {
    for (int i = 0; i < dim; ++i)
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    return true;
  }

  bool intersects(const Box& o) const {
    for (int i = 0; i < dim; ++i)
      if (o.hi[i] < lo[i] || o.lo[i] > hi[i]) return false;
    return true;
  }

  /// Intersection with positive volume (touching faces do not count).
  bool overlaps(const Box& o) const {
    for (int i = 0; i < dim; ++i)
      if (o.hi[i] <= lo[i] || o.lo[i] >= hi[i]) return false;
    return true;
  }

  double volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
    return v;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Number of detail functions at level j: (2^d - 1) 2^{jd}.
inline std::int64_t detail_count(int j, int d) {
  return ((std::int64_t{1} << d) - 1) << (j * d);
}

/// Number of scaling functions at level j: 2^{jd}.
inline std::int64_t scaling_count(int j, int d) { return std::int64_t{1} << (j * d); }

/// Invariant report for a built basis; see check_basis().
struct BasisDiagnostics {
  double phi_integral = 0, psi_integral = 0;
  double phi_norm2 = 0, psi_norm2 = 0;
  double partition_of_unity = 0;  // max |sum_k phi(x-k) - 1|
  double refinement = 0;          // max |phi(x) - sqrt2 sum h_k phi(2x-k)|
};

class WaveletBasis {
 public:
  static constexpr int kMaxCandidates = 24;

  WaveletBasis(WaveletFamily family, int dim, int resolution = 12)
      : family_(std::move(family)), dim_(dim), resolution_(resolution) {
    if (dim < 1 || dim > kMaxDim)
      throw ConfigError("dimension must be in 1..3, got " + std::to_string(dim));
    if (resolution < 8 || resolution > 16)
      throw ConfigError("table resolution must be in 8..16, got " + std::to_string(resolution));
    if (family_.kind() == FamilyKind::Haar)
      build_haar_tables();
    else
      build_cascade_tables();
    for (int eps = 0; eps < 2; ++eps) {
      const auto& t = table(eps);
      sup_[eps] = t.sup_abs();
      l1_[eps] = t.trapezoid_abs();
    }
    build_periodized_sups();
  }

  const WaveletFamily& family() const { return family_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  const SampledFunction& phi_table() const { return phi_; }
  const SampledFunction& psi_table() const { return psi_; }
  const SampledFunction& table(int eps) const { return eps == 0 ? phi_ : psi_; }
  std::string id() const {
    return family_.name() + "/d" + std::to_string(dim_) + "/R" + std::to_string(resolution_);
  }

  /// 1-d generator (phi for eps = 0, psi for eps = 1), not periodized.
  double generator(int eps, double u) const {
    if (family_.kind() == FamilyKind::Haar) {
      if (!(u >= 0.0 && u < 1.0)) return 0.0;
      if (eps == 0) return 1.0;
      return u < 0.5 ? 1.0 : -1.0;
    }
    return table(eps).at(u);
  }
  double phi(double u) const { return generator(0, u); }
  double psi(double u) const { return generator(1, u); }

  double generator_sup(int eps) const { return sup_[eps]; }
  double generator_l1(int eps) const { return l1_[eps]; }

  /// sup_u |sum_m g(u + 2^j m)|, the sup norm of the periodized generator at
  /// level j before the 2^{j/2} normalization.
  double periodized_sup(int eps, int level) const {
    if (level < static_cast<int>(per_sup_[eps].size())) return per_sup_[eps][level];
    return sup_[eps];
  }

  /// 2^{j/2} sum_m g(2^j x - k + 2^j m).
  double periodized(int eps, int level, std::int64_t k, double x) const {
    const double period = std::ldexp(1.0, level);
    const double u = period * x - static_cast<double>(k);
    const double a = family_.support_begin(eps);
    const double b = family_.support_end(eps);
    const auto m_lo = static_cast<std::int64_t>(std::ceil((a - u) / period));
    const auto m_hi = static_cast<std::int64_t>(std::floor((b - u) / period));
    double acc = 0;
    for (std::int64_t m = m_lo; m <= m_hi; ++m)
      acc += generator(eps, u + period * static_cast<double>(m));
    return acc == 0.0 ? 0.0 : acc * half_power_of_two(level);
  }

  /// Value of the normalized, periodized basis function at x in [0,1]^d.
  double eval(const BasisIndex& idx, Point x) const {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) {
      v *= periodized(idx.eps[i], idx.level, idx.k[i], x[i]);
      if (v == 0.0) return 0.0;
    }
    return v;
  }

  /// Calls fn(index, value) for every basis function that is nonzero at x:
  /// scaling functions at level j0 and detail functions at levels j0..J.
  template <class Fn>
  void for_each_active(int j0, int J, Point x, Fn&& fn) const {
    Axis axes[2][kMaxDim];
    auto emit_level = [&](int level, bool scaling) {
      for (int i = 0; i < dim_; ++i) {
        axis_values(0, level, x[i], axes[0][i]);
        if (!scaling) axis_values(1, level, x[i], axes[1][i]);
      }
      const unsigned first = scaling ? 0u : 1u;
      const unsigned last = scaling ? 0u : (1u << dim_) - 1u;
      for (unsigned mask = first; mask <= last; ++mask) {
        BasisIndex idx;
        idx.kind = scaling ? IndexKind::Scaling : IndexKind::Detail;
        idx.level = level;
        for (int i = 0; i < dim_; ++i) idx.eps[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
        emit_product(axes, idx, 0, 1.0, fn);
      }
    };
    emit_level(j0, true);
    for (int j = j0; j <= J; ++j) emit_level(j, false);
  }

  struct ActiveEntry {
    BasisIndex index;
    double value;
  };

  std::vector<ActiveEntry> active(int j0, int J, Point x) const {
    std::vector<ActiveEntry> out;
    for_each_active(j0, J, x, [&](const BasisIndex& idx, double v) { out.push_back({idx, v}); });
    return out;
  }

  std::vector<BasisIndex> active_indices(int j0, int J, Point x) const {
    std::vector<BasisIndex> out;
    for_each_active(j0, J, x, [&](const BasisIndex& idx, double) { out.push_back(idx); });
    return out;
  }

  /// Upper bound (2N)^d 2^d on the number of active functions per level.
  std::int64_t per_level_active_bound() const {
    std::int64_t c = 1;
    for (int i = 0; i < dim_; ++i) c *= 4 * family_.vanishing_moments();
    return c;
  }

  /// Periodized support as a union of at most 2^d closed boxes.
  std::vector<Box> support(const BasisIndex& idx) const {
    std::array<std::vector<std::pair<double, double>>, kMaxDim> pieces;
    const double period = std::ldexp(1.0, idx.level);
    for (int i = 0; i < dim_; ++i) {
      const double a = family_.support_begin(idx.eps[i]);
      const double b = family_.support_end(idx.eps[i]);
      const double lo = (static_cast<double>(idx.k[i]) + a) / period;
      const double hi = (static_cast<double>(idx.k[i]) + b) / period;
      if (hi - lo >= 1.0) {
        pieces[i].push_back({0.0, 1.0});
        continue;
      }
      const double lo_f = lo - std::floor(lo);
      const double hi_f = lo_f + (hi - lo);
      if (hi_f <= 1.0) {
        pieces[i].push_back({lo_f, hi_f});
      } else {
        pieces[i].push_back({lo_f, 1.0});
        pieces[i].push_back({0.0, hi_f - 1.0});
      }
    }
    std::vector<Box> boxes;
    Box cur;
    cur.dim = dim_;
    std::function<void(int)> rec = [&](int i) {
      if (i == dim_) {
        boxes.push_back(cur);
        return;
      }
      for (auto [lo, hi] : pieces[i]) {
        cur.lo[i] = lo;
        cur.hi[i] = hi;
        rec(i + 1);
      }
    };
    rec(0);
    return boxes;
  }

  /// Samples of phi and psi on the union of their supports, for plotting.
  struct TableRow {
    double x, phi, psi;
  };
  std::vector<TableRow> table_rows() const {
    std::vector<TableRow> rows;
    const double lo = std::min(phi_.begin(), psi_.begin());
    const double hi = std::max(phi_.end(), psi_.end());
    const auto n = static_cast<std::size_t>(std::ldexp(hi - lo, resolution_)) + 1;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = lo + std::ldexp(static_cast<double>(i), -resolution_);
      rows.push_back({x, phi_.at(x), psi_.at(x)});
    }
    return rows;
  }

 private:
  struct Axis {
    std::array<std::int64_t, kMaxCandidates> k;
    std::array<double, kMaxCandidates> v;
    int n = 0;
  };

  void axis_values(int eps, int level, double x, Axis& out) const {
    out.n = 0;
    const std::int64_t period = std::int64_t{1} << level;
    const double y = std::ldexp(x, level);
    const double a = family_.support_begin(eps);
    const double b = family_.support_end(eps);
    const auto k_lo = static_cast<std::int64_t>(std::ceil(y - b));
    const auto k_hi = static_cast<std::int64_t>(std::floor(y - a));
    for (std::int64_t kk = k_lo; kk <= k_hi; ++kk) {
      const std::int64_t k = floor_mod(kk, period);
      bool seen = false;
      for (int i = 0; i < out.n; ++i) seen = seen || out.k[i] == k;
      if (seen) continue;
      const double v = periodized(eps, level, k, x);
      if (v == 0.0) continue;
      int pos = out.n++;
      while (pos > 0 && out.k[pos - 1] > k) {
        out.k[pos] = out.k[pos - 1];
        out.v[pos] = out.v[pos - 1];
        --pos;
      }
      out.k[pos] = k;
      out.v[pos] = v;
    }
  }

  template <class Fn>
  void emit_product(const Axis (&axes)[2][kMaxDim], BasisIndex& idx, int axis, double acc,
                    Fn& fn) const {
    if (axis == dim_) {
      fn(static_cast<const BasisIndex&>(idx), acc);
      return;
    }
    const Axis& ax = axes[idx.eps[axis]][axis];
    for (int i = 0; i < ax.n; ++i) {
      idx.k[axis] = ax.k[i];
      emit_product(axes, idx, axis + 1, acc * ax.v[i], fn);
    }
    idx.k[axis] = 0;
  }

  void build_haar_tables() {
    const std::size_t n = (std::size_t{1} << resolution_) + 1;
    std::vector<double> phi(n, 1.0), psi(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = (2 * i < n - 1) ? 1.0 : -1.0;
    phi_ = SampledFunction(0.0, 1.0, resolution_, std::move(phi));
    psi_ = SampledFunction(0.0, 1.0, resolution_, std::move(psi));
  }

  // phi at the integers solves phi(n) = sqrt2 sum_m h_{2n-m} phi(m) with
  // sum phi(n) = 1; dyadic points follow from phi(x) = sqrt2 sum h_k phi(2x-k).
  void build_cascade_tables() {
    const auto h = family_.filter();
    const int taps = static_cast<int>(h.size());
    const int len = family_.support_length();
    const double root2 = std::sqrt(2.0);
    auto hk = [&](int i) { return (i >= 0 && i < taps) ? h[i] : 0.0; };

    const int m = len - 1;  // unknowns phi(1..len-1)
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) a[r][c] = root2 * hk(2 * (r + 1) - (c + 1)) - (r == c ? 1.0 : 0.0);
    }
    for (int c = 0; c < m; ++c) a[m - 1][c] = 1.0;
    a[m - 1][m] = 1.0;
    const std::vector<double> ints = solve_dense(std::move(a));

    std::vector<double> cur(len + 1, 0.0);
    for (int i = 1; i < len; ++i) cur[i] = ints[i - 1];
    for (int r = 1; r <= resolution_; ++r) {
      const std::size_t half = std::size_t{1} << (r - 1);
      std::vector<double> next(static_cast<std::size_t>(len) * (half * 2) + 1, 0.0);
      for (std::size_t n = 0; n < next.size(); ++n) {
        if (n % 2 == 0) {
          next[n] = cur[n / 2];
          continue;
        }
        double acc = 0;
        for (int k = 0; k < taps; ++k) {
          const auto off = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(k) * static_cast<std::int64_t>(half);
          if (off >= 0 && off < static_cast<std::int64_t>(cur.size())) acc += h[k] * cur[off];
        }
        next[n] = root2 * acc;
      }
      cur = std::move(next);
    }
    const int n = family_.vanishing_moments();
    std::vector<double> psi(cur.size(), 0.0);
    const std::int64_t scale = std::int64_t{1} << resolution_;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      double acc = 0;
      for (int k = 2 - 2 * n; k <= 1; ++k) {
        const double g = ((k % 2 == 0) ? 1.0 : -1.0) * hk(1 - k);
        const std::int64_t pos = (2 * (1 - n) - k) * scale + 2 * static_cast<std::int64_t>(i);
        if (pos >= 0 && pos < static_cast<std::int64_t>(cur.size())) acc += g * cur[pos];
      }
      psi[i] = root2 * acc;
    }
    phi_ = SampledFunction(0.0, len, resolution_, std::move(cur));
    psi_ = SampledFunction(1.0 - n, n, resolution_, std::move(psi));
  }

  static std::vector<double> solve_dense(std::vector<std::vector<double>> a) {
    const auto m = a.size();
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < m; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      if (std::abs(a[piv][c]) < 1e-14) throw InternalError("singular cascade system");
      std::swap(a[c], a[piv]);
      for (std::size_t r = 0; r < m; ++r) {
        if (r == c) continue;
        const double f = a[r][c] / a[c][c];
        for (std::size_t cc = c; cc <= m; ++cc) a[r][cc] -= f * a[c][cc];
      }
    }
    std::vector<double> x(m);
    for (std::size_t r = 0; r < m; ++r) x[r] = a[r][m] / a[r][r];
    return x;
  }

  void build_periodized_sups() {
    const int len = family_.support_length();
    for (int eps = 0; eps < 2; ++eps) {
      per_sup_[eps].clear();
      for (int level = 0; (1 << level) < len + 1; ++level) {
        const std::int64_t period = std::int64_t{1} << level;
        const std::int64_t steps = period << resolution_;
        const double a = family_.support_begin(eps);
        double best = 0;
        for (std::int64_t i = 0; i < steps; ++i) {
          const double u = a + std::ldexp(static_cast<double>(i), -resolution_);
          double acc = 0;
          for (double w = u; w <= family_.support_end(eps); w += static_cast<double>(period))
            acc += generator(eps, w);
          best = std::max(best, std::abs(acc));
        }
        per_sup_[eps].push_back(best);
      }
    }
  }

  WaveletFamily family_;
  int dim_;
  int resolution_;
  SampledFunction phi_, psi_;
  std::array<double, 2> sup_{}, l1_{};
  std::array<std::vector<double>, 2> per_sup_;
};

/// Evaluates the WaveletBasis table invariants (integrals, partition of unity,
/// refinement equation) with the trapezoid rule on the table grid.
inline BasisDiagnostics check_basis(const WaveletBasis& basis) {
  BasisDiagnostics d;
  d.phi_integral = basis.phi_table().trapezoid();
  d.psi_integral = basis.psi_table().trapezoid();
  d.phi_norm2 = basis.phi_table().trapezoid_squared();
  d.psi_norm2 = basis.psi_table().trapezoid_squared();
  const auto& fam = basis.family();
  const int len = fam.support_length();
  const auto& phi = basis.phi_table();
  const std::size_t unit = std::size_t{1} << basis.resolution();
  for (std::size_t i = 0; i < unit; ++i) {
    const double x = phi.abscissa(i);
    double acc = 0;
    for (int m = 0; m <= len; ++m) acc += basis.phi(x + m);
    d.partition_of_unity = std::max(d.partition_of_unity, std::abs(acc - 1.0));
  }
  const auto h = fam.filter();
  const double root2 = std::sqrt(2.0);
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
    const double x = phi.abscissa(i);
    double rhs = 0;
    for (std::size_t k = 0; k < h.size(); ++k) rhs += h[k] * basis.phi(2 * x - static_cast<double>(k));
    d.refinement = std::max(d.refinement, std::abs(basis.phi(x) - root2 * rhs));
  }
  return d;
}

}  // namespace owr
