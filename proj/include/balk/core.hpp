#pragma once

// Finite universes, subsets as bitmasks, and the tables that live on them:
// set functions on all nonempty subsets, finite metrics, and ternary
// permutation-invariant tables.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace balk {

/// Thrown for malformed inputs and violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxUniverse = 24;

using Index = std::size_t;

// ---------------------------------------------------------------------------
// Subset

/// A subset of a finite universe encoded as a bitmask over element indices.
class Subset {
 public:
  constexpr Subset() = default;
  constexpr explicit Subset(std::uint32_t bits) : bits_(bits) {}

  static constexpr Subset singleton(Index i) { return Subset(std::uint32_t{1} << i); }
  static constexpr Subset full(std::size_t n) {
    return Subset(n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1);
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool contains(Index i) const { return (bits_ >> i) & 1U; }
  constexpr bool is_subset_of(Subset other) const { return (bits_ & ~other.bits_) == 0; }

  constexpr Subset with(Index i) const { return Subset(bits_ | (std::uint32_t{1} << i)); }
  constexpr Subset without(Index i) const { return Subset(bits_ & ~(std::uint32_t{1} << i)); }

  /// Indices of the members in increasing order.
  std::vector<Index> members() const {
    std::vector<Index> out;
    out.reserve(size());
    for (std::uint32_t b = bits_; b != 0; b &= b - 1) {
      out.push_back(static_cast<Index>(std::countr_zero(b)));
    }
    return out;
  }

  friend constexpr Subset operator|(Subset a, Subset b) { return Subset(a.bits_ | b.bits_); }
  friend constexpr Subset operator&(Subset a, Subset b) { return Subset(a.bits_ & b.bits_); }
  friend constexpr bool operator==(Subset a, Subset b) = default;
  friend constexpr auto operator<=>(Subset a, Subset b) = default;

 private:
  std::uint32_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Universe

/// An ordered list of distinct, nonempty element labels.
class Universe {
 public:
  Universe() = default;

  explicit Universe(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw InputError("universe must contain at least one element");
    if (names_.size() > kMaxUniverse) {
      throw InputError("universe size " + std::to_string(names_.size()) + " exceeds the limit of " +
                       std::to_string(kMaxUniverse));
    }
    for (Index i = 0; i < names_.size(); ++i) {
      const auto& name = names_[i];
      if (name.empty()) throw InputError("universe labels must be nonempty");
      if (name.find(',') != std::string::npos) {
        throw InputError("universe label '" + name + "' must not contain ','");
      }
      if (!index_.emplace(name, i).second) throw InputError("duplicate universe label '" + name + "'");
    }
  }

  /// Labels "a", "b", ... for the first n letters.
  static Universe letters(std::size_t n) {
    if (n == 0 || n > kMaxUniverse) {
      throw InputError("universe size must be in [1, " + std::to_string(kMaxUniverse) + "], got " +
                       std::to_string(n));
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.emplace_back(1, static_cast<char>('a' + i));
    return Universe(std::move(names));
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(Index i) const { return names_.at(i); }

  Index index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) throw InputError("unknown element label '" + std::string(label) + "'");
    return it->second;
  }

  Subset full() const { return Subset::full(size()); }
  std::uint32_t subset_count() const { return (std::uint32_t{1} << size()) - 1; }

  bool contains(Subset s) const { return s.is_subset_of(full()); }

  friend bool operator==(const Universe& a, const Universe& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Index> index_;
};

inline void require_nonempty_within(Subset s, const Universe& u) {
  if (s.empty()) throw InputError("subset must be nonempty");
  if (!u.contains(s)) throw InputError("subset has elements outside the universe");
}

/// The set of distinct indices occurring in `points`.
inline Subset image_set(std::span<const Index> points, std::size_t n) {
  if (points.empty()) throw InputError("image of an empty point list is undefined");
  Subset s;
  for (Index i : points) {
    if (i >= n) throw InputError("point index " + std::to_string(i) + " out of range for universe of size " + std::to_string(n));
    s = s.with(i);
  }
  return s;
}

inline Subset image_set(std::initializer_list<Index> points, std::size_t n) {
  return image_set(std::span<const Index>(points.begin(), points.size()), n);
}

/// Comma-joined labels in universe order, e.g. "a,c".
inline std::string canonical_subset_key(Subset s, const Universe& u) {
  require_nonempty_within(s, u);
  std::string key;
  for (Index i : s.members()) {
    if (!key.empty()) key += ',';
    key += u.name(i);
  }
  return key;
}

/// Inverse of canonical_subset_key; rejects unknown, repeated or out-of-order labels.
inline Subset parse_subset_key(std::string_view key, const Universe& u) {
  if (key.empty()) throw InputError("empty subset key");
  Subset s;
  long previous = -1;
  std::size_t start = 0;
  while (start <= key.size()) {
    auto comma = key.find(',', start);
    auto end = comma == std::string_view::npos ? key.size() : comma;
    auto label = key.substr(start, end - start);
    if (label.empty()) throw InputError("subset key '" + std::string(key) + "' has an empty label");
    auto idx = static_cast<long>(u.index_of(label));
    if (idx <= previous) {
      throw InputError("subset key '" + std::string(key) + "' is not in canonical universe order");
    }
    previous = idx;
    s = s.with(static_cast<Index>(idx));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return s;
}

/// Nonzero masks of an n-element universe ordered by cardinality, then by value.
inline std::vector<std::uint32_t> masks_by_cardinality(std::size_t n) {
  const std::uint32_t count = (std::uint32_t{1} << n) - 1;
  std::vector<std::uint32_t> masks(count);
  for (std::uint32_t m = 1; m <= count; ++m) masks[m - 1] = m;
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  return masks;
}

// ---------------------------------------------------------------------------
// Tolerance

/// Tolerance-mediated real comparison.
struct Tolerance {
  enum class Mode { Absolute, Relative };

  double eps = 1e-9;
  Mode mode = Mode::Relative;

  static Tolerance absolute(double eps) { return validated({eps, Mode::Absolute}); }
  static Tolerance relative(double eps) { return validated({eps, Mode::Relative}); }

  static Tolerance validated(Tolerance t) {
    if (!(t.eps >= 0.0) || !std::isfinite(t.eps)) throw InputError("tolerance must be a finite nonnegative number");
    return t;
  }

  double slack(double a, double b) const {
    if (mode == Mode::Absolute) return eps;
    return eps * std::max({1.0, std::fabs(a), std::fabs(b)});
  }
  bool eq(double a, double b) const { return std::fabs(a - b) <= slack(a, b); }
  bool le(double a, double b) const { return a <= b + slack(a, b); }
  bool ge(double a, double b) const { return le(b, a); }
  /// Strict a < b, tested with margin: a <= b - slack.
  bool lt(double a, double b) const { return a <= b - slack(a, b); }
  /// Strict positivity: v > slack.
  bool positive(double v) const { return v > slack(v, 0.0); }
};

inline const char* to_string(Tolerance::Mode m) { return m == Tolerance::Mode::Absolute ? "absolute" : "relative"; }

// ---------------------------------------------------------------------------
// SetFunction

/// A real-valued table on every nonempty subset of a finite universe.
class SetFunction {
 public:
  SetFunction() = default;

  /// `values[mask - 1]` holds the value of the subset with bitmask `mask`.
  SetFunction(Universe universe, std::vector<double> values)
      : universe_(std::move(universe)), values_(std::move(values)) {
    if (universe_.size() == 0) throw InputError("set function needs a nonempty universe");
    if (values_.size() != universe_.subset_count()) {
      throw InputError("set function needs " + std::to_string(universe_.subset_count()) + " values, got " +
                       std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw InputError("non-finite value at subset '" +
                         canonical_subset_key(Subset(static_cast<std::uint32_t>(i + 1)), universe_) + "'");
      }
    }
  }

  /// Tabulates `fn(Subset)` over every nonempty subset.
  template <typename Fn>
  static SetFunction tabulate(Universe universe, Fn&& fn) {
    std::vector<double> values(universe.subset_count());
    for (std::uint32_t m = 1; m <= values.size(); ++m) values[m - 1] = fn(Subset(m));
    return SetFunction(std::move(universe), std::move(values));
  }

  const Universe& universe() const { return universe_; }
  std::size_t n() const { return universe_.size(); }

  double operator()(Subset s) const {
    require_nonempty_within(s, universe_);
    return values_[s.bits() - 1];
  }
  /// Lookup without validation; `mask` must be a nonzero mask within the universe.
  double at_mask(std::uint32_t mask) const { return values_[mask - 1]; }

  std::span<const double> values() const { return values_; }

  friend bool operator==(const SetFunction&, const SetFunction&) = default;

 private:
  Universe universe_;
  std::vector<double> values_;
};

inline double tau_eval(const SetFunction& tau, Subset s) { return tau(s); }

// ---------------------------------------------------------------------------
// FiniteMetric

/// A square distance table on a finite point set. Shape and finiteness are
/// enforced here; the metric axioms are verified by check_metric.
class FiniteMetric {
 public:
  FiniteMetric() = default;

  FiniteMetric(Universe universe, std::vector<std::vector<double>> rows) : universe_(std::move(universe)) {
    const auto n = universe_.size();
    if (rows.size() != n) {
      throw InputError("distance matrix has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(n));
    }
    dist_.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) {
        throw InputError("distance matrix row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                         " entries, expected " + std::to_string(n) + " (matrix must be square)");
      }
      for (double v : rows[i]) {
        if (!std::isfinite(v)) throw InputError("distance matrix row " + std::to_string(i) + " has a non-finite entry");
        dist_.push_back(v);
      }
    }
  }

  template <typename Fn>
  static FiniteMetric tabulate(Universe universe, Fn&& fn) {
    const auto n = universe.size();
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) rows[i][j] = fn(i, j);
    return FiniteMetric(std::move(universe), std::move(rows));
  }

  const Universe& universe() const { return universe_; }
  std::size_t n() const { return universe_.size(); }
  double operator()(Index i, Index j) const { return dist_[i * n() + j]; }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(n(), std::vector<double>(n()));
    for (Index i = 0; i < n(); ++i)
      for (Index j = 0; j < n(); ++j) out[i][j] = (*this)(i, j);
    return out;
  }

  friend bool operator==(const FiniteMetric&, const FiniteMetric&) = default;

 private:
  Universe universe_;
  std::vector<double> dist_;
};

// ---------------------------------------------------------------------------
// GMetricTable

/// A ternary table keyed by multisets {i,j,k}. Every permutation of the
/// arguments reads the same entry.
class GMetricTable {
 public:
  GMetricTable() = default;

  /// `fn(i, j, k)` is called once per multiset with i <= j <= k.
  template <typename Fn>
  static GMetricTable tabulate(Universe universe, Fn&& fn) {
    GMetricTable g;
    g.universe_ = std::move(universe);
    const auto n = g.universe_.size();
    g.cube_.assign(n * n * n, 0.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j)
        for (Index k = j; k < n; ++k) {
          const double v = fn(i, j, k);
          if (!std::isfinite(v)) throw InputError("non-finite G value");
          g.set_all_permutations(i, j, k, v);
        }
    return g;
  }

  const Universe& universe() const { return universe_; }
  std::size_t n() const { return universe_.size(); }
  double operator()(Index i, Index j, Index k) const { return cube_[(i * n() + j) * n() + k]; }

  /// Number of multisets of size 3 drawn from n elements.
  static std::size_t multiset_count(std::size_t n) { return n * (n + 1) * (n + 2) / 6; }

  friend bool operator==(const GMetricTable&, const GMetricTable&) = default;

 private:
  void set_all_permutations(Index i, Index j, Index k, double v) {
    const auto n = universe_.size();
    const Index p[3] = {i, j, k};
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& q : perms) cube_[(p[q[0]] * n + p[q[1]]) * n + p[q[2]]] = v;
  }

  Universe universe_;
  std::vector<double> cube_;
};

/// Sorted multiset key "a,a,b" used by the file format.
inline std::string canonical_multiset_key(Index i, Index j, Index k, const Universe& u) {
  Index t[3] = {i, j, k};
  std::sort(std::begin(t), std::end(t));
  return u.name(t[0]) + "," + u.name(t[1]) + "," + u.name(t[2]);
}

}  // namespace balk
