#pragma once

// Constructions between metrics, extended metrics and G-metrics.

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "balk/axioms.hpp"
#include "balk/core.hpp"

namespace balk {

/// A construction precondition failed; `report` carries the witness.
class ContractError : public InputError {
 public:
  ContractError(const std::string& what, CheckReport report) : InputError(what), report_(std::move(report)) {}
  const CheckReport& report() const { return report_; }

 private:
  CheckReport report_;
};

// ---------------------------------------------------------------------------
// PartialSetFunction

/// A set function known only on subsets of cardinality <= k_cap.
class PartialSetFunction {
 public:
  PartialSetFunction() = default;

  PartialSetFunction(Universe universe, int k_cap, std::map<std::uint32_t, double> values)
      : universe_(std::move(universe)), k_cap_(k_cap), values_(std::move(values)) {
    if (k_cap_ < 1) throw InputError("k_cap must be >= 1, got " + std::to_string(k_cap_));
    std::size_t expected = 0;
    for (std::uint32_t m = 1; m <= universe_.subset_count(); ++m) {
      if (std::popcount(m) > k_cap_) continue;
      ++expected;
      auto it = values_.find(m);
      if (it == values_.end()) {
        throw InputError("partial set function is missing subset '" + canonical_subset_key(Subset(m), universe_) + "'");
      }
      if (!std::isfinite(it->second)) {
        throw InputError("non-finite value at subset '" + canonical_subset_key(Subset(m), universe_) + "'");
      }
    }
    if (values_.size() != expected) {
      throw InputError("partial set function stores values outside cardinality <= " + std::to_string(k_cap_));
    }
  }

  /// Restriction of a total set function to cardinality <= k_cap.
  static PartialSetFunction restrict(const SetFunction& tau, int k_cap) {
    std::map<std::uint32_t, double> values;
    for (std::uint32_t m = 1; m <= tau.universe().subset_count(); ++m)
      if (std::popcount(m) <= k_cap) values.emplace(m, tau.at_mask(m));
    return PartialSetFunction(tau.universe(), k_cap, std::move(values));
  }

  const Universe& universe() const { return universe_; }
  std::size_t n() const { return universe_.size(); }
  int k_cap() const { return k_cap_; }
  const std::map<std::uint32_t, double>& values() const { return values_; }

  bool defined_on(Subset s) const { return !s.empty() && universe_.contains(s) && static_cast<int>(s.size()) <= k_cap_; }

  double operator()(Subset s) const {
    if (!defined_on(s)) throw InputError("partial set function is not defined on the requested subset");
    return values_.at(s.bits());
  }

  friend bool operator==(const PartialSetFunction&, const PartialSetFunction&) = default;

 private:
  Universe universe_;
  int k_cap_ = 1;
  std::map<std::uint32_t, double> values_;
};

// ---------------------------------------------------------------------------
// Metric -> extended metric and back

/// tau(A) = largest pairwise distance within A.
inline SetFunction diameter_balk(const FiniteMetric& d, const Tolerance& tol = {}) {
  auto report = check_metric(d, tol);
  if (!report.passed()) throw ContractError("diameter construction needs a valid metric", std::move(report));
  const std::uint32_t count = d.universe().subset_count();
  std::vector<double> diam(count, 0.0);
  for (std::uint32_t m = 1; m <= count; ++m) {
    const auto low = static_cast<Index>(std::countr_zero(m));
    const std::uint32_t rest = m & (m - 1);
    if (rest == 0) continue;
    double best = diam[rest - 1];
    for (std::uint32_t b = rest; b != 0; b &= b - 1) best = std::max(best, d(low, static_cast<Index>(std::countr_zero(b))));
    diam[m - 1] = best;
  }
  return SetFunction(d.universe(), std::move(diam));
}

/// The binary restriction tau({x,y}), zero on the diagonal. A metric whenever tau
/// satisfies the extended-metric axioms.
inline FiniteMetric tau_squared(const SetFunction& tau) {
  return FiniteMetric::tabulate(tau.universe(), [&](Index i, Index j) {
    return i == j ? 0.0 : tau.at_mask(Subset::singleton(i).with(j).bits());
  });
}

/// tau evaluated on the image of a point tuple.
inline double project_tau_k(const SetFunction& tau, std::span<const Index> points) {
  return tau.at_mask(image_set(points, tau.n()).bits());
}

inline double project_tau_k(const SetFunction& tau, std::initializer_list<Index> points) {
  return project_tau_k(tau, std::span<const Index>(points.begin(), points.size()));
}

/// Largest tau(B) over nonempty B within A with |B| <= k. Enumerates the
/// submasks of A directly.
inline double generalized_diameter(const SetFunction& tau, int k, Subset a) {
  if (k < 1) throw InputError("generalized diameter needs k >= 1, got " + std::to_string(k));
  require_nonempty_within(a, tau.universe());
  double best = -std::numeric_limits<double>::infinity();
  const std::uint32_t mask = a.bits();
  for (std::uint32_t sub = mask; sub != 0; sub = (sub - 1) & mask) {
    if (std::popcount(sub) <= k) best = std::max(best, tau.at_mask(sub));
  }
  return best;
}

/// generalized_diameter for every subset at once, by a bottom-up lattice sweep.
inline SetFunction generalized_diameter_table(const SetFunction& tau, int k) {
  if (k < 1) throw InputError("generalized diameter needs k >= 1, got " + std::to_string(k));
  const std::uint32_t count = tau.universe().subset_count();
  std::vector<double> gd(count, -std::numeric_limits<double>::infinity());
  for (std::uint32_t m = 1; m <= count; ++m) {
    double best = std::popcount(m) <= k ? tau.at_mask(m) : -std::numeric_limits<double>::infinity();
    for (std::uint32_t bit = m; bit != 0; bit &= bit - 1) {
      const std::uint32_t sub = m & ~(bit & (~bit + 1));
      if (sub != 0) best = std::max(best, gd[sub - 1]);
    }
    gd[m - 1] = best;
  }
  return SetFunction(tau.universe(), std::move(gd));
}

// ---------------------------------------------------------------------------
// k-increasing but not (k+1)-increasing family

/// Parameters t_2, ..., t_{k+2} (index 0 holds t_2).
inline std::vector<double> staircase_default_parameters(int k) {
  std::vector<double> t;
  for (int i = 2; i <= k + 1; ++i) t.push_back(1.0 + (i - 1.0) / (k + 2.0));
  t.push_back(1.0 + (k - 0.5) / (k + 2.0));
  return t;
}

/// tau(A) = 0 for singletons, t_|A| for 2 <= |A| <= k+1 and t_{k+2} beyond.
/// Requires n >= k + 2, k >= 2, every t_i in (1, 2), t_2 < ... < t_{k+1} and
/// t_k < t_{k+2} < t_{k+1}.
inline SetFunction staircase_counterexample(int n, int k, std::optional<std::vector<double>> t = std::nullopt) {
  if (k < 2) throw InputError("staircase example needs k >= 2, got k = " + std::to_string(k));
  if (n < k + 2) {
    throw InputError("staircase example needs n >= k + 2, got n = " + std::to_string(n) + ", k = " + std::to_string(k));
  }
  if (n > static_cast<int>(kMaxUniverse)) throw InputError("staircase example needs n <= 24");
  auto params = t ? *t : staircase_default_parameters(k);
  if (params.size() != static_cast<std::size_t>(k + 1)) {
    throw InputError("staircase example needs " + std::to_string(k + 1) + " parameters t_2..t_" +
                     std::to_string(k + 2) + ", got " + std::to_string(params.size()));
  }
  auto t_at = [&](int i) { return params[static_cast<std::size_t>(i - 2)]; };
  for (int i = 2; i <= k + 2; ++i) {
    if (!(t_at(i) > 1.0 && t_at(i) < 2.0)) {
      throw InputError("parameter t_" + std::to_string(i) + " = " + std::to_string(t_at(i)) + " is outside (1, 2)");
    }
  }
  for (int i = 2; i <= k; ++i) {
    if (!(t_at(i) < t_at(i + 1))) {
      throw InputError("parameters must satisfy t_" + std::to_string(i) + " < t_" + std::to_string(i + 1));
    }
  }
  if (!(t_at(k) < t_at(k + 2) && t_at(k + 2) < t_at(k + 1))) {
    throw InputError("parameters must satisfy t_" + std::to_string(k) + " < t_" + std::to_string(k + 2) + " < t_" +
                     std::to_string(k + 1));
  }
  return SetFunction::tabulate(Universe::letters(static_cast<std::size_t>(n)), [&](Subset s) {
    const int size = static_cast<int>(s.size());
    if (size == 1) return 0.0;
    return t_at(std::min(size, k + 2));
  });
}

// ---------------------------------------------------------------------------
// G-metric <-> extended metric

/// G(x,y,z) = max of the three pairwise distances.
inline GMetricTable max_pairwise_g(const FiniteMetric& d) {
  return GMetricTable::tabulate(d.universe(), [&](Index i, Index j, Index k) {
    return std::max({d(i, j), d(j, k), d(i, k)});
  });
}

/// The unique set function on subsets of size <= 3 with tau(Im(x,y,z)) = G(x,y,z).
/// Well defined only when G(x,y,y) = G(y,x,x).
inline PartialSetFunction g_to_partial(const GMetricTable& g, const Tolerance& tol = {}) {
  const auto n = g.n();
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y)
      if (!tol.eq(g(x, y, y), g(x, x, y))) {
        throw InputError("G is not symmetric at (" + g.universe().name(x) + ", " + g.universe().name(y) +
                         "): G(x,y,y) = " + std::to_string(g(x, y, y)) + " but G(y,x,x) = " + std::to_string(g(x, x, y)));
      }
  std::map<std::uint32_t, double> values;
  for (std::uint32_t m = 1; m <= g.universe().subset_count(); ++m) {
    const auto members = Subset(m).members();
    switch (members.size()) {
      case 1: values.emplace(m, g(members[0], members[0], members[0])); break;
      case 2: values.emplace(m, g(members[0], members[1], members[1])); break;
      case 3: values.emplace(m, g(members[0], members[1], members[2])); break;
      default: break;
    }
  }
  return PartialSetFunction(g.universe(), 3, std::move(values));
}

/// Hypotheses of the extension step on cardinality <= k_cap: increasing,
/// zero exactly on singletons, and the triangle whenever all three unions
/// stay within the cap.
inline CheckReport check_extension_preconditions(const PartialSetFunction& pt, const Tolerance& tol = {}) {
  auto report = detail::make_report("extension-preconditions", tol);
  report.k = pt.k_cap();
  std::vector<std::uint32_t> small;
  for (const auto& [m, v] : pt.values()) small.push_back(m);
  std::sort(small.begin(), small.end(),
            [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) != std::popcount(b) ? std::popcount(a) < std::popcount(b) : a < b; });
  auto val = [&](std::uint32_t m) { return pt.values().at(m); };

  for (std::uint32_t m : small) {
    ++report.examined;
    const double v = val(m);
    const bool singleton = std::popcount(m) == 1;
    if (singleton ? !tol.eq(v, 0.0) : !tol.positive(v)) {
      Witness w;
      w.roles = {{"A", Subset(m)}};
      w.lhs = v;
      w.relation = singleton ? "tau(A) = 0 for |A| = 1" : "tau(A) > 0 for |A| >= 2";
      w.tolerance_boundary = !singleton && v > 0.0;
      return detail::fail(std::move(report), "zero-iff-singleton", std::move(w));
    }
  }
  for (std::uint32_t a : small) {
    for (std::uint32_t b = (a - 1) & a; b != 0; b = (b - 1) & a) {
      ++report.examined;
      if (!tol.le(val(b), val(a))) {
        Witness w;
        w.roles = {{"B", Subset(b)}, {"A", Subset(a)}};
        w.lhs = val(b);
        w.rhs = val(a);
        w.relation = "tau(B) <= tau(A) for B within A";
        return detail::fail(std::move(report), "monotonicity", std::move(w));
      }
    }
  }
  const int cap = pt.k_cap();
  for (std::uint32_t a : small) {
    std::vector<std::uint32_t> near;
    for (std::uint32_t b : small)
      if (std::popcount(a | b) <= cap) near.push_back(b);
    for (std::uint32_t b : near) {
      const double lhs = val(a | b);
      for (std::uint32_t c : near) {
        if (std::popcount(b | c) > cap) continue;
        ++report.examined;
        const double rhs = val(a | c) + val(b | c);
        if (!tol.le(lhs, rhs)) {
          Witness w;
          w.roles = {{"A", Subset(a)}, {"B", Subset(b)}, {"C", Subset(c)}};
          w.lhs = lhs;
          w.rhs = rhs;
          w.relation = "tau(A|B) <= tau(A|C) + tau(C|B) with all unions within the cap";
          return detail::fail(std::move(report), "restricted-triangle", std::move(w));
        }
      }
    }
  }
  return report;
}

/// tau(A) = max of the partial values over subsets of A. The result restricted
/// to cardinality <= k_cap reproduces the input.
inline SetFunction extend_partial(const PartialSetFunction& pt, const Tolerance& tol = {}) {
  if (pt.k_cap() < 2) {
    throw InputError("extension needs k_cap >= 2: with k_cap = 1 the maximum over singletons is identically 0");
  }
  auto report = check_extension_preconditions(pt, tol);
  if (!report.passed()) {
    throw ContractError("partial set function violates the extension preconditions (" + report.condition + ")",
                        std::move(report));
  }
  const std::uint32_t count = pt.universe().subset_count();
  std::vector<double> ext(count, -std::numeric_limits<double>::infinity());
  for (std::uint32_t m = 1; m <= count; ++m) {
    double best = std::popcount(m) <= pt.k_cap() ? pt.values().at(m) : -std::numeric_limits<double>::infinity();
    for (std::uint32_t bit = m; bit != 0; bit &= bit - 1) {
      const std::uint32_t sub = m & ~(bit & (~bit + 1));
      if (sub != 0) best = std::max(best, ext[sub - 1]);
    }
    ext[m - 1] = best;
  }
  return SetFunction(pt.universe(), std::move(ext));
}

/// The smallest increasing extended metric whose ternary projection is G.
inline SetFunction g_to_balk(const GMetricTable& g, const Tolerance& tol = {}) {
  auto report = check_symmetric_g(g, tol);
  if (!report.passed()) throw ContractError("input is not a symmetric G-metric (" + report.condition + ")", std::move(report));
  auto partial = g_to_partial(g, tol);
  try {
    return extend_partial(partial, tol);
  } catch (const ContractError& e) {
    throw ContractError(std::string("checker/tolerance inconsistency: a symmetric G-metric produced ") + e.what(),
                        e.report());
  }
}

struct GConversion {
  GMetricTable table;
  /// check_symmetric_g on the emitted table.
  CheckReport diagnostics;
  std::vector<std::string> warnings;
};

/// G(x,y,z) = tau(Im(x,y,z)). Non-increasing input is converted anyway, with a
/// warning and the checker report attached.
inline GConversion balk_to_g(const SetFunction& tau, const Tolerance& tol = {}) {
  GConversion out;
  auto balk = check_balk(tau, tol);
  if (!balk.passed()) out.warnings.push_back("input violates the extended-metric axioms (" + balk.condition + ")");
  if (!check_increasing(tau, tol).passed()) {
    out.warnings.push_back("input is not increasing; the G-metric guarantee does not apply");
  }
  out.table = GMetricTable::tabulate(tau.universe(), [&](Index i, Index j, Index k) { return project_tau_k(tau, {i, j, k}); });
  out.diagnostics = check_symmetric_g(out.table, tol);
  return out;
}

// ---------------------------------------------------------------------------
// Random metrics

/// Euclidean distances between n points drawn uniformly from the unit square.
inline FiniteMetric random_metric(int n, std::uint64_t seed) {
  if (n < 1 || n > static_cast<int>(kMaxUniverse)) {
    throw InputError("random metric needs 1 <= n <= 24, got " + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  for (auto& [x, y] : pts) {
    x = unit(rng);
    y = unit(rng);
  }
  return FiniteMetric::tabulate(Universe::letters(static_cast<std::size_t>(n)), [&](Index i, Index j) {
    return i == j ? 0.0 : std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
  });
}

}  // namespace balk
