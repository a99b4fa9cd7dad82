#pragma once

// Axiom checkers. Every checker is exhaustive up to a size cap and reports a
// concrete witness on failure.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "balk/core.hpp"

namespace balk {

enum class Verdict { Pass, Fail, SampledPass };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::SampledPass: return "sampled-pass";
  }
  return "?";
}

/// The violated relation: named roles (subsets, or singletons for points)
/// plus both sides of the inequality.
struct Witness {
  std::vector<std::pair<std::string, Subset>> roles;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string relation;
  /// Set when a strict inequality failed only because the value lies in (0, eps].
  bool tolerance_boundary = false;

  Subset role(std::string_view name) const {
    for (const auto& [r, s] : roles)
      if (r == name) return s;
    throw InputError("witness has no role '" + std::string(name) + "'");
  }

  friend bool operator==(const Witness&, const Witness&) = default;
};

struct CheckReport {
  std::string check;
  Verdict verdict = Verdict::Pass;
  std::optional<int> k;
  /// Name of the failed condition, when verdict is Fail.
  std::string condition;
  std::optional<Witness> witness;
  std::uint64_t examined = 0;
  Tolerance tolerance;
  std::vector<std::string> notes;

  bool passed() const { return verdict != Verdict::Fail; }

  friend bool operator==(const CheckReport& a, const CheckReport& b) {
    return a.check == b.check && a.verdict == b.verdict && a.k == b.k && a.condition == b.condition &&
           a.witness == b.witness && a.examined == b.examined && a.tolerance.eps == b.tolerance.eps &&
           a.tolerance.mode == b.tolerance.mode && a.notes == b.notes;
  }
};

struct CheckOptions {
  /// Triple checks enumerate all (2^n - 1)^3 triples up to this universe size.
  std::size_t exhaustive_limit = 10;
  /// Number of sampled triples above the exhaustive limit.
  std::uint64_t budget = 10'000'000;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

inline CheckReport make_report(std::string name, const Tolerance& tol) {
  CheckReport r;
  r.check = std::move(name);
  r.tolerance = tol;
  return r;
}

inline CheckReport fail(CheckReport r, std::string condition, Witness w) {
  r.verdict = Verdict::Fail;
  r.condition = std::move(condition);
  r.witness = std::move(w);
  return r;
}

inline Witness point_witness(std::initializer_list<std::pair<const char*, Index>> pts, double lhs, double rhs,
                             std::string relation) {
  Witness w;
  for (const auto& [name, i] : pts) w.roles.emplace_back(name, Subset::singleton(i));
  w.lhs = lhs;
  w.rhs = rhs;
  w.relation = std::move(relation);
  return w;
}

/// tau(A) = 0 iff |A| = 1, scanned by cardinality so the first witness is smallest.
inline std::optional<Witness> zero_iff_singleton_violation(const SetFunction& tau, const Tolerance& tol) {
  for (std::uint32_t m : masks_by_cardinality(tau.n())) {
    const double v = tau.at_mask(m);
    Witness w;
    w.roles.emplace_back("A", Subset(m));
    w.lhs = v;
    w.rhs = 0.0;
    if (std::popcount(m) == 1) {
      if (!tol.eq(v, 0.0)) {
        w.relation = "tau(A) = 0 for |A| = 1";
        return w;
      }
    } else if (!tol.positive(v)) {
      w.relation = "tau(A) > 0 for |A| >= 2";
      w.tolerance_boundary = v > 0.0;
      return w;
    }
  }
  return std::nullopt;
}

/// Shared engine for the sum-form and max-form set-function triangles
/// tau(A|B) <= combine(tau(A|C), tau(C|B)).
template <typename Combine>
CheckReport check_set_triangle(const SetFunction& tau, const Tolerance& tol, const CheckOptions& opts,
                               CheckReport report, Combine combine, const std::string& relation) {
  const std::uint32_t count = tau.universe().subset_count();
  const double* v = tau.values().data() - 1;  // v[mask]
  auto violates = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    return !tol.le(v[a | b], combine(v[a | c], v[c | b]));
  };
  auto shrink = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    std::uint32_t* roles[3] = {&a, &b, &c};
    for (bool improved = true; improved;) {
      improved = false;
      for (auto* r : roles) {
        if (std::popcount(*r) < 2) continue;
        for (std::uint32_t bit = *r; bit != 0 && !improved; bit &= bit - 1) {
          const std::uint32_t saved = *r;
          *r = saved & ~(bit & (~bit + 1));
          if (violates(a, b, c)) {
            improved = true;
          } else {
            *r = saved;
          }
        }
        if (improved) break;
      }
    }
    Witness w;
    w.roles = {{"A", Subset(a)}, {"B", Subset(b)}, {"C", Subset(c)}};
    w.lhs = v[a | b];
    w.rhs = combine(v[a | c], v[c | b]);
    w.relation = relation;
    return w;
  };

  if (tau.n() <= opts.exhaustive_limit) {
    std::uint64_t examined = 0;
    for (std::uint32_t a = 1; a <= count; ++a) {
      for (std::uint32_t c = 1; c <= count; ++c) {
        const double ac = v[a | c];
        for (std::uint32_t b = 1; b <= count; ++b) {
          if (!tol.le(v[a | b], combine(ac, v[c | b]))) {
            report.examined = examined + b;
            return fail(std::move(report), "triangle", shrink(a, b, c));
          }
        }
        examined += count;
      }
    }
    report.examined = examined;
    return report;
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::uint32_t> pick(1, count);
  for (std::uint64_t i = 0; i < opts.budget; ++i) {
    const auto a = pick(rng), b = pick(rng), c = pick(rng);
    if (violates(a, b, c)) {
      report.examined = i + 1;
      return fail(std::move(report), "triangle", shrink(a, b, c));
    }
  }
  report.examined = opts.budget;
  report.verdict = Verdict::SampledPass;
  report.notes.push_back("sampled " + std::to_string(opts.budget) + " triples with seed " + std::to_string(opts.seed));
  return report;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Number of nonempty B within an s-element set with |B| <= cap.
inline std::uint64_t small_subset_count(std::size_t s, std::size_t cap) {
  std::uint64_t total = 0;
  for (std::size_t j = 1; j <= std::min(s, cap); ++j) total += binomial(s, j);
  return total;
}

/// tau(B) <= tau(A) for all B within A with |B| <= cap. The lattice is swept
/// bottom-up keeping, per mask, the largest value over small subsets and
/// which subset attains it.
inline CheckReport check_monotone(const SetFunction& tau, std::size_t cap, const Tolerance& tol, CheckReport report,
                                  const std::string& relation) {
  const auto n = tau.n();
  const std::uint32_t count = tau.universe().subset_count();
  std::vector<double> best(count + 1, -std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> arg(count + 1, 0);
  auto best_proper = [&](std::uint32_t m) {
    std::pair<double, std::uint32_t> out{-std::numeric_limits<double>::infinity(), 0};
    for (std::uint32_t bit = m; bit != 0; bit &= bit - 1) {
      const std::uint32_t sub = m & ~(bit & (~bit + 1));
      if (sub != 0 && best[sub] > out.first) out = {best[sub], arg[sub]};
    }
    return out;
  };
  for (std::uint32_t m = 1; m <= count; ++m) {
    std::tie(best[m], arg[m]) = best_proper(m);
    if (static_cast<std::size_t>(std::popcount(m)) <= cap && tau.at_mask(m) >= best[m]) {
      best[m] = tau.at_mask(m);
      arg[m] = m;
    }
  }
  std::uint64_t examined = 0;
  for (std::uint32_t m : masks_by_cardinality(n)) {
    const auto s = static_cast<std::size_t>(std::popcount(m));
    examined += small_subset_count(s, cap);
    if (s < 2) continue;
    const auto [value, sub] = best_proper(m);
    if (!tol.le(value, tau.at_mask(m))) {
      Witness w;
      w.roles = {{"B", Subset(sub)}, {"A", Subset(m)}};
      w.lhs = value;
      w.rhs = tau.at_mask(m);
      w.relation = relation;
      report.examined = examined;
      return fail(std::move(report), "monotonicity", std::move(w));
    }
  }
  report.examined = examined;
  return report;
}

}  // namespace detail

/// Extended-metric axioms: zero exactly on singletons and
/// tau(A|B) <= tau(A|C) + tau(C|B) for all nonempty A, B, C.
inline CheckReport check_balk(const SetFunction& tau, const Tolerance& tol = {}, const CheckOptions& opts = {}) {
  auto report = detail::make_report("balk", tol);
  if (auto w = detail::zero_iff_singleton_violation(tau, tol)) {
    return detail::fail(std::move(report), "zero-iff-singleton", std::move(*w));
  }
  return detail::check_set_triangle(
      tau, tol, opts, std::move(report), [](double x, double y) { return x + y; },
      "tau(A|B) <= tau(A|C) + tau(C|B)");
}

/// Strong (max-form) triangle tau(A|B) <= max(tau(A|C), tau(B|C)).
inline CheckReport check_ultra_balk(const SetFunction& tau, const Tolerance& tol = {},
                                    const CheckOptions& opts = {}) {
  return detail::check_set_triangle(
      tau, tol, opts, detail::make_report("ultra-balk", tol), [](double x, double y) { return std::max(x, y); },
      "tau(A|B) <= max(tau(A|C), tau(C|B))");
}

inline CheckReport check_k_increasing(const SetFunction& tau, int k, const Tolerance& tol = {}) {
  if (k < 2) throw InputError("k-increasing needs k >= 2, got " + std::to_string(k));
  auto report = detail::make_report("k-increasing", tol);
  report.k = k;
  return detail::check_monotone(tau, static_cast<std::size_t>(k), tol, std::move(report),
                                "tau(B) <= tau(A) for B within A, |B| <= k");
}

inline CheckReport check_increasing(const SetFunction& tau, const Tolerance& tol = {}) {
  return detail::check_monotone(tau, tau.n(), tol, detail::make_report("increasing", tol),
                                "tau(B) <= tau(A) for B within A");
}

/// Every A with |A| > k has a proper nonempty B with tau(B) >= tau(A).
inline CheckReport check_k_weakly_decreasing(const SetFunction& tau, int k, const Tolerance& tol = {}) {
  if (k < 2) throw InputError("k-weakly-decreasing needs k >= 2, got " + std::to_string(k));
  auto report = detail::make_report("k-weakly-decreasing", tol);
  report.k = k;
  const std::uint32_t count = tau.universe().subset_count();
  std::vector<double> maxsub(count + 1), maxproper(count + 1, -std::numeric_limits<double>::infinity());
  for (std::uint32_t m = 1; m <= count; ++m) {
    for (std::uint32_t bit = m; bit != 0; bit &= bit - 1) {
      const std::uint32_t sub = m & ~(bit & (~bit + 1));
      if (sub != 0) maxproper[m] = std::max(maxproper[m], maxsub[sub]);
    }
    maxsub[m] = std::max(maxproper[m], tau.at_mask(m));
  }
  std::uint64_t examined = 0;
  for (std::uint32_t m : masks_by_cardinality(tau.n())) {
    if (std::popcount(m) <= k) continue;
    ++examined;
    if (!tol.ge(maxproper[m], tau.at_mask(m))) {
      Witness w;
      w.roles = {{"A", Subset(m)}};
      w.lhs = tau.at_mask(m);
      w.rhs = maxproper[m];
      w.relation = "max tau(B) over proper B >= tau(A) for |A| > k";
      report.examined = examined;
      return detail::fail(std::move(report), "weak-decrease", std::move(w));
    }
  }
  report.examined = examined;
  return report;
}

inline CheckReport check_metric(const FiniteMetric& d, const Tolerance& tol = {}) {
  auto report = detail::make_report("metric", tol);
  const auto n = d.n();
  using detail::point_witness;
  for (Index i = 0; i < n; ++i) {
    ++report.examined;
    if (!tol.eq(d(i, i), 0.0)) {
      return detail::fail(std::move(report), "identity", point_witness({{"x", i}}, d(i, i), 0.0, "d(x,x) = 0"));
    }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      ++report.examined;
      if (!tol.eq(d(i, j), d(j, i))) {
        return detail::fail(std::move(report), "symmetry",
                            point_witness({{"x", i}, {"y", j}}, d(i, j), d(j, i), "d(x,y) = d(y,x)"));
      }
    }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      ++report.examined;
      if (!tol.positive(d(i, j))) {
        auto w = point_witness({{"x", i}, {"y", j}}, d(i, j), 0.0, "d(x,y) > 0 for x != y");
        w.tolerance_boundary = d(i, j) > 0.0;
        return detail::fail(std::move(report), "positivity", std::move(w));
      }
    }
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      for (Index z = 0; z < n; ++z) {
        ++report.examined;
        const double lhs = d(x, y), rhs = d(x, z) + d(z, y);
        if (!tol.le(lhs, rhs)) {
          return detail::fail(std::move(report), "triangle",
                              point_witness({{"x", x}, {"y", y}, {"z", z}}, lhs, rhs, "d(x,y) <= d(x,z) + d(z,y)"));
        }
      }
  return report;
}

inline CheckReport check_g_metric(const GMetricTable& g, const Tolerance& tol = {}) {
  auto report = detail::make_report("g-metric", tol);
  report.notes.push_back("permutation invariance holds by the multiset encoding");
  const auto n = g.n();
  using detail::point_witness;
  for (Index x = 0; x < n; ++x) {
    ++report.examined;
    if (!tol.eq(g(x, x, x), 0.0)) {
      return detail::fail(std::move(report), "identity",
                          point_witness({{"x", x}}, g(x, x, x), 0.0, "G(x,x,x) = 0"));
    }
  }
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      if (x == y) continue;
      ++report.examined;
      if (!tol.positive(g(x, x, y))) {
        auto w = point_witness({{"x", x}, {"y", y}}, g(x, x, y), 0.0, "G(x,x,y) > 0 for x != y");
        w.tolerance_boundary = g(x, x, y) > 0.0;
        return detail::fail(std::move(report), "positivity", std::move(w));
      }
    }
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      for (Index z = 0; z < n; ++z) {
        if (z == y) continue;
        ++report.examined;
        if (!tol.le(g(x, x, y), g(x, y, z))) {
          return detail::fail(std::move(report), "pair-domination",
                              point_witness({{"x", x}, {"y", y}, {"z", z}}, g(x, x, y), g(x, y, z),
                                            "G(x,x,y) <= G(x,y,z) for z != y"));
        }
      }
  // Identity, positivity and pair-domination together force G >= 0.
  for (Index x = 0; x < n; ++x)
    for (Index y = x; y < n; ++y)
      for (Index z = y; z < n; ++z) {
        ++report.examined;
        if (!tol.ge(g(x, y, z), 0.0)) {
          return detail::fail(std::move(report), "nonnegativity",
                              point_witness({{"x", x}, {"y", y}, {"z", z}}, g(x, y, z), 0.0, "G(x,y,z) >= 0"));
        }
      }
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      for (Index z = 0; z < n; ++z)
        for (Index a = 0; a < n; ++a) {
          ++report.examined;
          const double lhs = g(x, y, z), rhs = g(x, a, a) + g(a, y, z);
          if (!tol.le(lhs, rhs)) {
            return detail::fail(std::move(report), "rectangle",
                                point_witness({{"x", x}, {"y", y}, {"z", z}, {"a", a}}, lhs, rhs,
                                              "G(x,y,z) <= G(x,a,a) + G(a,y,z)"));
          }
        }
  return report;
}

/// G-metric axioms plus G(x,y,y) = G(y,x,x).
inline CheckReport check_symmetric_g(const GMetricTable& g, const Tolerance& tol = {}) {
  auto report = check_g_metric(g, tol);
  report.check = "symmetric-g";
  if (!report.passed()) return report;
  const auto n = g.n();
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y) {
      ++report.examined;
      if (!tol.eq(g(x, y, y), g(x, x, y))) {
        return detail::fail(std::move(report), "symmetry",
                            detail::point_witness({{"x", x}, {"y", y}}, g(x, y, y), g(x, x, y),
                                                  "G(x,y,y) = G(y,x,x)"));
      }
    }
  return report;
}

}  // namespace balk
