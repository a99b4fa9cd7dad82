#pragma once

// Executable equivalence oracles. Each clause of an equivalence is decided
// independently; disagreement between clauses means a defect in this code,
// never in the mathematics.

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "balk/axioms.hpp"
#include "balk/construct.hpp"
#include "balk/core.hpp"

namespace balk {

struct ClauseVerdict {
  std::string id;
  bool passed = false;
  std::string statement;
  std::optional<Witness> witness;

  friend bool operator==(const ClauseVerdict&, const ClauseVerdict&) = default;
};

struct EquivalenceReport {
  /// Public identifier of the equivalence, e.g. "2.11".
  std::string theorem;
  std::optional<int> k;
  std::vector<ClauseVerdict> clauses;
  bool agree = true;
  /// When clauses disagree: the first failing clause and its witness.
  std::optional<std::string> disagreement;
  std::vector<std::string> notes;

  bool all_pass() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed; });
  }

  friend bool operator==(const EquivalenceReport&, const EquivalenceReport&) = default;
};

namespace detail {

inline void require_extended_metric(const SetFunction& tau, const Tolerance& tol) {
  auto report = check_balk(tau, tol);
  if (!report.passed()) {
    throw ContractError("input violates the extended-metric axioms (" + report.condition + ")", std::move(report));
  }
}

inline ClauseVerdict clause(std::string id, std::string statement, const CheckReport& r) {
  return {std::move(id), r.passed(), std::move(statement), r.witness};
}

inline ClauseVerdict conjunction(std::string id, std::string statement, const CheckReport& a, const CheckReport& b) {
  const auto& failing = a.passed() ? b : a;
  return {std::move(id), a.passed() && b.passed(), std::move(statement), failing.witness};
}

/// Compare tau(A) with `expected(A)` on every subset; the witness is the first mismatch.
template <typename Fn>
ClauseVerdict pointwise(std::string id, std::string statement, const SetFunction& tau, const Tolerance& tol,
                        Fn&& expected) {
  ClauseVerdict out{std::move(id), true, std::move(statement), std::nullopt};
  for (std::uint32_t m : masks_by_cardinality(tau.n())) {
    const double want = expected(Subset(m));
    if (!tol.eq(tau.at_mask(m), want)) {
      Witness w;
      w.roles = {{"A", Subset(m)}};
      w.lhs = tau.at_mask(m);
      w.rhs = want;
      w.relation = out.statement;
      out.passed = false;
      out.witness = std::move(w);
      break;
    }
  }
  return out;
}

inline void settle(EquivalenceReport& r) {
  r.agree = std::all_of(r.clauses.begin(), r.clauses.end(),
                        [&](const auto& c) { return c.passed == r.clauses.front().passed; });
  if (!r.agree) {
    for (const auto& c : r.clauses) {
      if (!c.passed) {
        r.disagreement = "clause (" + c.id + ") fails while another clause passes";
        break;
      }
    }
  }
}

}  // namespace detail

/// tau equals its k-th generalized diameter  <=>  k-increasing and k-weakly
/// decreasing  <=>  increasing and k-weakly decreasing.
inline EquivalenceReport verify_k_determined(const SetFunction& tau, int k, const Tolerance& tol = {}) {
  if (k < 2) throw InputError("k must be >= 2, got " + std::to_string(k));
  detail::require_extended_metric(tau, tol);
  EquivalenceReport r;
  r.theorem = "2.11";
  r.k = k;
  const auto gd = generalized_diameter_table(tau, k);
  r.clauses.push_back(detail::pointwise("i", "tau(A) = diam_k(A)", tau, tol, [&](Subset a) { return gd(a); }));
  const auto inc_k = check_k_increasing(tau, k, tol);
  const auto wd_k = check_k_weakly_decreasing(tau, k, tol);
  const auto inc = check_increasing(tau, tol);
  r.clauses.push_back(detail::conjunction("ii", "k-increasing and k-weakly decreasing", inc_k, wd_k));
  r.clauses.push_back(detail::conjunction("iii", "increasing and k-weakly decreasing", inc, wd_k));
  detail::settle(r);
  return r;
}

/// The five equivalent descriptions of an extended metric generated by a
/// metric. Existence clauses are decided with the canonical candidate tau^2.
inline EquivalenceReport verify_pair_determined(const SetFunction& tau, const Tolerance& tol = {}) {
  detail::require_extended_metric(tau, tol);
  EquivalenceReport r;
  r.theorem = "2.13";
  r.notes.push_back("existence clauses decided with the candidate mu = tau^2");
  const auto mu = tau_squared(tau);
  auto max_pair = [&](Subset a) {
    const auto pts = a.members();
    double best = 0.0;
    for (Index x : pts)
      for (Index y : pts) best = std::max(best, mu(x, y));
    return best;
  };
  auto c1 = detail::pointwise("i", "tau(A) = max mu(x,y) over x, y in A", tau, tol, max_pair);
  const auto metric = check_metric(mu, tol);
  ClauseVerdict c2{"ii", c1.passed && metric.passed(), "mu is a metric generating tau",
                   metric.passed() ? c1.witness : metric.witness};
  ClauseVerdict c3{"iii", false, "tau is the diameter of tau^2", std::nullopt};
  if (metric.passed()) {
    const auto diam = diameter_balk(mu, tol);
    c3 = detail::pointwise("iii", c3.statement, tau, tol, [&](Subset a) { return diam(a); });
  } else {
    c3.witness = metric.witness;
  }
  const auto wd2 = check_k_weakly_decreasing(tau, 2, tol);
  auto c4 = detail::conjunction("iv", "2-increasing and 2-weakly decreasing", check_k_increasing(tau, 2, tol), wd2);
  auto c5 = detail::conjunction("v", "increasing and 2-weakly decreasing", check_increasing(tau, tol), wd2);
  r.clauses = {std::move(c1), std::move(c2), std::move(c3), std::move(c4), std::move(c5)};
  detail::settle(r);
  return r;
}

/// The G-metric analogue: tau is the maximum of a ternary function over
/// triples. Existence clauses are decided with the candidate tau^3.
inline EquivalenceReport verify_triple_determined(const SetFunction& tau, const Tolerance& tol = {}) {
  detail::require_extended_metric(tau, tol);
  EquivalenceReport r;
  r.theorem = "2.15";
  r.notes.push_back("existence clauses decided with the candidate G = tau^3");
  const auto g = balk_to_g(tau, tol).table;
  auto max_g = [&](Subset a) {
    const auto pts = a.members();
    double best = -std::numeric_limits<double>::infinity();
    for (Index x : pts)
      for (Index y : pts)
        for (Index z : pts) best = std::max(best, g(x, y, z));
    return best;
  };
  auto max_tau3 = [&](Subset a) {
    const auto pts = a.members();
    double best = -std::numeric_limits<double>::infinity();
    for (Index x : pts)
      for (Index y : pts)
        for (Index z : pts) best = std::max(best, project_tau_k(tau, {x, y, z}));
    return best;
  };
  auto c1 = detail::pointwise("i", "tau(A) = max G(x,y,z) over x, y, z in A", tau, tol, max_g);
  const auto sym = check_symmetric_g(g, tol);
  ClauseVerdict c2{"ii", c1.passed && sym.passed(), "a symmetric G-metric G generates tau",
                   sym.passed() ? c1.witness : sym.witness};
  auto c3 = detail::pointwise("iii", "tau(A) = max tau^3(x,y,z) over x, y, z in A", tau, tol, max_tau3);
  const auto wd3 = check_k_weakly_decreasing(tau, 3, tol);
  auto c4 = detail::conjunction("iv", "3-increasing and 3-weakly decreasing", check_k_increasing(tau, 3, tol), wd3);
  auto c5 = detail::conjunction("v", "increasing and 3-weakly decreasing", check_increasing(tau, tol), wd3);
  r.clauses = {std::move(c1), std::move(c2), std::move(c3), std::move(c4), std::move(c5)};
  detail::settle(r);
  return r;
}

struct LemmaOptions {
  /// Chain bounds enumerate every ordering of every subset up to this size.
  std::size_t chain_exhaustive_limit = 6;
  /// Perturbation bounds enumerate every aligned pair of subsets up to this size.
  std::size_t alignment_exhaustive_limit = 4;
  std::uint64_t budget = 100'000;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

inline Witness ordered_witness(const char* prefix, const std::vector<Index>& pts, double lhs, double rhs,
                               std::string relation) {
  Witness w;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w.roles.emplace_back(prefix + std::to_string(i + 1), Subset::singleton(pts[i]));
  }
  w.lhs = lhs;
  w.rhs = rhs;
  w.relation = std::move(relation);
  return w;
}

inline double chain_length(const FiniteMetric& d, const std::vector<Index>& order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += d(order[i - 1], order[i]);
  return total;
}

inline double aligned_cost(const FiniteMetric& d, const std::vector<Index>& xs, const std::vector<Index>& ys) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += d(xs[i], ys[i]);
  return total;
}

inline std::vector<Index> random_subset_of_size(std::size_t n, std::size_t s, std::mt19937_64& rng) {
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(s);
  return all;
}

}  // namespace detail

/// Chain bound tau({x_1..x_n}) <= sum d(x_i, x_{i+1}) for every ordering, and the
/// perturbation bound |tau(S) - tau(S')| <= sum d(x_i, x'_i) for aligned
/// equal-size subsets, with d = tau^2.
inline CheckReport verify_chain_bounds(const SetFunction& tau, const Tolerance& tol = {},
                                       const LemmaOptions& opts = {}) {
  detail::require_extended_metric(tau, tol);
  auto report = detail::make_report("lemma3.6", tol);
  const auto d = tau_squared(tau);
  const auto n = tau.n();
  std::mt19937_64 rng(opts.seed);
  const std::string chain_rel = "tau({x1..xn}) <= d(x1,x2) + ... + d(xn-1,xn)";
  const std::string align_rel = "|tau({x1..xn}) - tau({y1..yn})| <= d(x1,y1) + ... + d(xn,yn)";

  auto chain_ok = [&](std::vector<Index>& order) {
    ++report.examined;
    const double lhs = tau.at_mask(image_set(order, n).bits());
    const double rhs = detail::chain_length(d, order);
    if (tol.le(lhs, rhs)) return true;
    report = detail::fail(std::move(report), "chain-bound", detail::ordered_witness("x", order, lhs, rhs, chain_rel));
    return false;
  };
  if (n <= opts.chain_exhaustive_limit) {
    for (std::uint32_t m : masks_by_cardinality(n)) {
      auto order = Subset(m).members();
      do {
        if (!chain_ok(order)) return report;
      } while (std::next_permutation(order.begin(), order.end()));
    }
  } else {
    std::uniform_int_distribution<std::size_t> size_pick(1, n);
    for (std::uint64_t i = 0; i < opts.budget; ++i) {
      auto order = detail::random_subset_of_size(n, size_pick(rng), rng);
      if (!chain_ok(order)) return report;
    }
    report.verdict = Verdict::SampledPass;
  }

  auto align_ok = [&](const std::vector<Index>& xs, const std::vector<Index>& ys) {
    ++report.examined;
    const double lhs = std::fabs(tau.at_mask(image_set(xs, n).bits()) - tau.at_mask(image_set(ys, n).bits()));
    const double rhs = detail::aligned_cost(d, xs, ys);
    if (tol.le(lhs, rhs)) return true;
    auto w = detail::ordered_witness("x", xs, lhs, rhs, align_rel);
    auto wy = detail::ordered_witness("y", ys, lhs, rhs, align_rel);
    w.roles.insert(w.roles.end(), wy.roles.begin(), wy.roles.end());
    report = detail::fail(std::move(report), "perturbation-bound", std::move(w));
    return false;
  };
  if (n <= opts.alignment_exhaustive_limit) {
    const auto masks = masks_by_cardinality(n);
    for (std::uint32_t a : masks)
      for (std::uint32_t b : masks) {
        if (std::popcount(a) != std::popcount(b)) continue;
        const auto xs = Subset(a).members();
        auto ys = Subset(b).members();
        do {
          if (!align_ok(xs, ys)) return report;
        } while (std::next_permutation(ys.begin(), ys.end()));
      }
  } else {
    std::uniform_int_distribution<std::size_t> size_pick(1, n);
    for (std::uint64_t i = 0; i < opts.budget; ++i) {
      const auto s = size_pick(rng);
      const auto xs = detail::random_subset_of_size(n, s, rng);
      const auto ys = detail::random_subset_of_size(n, s, rng);
      if (!align_ok(xs, ys)) return report;
    }
    report.verdict = Verdict::SampledPass;
  }
  if (report.verdict == Verdict::SampledPass) {
    report.notes.push_back("sampled with budget " + std::to_string(opts.budget) + " and seed " + std::to_string(opts.seed));
  }
  return report;
}

/// tau(K) >= d(x, y) / 2 for all x, y in K, with d = tau^2.
inline CheckReport verify_half_diameter_bound(const SetFunction& tau, const Tolerance& tol = {}) {
  detail::require_extended_metric(tau, tol);
  auto report = detail::make_report("lemma3.7", tol);
  const auto d = tau_squared(tau);
  for (std::uint32_t m : masks_by_cardinality(tau.n())) {
    ++report.examined;
    const auto pts = Subset(m).members();
    double widest = 0.0;
    for (Index x : pts)
      for (Index y : pts) widest = std::max(widest, d(x, y));
    if (!tol.ge(tau.at_mask(m), 0.5 * widest)) {
      Witness w;
      w.roles = {{"K", Subset(m)}};
      w.lhs = tau.at_mask(m);
      w.rhs = 0.5 * widest;
      w.relation = "tau(K) >= d(x,y) / 2 for x, y in K";
      return detail::fail(std::move(report), "half-diameter", std::move(w));
    }
  }
  return report;
}

}  // namespace balk
