// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "balk/balk.hpp"
#include "generators.hpp"

using namespace balk;
namespace pt = balk::pretangent;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Collects the first failure message; later ones only bump the count.
struct Tally {
  int failures = 0;
  std::string first;
  void fail(const std::string& why) {
    if (failures++ == 0) first = why;
  }
  Outcome done(std::string summary) const {
    if (failures == 0) return {true, std::move(summary)};
    return {false, std::to_string(failures) + " failure(s); first: " + first};
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

pt::Context context_on(pt::AmbientSpace amb) {
  pt::Context ctx;
  ctx.ambient = std::move(amb);
  return ctx;
}

bool no_proper_subset_dominates(const SetFunction& tau, Subset a) {
  for (std::uint32_t m = 1; m < a.bits(); ++m)
    if ((m & ~a.bits()) == 0 && tau(Subset(m)) >= tau(a)) return false;
  return true;
}

Outcome diameter_soundness() {
  Tally t;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const int n = 2 + static_cast<int>(s % 5);
    const auto r = check_balk(diameter_balk(random_metric(n, 1000 + s)));
    if (r.verdict != Verdict::Pass) t.fail("seed " + std::to_string(1000 + s) + " verdict " + to_string(r.verdict));
  }
  return t.done("200 metrics, n 2..6, exhaustive");
}

Outcome staircase_contract() {
  Tally t;
  int cases = 0;
  for (int k = 2; k <= 4; ++k)
    for (int n = k + 2; n <= 7; ++n) {
      ++cases;
      const auto tau = staircase_counterexample(n, k);
      const auto tag = "(n=" + std::to_string(n) + ", k=" + std::to_string(k) + ") ";
      if (!check_balk(tau).passed()) t.fail(tag + "not a Balk metric");
      if (!check_k_increasing(tau, k).passed()) t.fail(tag + "not k-increasing");

      const auto inc = check_k_increasing(tau, k + 1);
      if (inc.passed()) {
        t.fail(tag + "is (k+1)-increasing");
      } else if (!inc.witness) {
        t.fail(tag + "(k+1)-increasing failure has no witness");
      } else {
        const auto b = inc.witness->role("B"), a = inc.witness->role("A");
        const bool valid = b.is_subset_of(a) && b.size() <= static_cast<std::size_t>(k + 1) && tau(b) > tau(a) &&
                           inc.witness->lhs == tau(b) && inc.witness->rhs == tau(a);
        if (!valid) t.fail(tag + "(k+1)-increasing witness does not violate the condition");
      }

      const auto wd = check_k_weakly_decreasing(tau, k);
      if (wd.passed()) {
        t.fail(tag + "is k-weakly decreasing");
      } else if (!wd.witness) {
        t.fail(tag + "k-weakly-decreasing failure has no witness");
      } else {
        const auto a = wd.witness->role("A");
        if (a.size() <= static_cast<std::size_t>(k) || !no_proper_subset_dominates(tau, a))
          t.fail(tag + "k-weakly-decreasing witness does not violate the condition");
      }
    }
  return t.done(std::to_string(cases) + " (k, n) cases, witnesses validated");
}

double max_abs_diff(const GMetricTable& a, const GMetricTable& b) {
  double worst = 0.0;
  const Index n = a.n();
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      for (Index k = j; k < n; ++k) worst = std::max(worst, std::fabs(a(i, j, k) - b(i, j, k)));
  return worst;
}

Outcome g_round_trip() {
  Tally t;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto g = gen::max_pairwise_of_random(3 + static_cast<int>(s % 3), 5000 + s);
    const auto tau = g_to_balk(g);
    if (!check_balk(tau).passed() || !check_increasing(tau).passed()) t.fail("max-pairwise seed " + std::to_string(s));
    if (!(balk_to_g(tau).table == g)) t.fail("max-pairwise seed " + std::to_string(s) + " not exact");
  }
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = gen::perturbed_symmetric_g(3 + static_cast<int>(s % 3), 6000 + s);
    const auto tau = g_to_balk(g);
    if (!check_balk(tau).passed() || !check_increasing(tau).passed()) t.fail("perturbed seed " + std::to_string(s));
    const double err = max_abs_diff(balk_to_g(tau).table, g);
    worst = std::max(worst, err);
    if (err > 1e-9) t.fail("perturbed seed " + std::to_string(s) + " error " + num(err));
  }
  return t.done("100 exact + 50 perturbed, max error " + num(worst));
}

Outcome equivalences(const std::vector<gen::Named>& suite) {
  Tally t;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& [family, tau] = suite[i];
    const auto tag = family + " #" + std::to_string(i);
    if (!verify_k_determined(tau, 2).agree) t.fail(tag + ": 2.11 k=2 disagrees");
    if (!verify_k_determined(tau, 3).agree) t.fail(tag + ": 2.11 k=3 disagrees");
    if (!verify_pair_determined(tau).agree) t.fail(tag + ": 2.13 disagrees");
    if (!verify_triple_determined(tau).agree) t.fail(tag + ": 2.15 disagrees");
  }
  return t.done(std::to_string(suite.size()) + " objects, agree everywhere");
}

Outcome lemmas(const std::vector<gen::Named>& suite) {
  Tally t;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& [family, tau] = suite[i];
    const auto tag = family + " #" + std::to_string(i);
    const auto chain = verify_chain_bounds(tau);
    if (!chain.passed()) t.fail(tag + ": chain/perturbation bound " + to_string(chain.verdict));
    const auto half = verify_half_diameter_bound(tau);
    if (!half.passed()) t.fail(tag + ": half-diameter bound " + to_string(half.verdict));
  }
  return t.done(std::to_string(suite.size()) + " objects, budget 1e5");
}

Outcome pretangent_exactness() {
  Tally t;
  auto ctx = context_on(pt::AmbientSpace::euclidean(1, {0.0}));
  ctx.normalizing = pt::NormalizingSequence::power(1.0, 1.0);
  ctx.M = 10000;
  const std::vector<double> as{0.0, 1.0, 2.5, 4.0};
  std::vector<pt::PointSequence> pool;
  for (std::size_t i = 0; i < as.size(); ++i) pool.push_back(pt::PointSequence::linear("a" + std::to_string(i), {as[i]}));

  const auto fam = pt::build_self_stable(ctx, pool);
  if (!fam.rejected.empty()) t.fail(std::to_string(fam.rejected.size()) + " sequences rejected");
  const auto space = pt::quotient(ctx, fam.family);
  if (space.classes.size() != 4) return {false, std::to_string(space.classes.size()) + " classes, expected 4"};

  std::vector<double> coord;
  for (const auto& rep : space.representatives)
    coord.push_back(rep.label == pt::kMarkedSequenceLabel ? 0.0 : as[std::stoul(rep.label.substr(1))]);
  double worst = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) worst = std::max(worst, std::fabs(space.rho(i, j) - std::fabs(coord[i] - coord[j])));
  if (worst > 1e-9) t.fail("rho error " + num(worst));

  const auto rule = pt::TauRule::diameter();
  double lift_worst = 0.0;
  int subsets = 0;
  for (std::uint32_t m = 1; m < 16; ++m) {
    ++subsets;
    double expected = 0.0;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j)
        if ((m >> i & 1) && (m >> j & 1)) expected = std::max(expected, std::fabs(coord[i] - coord[j]));
    lift_worst = std::max(lift_worst, std::fabs(pt::lift_balk(ctx, rule, space, Subset(m)) - expected));
  }
  if (lift_worst > 1e-9) t.fail("lift error " + num(lift_worst));
  return t.done("4 classes, rho error " + num(worst) + ", " + std::to_string(subsets) + " lifted subsets, error " +
                num(lift_worst));
}

Outcome selector_fidelity() {
  Tally t;
  constexpr std::size_t M = 10000;
  std::vector<pt::Point> pts;
  for (std::size_t m = 1; m <= M; ++m) pts.push_back({(1.0 + (m % 2 ? -1.0 : 1.0)) / static_cast<double>(m)});
  const auto osc = pt::PointSequence::tabulated("osc", pts);
  const auto zero = pt::PointSequence::constant("zero");

  auto run = [&](pt::LimitSelector sel) {
    auto ctx = context_on(pt::AmbientSpace::euclidean(1, {0.0}));
    ctx.M = M;
    ctx.selector = sel;
    return pt::mutual_stability(ctx, osc, zero);
  };
  const auto ord = run(pt::LimitSelector::ordinary());
  if (ord.status != pt::Stability::Unstable) t.fail(std::string("ordinary selector gives ") + to_string(ord.status));
  double worst = 0.0;
  for (const auto& [sel, expected] : {std::pair{pt::LimitSelector::odd(), 0.0}, std::pair{pt::LimitSelector::even(), 2.0}}) {
    const auto v = run(sel);
    if (!v.stable()) t.fail(std::string("subsequence selector gives ") + to_string(v.status));
    const double err = std::max({std::fabs(v.limit - expected), std::fabs(v.lower - expected), std::fabs(v.upper - expected)});
    worst = std::max(worst, err);
    if (err > 1e-12) t.fail("limit " + num(v.limit) + " vs " + num(expected));
  }
  return t.done("ordinary unstable, odd/even limits 0 and 2, error " + num(worst));
}

Outcome ultrametric_discrimination() {
  Tally t;
  auto line = context_on(pt::AmbientSpace::euclidean(1, {0.0}));
  const std::array<pt::PointSequence, 3> tri{pt::PointSequence::linear("t", {1.0}), pt::PointSequence::linear("2t", {2.0}),
                                              pt::PointSequence::linear("4t", {4.0})};
  const auto real = pt::ultrametric_criterion(line, {tri});
  const double est = real.families.at(0).tail.limit;
  if (real.passed) t.fail("real-line triple passes");
  if (est < 3.0 / 32 - 1e-6) t.fail("real-line estimate " + num(est) + " below 3/32 - 1e-6");

  // d(q,s) = 0.5 <= max(d(q,p), d(s,p)) = 1: an ultrametric.
  const FiniteMetric um(Universe({"p", "q", "s"}), {{0, 1, 1}, {1, 0, 0.5}, {1, 0.5, 0}});
  if (!check_ultra_balk(diameter_balk(um)).passed()) t.fail("tabulated table is not an ultrametric");
  auto tab = context_on(pt::AmbientSpace::tabulated(um, 0));
  tab.M = 64;
  std::vector<std::array<pt::PointSequence, 3>> triples;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::array<pt::PointSequence, 3> seqs;
    for (int j = 0; j < 3; ++j) {
      const std::size_t settle = 1 + rng() % 32;
      std::vector<pt::Point> pts;
      for (std::size_t m = 1; m <= tab.M; ++m) pts.push_back({m < settle ? static_cast<double>(1 + rng() % 2) : 0.0});
      seqs[static_cast<std::size_t>(j)] = pt::PointSequence::tabulated("s" + std::to_string(i) + "_" + std::to_string(j), pts);
    }
    triples.push_back(seqs);
  }
  const auto ultra = pt::ultrametric_criterion(tab, triples);
  double worst = 0.0;
  for (const auto& fe : ultra.families) worst = std::max(worst, fe.max_abs);
  if (!ultra.passed) t.fail("ultrametric ambient refutes");
  if (worst != 0.0) t.fail("ultrametric product reaches " + num(worst));
  return t.done("real-line estimate " + num(est) + ", ultrametric max product " + num(worst) + " over " +
                std::to_string(triples.size()) + " triples");
}

io::Scenario random_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  io::Scenario s;
  const bool tabulated = pick(3) == 0;
  const std::size_t M = 8 + pick(24);
  std::size_t dim = 1 + pick(3);
  if (tabulated) {
    const auto d = random_metric(2 + static_cast<int>(pick(4)), rng());
    s.context = context_on(pt::AmbientSpace::tabulated(d, pick(d.n())));
  } else {
    pt::Point p(dim);
    for (auto& c : p) c = u(rng);
    s.context = context_on(pt::AmbientSpace::euclidean(dim, p));
  }
  switch (pick(3)) {
    case 0: s.context.normalizing = pt::NormalizingSequence::power(0.5 + std::fabs(u(rng)), std::fabs(u(rng))); break;
    case 1: s.context.normalizing = pt::NormalizingSequence::geometric(0.5 + std::fabs(u(rng)), 0.5 + 0.4 * std::fabs(u(rng)) / 3); break;
    default: {
      std::vector<double> r(M);
      double v = 1.0 + std::fabs(u(rng));
      for (auto& x : r) x = v *= 0.9;
      s.context.normalizing = pt::NormalizingSequence::tabulated(r);
    }
  }
  s.context.M = M;
  s.context.selector = pick(2) ? pt::LimitSelector::ordinary() : pt::LimitSelector::subsequence(1 + pick(2), 1 + pick(2));
  s.context.tol = std::pow(10.0, -static_cast<double>(3 + pick(8)));
  const std::size_t count = 1 + pick(4);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = "s" + std::to_string(i);
    const std::size_t form = tabulated ? 3 : pick(4);
    auto vec = [&] {
      pt::Point v(dim);
      for (auto& c : v) c = u(rng);
      return v;
    };
    if (form == 0) s.sequences.push_back(pt::PointSequence::constant(label));
    if (form == 1) s.sequences.push_back(pt::PointSequence::linear(label, vec()));
    if (form == 2) s.sequences.push_back(pt::PointSequence::analytic(label, vec(), vec(), 1.5 + std::fabs(u(rng))));
    if (form == 3) {
      std::vector<pt::Point> pts(M);
      for (auto& x : pts) x = tabulated ? pt::Point{static_cast<double>(pick(s.context.ambient.table().n()))} : vec();
      s.sequences.push_back(pt::PointSequence::tabulated(label, pts));
    }
  }
  if (pick(2)) {
    s.families.emplace_back();
    for (const auto& q : s.sequences) s.families.back().push_back(q.label);
  }
  if (count >= 3 && pick(2)) s.triples.push_back({"s0", "s1", "s2"});
  return s;
}

template <typename T, typename Parse>
bool round_trips(const T& obj, Parse parse) {
  const auto first = io::dump(io::to_json(obj));
  const auto second = io::dump(io::to_json(parse(io::parse_text(first))));
  return first == second;
}

Outcome io_determinism() {
  Tally t;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + i % 6;
    const auto tag = " #" + std::to_string(i);
    const auto tau = gen::perturbed_repaired(n, rng());
    if (!round_trips(tau, [](const io::json& j) { return io::set_function_from_json(j); })) t.fail("SetFunction" + tag);
    const auto partial = PartialSetFunction::restrict(tau, 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
    if (!round_trips(partial, [](const io::json& j) { return io::partial_from_json(j); })) t.fail("PartialSetFunction" + tag);
    const auto d = random_metric(n, rng());
    if (!round_trips(d, [](const io::json& j) { return io::metric_from_json(j); })) t.fail("FiniteMetric" + tag);
    const auto g = i % 2 ? gen::perturbed_symmetric_g(3 + i % 3, rng()) : gen::max_pairwise_of_random(n, rng());
    if (!round_trips(g, [](const io::json& j) { return io::g_metric_from_json(j); })) t.fail("GMetricTable" + tag);
    const auto sc = random_scenario(rng);
    if (!round_trips(sc, [](const io::json& j) { return io::scenario_from_json(j); })) t.fail("Scenario" + tag);
  }
  return t.done("100 round trips x 5 file types, byte-identical");
}

}  // namespace

int main() {
  const auto suite = gen::suite();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"diameter generation satisfies the Balk axioms", diameter_soundness},
      {"staircase example contract", staircase_contract},
      {"G-metric round trip", g_round_trip},
      {"equivalence oracles agree on the generator suite", [&] { return equivalences(suite); }},
      {"inequality lemmas hold on the generator suite", [&] { return lemmas(suite); }},
      {"pretangent quotient and lift exactness", pretangent_exactness},
      {"selector and accumulation-point fidelity", selector_fidelity},
      {"ultrametric criterion discrimination", ultrametric_discrimination},
      {"I/O determinism", io_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s [%s] (%.2fs)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.ok;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
