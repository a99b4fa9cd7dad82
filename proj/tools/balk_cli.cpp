// balk: command-line front end. Every run writes one JSON (or text) document;
// exit code 0 = pass/success, 1 = fail/violation, 2 = input error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "balk/balk.hpp"

namespace {

using balk::io::json;
namespace pt = balk::pretangent;

enum Exit { kPass = 0, kFail = 1, kInput = 2 };

struct Globals {
  double epsilon = 1e-9;
  bool absolute = false;
  std::optional<std::uint64_t> budget;
  std::uint64_t seed = 0x5eed;
  std::string output;
  std::string format = "json";

  balk::Tolerance tolerance() const {
    return absolute ? balk::Tolerance::absolute(epsilon) : balk::Tolerance::relative(epsilon);
  }
};

void emit(const Globals& g, const json& doc) {
  const std::string text = g.format == "text" ? balk::io::to_text(doc) : balk::io::dump(doc);
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.output, std::ios::binary);
  if (!out) throw balk::InputError("cannot write '" + g.output + "'");
  out << text;
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string kind;
  std::string input;
  std::optional<int> k;
};

int run_check(const Globals& g, const CheckArgs& a) {
  const auto doc = balk::io::read_file(a.input);
  const auto tol = g.tolerance();
  balk::CheckOptions opts;
  if (g.budget) opts.budget = *g.budget;
  opts.seed = g.seed;
  auto need_k = [&] {
    if (!a.k) throw balk::InputError("--kind " + a.kind + " needs --k");
    return *a.k;
  };

  balk::CheckReport report;
  balk::Universe u;
  if (a.kind == "metric") {
    const auto d = balk::io::metric_from_json(doc);
    u = d.universe();
    report = balk::check_metric(d, tol);
  } else if (a.kind == "g" || a.kind == "symmetric-g") {
    const auto t = balk::io::g_metric_from_json(doc);
    u = t.universe();
    report = a.kind == "g" ? balk::check_g_metric(t, tol) : balk::check_symmetric_g(t, tol);
  } else {
    const auto tau = balk::io::set_function_from_json(doc);
    u = tau.universe();
    if (a.kind == "balk") report = balk::check_balk(tau, tol, opts);
    else if (a.kind == "ultra") report = balk::check_ultra_balk(tau, tol, opts);
    else if (a.kind == "increasing") report = balk::check_increasing(tau, tol);
    else if (a.kind == "k-increasing") report = balk::check_k_increasing(tau, need_k(), tol);
    else if (a.kind == "k-weakly-decreasing") report = balk::check_k_weakly_decreasing(tau, need_k(), tol);
    else throw balk::InputError("unknown check kind '" + a.kind + "'");
  }
  emit(g, balk::io::to_json(report, u));
  return report.passed() ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// construct

struct ConstructArgs {
  std::string what;
  std::string metric, g, tau;
  int n = 0, k = 0;
  std::string t;
};

int run_construct(const Globals& g, const ConstructArgs& a) {
  const auto tol = g.tolerance();
  auto need = [](const std::string& path, const char* flag) -> const std::string& {
    if (path.empty()) throw balk::InputError(std::string("construct needs ") + flag);
    return path;
  };
  if (a.what == "diam") {
    emit(g, balk::io::to_json(balk::diameter_balk(balk::io::metric_from_json(balk::io::read_file(need(a.metric, "--metric"))), tol)));
  } else if (a.what == "from-g") {
    emit(g, balk::io::to_json(balk::g_to_balk(balk::io::g_metric_from_json(balk::io::read_file(need(a.g, "--g"))), tol)));
  } else if (a.what == "tau2") {
    emit(g, balk::io::to_json(balk::tau_squared(balk::io::set_function_from_json(balk::io::read_file(need(a.tau, "--tau"))))));
  } else if (a.what == "to-g") {
    const auto conv = balk::balk_to_g(balk::io::set_function_from_json(balk::io::read_file(need(a.tau, "--tau"))), tol);
    for (const auto& w : conv.warnings) std::cerr << "warning: " << w << "\n";
    if (!conv.diagnostics.passed()) {
      std::cerr << "diagnostics: " << balk::io::to_json(conv.diagnostics, conv.table.universe()).dump() << "\n";
    }
    emit(g, balk::io::to_json(conv.table));
  } else if (a.what == "example25") {
    std::optional<std::vector<double>> t;
    if (!a.t.empty()) {
      t.emplace();
      for (const auto& s : split_labels(a.t)) {
        try {
          t->push_back(std::stod(s));
        } catch (const std::exception&) {
          throw balk::InputError("--t entry '" + s + "' is not a number");
        }
      }
    }
    emit(g, balk::io::to_json(balk::staircase_counterexample(a.n, a.k, t)));
  } else if (a.what == "random-metric") {
    emit(g, balk::io::to_json(balk::random_metric(a.n, g.seed)));
  } else {
    throw balk::InputError("unknown constructor '" + a.what + "'");
  }
  return kPass;
}

// ---------------------------------------------------------------------------
// diam

struct DiamArgs {
  std::string tau;
  int k = 2;
  std::string set;
};

int run_diam(const Globals& g, const DiamArgs& a) {
  const auto tau = balk::io::set_function_from_json(balk::io::read_file(a.tau));
  if (a.set.empty()) {
    emit(g, balk::io::to_json(balk::generalized_diameter_table(tau, a.k)));
  } else {
    const auto s = balk::parse_subset_key(a.set, tau.universe());
    emit(g, json{{"k", a.k}, {"set", balk::canonical_subset_key(s, tau.universe())},
                 {"value", balk::generalized_diameter(tau, a.k, s)}});
  }
  return kPass;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string theorem;
  std::string tau;
  std::optional<int> k;
};

int run_verify(const Globals& g, const VerifyArgs& a) {
  const auto tau = balk::io::set_function_from_json(balk::io::read_file(a.tau));
  const auto tol = g.tolerance();
  if (a.theorem == "2.11" || a.theorem == "2.13" || a.theorem == "2.15") {
    balk::EquivalenceReport r;
    if (a.theorem == "2.11") {
      if (!a.k) throw balk::InputError("verify 2.11 needs --k");
      r = balk::verify_k_determined(tau, *a.k, tol);
    } else if (a.theorem == "2.13") {
      r = balk::verify_pair_determined(tau, tol);
    } else {
      r = balk::verify_triple_determined(tau, tol);
    }
    emit(g, balk::io::to_json(r, tau.universe()));
    return r.agree ? kPass : kFail;
  }
  balk::LemmaOptions opts;
  if (g.budget) opts.budget = *g.budget;
  opts.seed = g.seed;
  balk::CheckReport r;
  if (a.theorem == "lemma3.6") r = balk::verify_chain_bounds(tau, tol, opts);
  else if (a.theorem == "lemma3.7") r = balk::verify_half_diameter_bound(tau, tol);
  else throw balk::InputError("unknown theorem '" + a.theorem + "'");
  emit(g, balk::io::to_json(r, tau.universe()));
  return r.passed() ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// pretangent

struct PretangentArgs {
  std::string action;
  std::string scenario;
  std::string rule = "diameter";
  std::string tau;
  double coef = 1.0;
  double power = 1.0;
  std::string set = "all";
};

pt::TauRule make_rule(const PretangentArgs& a) {
  if (a.rule == "diameter") return pt::TauRule::diameter();
  if (a.rule == "perturbed") return pt::TauRule::perturbed(a.coef, a.power);
  if (a.rule == "set-function") {
    if (a.tau.empty()) throw balk::InputError("--tau-rule set-function needs --tau");
    return pt::TauRule::set_function(balk::io::set_function_from_json(balk::io::read_file(a.tau)));
  }
  throw balk::InputError("unknown tau rule '" + a.rule + "'");
}

std::vector<pt::PointSequence> resolve(const balk::io::Scenario& s, const std::vector<std::string>& labels) {
  std::vector<pt::PointSequence> out;
  for (const auto& l : labels) out.push_back(s.sequence(l));
  return out;
}

/// Explicit families, or every subset of at least two pool members (the whole
/// pool once it has more than 10 members).
std::vector<std::vector<pt::PointSequence>> families_of(const balk::io::Scenario& s) {
  std::vector<std::vector<pt::PointSequence>> out;
  for (const auto& f : s.families) out.push_back(resolve(s, f));
  if (!out.empty()) return out;
  const auto n = s.sequences.size();
  if (n > 10) return {s.sequences};
  for (std::uint32_t m = 1; m < (1U << n); ++m) {
    if (std::popcount(m) < 2) continue;
    std::vector<pt::PointSequence> fam;
    for (std::size_t i = 0; i < n; ++i)
      if (m >> i & 1U) fam.push_back(s.sequences[i]);
    out.push_back(std::move(fam));
  }
  return out;
}

std::vector<std::array<pt::PointSequence, 3>> triples_of(const balk::io::Scenario& s) {
  std::vector<std::array<pt::PointSequence, 3>> out;
  for (const auto& t : s.triples) out.push_back({s.sequence(t[0]), s.sequence(t[1]), s.sequence(t[2])});
  if (!out.empty()) return out;
  const auto& q = s.sequences;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j)
      for (std::size_t k = j + 1; k < q.size(); ++k) out.push_back({q[i], q[j], q[k]});
  return out;
}

int run_pretangent(const Globals& g, const PretangentArgs& a) {
  const auto s = balk::io::scenario_from_json(balk::io::read_file(a.scenario));
  const auto& ctx = s.context;
  if (a.action == "build" || a.action == "lift") {
    const auto fam = pt::build_self_stable(ctx, s.sequences);
    const auto space = pt::quotient(ctx, fam.family);
    json doc = balk::io::to_json(space);
    doc["family"] = balk::io::to_json(fam);
    if (a.action == "lift") {
      const auto rule = make_rule(a);
      const auto& u = space.rho.universe();
      json values = json::object();
      auto lift_one = [&](balk::Subset cls) {
        values[balk::canonical_subset_key(cls, u)] = pt::lift_balk(ctx, rule, space, cls);
      };
      if (a.set == "all") {
        for (std::uint32_t m = 1; m <= u.subset_count(); ++m) lift_one(balk::Subset(m));
      } else {
        // Labels may name any member of a class; they map to its representative.
        balk::Subset cls;
        for (const auto& l : split_labels(a.set)) {
          std::optional<balk::Index> found;
          for (balk::Index c = 0; c < space.classes.size(); ++c)
            for (const auto& mem : space.classes[c].members)
              if (mem == l) found = c;
          if (!found) throw balk::InputError("--set names '" + l + "', which is not in the self-stable family");
          cls = cls.with(*found);
        }
        lift_one(cls);
      }
      doc = json{{"classes", doc["classes"]}, {"rule", rule.name}, {"values", values}};
    }
    emit(g, doc);
    return kPass;
  }
  pt::ScenarioReport r;
  if (a.action == "generated") r = pt::generated_at_point(ctx, make_rule(a), families_of(s));
  else if (a.action == "ultra-criterion") r = pt::ultrametric_criterion(ctx, triples_of(s));
  else throw balk::InputError("unknown pretangent action '" + a.action + "'");
  emit(g, balk::io::to_json(r));
  return r.passed ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended metric toolkit: axiom checks, constructions, equivalence oracles, pretangent limits"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--epsilon", g.epsilon, "comparison tolerance")->capture_default_str();
    cmd->add_flag("--absolute", g.absolute, "use an absolute instead of a relative tolerance");
    cmd->add_option("--budget", g.budget, "sample budget above the exhaustive limit (default: per check)");
    cmd->add_option("--seed", g.seed, "RNG seed for sampled checks and random constructions")->capture_default_str();
    cmd->add_option("--output,--out", g.output, "write the report to a file instead of stdout");
    cmd->add_option("--format", g.format, "json or text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  };

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "run an axiom checker");
  check->add_option("--kind", ca.kind, "balk|g|symmetric-g|metric|k-increasing|k-weakly-decreasing|increasing|ultra")->required();
  check->add_option("--input,input", ca.input, "input JSON file")->required();
  check->add_option("--k", ca.k, "k for the k-parametrized checks");
  add_globals(check);

  ConstructArgs co;
  auto* construct = app.add_subcommand("construct", "build an object and write it as JSON");
  construct->add_option("what", co.what, "diam|from-g|example25|tau2|to-g|random-metric")->required();
  construct->add_option("--metric", co.metric, "FiniteMetric file (diam)");
  construct->add_option("--g", co.g, "GMetricTable file (from-g)");
  construct->add_option("--tau", co.tau, "SetFunction file (tau2, to-g)");
  construct->add_option("--n", co.n, "universe size (example25, random-metric)");
  construct->add_option("--k", co.k, "k (example25)");
  construct->add_option("--t", co.t, "comma-separated staircase parameters t_2..t_{k+2} (example25)");
  add_globals(construct);

  DiamArgs da;
  auto* diam = app.add_subcommand("diam", "generalized k-diameter of a set function");
  diam->add_option("--tau,tau", da.tau, "SetFunction file")->required();
  diam->add_option("--k", da.k, "subset cardinality cap")->capture_default_str();
  diam->add_option("--set", da.set, "evaluate on one subset (comma-separated labels) instead of the whole table");
  add_globals(diam);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "equivalence oracles and inequality checks");
  verify->add_option("theorem", va.theorem, "2.11|2.13|2.15|lemma3.6|lemma3.7")->required();
  verify->add_option("--tau", va.tau, "SetFunction file")->required();
  verify->add_option("--k", va.k, "k (2.11)");
  add_globals(verify);

  PretangentArgs pa;
  auto* pret = app.add_subcommand("pretangent", "pretangent scenario analysis");
  pret->add_option("action", pa.action, "build|lift|generated|ultra-criterion")->required();
  pret->add_option("--scenario", pa.scenario, "Scenario file")->required();
  pret->add_option("--tau-rule", pa.rule, "diameter|perturbed|set-function")->capture_default_str();
  pret->add_option("--tau", pa.tau, "SetFunction file for the set-function rule");
  pret->add_option("--coef", pa.coef, "perturbed rule coefficient")->capture_default_str();
  pret->add_option("--power", pa.power, "perturbed rule exponent")->capture_default_str();
  pret->add_option("--set", pa.set, "'all' or comma-separated member labels")->capture_default_str();
  add_globals(pret);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*check) return run_check(g, ca);
    if (*construct) return run_construct(g, co);
    if (*diam) return run_diam(g, da);
    if (*verify) return run_verify(g, va);
    return run_pretangent(g, pa);
  } catch (const balk::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto& r = e.report();
    json doc = {{"error", e.what()}, {"check", r.check}, {"condition", r.condition}};
    try {
      emit(g, doc);
    } catch (const std::exception&) {
    }
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    try {
      emit(g, json{{"error", e.what()}});
    } catch (const std::exception&) {
    }
    return kInput;
  }
}
