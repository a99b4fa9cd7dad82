#pragma once

// JSON file formats and report documents. Objects are written with sorted keys
// and shortest round-trip floats, so serialize -> parse -> serialize is
// byte-identical. Parsers are strict: missing and unknown keys are errors, and
// every error names the JSON pointer where it occurred.

#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "balk/axioms.hpp"
#include "balk/construct.hpp"
#include "balk/core.hpp"
#include "balk/pretangent.hpp"
#include "balk/theorems.hpp"

namespace balk::io {

using json = nlohmann::json;

class ParseError : public InputError {
 public:
  ParseError(const std::string& where, const std::string& what)
      : InputError((where.empty() ? std::string("at document root") : "at " + where) + ": " + what) {}
};

// ---------------------------------------------------------------------------
// Documents

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_text(const std::string& text, const std::string& source = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": JSON syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

namespace detail {

/// Strict object access: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_, "expected an object");
  }

  const json& req(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ParseError(path_, "missing key '" + key + "'");
    used_.insert(key);
    return *it;
  }

  const json* opt(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ParseError(path_, "unexpected key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

inline long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<long long>();
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a string");
  return j.get<std::string>();
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  return j;
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
  return out;
}

inline std::vector<std::string> strings(const json& j, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(string(j[i], path + "/" + std::to_string(i)));
  return out;
}

/// Runs `fn`, prefixing domain errors with the JSON pointer.
template <typename Fn>
auto located(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    throw ParseError(path, e.what());
  }
}

inline Universe universe(const json& j, const std::string& path) {
  auto names = strings(j, path);
  return located(path, [&] { return Universe(std::move(names)); });
}

/// Subset-keyed value map, keyed by canonical subset labels.
inline std::map<std::uint32_t, double> subset_values(const json& j, const std::string& path, const Universe& u) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  std::map<std::uint32_t, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto where = path + "/" + it.key();
    const Subset s = located(where, [&] { return parse_subset_key(it.key(), u); });
    out.emplace(s.bits(), number(it.value(), where));
  }
  return out;
}

inline std::array<Index, 3> parse_multiset_key(const std::string& key, const Universe& u, const std::string& path) {
  std::array<Index, 3> out{};
  std::size_t start = 0, count = 0;
  while (true) {
    const auto comma = key.find(',', start);
    const auto part = key.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (count == 3) throw ParseError(path, "multiset key must have exactly 3 labels");
    out[count++] = located(path, [&] { return u.index_of(part); });
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (count != 3) throw ParseError(path, "multiset key must have exactly 3 labels");
  if (out[0] > out[1] || out[1] > out[2]) throw ParseError(path, "multiset key labels must be in universe order");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Set functions and metrics

inline json to_json(const SetFunction& tau) {
  json values = json::object();
  for (std::uint32_t m = 1; m <= tau.universe().subset_count(); ++m)
    values[canonical_subset_key(Subset(m), tau.universe())] = tau.at_mask(m);
  return {{"universe", tau.universe().names()}, {"values", values}};
}

inline SetFunction set_function_from_json(const json& j, const std::string& path = "") {
  detail::Reader r(j, path);
  const auto u = detail::universe(r.req("universe"), r.at("universe"));
  const auto vals = detail::subset_values(r.req("values"), r.at("values"), u);
  r.finish();
  std::vector<double> table(u.subset_count());
  for (std::uint32_t m = 1; m <= u.subset_count(); ++m) {
    auto it = vals.find(m);
    if (it == vals.end()) {
      throw ParseError(r.at("values"), "missing key '" + canonical_subset_key(Subset(m), u) + "'; all " +
                                           std::to_string(u.subset_count()) + " nonempty subsets are required");
    }
    table[m - 1] = it->second;
  }
  return detail::located(path, [&] { return SetFunction(u, std::move(table)); });
}

inline json to_json(const PartialSetFunction& pt) {
  json values = json::object();
  for (const auto& [m, v] : pt.values()) values[canonical_subset_key(Subset(m), pt.universe())] = v;
  return {{"universe", pt.universe().names()}, {"k_cap", pt.k_cap()}, {"values", values}};
}

inline PartialSetFunction partial_from_json(const json& j, const std::string& path = "") {
  detail::Reader r(j, path);
  const auto u = detail::universe(r.req("universe"), r.at("universe"));
  const auto k_cap = detail::integer(r.req("k_cap"), r.at("k_cap"));
  auto vals = detail::subset_values(r.req("values"), r.at("values"), u);
  r.finish();
  for (const auto& [m, v] : vals)
    if (std::popcount(m) > k_cap) {
      throw ParseError(r.at("values"), "key '" + canonical_subset_key(Subset(m), u) + "' exceeds k_cap");
    }
  return detail::located(path, [&] { return PartialSetFunction(u, static_cast<int>(k_cap), std::move(vals)); });
}

inline json to_json(const FiniteMetric& d) { return {{"points", d.universe().names()}, {"dist", d.rows()}}; }

inline FiniteMetric metric_from_json(const json& j, const std::string& path = "") {
  detail::Reader r(j, path);
  const auto u = detail::universe(r.req("points"), r.at("points"));
  const auto& dist = detail::array(r.req("dist"), r.at("dist"));
  r.finish();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < dist.size(); ++i) rows.push_back(detail::numbers(dist[i], r.at("dist") + "/" + std::to_string(i)));
  return detail::located(r.at("dist"), [&] { return FiniteMetric(u, std::move(rows)); });
}

inline json to_json(const GMetricTable& g) {
  const auto& u = g.universe();
  json values = json::object();
  for (Index i = 0; i < g.n(); ++i)
    for (Index j = i; j < g.n(); ++j)
      for (Index k = j; k < g.n(); ++k) values[canonical_multiset_key(i, j, k, u)] = g(i, j, k);
  return {{"points", u.names()}, {"values", values}};
}

inline GMetricTable g_metric_from_json(const json& j, const std::string& path = "") {
  detail::Reader r(j, path);
  const auto u = detail::universe(r.req("points"), r.at("points"));
  const auto& values = r.req("values");
  const auto vpath = r.at("values");
  r.finish();
  if (!values.is_object()) throw ParseError(vpath, "expected an object");
  std::map<std::array<Index, 3>, double> vals;
  for (auto it = values.begin(); it != values.end(); ++it) {
    const auto where = vpath + "/" + it.key();
    vals.emplace(detail::parse_multiset_key(it.key(), u, where), detail::number(it.value(), where));
  }
  return detail::located(vpath, [&] {
    return GMetricTable::tabulate(u, [&](Index a, Index b, Index c) {
      auto it = vals.find({a, b, c});
      if (it == vals.end()) throw InputError("missing key '" + canonical_multiset_key(a, b, c, u) + "'");
      return it->second;
    });
  });
}

// ---------------------------------------------------------------------------
// Scenarios

/// A pretangent scenario file: context, the candidate pool, and optional
/// explicit families (for the generation check) and triples (for the
/// ultrametric criterion), given by sequence labels.
struct Scenario {
  pretangent::Context context;
  std::vector<pretangent::PointSequence> sequences;
  std::vector<std::vector<std::string>> families;
  std::vector<std::array<std::string, 3>> triples;

  const pretangent::PointSequence& sequence(const std::string& label) const {
    for (const auto& s : sequences)
      if (s.label == label) return s;
    throw InputError("scenario has no sequence '" + label + "'");
  }
};

namespace detail {

inline json point_json(const pretangent::AmbientSpace& amb, const pretangent::Point& x) {
  if (amb.kind() == pretangent::AmbientSpace::Kind::Tabulated) return amb.table().universe().name(static_cast<Index>(x[0]));
  return x;
}

inline pretangent::Point point_from(const pretangent::AmbientSpace& amb, const json& j, const std::string& path) {
  if (amb.kind() == pretangent::AmbientSpace::Kind::Tabulated) {
    const auto label = string(j, path);
    return {static_cast<double>(located(path, [&] { return amb.table().universe().index_of(label); }))};
  }
  return numbers(j, path);
}

}  // namespace detail

inline json to_json(const pretangent::AmbientSpace& amb) {
  using K = pretangent::AmbientSpace::Kind;
  switch (amb.kind()) {
    case K::Euclidean: return {{"kind", "euclidean"}, {"dim", amb.dim()}, {"p", amb.marked_point()}};
    case K::Tabulated:
      return {{"kind", "tabulated"}, {"metric", to_json(amb.table())}, {"p", detail::point_json(amb, amb.marked_point())}};
    case K::Oracle: break;
  }
  throw InputError("oracle ambients have no file form");
}

inline pretangent::AmbientSpace ambient_from_json(const json& j, const std::string& path) {
  detail::Reader r(j, path);
  const auto kind = detail::string(r.req("kind"), r.at("kind"));
  if (kind == "euclidean") {
    const auto dim = detail::integer(r.req("dim"), r.at("dim"));
    auto p = detail::numbers(r.req("p"), r.at("p"));
    r.finish();
    if (dim < 1) throw ParseError(r.at("dim"), "dim must be >= 1");
    return detail::located(path, [&] { return pretangent::AmbientSpace::euclidean(static_cast<std::size_t>(dim), p); });
  }
  if (kind == "tabulated") {
    auto metric = metric_from_json(r.req("metric"), r.at("metric"));
    const auto p = detail::string(r.req("p"), r.at("p"));
    r.finish();
    const auto idx = detail::located(r.at("p"), [&] { return metric.universe().index_of(p); });
    return detail::located(path, [&] { return pretangent::AmbientSpace::tabulated(std::move(metric), idx); });
  }
  if (kind == "oracle") throw ParseError(r.at("kind"), "oracle ambients can only be supplied programmatically");
  throw ParseError(r.at("kind"), "unknown ambient kind '" + kind + "'");
}

inline json to_json(const pretangent::NormalizingSequence& r) {
  using N = pretangent::NormalizingSequence;
  return std::visit(
      [](const auto& f) -> json {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, N::Power>) return {{"form", "power"}, {"c", f.c}, {"a", f.a}};
        else if constexpr (std::is_same_v<F, N::Geometric>) return {{"form", "geometric"}, {"c", f.c}, {"q", f.q}};
        else return {{"form", "tabulated"}, {"values", f.values}};
      },
      r.form());
}

inline pretangent::NormalizingSequence normalizing_from_json(const json& j, const std::string& path) {
  using N = pretangent::NormalizingSequence;
  detail::Reader r(j, path);
  const auto form = detail::string(r.req("form"), r.at("form"));
  if (form == "power" || form == "geometric") {
    const double c = detail::number(r.req("c"), r.at("c"));
    const char* second = form == "power" ? "a" : "q";
    const double v = detail::number(r.req(second), r.at(second));
    r.finish();
    return detail::located(path, [&] { return form == "power" ? N::power(c, v) : N::geometric(c, v); });
  }
  if (form == "tabulated") {
    auto values = detail::numbers(r.req("values"), r.at("values"));
    r.finish();
    return N::tabulated(std::move(values));
  }
  throw ParseError(r.at("form"), "unknown normalizing form '" + form + "'");
}

inline json to_json(const pretangent::LimitSelector& s) {
  if (s.is_ordinary()) return {{"mode", "ordinary"}};
  return {{"mode", "subsequence"}, {"start", s.start}, {"step", s.step}};
}

inline pretangent::LimitSelector selector_from_json(const json& j, const std::string& path) {
  detail::Reader r(j, path);
  const auto mode = detail::string(r.req("mode"), r.at("mode"));
  if (mode == "ordinary") {
    r.finish();
    return pretangent::LimitSelector::ordinary();
  }
  if (mode == "subsequence") {
    const auto start = detail::integer(r.req("start"), r.at("start"));
    const auto step = detail::integer(r.req("step"), r.at("step"));
    r.finish();
    if (start < 1 || step < 1) throw ParseError(path, "subsequence selector needs start >= 1 and step >= 1");
    return pretangent::LimitSelector::subsequence(static_cast<std::size_t>(start), static_cast<std::size_t>(step));
  }
  throw ParseError(r.at("mode"), "unknown selector mode '" + mode + "'");
}

inline json to_json(const pretangent::PointSequence& s, const pretangent::AmbientSpace& amb) {
  using P = pretangent::PointSequence;
  json j = std::visit(
      [&](const auto& f) -> json {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, P::Constant>) return {{"form", "constant"}};
        else if constexpr (std::is_same_v<F, P::Linear>) return {{"form", "linear"}, {"v", f.v}};
        else if constexpr (std::is_same_v<F, P::Analytic>)
          return {{"form", "analytic"}, {"v", f.v}, {"w", f.w}, {"alpha", f.alpha}};
        else {
          json pts = json::array();
          for (const auto& x : f.points) pts.push_back(detail::point_json(amb, x));
          return {{"form", "tabulated"}, {"points", pts}};
        }
      },
      s.form);
  j["label"] = s.label;
  return j;
}

inline pretangent::PointSequence sequence_from_json(const json& j, const std::string& path,
                                                    const pretangent::AmbientSpace& amb) {
  using P = pretangent::PointSequence;
  detail::Reader r(j, path);
  auto label = detail::string(r.req("label"), r.at("label"));
  const auto form = detail::string(r.req("form"), r.at("form"));
  P out;
  if (form == "constant") {
    out = P::constant(label);
  } else if (form == "linear") {
    out = P::linear(label, detail::numbers(r.req("v"), r.at("v")));
  } else if (form == "analytic") {
    auto v = detail::numbers(r.req("v"), r.at("v"));
    auto w = detail::numbers(r.req("w"), r.at("w"));
    const double alpha = detail::number(r.req("alpha"), r.at("alpha"));
    out = detail::located(path, [&] { return P::analytic(label, v, w, alpha); });
  } else if (form == "tabulated") {
    const auto& pts = detail::array(r.req("points"), r.at("points"));
    std::vector<pretangent::Point> points;
    for (std::size_t i = 0; i < pts.size(); ++i) points.push_back(detail::point_from(amb, pts[i], r.at("points") + "/" + std::to_string(i)));
    out = P::tabulated(label, std::move(points));
  } else {
    throw ParseError(r.at("form"), "unknown sequence form '" + form + "'");
  }
  r.finish();
  return out;
}

inline json to_json(const Scenario& s) {
  const auto& ctx = s.context;
  json seqs = json::array();
  for (const auto& q : s.sequences) seqs.push_back(to_json(q, ctx.ambient));
  json j = {{"ambient", to_json(ctx.ambient)}, {"normalizing", to_json(ctx.normalizing)}, {"M", ctx.M},
            {"selector", to_json(ctx.selector)}, {"sequences", seqs}, {"tolerance", ctx.tol}};
  if (!s.families.empty()) j["families"] = s.families;
  if (!s.triples.empty()) j["triples"] = s.triples;
  return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "") {
  detail::Reader r(j, path);
  Scenario s;
  s.context.ambient = ambient_from_json(r.req("ambient"), r.at("ambient"));
  s.context.normalizing = normalizing_from_json(r.req("normalizing"), r.at("normalizing"));
  const auto M = detail::integer(r.req("M"), r.at("M"));
  if (M < 4) throw ParseError(r.at("M"), "M must be >= 4");
  s.context.M = static_cast<std::size_t>(M);
  s.context.selector = selector_from_json(r.req("selector"), r.at("selector"));
  s.context.tol = detail::number(r.req("tolerance"), r.at("tolerance"));
  const auto& seqs = detail::array(r.req("sequences"), r.at("sequences"));
  for (std::size_t i = 0; i < seqs.size(); ++i)
    s.sequences.push_back(sequence_from_json(seqs[i], r.at("sequences") + "/" + std::to_string(i), s.context.ambient));
  if (const auto* f = r.opt("families")) {
    for (std::size_t i = 0; i < detail::array(*f, r.at("families")).size(); ++i)
      s.families.push_back(detail::strings((*f)[i], r.at("families") + "/" + std::to_string(i)));
  }
  if (const auto* t = r.opt("triples")) {
    for (std::size_t i = 0; i < detail::array(*t, r.at("triples")).size(); ++i) {
      const auto where = r.at("triples") + "/" + std::to_string(i);
      auto labels = detail::strings((*t)[i], where);
      if (labels.size() != 3) throw ParseError(where, "triples need exactly 3 labels");
      s.triples.push_back({labels[0], labels[1], labels[2]});
    }
  }
  r.finish();
  detail::located(path, [&] {
    s.context.validate();
    for (const auto& q : s.sequences) pretangent::validate_sequence(s.context, q);
    for (const auto& fam : s.families)
      for (const auto& l : fam) (void)s.sequence(l);
    for (const auto& t : s.triples)
      for (const auto& l : t) (void)s.sequence(l);
    return 0;
  });
  return s;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const Witness& w, const Universe& u) {
  json j = {{"lhs", w.lhs}, {"rhs", w.rhs}, {"relation", w.relation}};
  for (const auto& [role, s] : w.roles) j[role] = canonical_subset_key(s, u);
  if (w.tolerance_boundary) j["tolerance_boundary"] = true;
  return j;
}

inline json to_json(const CheckReport& r, const Universe& u) {
  json j = {{"check", r.check},
            {"verdict", to_string(r.verdict)},
            {"witness", r.witness ? to_json(*r.witness, u) : json(nullptr)},
            {"triples_examined", r.examined},
            {"epsilon", r.tolerance.eps},
            {"tolerance_mode", to_string(r.tolerance.mode)}};
  if (r.k) j["k"] = *r.k;
  if (!r.condition.empty()) j["condition"] = r.condition;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

inline json to_json(const EquivalenceReport& r, const Universe& u) {
  json clauses = json::array();
  for (const auto& c : r.clauses) {
    json cj = {{"id", c.id}, {"verdict", c.passed ? "pass" : "fail"}, {"statement", c.statement}};
    if (c.witness) cj["witness"] = to_json(*c.witness, u);
    clauses.push_back(cj);
  }
  json j = {{"theorem", r.theorem}, {"clauses", clauses}, {"agree", r.agree}};
  if (r.k) j["k"] = *r.k;
  if (r.disagreement) j["disagreement"] = *r.disagreement;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

inline json to_json(const pretangent::StabilityVerdict& v) {
  return {{"status", to_string(v.status)}, {"limit", v.limit}, {"tail_spread", v.tail_spread},
          {"lower", v.lower}, {"upper", v.upper}};
}

inline json to_json(const std::vector<pretangent::PairVerdict>& vs) {
  json out = json::array();
  for (const auto& pv : vs) {
    json j = to_json(pv.verdict);
    j["pair"] = {pv.first, pv.second};
    out.push_back(j);
  }
  return out;
}

inline json to_json(const pretangent::SelfStableFamily& f) {
  json family = json::array(), rejected = json::array();
  for (const auto& s : f.family) family.push_back(s.label);
  for (const auto& rj : f.rejected) rejected.push_back({{"label", rj.label}, {"reason", rj.reason}});
  return {{"family", family}, {"rejected", rejected}, {"verdicts", to_json(f.verdicts)}};
}

inline json to_json(const pretangent::PretangentSpaceApprox& q) {
  json classes = json::array();
  for (const auto& c : q.classes) classes.push_back({{"members", c.members}, {"representative", c.representative}});
  return {{"classes", classes}, {"rho", to_json(q.rho)}, {"verdicts", to_json(q.verdicts)}};
}

inline json to_json(const pretangent::ScenarioReport& r) {
  json fams = json::array();
  for (const auto& f : r.families) {
    json fj = to_json(f.tail);
    fj["labels"] = f.labels;
    fj["estimate"] = f.tail.limit;
    fj["max_abs"] = f.max_abs;
    fj["verdict"] = f.passed ? "pass" : "fail";
    fams.push_back(fj);
  }
  json witness = nullptr;
  if (r.failing_family) {
    const auto& f = r.families[*r.failing_family];
    witness = {{"family", f.labels}, {"estimate", f.tail.limit}};
  }
  return {{"check", r.check}, {"verdict", r.passed ? "pass" : "fail"}, {"reading", r.reading()},
          {"epsilon", r.tolerance}, {"families", fams}, {"witness", witness}};
}

/// Indented "key: value" rendering of a report document.
inline std::string to_text(const json& j, int indent = 0) {
  std::ostringstream out;
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  auto flat = [](const json& v) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (e.is_structured()) return false;
    return true;
  };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_structured() && !flat(*it) && !it->empty()) {
        out << pad << it.key() << ":\n" << to_text(*it, indent + 2);
      } else {
        out << pad << it.key() << ": " << (it->is_array() ? it->dump() : scalar(*it)) << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (e.is_structured()) {
        out << pad << "-\n" << to_text(e, indent + 2);
      } else {
        out << pad << "- " << scalar(e) << "\n";
      }
    }
  } else {
    out << pad << scalar(j) << "\n";
  }
  return out.str();
}

}  // namespace balk::io
