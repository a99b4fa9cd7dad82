#include <random>

#include <gtest/gtest.h>

#include "balk/io.hpp"
#include "generators.hpp"

using namespace balk;
using balk::io::json;

namespace {

template <typename Parse, typename T>
void expect_round_trip(const T& obj, Parse parse) {
  const auto first = io::dump(io::to_json(obj));
  const auto back = parse(io::parse_text(first));
  EXPECT_EQ(back, obj);
  EXPECT_EQ(io::dump(io::to_json(back)), first);
}

std::string parse_error_of(const std::string& text) {
  try {
    (void)io::set_function_from_json(io::parse_text(text));
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(SetFunctionJson, CanonicalLayout) {
  const auto tau = diameter_balk(FiniteMetric(Universe({"a", "b"}), {{0, 1.5}, {1.5, 0}}));
  EXPECT_EQ(io::to_json(tau).dump(), R"({"universe":["a","b"],"values":{"a":0.0,"a,b":1.5,"b":0.0}})");
}

TEST(SetFunctionJson, RoundTrips) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    expect_round_trip(gen::perturbed_repaired(1 + i % 6, rng()), [](const json& j) { return io::set_function_from_json(j); });
  }
}

TEST(SetFunctionJson, StrictParsing) {
  EXPECT_NE(parse_error_of(R"({"universe":["a","b"],"values":{"a":0,"b":0}})").find("missing key 'a,b'"), std::string::npos);
  EXPECT_NE(parse_error_of(R"({"universe":["a"],"values":{"a":0},"extra":1})").find("unexpected key 'extra'"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"universe":["a","b"],"values":{"a":0,"b":0,"b,a":1}})").find("/values/b,a"),
            std::string::npos);
  EXPECT_NE(parse_error_of(R"({"universe":["a"],"values":{"a":"zero"}})").find("expected a number"), std::string::npos);
  EXPECT_NE(parse_error_of(R"({"values":{}})").find("missing key 'universe'"), std::string::npos);
  EXPECT_NE(parse_error_of(R"({"universe":["a"],)").find("syntax error at byte"), std::string::npos);
  EXPECT_NE(parse_error_of(R"({"universe":["a","a"],"values":{}})").find("duplicate"), std::string::npos);
}

TEST(MetricJson, RoundTripsAndRejectsRaggedRows) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    expect_round_trip(random_metric(1 + static_cast<int>(s % 6), s), [](const json& j) { return io::metric_from_json(j); });
  }
  EXPECT_THROW(io::metric_from_json(json::parse(R"({"points":["a","b"],"dist":[[0,1],[1]]})")), InputError);
}

TEST(GMetricJson, RoundTripsAndNeedsEveryMultiset) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    expect_round_trip(gen::perturbed_symmetric_g(3 + static_cast<int>(s % 3), s),
                      [](const json& j) { return io::g_metric_from_json(j); });
  }
  const auto j = io::to_json(gen::max_pairwise_of_random(2, 3));
  EXPECT_EQ(j["values"].size(), GMetricTable::multiset_count(2));
  auto missing = j;
  missing["values"].erase("a,b,b");
  EXPECT_THROW(io::g_metric_from_json(missing), InputError);
  auto unsorted = j;
  unsorted["values"]["b,a,a"] = 1.0;
  EXPECT_THROW(io::g_metric_from_json(unsorted), InputError);
}

TEST(PartialJson, RoundTripsAndRespectsCap) {
  const auto pt = PartialSetFunction::restrict(gen::diameter_of_random(4, 2), 2);
  expect_round_trip(pt, [](const json& j) { return io::partial_from_json(j); });
  auto j = io::to_json(pt);
  EXPECT_EQ(j["k_cap"], 2);
  j["values"]["a,b,c"] = 1.0;
  EXPECT_THROW(io::partial_from_json(j), InputError);
}

TEST(ScenarioJson, RoundTrips) {
  const auto text = R"({
    "ambient": {"kind": "euclidean", "dim": 1, "p": [0.0]},
    "normalizing": {"form": "power", "c": 1.0, "a": 1.0},
    "M": 16,
    "selector": {"mode": "subsequence", "start": 2, "step": 2},
    "sequences": [
      {"label": "xa", "form": "linear", "v": [2.0]},
      {"label": "xb", "form": "analytic", "v": [1.0], "w": [3.0], "alpha": 2.0},
      {"label": "xc", "form": "constant"}
    ],
    "tolerance": 1e-6,
    "triples": [["xa", "xb", "xc"]]})";
  const auto s = io::scenario_from_json(io::parse_text(text));
  EXPECT_EQ(s.context.M, 16U);
  EXPECT_EQ(s.context.selector, pretangent::LimitSelector::even());
  const auto first = io::dump(io::to_json(s));
  EXPECT_EQ(io::dump(io::to_json(io::scenario_from_json(io::parse_text(first)))), first);
}

TEST(ScenarioJson, TabulatedAmbientUsesLabels) {
  const auto text = R"({
    "ambient": {"kind": "tabulated", "metric": {"points": ["p", "q"], "dist": [[0, 1], [1, 0]]}, "p": "p"},
    "normalizing": {"form": "geometric", "c": 1.0, "q": 0.5},
    "M": 4, "selector": {"mode": "ordinary"}, "tolerance": 1e-6,
    "sequences": [{"label": "s", "form": "tabulated", "points": ["q", "p", "p", "p"]}]})";
  const auto s = io::scenario_from_json(io::parse_text(text));
  const auto& seq = std::get<pretangent::PointSequence::Tabulated>(s.sequences[0].form);
  EXPECT_EQ(seq.points[0], pretangent::Point{1.0});
  const auto first = io::dump(io::to_json(s));
  EXPECT_NE(first.find("\"q\""), std::string::npos);
  EXPECT_EQ(io::dump(io::to_json(io::scenario_from_json(io::parse_text(first)))), first);
}

TEST(ScenarioJson, Errors) {
  auto base = json::parse(R"({
    "ambient": {"kind": "euclidean", "dim": 1, "p": [0.0]},
    "normalizing": {"form": "power", "c": 1.0, "a": 1.0},
    "M": 8, "selector": {"mode": "ordinary"}, "tolerance": 1e-6,
    "sequences": [{"label": "t", "form": "tabulated", "points": [[1],[1],[1]]}]})");
  try {
    io::scenario_from_json(base);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("prefix length"), std::string::npos);
  }
  base["sequences"] = json::parse(R"([{"label": "v", "form": "linear", "v": [1.0, 2.0]}])");
  EXPECT_THROW(io::scenario_from_json(base), InputError);
  base["sequences"] = json::parse(R"([{"label": "v", "form": "spiral"}])");
  EXPECT_THROW(io::scenario_from_json(base), InputError);
  base["sequences"] = json::array();
  base["ambient"]["kind"] = "oracle";
  EXPECT_THROW(io::scenario_from_json(base), InputError);
  base["ambient"]["kind"] = "euclidean";
  base["families"] = json::parse(R"([["nobody"]])");
  EXPECT_THROW(io::scenario_from_json(base), InputError);
}

TEST(ReportJson, CheckReportShape) {
  const auto tau = staircase_counterexample(4, 2);
  const auto j = io::to_json(check_increasing(tau), tau.universe());
  EXPECT_EQ(j["check"], "increasing");
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_TRUE(j["witness"].contains("A"));
  EXPECT_TRUE(j["witness"].contains("B"));
  EXPECT_TRUE(j["witness"]["lhs"].is_number());
  EXPECT_EQ(j["epsilon"], 1e-9);
  EXPECT_TRUE(j.contains("triples_examined"));
  const auto pass = io::to_json(check_balk(tau), tau.universe());
  EXPECT_TRUE(pass["witness"].is_null());
}

TEST(ReportJson, EquivalenceShape) {
  const auto tau = gen::diameter_of_random(3, 1);
  const auto j = io::to_json(verify_k_determined(tau, 3), tau.universe());
  EXPECT_EQ(j["theorem"], "2.11");
  EXPECT_EQ(j["k"], 3);
  EXPECT_EQ(j["agree"], true);
  ASSERT_EQ(j["clauses"].size(), 3U);
  EXPECT_EQ(j["clauses"][0]["id"], "i");
  EXPECT_EQ(j["clauses"][0]["verdict"], "pass");
}

TEST(ReportText, RendersNestedKeys) {
  const auto text = io::to_text(json::parse(R"({"check":"balk","witness":{"A":"a,b","lhs":1.5},"notes":["x"]})"));
  EXPECT_NE(text.find("check: balk"), std::string::npos);
  EXPECT_NE(text.find("  A: a,b"), std::string::npos);
  EXPECT_NE(text.find("notes: [\"x\"]"), std::string::npos);
}
