#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "balk/io.hpp"

namespace fs = std::filesystem;
using balk::io::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  json doc() const { return json::parse(out); }
};

std::string data(const std::string& name) { return std::string(TESTS_DATA_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const std::string cmd = std::string(BALK_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("balk_cli_" + std::to_string(::getpid()))) { fs::create_directories(path_); }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST(CliCheck, DiameterPassesAndMatchesGolden) {
  const auto r = run("check --kind balk " + data("diam3.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, slurp(data("golden/check-balk-diam3.json")));
}

TEST(CliCheck, StaircaseIsNotIncreasing) {
  const auto r = run("check --kind increasing --input " + data("ex25.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, slurp(data("golden/check-increasing-ex25.json")));
  const auto w = r.doc()["witness"];
  EXPECT_TRUE(w.contains("A") && w.contains("B"));
  EXPECT_GT(w["lhs"].get<double>(), w["rhs"].get<double>());
  EXPECT_EQ(run("check --kind increasing " + data("ex25.json") + " --format text").out,
            slurp(data("golden/check-increasing-ex25.txt")));
}

TEST(CliCheck, KParametrizedKinds) {
  EXPECT_EQ(run("check --kind k-increasing --k 2 " + data("ex25.json")).code, 0);
  EXPECT_EQ(run("check --kind k-increasing --k 3 " + data("ex25.json")).code, 1);
  EXPECT_EQ(run("check --kind k-weakly-decreasing --k 2 " + data("ex25.json")).code, 1);
  EXPECT_EQ(run("check --kind k-increasing " + data("ex25.json")).code, 2);
}

TEST(CliCheck, InputErrorsExitTwo) {
  auto r = run("check --kind balk " + data("missing-key.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.doc()["error"].get<std::string>().find("missing key 'a,b'"), std::string::npos);
  EXPECT_EQ(run("check --kind balk " + data("no-such-file.json")).code, 2);
  EXPECT_EQ(run("check --kind nonsense " + data("diam3.json")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(CliCheck, MetricAndGKinds) {
  EXPECT_EQ(run("check --kind metric " + data("m3.json")).code, 0);
  TempDir tmp;
  ASSERT_EQ(run("construct to-g --tau " + data("diam3.json") + " --out " + tmp.file("g.json")).code, 0);
  EXPECT_EQ(run("check --kind symmetric-g " + tmp.file("g.json")).code, 0);
  EXPECT_EQ(run("check --kind g " + tmp.file("g.json")).code, 0);
}

TEST(CliConstruct, DiamThenFromGRoundTrip) {
  TempDir tmp;
  ASSERT_EQ(run("construct random-metric --n 4 --seed 11 --out " + tmp.file("d.json")).code, 0);
  ASSERT_EQ(run("construct diam --metric " + tmp.file("d.json") + " --out " + tmp.file("tau.json")).code, 0);
  EXPECT_EQ(run("check --kind balk " + tmp.file("tau.json")).code, 0);
  ASSERT_EQ(run("construct to-g --tau " + tmp.file("tau.json") + " --out " + tmp.file("g.json")).code, 0);
  const auto back = run("construct from-g --g " + tmp.file("g.json"));
  ASSERT_EQ(back.code, 0);
  EXPECT_EQ(back.out, slurp(tmp.file("tau.json")));
  const auto mu = run("construct tau2 --tau " + tmp.file("tau.json"));
  EXPECT_EQ(mu.out, slurp(tmp.file("d.json")));
}

TEST(CliConstruct, Example25) {
  const auto r = run("construct example25 --n 5 --k 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["values"].size(), 31U);
  EXPECT_EQ(run("construct example25 --n 3 --k 2").code, 2);
  EXPECT_EQ(run("construct example25 --n 4 --k 2 --t 1.2,1.5,1.7").code, 2);
  EXPECT_EQ(run("construct example25 --n 4 --k 2 --t 1.2,1.5,1.3").code, 0);
}

TEST(CliDiam, GeneralizedDiameter) {
  auto r = run("diam " + data("ex25.json") + " --k 2 --set a,b,c,d");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["value"], 1.25);
  EXPECT_EQ(run("diam --tau " + data("ex25.json") + " --set d,c,b,a").code, 2);
  r = run("diam --tau " + data("diam3.json") + " --k 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, slurp(data("diam3.json")));
}

TEST(CliVerify, Equivalences) {
  auto r = run("verify 2.11 --tau " + data("diam3.json") + " --k 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.doc()["agree"].get<bool>());
  r = run("verify 2.13 --tau " + data("ex25.json"));
  EXPECT_EQ(r.code, 0);
  for (const auto& c : r.doc()["clauses"]) EXPECT_EQ(c["verdict"], "fail");
  EXPECT_EQ(run("verify 2.15 --tau " + data("diam3.json")).code, 0);
  EXPECT_EQ(run("verify lemma3.6 --tau " + data("ex25.json")).code, 0);
  EXPECT_EQ(run("verify lemma3.7 --tau " + data("diam3.json")).doc()["verdict"], "pass");
  EXPECT_EQ(run("verify 9.99 --tau " + data("diam3.json")).code, 2);
}

TEST(CliPretangent, BuildAndLift) {
  auto r = run("pretangent build --scenario " + data("linear3.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["classes"].size(), 3U);
  r = run("pretangent lift --scenario " + data("linear3.json") + " --set all");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, slurp(data("golden/lift-linear3.json")));
  r = run("pretangent lift --scenario " + data("linear3.json") + " --set x1,x3");
  EXPECT_EQ(r.doc()["values"]["x1,x3"], 2.0);
}

TEST(CliPretangent, Criteria) {
  auto r = run("pretangent ultra-criterion --scenario " + data("real-line.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.doc()["reading"], "refutes");
  EXPECT_GE(r.doc()["witness"]["estimate"].get<double>(), 3.0 / 32 - 1e-6);
  r = run("pretangent ultra-criterion --scenario " + data("ultra3.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["families"][0]["max_abs"], 0.0);
  EXPECT_EQ(run("pretangent generated --scenario " + data("real-line.json")).code, 0);
  EXPECT_EQ(run("pretangent generated --scenario " + data("real-line.json") + " --tau-rule perturbed --power 1").code, 1);
}

TEST(CliOutput, WritesToFile) {
  TempDir tmp;
  const auto r = run("check --kind balk " + data("diam3.json") + " --output " + tmp.file("r.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(tmp.file("r.json")), slurp(data("golden/check-balk-diam3.json")));
}
