#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ncrl::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ncrl_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::vector<std::string> kSmallCompare{
    "compare", "--k",     "4",          "--dim", "6",        "--train-size", "120",
    "--dev-size", "40",   "--test-size", "40",   "--epochs", "2",           "--seeds",
    "1,2",     "--losses", "ncrl_final,bce", "--no-timing"};

}  // namespace

TEST_F(Cli, UnknownSubcommand) {
  const Outcome o = run({"frobnicate"});
  EXPECT_EQ(o.code, ncrl::cli::kExitUsage);
  EXPECT_NE(o.err.find("unknown subcommand 'frobnicate'"), std::string::npos);
  EXPECT_NE(o.err.find("Usage"), std::string::npos);
}

TEST_F(Cli, NoArgumentsIsUsageError) { EXPECT_EQ(run({}).code, ncrl::cli::kExitUsage); }

TEST_F(Cli, BadOptionValue) {
  const Outcome o = run({"grad-check", "--trials", "abc"});
  EXPECT_EQ(o.code, ncrl::cli::kExitUsage);
  EXPECT_FALSE(o.err.empty());
  EXPECT_EQ(run({"grad-check", "--loss", "nope"}).code, ncrl::cli::kExitFailure);
}

TEST_F(Cli, HelpOnEverySubcommand) {
  for (const char* sub :
       {"gen-data", "train", "eval", "grad-check", "consistency", "sweep", "compare", "ablate"}) {
    const Outcome o = run({sub, "--help"});
    EXPECT_EQ(o.code, 0) << sub;
    EXPECT_NE(o.out.find("--config"), std::string::npos) << sub;
  }
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, GradCheck) {
  const Outcome o = run({"grad-check", "--trials", "20"});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("ok max_rel_error="), std::string::npos);
  EXPECT_NE(o.out.find("loss=ncrl_final"), std::string::npos);
}

TEST_F(Cli, Consistency) {
  const Outcome o = run({"consistency", "--trials", "50"});
  ASSERT_EQ(o.code, 0) << o.err;
  const json j = json::parse(o.out);
  EXPECT_EQ(j["sign_agreement_rate"].get<double>(), 1.0);
  EXPECT_LT(j["max_margin_deviation"].get<double>(), 1e-3);
}

TEST_F(Cli, GenTrainEvalSweep) {
  Outcome o = run({"gen-data", "--k", "4", "--dim", "6", "--n", "300", "--seed", "3", "--out",
                   path("train.jsonl"), "--dev-n", "100", "--dev-out", path("dev.jsonl")});
  ASSERT_EQ(o.code, 0) << o.err;
  ASSERT_TRUE(fs::exists(path("train.jsonl")));
  ASSERT_TRUE(fs::exists(path("dev.jsonl")));

  o = run({"train", "--train", path("train.jsonl"), "--dev", path("dev.jsonl"), "--epochs", "5",
           "--loss", "bce", "--out", path("m.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const json hist = json::parse(o.out);
  EXPECT_EQ(hist["train_loss"].size(), 5u);
  EXPECT_TRUE(hist.contains("threshold"));

  o = run({"eval", "--model", path("m.json"), "--data", path("dev.jsonl")});
  ASSERT_EQ(o.code, 0) << o.err;
  const json ev = json::parse(o.out);
  EXPECT_EQ(ev["instances"].get<int>(), 100);
  EXPECT_EQ(ev["threshold"].get<double>(), hist["threshold"].get<double>());
  EXPECT_GT(ev["metrics"]["micro_f1"].get<double>(), 0.3);

  o = run({"eval", "--model", path("m.json"), "--data", path("dev.jsonl"), "--rule", "adaptive"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_FALSE(json::parse(o.out).contains("threshold"));

  o = run({"sweep", "--model", path("m.json"), "--data", path("dev.jsonl"), "--grid", "fine"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(json::parse(o.out).contains("curve"));
}

TEST_F(Cli, MissingInputFailsWithoutPartialOutput) {
  const Outcome o = run({"train", "--train", path("absent.jsonl"), "--dev", path("absent.jsonl"),
                         "--out", path("m.json")});
  EXPECT_EQ(o.code, ncrl::cli::kExitFailure);
  EXPECT_NE(o.err.find("not found"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(Cli, MalformedDatasetReportsLine) {
  std::ofstream(path("bad.jsonl")) << R"({"features":[1],"labels":[1],"k":2})" << "\n{\n";
  const Outcome o = run({"eval", "--model", path("m.json"), "--data", path("bad.jsonl")});
  EXPECT_EQ(o.code, ncrl::cli::kExitFailure);
  const Outcome g = run({"train", "--train", path("bad.jsonl"), "--dev", path("bad.jsonl"),
                         "--out", path("m.json")});
  EXPECT_NE(g.err.find("line 2"), std::string::npos) << g.err;
}

TEST_F(Cli, CompareIsReproducible) {
  auto a = kSmallCompare, b = kSmallCompare;
  a.insert(a.end(), {"--out", path("a.csv")});
  b.insert(b.end(), {"--out", path("b.csv")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  const std::string csv = slurp(path("a.csv"));
  EXPECT_EQ(csv, slurp(path("b.csv")));
  EXPECT_EQ(csv.rfind("experiment,loss,gamma,seed,split,metric,value,seconds\n", 0), 0u);
  const json summary = json::parse(slurp(path("a.csv.summary.json")));
  EXPECT_FALSE(summary["summary"].empty());
  EXPECT_FALSE(fs::exists(path("a.csv.tmp")));
}

TEST_F(Cli, ConfigFileWithOverride) {
  std::ofstream(path("run.cfg")) << "# small run\nk = 4\ndim = 6\ntrain-size = 120\n"
                                    "dev-size = 40\ntest-size = 40\nepochs = 2\nseeds = 1\n"
                                    "losses = bce\nno-timing = true\n";
  const Outcome base = run({"compare", "--config", path("run.cfg")});
  ASSERT_EQ(base.code, 0) << base.err;
  EXPECT_NE(base.out.find(",bce,0,1,test,micro_f1,"), std::string::npos) << base.out;
  const Outcome over = run({"compare", "--config", path("run.cfg"), "--losses", "atl"});
  ASSERT_EQ(over.code, 0) << over.err;
  EXPECT_EQ(over.out.find(",bce,"), std::string::npos);
  EXPECT_NE(over.out.find(",atl,"), std::string::npos);
  EXPECT_EQ(run({"compare", "--config", path("nope.cfg")}).code, ncrl::cli::kExitUsage);
}

TEST_F(Cli, AblateStudies) {
  const std::vector<std::string> common{"--k",   "4",          "--dim",  "6",
                                        "--train-size", "120", "--dev-size", "40",
                                        "--test-size", "40",   "--epochs", "1",
                                        "--seeds", "1",       "--no-timing"};
  auto ab = common;
  ab.insert(ab.begin(), "ablate");
  Outcome o = run(ab);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find(",bce+p_shift,"), std::string::npos);

  ab.insert(ab.end(), {"--study", "no-none"});
  o = run(ab);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("micro_f1_swept"), std::string::npos);

  auto sw = common;
  sw.insert(sw.begin(), "ablate");
  sw.insert(sw.end(), {"--sweep-gamma", "0,0.1"});
  o = run(sw);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("gamma_sweep,ncrl_final,0.1,"), std::string::npos);
}

TEST_F(Cli, GenDataFromText) {
  std::ofstream(path("t.tsv")) << "1,3\tthe quick brown fox\n\tnothing here\n2\tlazy dog\n";
  const Outcome o = run({"gen-data", "--from-text", path("t.tsv"), "--k", "3", "--dim", "32",
                         "--out", path("t.jsonl")});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream in(path("t.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_EQ(j["features"].size(), 32u);
    ++n;
  }
  EXPECT_EQ(n, 3u);
}

#ifdef NCRL_LAB_BIN
TEST_F(Cli, BinaryExitCodes) {
  const std::string bin = NCRL_LAB_BIN;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " grad-check --trials 5 > /dev/null").c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " bogus 2> /dev/null").c_str())), 2);
}
#endif
