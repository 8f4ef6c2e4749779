#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ncrl/datagen.hpp"
#include "ncrl/io.hpp"

using namespace ncrl;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("ncrl_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  std::string error_of(const fs::path& p) {
    try {
      load_dataset(p);
    } catch (const std::exception& e) {
      return e.what();
    }
    return "";
  }

  fs::path dir_;
};

using DatasetIo = TempDir;
using CheckpointIo = TempDir;
using ConfigIo = TempDir;

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.num_labels = 5;
  c.feature_dim = 7;
  c.num_instances = 200;
  c.none_fraction_target = 0.4;
  c.seed = 12;
  return c;
}

}  // namespace

TEST_F(DatasetIo, RoundTripIsExact) {
  const Dataset d = generate(small_config());
  save_dataset(d, dir_ / "d.jsonl");
  const Dataset back = load_dataset(dir_ / "d.jsonl");
  EXPECT_EQ(back, d);
  EXPECT_FALSE(fs::exists(dir_ / "d.jsonl.tmp"));
}

TEST_F(DatasetIo, WireFormat) {
  Dataset d;
  d.instances = {{{0.5, -1.0}, LabelVector::from_flags({0, 1, 1})}, {{2.0, 0.0}, LabelVector(3)}};
  save_dataset(d, dir_ / "w.jsonl");
  std::ifstream in(dir_ / "w.jsonl");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  EXPECT_EQ(l1, R"({"features":[0.5,-1.0],"labels":[2,3],"k":3})");
  EXPECT_EQ(l2, R"({"features":[2.0,0.0],"labels":[],"k":3})");
}

TEST_F(DatasetIo, ExplicitNoneLabel) {
  const auto p = write("n.jsonl", R"({"features":[1],"labels":[0],"k":2,"none":true})"
                                  "\n");
  const Dataset d = load_dataset(p);
  EXPECT_TRUE(d.instances[0].labels.is_none());
}

TEST_F(DatasetIo, NoneFlagMustAgree) {
  const auto p = write("bad.jsonl", R"({"features":[1],"labels":[0],"k":2,"none":false})"
                                    "\n");
  const std::string msg = error_of(p);
  EXPECT_NE(msg.find("y0"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  const auto q = write("bad2.jsonl", R"({"features":[1],"labels":[0,1],"k":2})"
                                     "\n");
  EXPECT_NE(error_of(q).find("y0"), std::string::npos);
}

TEST_F(DatasetIo, EmptyFile) {
  const auto p = write("e.jsonl", "");
  EXPECT_NE(error_of(p).find("no instances"), std::string::npos);
}

TEST_F(DatasetIo, MissingFile) {
  EXPECT_NE(error_of(dir_ / "absent.jsonl").find("not found"), std::string::npos);
}

TEST_F(DatasetIo, MalformedLinesReportLineNumbers) {
  const std::string good = R"({"features":[1,2],"labels":[1],"k":2})";
  EXPECT_NE(error_of(write("a.jsonl", good + "\n{oops\n")).find("line 2"), std::string::npos);
  EXPECT_NE(error_of(write("b.jsonl", good + "\n" + good + "\n" +
                                          R"({"features":[1],"labels":[1],"k":2})" + "\n"))
                .find("line 3: inconsistent dims"),
            std::string::npos);
  EXPECT_NE(error_of(write("c.jsonl", R"({"features":[1],"labels":[3],"k":2})"))
                .find("outside"),
            std::string::npos);
  EXPECT_NE(error_of(write("d.jsonl", R"({"features":[1],"labels":[1]})")).find("'k'"),
            std::string::npos);
  EXPECT_NE(error_of(write("e.jsonl", good + "\n" + R"({"features":[1,2],"labels":[1],"k":3})"))
                .find("line 2: inconsistent dims"),
            std::string::npos);
}

TEST_F(DatasetIo, BlankLinesSkipped) {
  const std::string good = R"({"features":[1,2],"labels":[1],"k":2})";
  EXPECT_EQ(load_dataset(write("s.jsonl", good + "\n\n" + good + "\n")).size(), 2u);
}

TEST_F(CheckpointIo, LinearRoundTrip) {
  Rng rng(3);
  const Scorer s = LinearScorer::random(4, 6, rng);
  TrainConfig c;
  c.loss_kind = LossKind::bce;
  save_scorer(s, c, dir_ / "m.json", 0.37);
  const Checkpoint ck = load_checkpoint(dir_ / "m.json");
  EXPECT_EQ(ck.scorer, s);
  ASSERT_TRUE(ck.loss.has_value());
  EXPECT_EQ(*ck.loss, LossKind::bce);
  EXPECT_EQ(ck.threshold, 0.37);
  EXPECT_EQ(load_scorer(dir_ / "m.json"), s);
}

TEST_F(CheckpointIo, MlpRoundTrip) {
  Rng rng(4);
  MlpScorer m = MlpScorer::random(3, 5, 7, rng);
  m.parameters()[m.hidden_bias_offset()] = 0.125;
  const Scorer s = m;
  save_scorer(s, TrainConfig{}, dir_ / "mlp.json");
  const Checkpoint ck = load_checkpoint(dir_ / "mlp.json");
  EXPECT_EQ(ck.scorer, s);
  EXPECT_TRUE(std::isnan(ck.threshold));
}

TEST_F(CheckpointIo, RejectsBadShape) {
  const auto p = write("bad.json", R"({"format":"ncrl-scorer","architecture":"linear",
    "num_classes":1,"input_dim":2,"weights":[[1,2]],"biases":[0,0]})");
  EXPECT_THROW(load_scorer(p), std::runtime_error);
  EXPECT_THROW(load_scorer(write("x.json", "{}")), std::runtime_error);
}

TEST_F(ConfigIo, KeyValues) {
  const auto p = write("c.cfg", "# comment\n\nepochs = 5\n  lr=0.1  \nlosses = bce,atl\n");
  const auto kv = read_key_values(p);
  EXPECT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv.at("epochs"), "5");
  EXPECT_EQ(kv.at("lr"), "0.1");
  EXPECT_EQ(kv.at("losses"), "bce,atl");
  EXPECT_THROW(read_key_values(write("d.cfg", "novalue\n")), std::runtime_error);
  EXPECT_THROW(read_key_values(dir_ / "none.cfg"), std::runtime_error);
}

TEST_F(ConfigIo, AtomicWriteReplaces) {
  write_file_atomic(dir_ / "f.txt", "one");
  write_file_atomic(dir_ / "f.txt", "two");
  std::ifstream in(dir_ / "f.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "two");
  EXPECT_THROW(write_file_atomic(dir_ / "missing_dir" / "f.txt", "x"), std::runtime_error);
  EXPECT_FALSE(fs::exists(dir_ / "missing_dir"));
}
