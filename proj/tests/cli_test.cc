#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli/cli.h"
#include "codeil/binary_io.h"

namespace codeil::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("codeil_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"codeil"};
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::Run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // A 3-trajectory dataset and a config with a tiny training budget.
  void Generate() {
    WriteFile(Path("cfg.json"),
              R"({"train": {"max_epochs": 3}, "eval": {"validation": 1},)"
              R"( "model": {"nn_hidden": [8], "rmp_hidden": [8],)"
              R"( "joint_hidden": [8], "independent_hidden": [4]}})");
    ASSERT_EQ(Cli({"gen", "--n", "3", "--seed", "1", "--out", Path("gen")}), kExitOk)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, MissingSubcommandIsUsageError) {
  EXPECT_EQ(Cli({}), kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}), kExitUsage);
}

TEST_F(CliTest, ZeroTrajectoriesIsUsageError) {
  EXPECT_EQ(Cli({"gen", "--n", "0", "--out", Path("gen")}), kExitUsage);
}

TEST_F(CliTest, MissingDatasetIsDataError) {
  EXPECT_EQ(Cli({"train", "--method", "bc", "--data", Path("nope.bin"), "--out",
                 Path("t")}),
            kExitData);
}

TEST_F(CliTest, UnknownConfigKeyIsUsageError) {
  WriteFile(Path("bad.json"), R"({"train": {"no_such_key": 1}})");
  EXPECT_EQ(Cli({"gen", "--n", "1", "--config", Path("bad.json"), "--out",
                 Path("gen")}),
            kExitUsage);
}

TEST_F(CliTest, GenTrainEvalPlot) {
  Generate();
  for (const char* f : {"dataset.bin", "expert.ckpt", "config.json", "provenance.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "gen" / f)) << f;
  }
  const std::string data = Path("gen/dataset.bin");
  ASSERT_EQ(Cli({"train", "--method", "code", "--data", data, "--config",
                 Path("cfg.json"), "--out", Path("train")}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "train" / "policy.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "aux.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "history.csv"));
  ASSERT_EQ(Cli({"eval", "--checkpoint", Path("train/policy.ckpt"), "--data", data,
                 "--config", Path("cfg.json"), "--audit", "--out", Path("eval")}),
            kExitOk)
      << err_.str();
  for (const char* f : {"report.json", "trajectories.csv", "deviation.csv", "audit.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "eval" / f)) << f;
  }
  ASSERT_EQ(Cli({"plot", Path("eval/deviation.csv"), "--out", Path("plot")}), kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "plot" / "deviation.svg"));
}

TEST_F(CliTest, ExpertCheckpointEvaluatesButRejectsAudit) {
  Generate();
  const std::string data = Path("gen/dataset.bin");
  EXPECT_EQ(Cli({"eval", "--checkpoint", Path("gen/expert.ckpt"), "--data", data,
                 "--config", Path("cfg.json"), "--out", Path("eval")}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(Cli({"eval", "--checkpoint", Path("gen/expert.ckpt"), "--data", data,
                 "--config", Path("cfg.json"), "--audit", "--out", Path("eval2")}),
            kExitUsage);
}

TEST_F(CliTest, CorruptCheckpointIsDataError) {
  Generate();
  WriteFile(Path("junk.ckpt"), "not a checkpoint");
  EXPECT_EQ(Cli({"eval", "--checkpoint", Path("junk.ckpt"), "--data",
                 Path("gen/dataset.bin"), "--config", Path("cfg.json"), "--out",
                 Path("eval")}),
            kExitData);
}

TEST_F(CliTest, UnknownMethodIsUsageError) {
  Generate();
  EXPECT_EQ(Cli({"train", "--method", "magic", "--data", Path("gen/dataset.bin"),
                 "--out", Path("t")}),
            kExitUsage);
}

TEST_F(CliTest, PlotWithMissingInputIsDataError) {
  EXPECT_EQ(Cli({"plot", Path("missing.csv"), "--out", Path("plot")}), kExitData);
}

}  // namespace
}  // namespace codeil::cli
