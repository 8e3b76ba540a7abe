#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using krono::cli::run_cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "krono_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> verify_args(const fs::path& out) {
  return {"verify", "--n", "64", "--k", "1", "--p", "0.5", "--q", "0.5", "--eta", "0.05",
          "--kappa", "0.1", "--trials", "10", "--seed", "7", "--out", out.string()};
}

}  // namespace

TEST(CliLaw, EdgesAndDensityTable) {
  const auto dir = fresh_dir("law");
  const auto r = run({"law", "--p", "0.3", "--q", "0.6", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("edges 0.091001 0.988999"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "law_density.csv"));
  EXPECT_TRUE(fs::exists(dir / "law_transform.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));

  const auto half = fresh_dir("law_half");
  ASSERT_EQ(run({"law", "--p", "0.5", "--q", "0.5", "--grid", "101", "--out", half.string()}).code, 0);
  std::ifstream table(half / "law_density.csv");
  std::string line;
  bool found = false;
  while (std::getline(table, line)) {
    if (line.rfind("0.5,", 0) == 0) {
      EXPECT_NEAR(std::stod(line.substr(4)), 1.0 / M_PI, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(CliLaw, InvalidFractionIsUsageError) {
  const auto r = run({"law", "--p", "1.5", "--q", "0.5", "--out", fresh_dir("law_bad").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--p"), std::string::npos) << r.err;
}

TEST(CliParse, UnknownFlagsAndSubcommands) {
  EXPECT_EQ(run({"verify", "--frobnicate"}).code, 2);
  EXPECT_EQ(run({"dance"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"verify", "--n", "64", "--format", "xml", "--out", fresh_dir("fmt").string()}).code, 2);
}

TEST(CliVerify, ByteIdenticalReports) {
  const auto a = fresh_dir("verify_a");
  const auto b = fresh_dir("verify_b");
  ASSERT_EQ(run(verify_args(a)).code, 0);
  ASSERT_EQ(run(verify_args(b)).code, 0);
  const std::string csv = slurp(a / "report.csv");
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, slurp(b / "report.csv"));
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(CliVerify, HypothesisWarningInManifest) {
  const auto dir = fresh_dir("verify_k3");
  const auto r = run({"verify", "--n", "16", "--k", "3", "--eta", "0.05", "--trials", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  ASSERT_FALSE(manifest["warnings"].empty());
  EXPECT_EQ(manifest["warnings"][0].get<std::string>().rfind("hypothesis k ≤ c₀ log n violated", 0), 0u);
  EXPECT_EQ(manifest["schema"], "krono.manifest/1");
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
}

TEST(CliVerify, JsonFormatAndPlot) {
  const auto dir = fresh_dir("verify_json");
  const auto r = run({"verify", "--n", "32", "--eta", "0.1", "--trials", "2", "--format", "json", "--plot", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "overlay.svg"));
  const auto plotted = run({"plot", (dir / "report.json").string(), "--out", (dir / "again.svg").string()});
  ASSERT_EQ(plotted.code, 0) << plotted.err;
  EXPECT_TRUE(fs::exists(dir / "again.svg"));
}

TEST(CliVerify2, DftFactor) {
  const auto dir = fresh_dir("verify2");
  const auto r = run({"verify2", "--n", "16", "--v", "dft", "--n2", "4", "--eta", "0.1", "--trials", "2", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("N 64"), std::string::npos) << r.out;
}

TEST(CliVerify2, MissingVFileIsDataError) {
  const auto r = run({"verify2", "--n", "16", "--v", "file:/nonexistent.bin", "--n2", "4", "--eta", "0.1", "--out",
                      fresh_dir("verify2_bad").string()});
  EXPECT_EQ(r.code, 3);
}

TEST(CliPlot, CorruptCsvIsDataError) {
  const auto dir = fresh_dir("plot_bad");
  std::ofstream(dir / "bad.csv") << "index,eigenvalue\n0,0.5\n1,zzz\n";
  const auto r = run({"plot", (dir / "bad.csv").string(), "--out", (dir / "bad.svg").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("3"), std::string::npos) << r.err;
}

TEST(CliPlot, SampleThenPlot) {
  const auto dir = fresh_dir("sample");
  ASSERT_EQ(run({"sample", "--n", "8", "--k", "2", "--seed", "3", "--out", dir.string()}).code, 0);
  const auto r = run({"plot", (dir / "spectrum.csv").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = slurp(dir / "plot.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "plot.manifest.json"));
}

TEST(CliReplay, ReproducesOutputs) {
  const auto a = fresh_dir("replay_a");
  const auto b = fresh_dir("replay_b");
  ASSERT_EQ(run(verify_args(a)).code, 0);
  const auto r = run({"replay", (a / "manifest.json").string(), "--out", b.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv"));
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(CliProbeAndConverge, WriteOutputs) {
  const auto dir = fresh_dir("probe");
  ASSERT_EQ(run({"probe", "--n", "16", "--draws", "3", "--out", dir.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "probe.json"));
  EXPECT_EQ(run({"probe", "--n", "16", "--z-im", "0.1", "--out", dir.string()}).code, 2);

  const auto sweep = fresh_dir("converge");
  const auto r = run({"converge", "--sizes", "16,32,64", "--eta", "0.1", "--trials", "2", "--out", sweep.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("slope sup_m_dev"), std::string::npos);
  EXPECT_TRUE(fs::exists(sweep / "convergence.json"));
  EXPECT_EQ(run({"converge", "--sizes", "16,32", "--eta", "0.1", "--out", sweep.string()}).code, 2);
}

TEST(CliInterrupt, CancelledRunExits130) {
  std::atomic<bool> cancel{true};
  std::ostringstream out;
  std::ostringstream err;
  const auto dir = fresh_dir("interrupt");
  EXPECT_EQ(run_cli(verify_args(dir), out, err, &cancel), 130);
}
