#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const char* cli = std::getenv("ALMU_CLI");
  if (!cli) throw std::runtime_error("ALMU_CLI is not set");
  const std::string cmd = std::string(cli) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path temp_dir(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("almu-cli-" + tag + "-" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(CliClassify, AlmostUniversal) {
  const CliResult r = run("classify -a 2 -b 2 -c 1 -p 5 -k 1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("AlmostUniversal"), std::string::npos);
  EXPECT_NE(r.out.find("R2"), std::string::npos);
  EXPECT_NE(r.out.find("cond3"), std::string::npos);
}

TEST(CliClassify, LocallyObstructed) {
  const CliResult r = run("classify -a 1 -b 1 -c 8 -p 3 -k 1");
  EXPECT_EQ(r.code, 11) << r.out;
  EXPECT_NE(r.out.find("LocallyObstructed (fails at 2"), std::string::npos) << r.out;
}

TEST(CliClassify, NotAlmostUniversal) {
  const CliResult r = run("classify -a 3 -b 13 -c 2 -p 3");
  EXPECT_EQ(r.code, 10) << r.out;
  EXPECT_NE(r.out.find("t = 26"), std::string::npos);
}

TEST(CliClassify, InvalidInputNamesHypothesis) {
  const CliResult r = run("classify -a 3 -b 3 -c 3 -p 3 -k 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("p divides c"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("gcd"), std::string::npos) << r.out;
  EXPECT_EQ(run("classify -a 1 -b 1 -c 1 -p 4").code, 2);
  EXPECT_EQ(run("classify -a 1 -b 1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(CliClassify, JsonRecord) {
  const CliResult r = run("classify -a 1 -b 15 -c 1 -p 3 --json");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"schema_version\": 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"theorem\": \"R4\""), std::string::npos);
}

TEST(CliVerify, FixtureConsistent) {
  const CliResult r = run("verify -a 4 -b 1 -c 1 -p 3 -k 1 -N 50000");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("tail_clear   yes"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("consistent"), std::string::npos);
}

TEST(CliVerify, NegativeTriplePrintsFamily) {
  const CliResult r = run("verify -a 3 -b 13 -c 2 -p 3 -N 100000 --threshold 2000");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("family t*l^2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1:1"), std::string::npos);
}

TEST(CliVerify, ZeroBound) {
  const CliResult r = run("verify -a 1 -b 1 -c 1 -p 3 -N 0");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(CliVerify, InconsistentAuditIsNonzero) {
  // Default threshold 1000 leaves 1186 and 1778 unexplained.
  const CliResult r = run("verify -a 3 -b 13 -c 2 -p 3 -N 100000");
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("INCONSISTENT"), std::string::npos);
}

TEST(CliVerify, BudgetExceeded) {
  const CliResult r = run("verify -a 1 -b 1 -c 1 -p 3 -N 2000000000");
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST(CliScan, WritesRecordsAndResumes) {
  const auto dir = temp_dir("scan");
  const auto out = dir / "atlas.jsonl";
  const auto again = dir / "again.jsonl";
  CliResult r = run("scan -a 1..5 -b 1..5 -c 1..5 -p 3 -k 1 -N 2000 --threads 2 -o " + out.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(fs::path(out.string() + ".ckpt")));

  r = run("scan -a 1..5 -b 1..5 -c 1..5 -p 3 -N 2000 --stop-after 11 -o " + again.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("incomplete"), std::string::npos);
  r = run("scan -a 1..5 -b 1..5 -c 1..5 -p 3 -N 2000 --resume -o " + again.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("11 resumed"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(out), slurp(again));

  r = run("scan -a 1..5 -b 1..5 -c 1..5 -p 3 -N 3000 --resume -o " + again.string());
  EXPECT_EQ(r.code, 5) << r.out;
  fs::remove_all(dir);
}

TEST(CliScan, ConfigDefaultsAndOverrides) {
  const auto dir = temp_dir("cfg");
  {
    std::ofstream cfg(dir / "scan.cfg");
    cfg << "N=1500\nformat=csv\nthreads=2\n";
  }
  const auto a = dir / "a.csv", b = dir / "b.csv";
  CliResult r = run("scan -a 1..3 -b 1..3 -c 1..3 -p 3 --config " + (dir / "scan.cfg").string() + " -o " + a.string());
  EXPECT_EQ(r.code, 0) << r.out;
  r = run("scan -a 1..3 -b 1..3 -c 1..3 -p 3 -N 1500 --format csv -o " + b.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a).find(",1500,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliScan, EmptyRangeAndErrors) {
  const auto dir = temp_dir("err");
  CliResult r = run("scan -a 3..2 -b 1 -c 1 -p 3 -o " + (dir / "e.jsonl").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(fs::file_size(dir / "e.jsonl"), 0u);
  r = run("scan -a 1 -b 1 -c 1 -p 3 -o " + (dir / "no/such/dir.jsonl").string());
  EXPECT_EQ(r.code, 4) << r.out;
  r = run("scan -a 1..x -b 1 -c 1 -p 3 -o " + (dir / "x.jsonl").string());
  EXPECT_EQ(r.code, 2) << r.out;
  fs::remove_all(dir);
}
