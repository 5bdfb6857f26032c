#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "adagibbs/csv.hpp"
#include "adagibbs/random.hpp"
#include "adagibbs/svg_plot.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace adagibbs;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("adagibbs_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" ADAGIBBS_CLI "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

ChainTrace sample_trace() {
  ChainTrace t;
  t.points = {{1, 0.125, 1.0 / 3.0}, {2, 0.25, -2.5e-300}, {3, 0.375, 12345.678901234567}};
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, TraceRoundTripIsExact) {
  TempDir dir;
  const ChainTrace t = sample_trace();
  write_trace(dir / "t.csv", t);
  const ChainTrace back = load_trace(dir / "t.csv");
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.points[i].cycle, t.points[i].cycle);
    EXPECT_EQ(back.points[i].seconds, t.points[i].seconds);
    EXPECT_EQ(back.points[i].summary, t.points[i].summary);
  }
}

TEST(Csv, ReportLeavesAbsentValuesEmpty) {
  DiagnosticsReport r;
  r.batch_size = 8;
  r.tau_int = 2.0;
  r.ess = 50.0;
  r.sigma2 = 0.5;
  std::ostringstream out;
  write_reports(out, {r});
  EXPECT_EQ(out.str(), "m,tau_int,ess,sigma2,epsr,objective\n8,2,50,0.5,,\n");
}

TEST(Csv, AdaptationFooter) {
  AdaptationResult a;
  a.per_arm = {{1, 1e-6, 1e-5, 10.0, 1.1e-4, {}}, {4, 1e-6, 1e-5, 3.0, 4.2e-5, {}}};
  a.m_star = 4;
  std::stringstream s;
  write_adaptation(s, a);
  const CsvTable t = parse_csv(s, "adaptation");
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.numeric_column("m"), (std::vector<double>{1, 4}));
  EXPECT_EQ(t.footer_value("m_star"), "4");
  EXPECT_FALSE(t.footer_value("other").has_value());
}

TEST(Csv, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_csv(in, "x.csv").numeric_column("b");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("a,b\n1,2\n1,2,3\n").find("x.csv:3"), std::string::npos);
  EXPECT_NE(message("a,b,c\n1,2,3\nm_star,4\n1,2,3\n").find("x.csv:4"), std::string::npos);
  EXPECT_NE(message("a,b\n1,2\n\n3,oops\n").find("x.csv:4"), std::string::npos);
  EXPECT_NE(message("").find("empty"), std::string::npos);
  EXPECT_NE(message("a,,c\n").find("x.csv:1"), std::string::npos);
  EXPECT_NE(message("a,c\n1,2\n").find("no column 'b'"), std::string::npos);
}

TEST(Csv, MaskTimingColumns) {
  const std::string text = "cycle,seconds,summary\n1,0.5,2\n2,0.75,3\n";
  EXPECT_EQ(mask_timing_columns(text), "cycle,seconds,summary\n1,*,2\n2,*,3\n");
  const std::string adapt = "m,w_z,w_theta,tau_int,objective\n1,1e-6,2e-6,3,4\nm_star,1\n";
  EXPECT_EQ(mask_timing_columns(adapt), "m,w_z,w_theta,tau_int,objective\n1,*,*,3,*\nm_star,*\n");
  EXPECT_EQ(mask_timing_columns("metric,value\npurity,1\n"), "metric,value\npurity,1\n");
}

// ---------------------------------------------------------------------------
// SVG

TEST(Svg, DrawsSeriesAndEscapesText) {
  Plot p;
  p.title = "a < b & c";
  p.log_x = true;
  p.series.push_back({"line", {1, 10, 100}, {3, 2, 1}});
  p.series.push_back({"dots", {1, 100}, {1, 3}, true});
  const std::string svg = render_svg(p);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  p.series.push_back({"bad", {1, 2}, {1}});
  EXPECT_THROW(render_svg(p), DataError);
}

TEST(Svg, SkipsNonPositiveOnLogAxes) {
  Plot p;
  p.log_y = true;
  p.series.push_back({"s", {1, 2, 3}, {0.0, 1.0, std::nan("")}, true});
  const std::string svg = render_svg(p);
  std::size_t circles = 0;
  for (std::size_t at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) ++circles;
  EXPECT_EQ(circles, 1u);
}

// ---------------------------------------------------------------------------
// CLI

TEST(Cli, UsageErrorsExitOne) {
  TempDir dir;
  EXPECT_EQ(run_cli(dir, "").code, 1);
  EXPECT_EQ(run_cli(dir, "generate blasso").code, 1);
  EXPECT_EQ(run_cli(dir, "generate mixture --out x").code, 1);
  EXPECT_EQ(run_cli(dir, "experiment fig4").code, 1);
  EXPECT_EQ(run_cli(dir, "sample --model dpmm --data x --m 4").code, 1);
  EXPECT_EQ(run_cli(dir, "--help").code, 0);
}

TEST(Cli, MalformedTraceExitsTwoWithLine) {
  TempDir dir;
  spit(dir / "bad.csv", "cycle,seconds,summary\n1,0,1\n2,0\n");
  const auto r = run_cli(dir, "diagnose --trace bad.csv");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;

  spit(dir / "empty.csv", "cycle,seconds,summary\n");
  EXPECT_EQ(run_cli(dir, "diagnose --trace empty.csv").code, 2);
  EXPECT_EQ(run_cli(dir, "diagnose --trace missing.csv").code, 2);
  EXPECT_EQ(run_cli(dir, "sample --model blasso --data missing.txt --m 1 --cycles 10").code, 2);
}

TEST(Cli, DiagnoseAr1Trace) {
  TempDir dir;
  RandomStream rng(31);
  const auto x = testing_support::ar1(100000, 0.6, rng);
  ChainTrace t;
  for (std::size_t i = 0; i < x.size(); ++i) t.points.push_back({i + 1, 0.0, x[i]});
  write_trace(dir / "ar1.csv", t);
  const auto r = run_cli(dir, "diagnose --trace ar1.csv --out report.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable report = load_csv(dir / "report.csv");
  const double tau = report.numeric_column("tau_int").at(0);
  EXPECT_NEAR(tau, (1.0 + 0.6) / (1.0 - 0.6), 0.4);
  EXPECT_EQ(report.rows[0][report.column("epsr")], "");
  EXPECT_EQ(r.out, slurp(dir / "report.csv"));
}

TEST(Cli, IdenticalTracesHaveEpsrBelowOne) {
  TempDir dir;
  RandomStream rng(32);
  ChainTrace t;
  for (std::size_t i = 0; i < 500; ++i) t.points.push_back({i + 1, 0.0, rng.normal()});
  write_trace(dir / "a.csv", t);
  write_trace(dir / "b.csv", t);
  const auto r = run_cli(dir, "diagnose --trace a.csv b.csv --out report.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = load_csv(dir / "report.csv").numeric_column("epsr");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_LT(e[0], 1.0);
  EXPECT_NEAR(e[0], std::sqrt(499.0 / 500.0), 1e-12);
}

TEST(Cli, ConfigSectionsAndFlagPrecedence) {
  TempDir dir;
  spit(dir / "run.ini", "[generate]\nn = 50\nd = 2\nseed = 9\n[adapt]\nn-per-arm = 60\n");
  ASSERT_EQ(run_cli(dir, "--config run.ini generate blasso --out a.txt").code, 0);
  ASSERT_EQ(run_cli(dir, "--config run.ini generate blasso --out b.txt --n 70").code, 0);
  ASSERT_EQ(run_cli(dir, "generate blasso --out c.txt --n 50 --d 2 --seed 9").code, 0);
  EXPECT_EQ(slurp(dir / "a.txt").substr(0, 5), "50 2\n");
  EXPECT_EQ(slurp(dir / "b.txt").substr(0, 5), "70 2\n");
  EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "c.txt"));

  spit(dir / "bad.ini", "[generate]\nbogus = 1\n");
  EXPECT_EQ(run_cli(dir, "--config bad.ini generate blasso --out d.txt").code, 1);
  EXPECT_EQ(run_cli(dir, "--config nowhere.ini generate blasso --out d.txt").code, 1);
}

TEST(Cli, OutDirFromEnvironment) {
  TempDir dir;
  const auto r = run_cli(dir, "adapt --self-test --seed 3", "ADAGIBBS_OUT_DIR=envout");
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable t = load_csv(dir / "envout" / "adaptation.csv");
  EXPECT_EQ(t.footer_value("m_star"), "100");
}

TEST(Cli, SelfTestIsByteIdentical) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "adapt --self-test --seed 5 --out a.csv").code, 0);
  ASSERT_EQ(run_cli(dir, "adapt --self-test --seed 5 --out b.csv").code, 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Cli, SampleChainsOnThreads) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "generate dpmm --n 200 --k 3 --seed 2 --out g.txt").code, 0);
  const auto r = run_cli(dir, "sample --model dpmm --data g.txt --m 20 --cycles 200 --chains 3 --seed 4 --out-dir s");
  ASSERT_EQ(r.code, 0) << r.err;
  for (int j = 0; j < 3; ++j) EXPECT_EQ(load_trace(dir / ("s/trace_chain" + std::to_string(j) + ".csv")).size(), 200u);
  const CsvTable report = load_csv(dir / "s/report.csv");
  ASSERT_EQ(report.rows.size(), 3u);
  const auto e = report.numeric_column("epsr");
  EXPECT_EQ(e[0], e[2]);
  EXPECT_EQ(report.numeric_column("m")[0], 20.0);

  const std::string first = mask_timing_columns(slurp(dir / "s/trace_chain1.csv"));
  ASSERT_EQ(run_cli(dir, "sample --model dpmm --data g.txt --m 20 --cycles 200 --chains 3 --seed 4 --out-dir t").code, 0);
  EXPECT_EQ(mask_timing_columns(slurp(dir / "t/trace_chain1.csv")), first);
  EXPECT_NE(mask_timing_columns(slurp(dir / "t/trace_chain0.csv")), first);
}

TEST(Cli, SampleFullSweepsOnLda) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "generate lda --d 20 --k 2 --v 100 --min-length 20 --max-length 40 --out corpus").code, 0);
  EXPECT_TRUE(fs::exists(dir / "corpus/corpus.txt"));
  EXPECT_TRUE(fs::exists(dir / "corpus/split.txt"));
  EXPECT_TRUE(fs::exists(dir / "corpus/vocab.txt"));
  const auto r = run_cli(dir, "sample --model lda --data corpus --topics 2 --m N --cycles 30 --out-dir s");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_trace(dir / "s/trace_chain0.csv").size(), 30u);
  EXPECT_EQ(run_cli(dir, "sample --model lda --data corpus --m many --cycles 30").code, 2);
}
