#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "robust_filter/bench.hpp"
#include "robust_filter/robust_filter.hpp"

using namespace robust_filter;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("rf_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string(ROBUST_FILTER_CLI) + " " + args + " > /dev/null";
  cmd += err.empty() ? " 2> /dev/null" : " 2> '" + err.string() + "'";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

ExperimentConfig small_mean_config() {
  ExperimentConfig c = ExperimentConfig::defaults(Task::Mean);
  c.dims = {4, 8};
  c.samples_rule = SamplesRule::Fixed;
  c.fixed_n = 400;
  c.trials = 2;
  c.seed = 11;
  c.ransac_trials = 10;
  return c;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  RngStream r(1, 0);
  MatrixXd x = oracle::random_matrix(20, 3, r) * 1e3;
  x(0, 0) = 1e-300;
  x(1, 1) = -0.1;
  std::vector<Label> l(20, Label::Inlier);
  l[5] = Label::Outlier;
  std::stringstream ss;
  write_csv(ss, SampleSet(x, l), true);
  SampleSet back = read_csv(ss, true);
  EXPECT_EQ(back.data(), x);
  EXPECT_EQ(back.labels(), l);
}

TEST(Csv, ParseErrorsNameTheLine) {
  auto line_of = [](const std::string& text, bool labeled = false) -> std::size_t {
    std::istringstream in(text);
    try {
      (void)read_csv(in, labeled);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("1,2\n3,x\n"), 2u);
  EXPECT_EQ(line_of("1,2\n\n3,4,5\n"), 3u);
  EXPECT_EQ(line_of("1,2,0\n1,2,2\n", true), 2u);
  EXPECT_EQ(line_of("1,nan\n"), 1u);
  EXPECT_EQ(line_of("1,,2\n"), 1u);
  std::istringstream ok(" 1, 2\r\n\n+3,4e0\n");
  EXPECT_EQ(read_csv(ok).data(), (MatrixXd(2, 2) << 1, 2, 3, 4).finished());
  std::istringstream empty("\n\n");
  EXPECT_THROW(read_csv(empty), ParseError);
}

TEST(Config, FilterConfigJsonRoundTrip) {
  FilterConfig c;
  c.epsilon = 0.07;
  c.centering = Centering::Mean;
  c.cov_tail = CovarianceTail::Weakened;
  c.seed = 99;
  const FilterConfig back = filter_config_from(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  const ExperimentConfig e = small_mean_config();
  EXPECT_EQ(to_json(experiment_config_from(to_json(e))).dump(), to_json(e).dump());
}

TEST(Bench, PlotFilesHaveHeaderAndOneRowPerDim) {
  const fs::path dir = scratch("plot");
  const BenchResult r = run_bench(small_mean_config());
  write_bench_outputs(r, dir);
  for (const std::string& m : r.config.methods) {
    std::ifstream in(dir / plot_file_name(r.config, m));
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    EXPECT_EQ(line, "d err");
    int rows = 0;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      long d;
      double e;
      ASSERT_TRUE(ls >> d >> e) << line;
      EXPECT_EQ(d, r.config.dims[static_cast<std::size_t>(rows)]);
      ++rows;
    }
    EXPECT_EQ(rows, 2);
  }
  EXPECT_FALSE(r.any_failure);
}

TEST(Bench, RerunsAreByteIdenticalAcrossJobCounts) {
  const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  const ExperimentConfig cfg = small_mean_config();
  write_bench_outputs(run_bench(cfg, 1), a);
  write_bench_outputs(run_bench(cfg, 3), b);
  // Rerun from the sidecar alone.
  std::ifstream side(a / "config.json");
  write_bench_outputs(run_bench(experiment_config_from(Json::parse(side)), 2), c);
  for (const fs::path& other : {b, c}) {
    for (const std::string& m : cfg.methods)
      EXPECT_EQ(slurp(a / plot_file_name(cfg, m)), slurp(other / plot_file_name(cfg, m)));
    EXPECT_EQ(slurp(a / "config.json"), slurp(other / "config.json"));
    EXPECT_EQ(slurp(a / "cells.csv"), slurp(other / "cells.csv"));
  }
}

TEST(Bench, ExcessIsAgainstInlierOracle) {
  const BenchResult r = run_bench(small_mean_config());
  for (const auto& cell : r.cells) {
    ASSERT_TRUE(cell.ok) << cell.failure;
    const SampleSet data = experiment_data(r.config, cell.dimension, cell.trial);
    const double oracle = l2_error(empirical_mean(data.inliers()), VectorXd::Ones(cell.dimension));
    EXPECT_EQ(cell.oracle_error, oracle);
    EXPECT_EQ(cell.excess, cell.error - oracle);
  }
}

TEST(Bench, MethodFailureIsRecordedAndSweepContinues) {
  ExperimentConfig c = small_mean_config();
  c.methods = {"bogus", "empirical"};
  const BenchResult r = run_bench(c);
  EXPECT_TRUE(r.any_failure);
  ASSERT_EQ(r.cells.size(), 8u);
  for (const auto& cell : r.cells) EXPECT_EQ(cell.ok, cell.method == "empirical");
  EXPECT_EQ(r.series.at("empirical").size(), 2u);
  EXPECT_EQ(r.series.count("bogus"), 0u);
}

TEST(Bench, CovarianceTaskRuns) {
  ExperimentConfig c = ExperimentConfig::defaults(Task::Cov);
  c.dims = {4};
  c.samples_rule = SamplesRule::Fixed;
  c.fixed_n = 600;
  c.trials = 1;
  c.ransac_trials = 5;
  const BenchResult r = run_bench(c);
  for (const auto& cell : r.cells) EXPECT_TRUE(cell.ok) << cell.method << ": " << cell.failure;
}

TEST(Bench, ConfigValidation) {
  ExperimentConfig c = small_mean_config();
  c.dims = {8, 4};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.dims = {};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_mean_config();
  c.trials = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = ExperimentConfig::defaults(Task::Mean);
  EXPECT_EQ(c.samples(100), 100000);
  EXPECT_EQ(ExperimentConfig::defaults(Task::Cov).samples(20), 4000);
}

TEST(Cli, EstimateIdenticalPointsReturnsThePoint) {
  const fs::path dir = scratch("cli_est");
  spit(dir / "x.csv", "1.5,-2\n1.5,-2\n1.5,-2\n");
  for (const char* task : {"mean", "second-moment"}) {
    const fs::path out = dir / (std::string(task) + ".json");
    ASSERT_EQ(run("estimate --input " + (dir / "x.csv").string() + " --task " + task + " --output " + out.string()), 0);
    std::ifstream in(out);
    const Json j = Json::parse(in);
    EXPECT_EQ(j.at("estimate"), Json::parse("[1.5, -2.0]"));
  }
}

TEST(Cli, EstimateMatchesLibraryBitForBit) {
  const fs::path dir = scratch("cli_lib");
  RngStream r(2, 0);
  SampleSet s = corrupt(InlierModel::gaussian(VectorXd::Ones(6), MatrixXd::Identity(6, 6)),
                        NoiseModel::hypercube_mixture(), 3000, 0.1, r);
  {
    std::ofstream f(dir / "d.csv");
    write_csv(f, s, false);
  }
  ASSERT_EQ(run("estimate --input " + (dir / "d.csv").string() + " --output " + (dir / "o.json").string()), 0);
  std::ifstream in(dir / "o.json");
  const Json j = Json::parse(in);
  const MeanResult lib = filter_mean_subgaussian(read_csv_file((dir / "d.csv").string()), FilterConfig{});
  const auto cli = j.at("estimate").get<std::vector<double>>();
  EXPECT_EQ(cli, to_std(lib.estimate));
}

TEST(Cli, MalformedInputExitsTwoAndNamesLine) {
  const fs::path dir = scratch("cli_bad");
  spit(dir / "bad.csv", "1,2\n3,4\n5,oops\n");
  const fs::path err = dir / "err.txt";
  EXPECT_EQ(run("estimate --input " + (dir / "bad.csv").string(), err), 2);
  EXPECT_NE(slurp(err).find("line 3"), std::string::npos) << slurp(err);
  EXPECT_EQ(run("estimate --input " + (dir / "missing.csv").string()), 2);
  EXPECT_EQ(run("estimate"), 2);
  EXPECT_EQ(run("bench --dims 8,4 --out-dir " + (dir / "o").string()), 2);
}

TEST(Cli, CorruptIsDeterministicAndReproducibleFromSidecar) {
  const fs::path dir = scratch("cli_cor");
  const std::string flags = " --dim 5 --n 300 --epsilon 0.2 --noise hypercube --seed 4 --output ";
  ASSERT_EQ(run("corrupt" + flags + (dir / "a.csv").string()), 0);
  ASSERT_EQ(run("corrupt" + flags + (dir / "b.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  ASSERT_EQ(run("corrupt --config " + (dir / "a.csv.json").string() + " --output " + (dir / "c.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
  const SampleSet s = read_csv_file((dir / "a.csv").string(), true);
  EXPECT_EQ(s.size(), 300);
  std::ifstream side(dir / "a.csv.json");
  EXPECT_EQ(Json::parse(side).at("outliers").get<Index>(), s.count(Label::Outlier));

  ASSERT_EQ(run("corrupt --dim 3 --n 50 --epsilon 0 --output " + (dir / "z.csv").string()), 0);
  EXPECT_EQ(read_csv_file((dir / "z.csv").string(), true).count(Label::Outlier), 0);
}

TEST(Cli, BenchExitCodes) {
  const fs::path dir = scratch("cli_bench");
  const std::string base = "bench --dims 3,5 --trials 1 --epsilon 0.1 --methods empirical,prune --out-dir ";
  EXPECT_EQ(run(base + (dir / "ok").string()), 0);
  std::string first;
  std::ifstream in(dir / "ok" / "mean-empirical.txt");
  std::getline(in, first);
  EXPECT_EQ(first, "d err");
  EXPECT_EQ(run("bench --dims 3 --trials 1 --methods empirical,bogus --out-dir " + (dir / "fail").string()), 1);
  EXPECT_TRUE(fs::exists(dir / "fail" / "mean-empirical.txt"));
}

TEST(Cli, Project2OnPlanarDataIsARotation) {
  const fs::path dir = scratch("cli_prj");
  RngStream r(3, 0);
  MatrixXd x = oracle::random_matrix(200, 2, r);
  x.col(0) *= 3.0;
  {
    std::ofstream f(dir / "p.csv");
    write_matrix_csv(f, x);
  }
  ASSERT_EQ(run("project2 --cov-method empirical --input " + (dir / "p.csv").string() + " --output " +
                (dir / "q.csv").string()),
            0);
  const MatrixXd y = read_csv_file((dir / "q.csv").string()).data();
  ASSERT_EQ(y.cols(), 2);
  for (int i = 0; i < 200; i += 7)
    for (int j = 0; j < 200; j += 11)
      EXPECT_NEAR((y.row(i) - y.row(j)).norm(), (x.row(i) - x.row(j)).norm(), 1e-9);
  ASSERT_EQ(run("project2 --cov-method empirical --input " + (dir / "p.csv").string() + " --output " +
                (dir / "q2.csv").string()),
            0);
  EXPECT_EQ(slurp(dir / "q.csv"), slurp(dir / "q2.csv"));
}
