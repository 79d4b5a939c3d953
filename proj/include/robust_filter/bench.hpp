#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "adversary.hpp"
#include "baselines.hpp"
#include "config_json.hpp"
#include "csv.hpp"
#include "filter_covariance.hpp"
#include "filter_mean.hpp"
#include "scenario.hpp"

namespace robust_filter {

enum class Task { Mean, Cov };
enum class SamplesRule { PaperMean, PaperCov, Fixed };

inline std::string to_string(Task t) { return t == Task::Mean ? "mean" : "cov"; }
inline Task task_from(const std::string& s) {
  if (s == "mean") return Task::Mean;
  if (s == "cov") return Task::Cov;
  throw InvalidArgument("unknown task '" + s + "'");
}
inline std::string to_string(SamplesRule r) {
  return r == SamplesRule::PaperMean ? "paper-mean" : r == SamplesRule::PaperCov ? "paper-cov" : "fixed";
}
inline SamplesRule samples_rule_from(const std::string& s) {
  if (s == "paper-mean") return SamplesRule::PaperMean;
  if (s == "paper-cov") return SamplesRule::PaperCov;
  if (s == "fixed") return SamplesRule::Fixed;
  throw InvalidArgument("unknown samples rule '" + s + "'");
}

struct ExperimentConfig {
  Task task = Task::Mean;
  std::vector<Index> dims{25, 50, 100};
  double epsilon = 0.1;
  SamplesRule samples_rule = SamplesRule::PaperMean;
  Index fixed_n = 0;
  InlierSpec inliers{"gaussian", 1.0, 0.0, 1.0};
  NoiseSpec noise{"hypercube", 10.0};
  std::vector<std::string> methods{"filter", "empirical", "prune", "geomedian", "ransac"};
  int trials = 3;
  std::uint64_t seed = 1;
  FilterConfig filter{};  // epsilon here is what the filters are told
  int ransac_trials = 50;
  double geomedian_tol = 1e-9;

  static ExperimentConfig defaults(Task task) {
    ExperimentConfig c;
    c.task = task;
    if (task == Task::Cov) {
      c.dims = {10, 20, 30};
      c.epsilon = 0.05;
      c.samples_rule = SamplesRule::PaperCov;
      c.inliers = {"gaussian", 0.0, 0.0, 1.0};
      c.noise = {"zeros", 10.0};
      c.methods = {"filter", "empirical", "prune", "ransac"};
      c.filter.epsilon = 0.05;
    }
    return c;
  }

  Index samples(Index d) const {
    // n = 10 d / eps^2 or 0.5 d / eps^2, rounded to nearest.
    switch (samples_rule) {
      case SamplesRule::PaperMean: return static_cast<Index>(std::llround(10.0 * static_cast<double>(d) / (epsilon * epsilon)));
      case SamplesRule::PaperCov: return static_cast<Index>(std::llround(0.5 * static_cast<double>(d) / (epsilon * epsilon)));
      case SamplesRule::Fixed: return fixed_n;
    }
    return fixed_n;
  }

  void validate() const {
    if (dims.empty()) throw InvalidArgument("ExperimentConfig: dims must be nonempty");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (dims[i] < 1) throw InvalidArgument("ExperimentConfig: dims must be positive");
      if (i > 0 && dims[i] <= dims[i - 1]) throw InvalidArgument("ExperimentConfig: dims must be ascending");
    }
    if (trials < 1) throw InvalidArgument("ExperimentConfig: trials must be >= 1");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidArgument("ExperimentConfig: epsilon outside [0, 1/2)");
    if ((samples_rule != SamplesRule::Fixed) && epsilon == 0.0)
      throw InvalidArgument("ExperimentConfig: paper sample rules need epsilon > 0");
    if (samples_rule == SamplesRule::Fixed && fixed_n < 2) throw InvalidArgument("ExperimentConfig: fixed n must be >= 2");
    if (methods.empty()) throw InvalidArgument("ExperimentConfig: no methods");
    filter.validate();
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["task"] = to_string(c.task);
  j["dims"] = c.dims;
  j["epsilon"] = c.epsilon;
  j["samples_rule"] = to_string(c.samples_rule);
  j["fixed_n"] = c.fixed_n;
  j["inliers"] = to_json(c.inliers);
  j["noise"] = to_json(c.noise);
  j["methods"] = c.methods;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["filter"] = to_json(c.filter);
  j["ransac_trials"] = c.ransac_trials;
  j["geomedian_tol"] = c.geomedian_tol;
  return j;
}

inline ExperimentConfig experiment_config_from(const Json& j) {
  const Task task = j.contains("task") ? task_from(j.at("task").get<std::string>()) : Task::Mean;
  ExperimentConfig c = ExperimentConfig::defaults(task);
  if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<Index>>();
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  if (j.contains("samples_rule")) c.samples_rule = samples_rule_from(j.at("samples_rule").get<std::string>());
  if (j.contains("fixed_n")) c.fixed_n = j.at("fixed_n").get<Index>();
  if (j.contains("inliers")) c.inliers = inlier_spec_from(j.at("inliers"), c.inliers);
  if (j.contains("noise")) c.noise = noise_spec_from(j.at("noise"), c.noise);
  if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("trials")) c.trials = j.at("trials").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.filter.epsilon = c.epsilon > 0.0 ? c.epsilon : c.filter.epsilon;
  if (j.contains("filter")) c.filter = filter_config_from(j.at("filter"), c.filter);
  if (j.contains("ransac_trials")) c.ransac_trials = j.at("ransac_trials").get<int>();
  if (j.contains("geomedian_tol")) c.geomedian_tol = j.at("geomedian_tol").get<double>();
  return c;
}

inline std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t data_stream(Index d, int trial) {
  return mix_ids({streams::kData, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(trial)});
}

inline SampleSet experiment_data(const ExperimentConfig& c, Index d, int trial) {
  RngStream rng(c.seed, data_stream(d, trial));
  return corrupt(build_inliers(c.inliers, d), build_noise(c.noise, d, c.seed), c.samples(d), c.epsilon, rng);
}

struct CellResult {
  Index dimension = 0;
  std::string method;
  int trial = 0;
  std::uint64_t data_stream = 0;
  std::uint64_t method_seed = 0;
  bool ok = true;
  std::string failure;
  double error = 0.0;
  double oracle_error = 0.0;
  double excess = 0.0;
  double wall_time = 0.0;
  std::optional<FilterDiagnostics> diagnostics;
};

struct BenchResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  // method -> (d, mean excess over successful trials)
  std::map<std::string, std::vector<std::pair<Index, double>>> series;
  bool any_failure = false;

  std::vector<ExperimentRow> rows() const {
    std::vector<ExperimentRow> out;
    for (const auto& c : cells)
      if (c.ok) out.push_back({c.dimension, c.method, c.excess, c.wall_time, c.method_seed});
    return out;
  }
};

// Error of one method on one dataset against the population truth.
inline double run_method(const ExperimentConfig& c, const std::string& method, const SampleSet& data,
                         const VectorXd& true_mean, const MatrixXd& true_cov, std::uint64_t method_seed,
                         std::optional<FilterDiagnostics>& diag) {
  FilterConfig fc = c.filter;
  fc.seed = method_seed;
  RngStream rng(c.seed, method_seed);
  if (c.task == Task::Mean) {
    VectorXd est;
    if (method == "filter") {
      MeanResult r = filter_mean_subgaussian(data, fc);
      est = r.estimate;
      diag = std::move(r.diagnostics);
    } else if (method == "second-moment") {
      MeanResult r = filter_mean_second_moment(data, fc.epsilon, c.inliers.sigma, fc);
      est = r.estimate;
      diag = std::move(r.diagnostics);
    } else if (method == "empirical") {
      est = empirical_mean(data);
    } else if (method == "prune") {
      est = prune_then_estimate(data, fc.epsilon, PruneTarget::Mean);
    } else if (method == "geomedian") {
      est = geometric_median(data, c.geomedian_tol).median;
    } else if (method == "ransac") {
      est = ransac_mean(data, fc.epsilon, c.ransac_trials, rng);
    } else {
      throw InvalidArgument("unknown mean method '" + method + "'");
    }
    return l2_error(est, true_mean);
  }
  MatrixXd est;
  if (method == "filter") {
    CovarianceResult r = filter_covariance(data, fc);
    est = r.estimate.covariance;
    diag = std::move(r.diagnostics);
  } else if (method == "empirical") {
    est = empirical_cov(data, true);
  } else if (method == "prune") {
    est = prune_then_estimate(data, fc.epsilon, PruneTarget::Cov);
  } else if (method == "ransac") {
    est = ransac_mve_cov(data, fc.epsilon, c.ransac_trials, rng);
  } else {
    throw InvalidArgument("unknown covariance method '" + method + "'");
  }
  return mahalanobis_error(est, true_cov);
}

// Runs every method on one (d, trial) dataset.
inline std::vector<CellResult> run_bench_group(const ExperimentConfig& c, Index d, int trial) {
  const InlierModel model = build_inliers(c.inliers, d);
  const VectorXd true_mean = model.mean;
  const MatrixXd true_cov = model.population_covariance();
  const SampleSet data = experiment_data(c, d, trial);
  const SampleSet inl = data.inliers();
  const double oracle = c.task == Task::Mean ? l2_error(empirical_mean(inl), true_mean)
                                             : mahalanobis_error(empirical_cov(inl, true), true_cov);
  std::vector<CellResult> out;
  for (const std::string& m : c.methods) {
    CellResult cell;
    cell.dimension = d;
    cell.method = m;
    cell.trial = trial;
    cell.data_stream = data_stream(d, trial);
    cell.method_seed = mix_ids({streams::kMethod, cell.data_stream, name_hash(m)});
    cell.oracle_error = oracle;
    const auto start = std::chrono::steady_clock::now();
    try {
      cell.error = run_method(c, m, data, true_mean, true_cov, cell.method_seed, cell.diagnostics);
      cell.excess = cell.error - oracle;
      if (!std::isfinite(cell.excess)) throw Error("non-finite error");
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.failure = e.what();
    }
    cell.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(cell));
  }
  return out;
}

// (d, trial) groups run on `jobs` threads (0 = hardware concurrency); cells
// are stored by group index, so results do not depend on scheduling.
inline BenchResult run_bench(const ExperimentConfig& c, unsigned jobs = 0) {
  c.validate();
  std::vector<std::pair<Index, int>> groups;
  for (Index d : c.dims)
    for (int trial = 0; trial < c.trials; ++trial) groups.emplace_back(d, trial);
  std::vector<std::vector<CellResult>> slots(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(groups.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      try {
        slots[g] = run_bench_group(c, groups[g].first, groups[g].second);
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  BenchResult out;
  out.config = c;
  std::map<std::string, std::map<Index, std::pair<double, int>>> sums;
  for (auto& group : slots)
    for (auto& cell : group) {
      if (cell.ok) {
        auto& acc = sums[cell.method][cell.dimension];
        acc.first += cell.excess;
        acc.second += 1;
      } else {
        out.any_failure = true;
      }
      out.cells.push_back(std::move(cell));
    }
  for (const std::string& m : c.methods)
    for (Index d : c.dims) {
      const auto& acc = sums[m][d];
      if (acc.second > 0) out.series[m].emplace_back(d, acc.first / acc.second);
    }
  return out;
}

inline std::string plot_file_name(const ExperimentConfig& c, const std::string& method) {
  return to_string(c.task) + "-" + method + ".txt";
}

// Writes one "d err" file per method, config.json (the full resolved config;
// `bench --config config.json` reproduces the run), cells.csv (every
// deterministic per-cell number) and summary.json (adds wall times and
// diagnostics, so it differs between runs).
inline void write_bench_outputs(const BenchResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const std::string& m : r.config.methods) {
    std::ofstream f(dir / plot_file_name(r.config, m));
    f << "d err\n";
    const auto it = r.series.find(m);
    if (it != r.series.end())
      for (const auto& [d, e] : it->second) f << d << ' ' << format_double(e) << '\n';
  }
  {
    std::ofstream f(dir / "config.json");
    f << to_json(r.config).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "cells.csv");
    f << "d,method,trial,data_stream,method_seed,ok,error,oracle_error,excess\n";
    for (const auto& c : r.cells)
      f << c.dimension << ',' << c.method << ',' << c.trial << ',' << c.data_stream << ',' << c.method_seed << ','
        << (c.ok ? 1 : 0) << ',' << format_double(c.error) << ',' << format_double(c.oracle_error) << ','
        << format_double(c.excess) << '\n';
  }
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json j{{"d", c.dimension},
           {"method", c.method},
           {"trial", c.trial},
           {"data_stream", c.data_stream},
           {"method_seed", c.method_seed},
           {"ok", c.ok},
           {"wall_time", c.wall_time}};
    if (c.ok) {
      j["error"] = c.error;
      j["oracle_error"] = c.oracle_error;
      j["excess"] = c.excess;
    } else {
      j["failure"] = c.failure;
    }
    if (c.diagnostics) j["diagnostics"] = diagnostics_to_json(*c.diagnostics);
    cells.push_back(std::move(j));
  }
  Json summary;
  summary["config"] = to_json(r.config);
  summary["any_failure"] = r.any_failure;
  Json series = Json::object();
  for (const auto& [m, pts] : r.series) {
    Json a = Json::array();
    for (const auto& [d, e] : pts) a.push_back(Json{{"d", d}, {"err", e}});
    series[m] = a;
  }
  summary["series"] = series;
  summary["cells"] = cells;
  std::ofstream f(dir / "summary.json");
  f << summary.dump(2) << '\n';
}

}  // namespace robust_filter
