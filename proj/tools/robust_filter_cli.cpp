// robust-filter: estimate | corrupt | bench | project2.
// Exit codes: 0 ok, 1 method failure, 2 input error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "robust_filter/bench.hpp"
#include "robust_filter/robust_filter.hpp"

namespace rf = robust_filter;

namespace {

constexpr int kOk = 0;
constexpr int kMethodFailure = 1;
constexpr int kInputError = 2;

// Input problems (bad files, bad flags, bad config) vs failures inside a method.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

rf::Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return rf::Json::parse(in);
  } catch (const rf::Json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

rf::SampleSet load_csv(const std::string& path, bool labeled) {
  try {
    return rf::read_csv_file(path, labeled);
  } catch (const rf::InvalidArgument& e) {
    throw InputError(path + ": " + e.what());
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

rf::Json matrix_json(const rf::MatrixXd& m) {
  rf::Json rows = rf::Json::array();
  for (rf::Index i = 0; i < m.rows(); ++i) {
    rf::Json r = rf::Json::array();
    for (rf::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

rf::Json vector_json(const rf::VectorXd& v) { return rf::Json(rf::to_std(v)); }

struct FilterFlags {
  std::string config;
  double epsilon = -1.0;
  std::string centering;
  bool adaptive = false;
  std::uint64_t seed = 0;
  bool seed_set = false;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON file with filter settings");
    app->add_option("--epsilon", epsilon, "Corruption fraction the filter assumes");
    app->add_option("--centering", centering, "mean | median")->check(CLI::IsMember({"mean", "median"}));
    app->add_flag("--adaptive", adaptive, "Search the tail constant per iteration");
    app->add_option("--seed", seed, "Filter RNG seed");
  }

  rf::FilterConfig resolve(const CLI::App* app) const {
    rf::FilterConfig c;
    if (!config.empty()) {
      const rf::Json j = read_json_file(config);
      c = rf::filter_config_from(j.contains("filter") ? j.at("filter") : j, c);
    }
    if (epsilon >= 0.0) c.epsilon = epsilon;
    if (!centering.empty()) c.centering = rf::centering_from(centering);
    if (adaptive) c.adaptive = true;
    if (app->count("--seed")) c.seed = seed;
    try {
      c.validate();
    } catch (const rf::InvalidArgument& e) {
      throw InputError(e.what());
    }
    return c;
  }
};

// Covariance estimate by name; the filter assumes mean-zero rows.
rf::MatrixXd estimate_cov(const std::string& method, const rf::SampleSet& s, const rf::FilterConfig& cfg) {
  if (method == "filter") return rf::filter_covariance(s, cfg).estimate.covariance;
  if (method == "empirical") return rf::empirical_cov(s, true);
  if (method == "prune") return rf::prune_then_estimate(s, cfg.epsilon, rf::PruneTarget::Cov);
  if (method == "ransac") {
    rf::RngStream rng(cfg.seed, rf::name_hash("ransac"));
    return rf::ransac_mve_cov(s, cfg.epsilon, 50, rng);
  }
  throw InputError("unknown covariance method '" + method + "'");
}

std::vector<rf::Index> parse_dims(const std::string& text) {
  std::vector<rf::Index> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      dims.push_back(static_cast<rf::Index>(v));
    } catch (const std::exception&) {
      throw InputError("--dims: cannot parse '" + part + "'");
    }
  }
  return dims;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust mean and covariance estimation by spectral filtering"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "Run a filter on a CSV sample");
  std::string est_input, est_task = "mean", est_output;
  bool est_labeled = false;
  double est_sigma = 1.0;
  FilterFlags est_flags;
  est->add_option("--input", est_input, "Headerless CSV, one point per row")->required();
  est->add_option("--task", est_task, "mean | second-moment | cov")
      ->check(CLI::IsMember({"mean", "second-moment", "cov"}));
  est->add_flag("--labeled", est_labeled, "Last CSV column is the outlier label");
  est->add_option("--sigma", est_sigma, "Second-moment bound for --task second-moment");
  est->add_option("--output", est_output, "JSON output path (default stdout)");
  est_flags.add(est);

  // corrupt
  auto* cor = app.add_subcommand("corrupt", "Draw a labeled corrupted sample");
  std::string cor_config, cor_output, cor_inliers = "gaussian", cor_noise = "zeros";
  rf::Index cor_dim = 10, cor_n = 1000;
  double cor_eps = 0.1, cor_mean = 0.0, cor_spike = 0.0, cor_sigma = 1.0, cor_point = 10.0;
  std::uint64_t cor_seed = 1;
  int cor_trial = 0;
  cor->add_option("--config", cor_config, "Sidecar JSON from an earlier run; other flags are ignored");
  cor->add_option("--dim", cor_dim, "Dimension");
  cor->add_option("--n", cor_n, "Number of points");
  cor->add_option("--epsilon", cor_eps, "Corruption fraction");
  cor->add_option("--inliers", cor_inliers, "gaussian | heavy-tail");
  cor->add_option("--mean-value", cor_mean, "Every coordinate of the inlier mean");
  cor->add_option("--spike-scale", cor_spike, "Gaussian covariance I + s e1 e1^T");
  cor->add_option("--sigma", cor_sigma, "Heavy-tail scale");
  cor->add_option("--noise", cor_noise, "hypercube | zeros | skewed | europe | pointmass");
  cor->add_option("--point-scale", cor_point, "Point mass location along e1");
  cor->add_option("--seed", cor_seed, "Seed");
  cor->add_option("--trial", cor_trial, "Trial index within the seed");
  cor->add_option("--output", cor_output, "CSV path; the sidecar goes to <output>.json")->required();

  // bench
  auto* ben = app.add_subcommand("bench", "Synthetic benchmark sweep");
  std::string ben_config, ben_task = "mean", ben_dims, ben_noise, ben_methods, ben_out = "bench-out", ben_centering;
  double ben_eps = -1.0, ben_spike = 10.0;
  int ben_trials = 0;
  unsigned ben_jobs = 0;
  std::uint64_t ben_seed = 1;
  bool ben_adaptive = false;
  ben->add_option("--config", ben_config, "config.json from an earlier run; flags given explicitly override it");
  ben->add_option("--task", ben_task, "mean | cov")->check(CLI::IsMember({"mean", "cov"}));
  ben->add_option("--dims", ben_dims, "Comma-separated ascending dimensions");
  ben->add_option("--epsilon", ben_eps, "Corruption fraction");
  ben->add_option("--noise", ben_noise, "hypercube | zeros | skewed | europe | pointmass");
  ben->add_option("--methods", ben_methods, "Comma-separated method names");
  ben->add_option("--trials", ben_trials, "Trials per dimension");
  ben->add_option("--seed", ben_seed, "Seed");
  ben->add_option("--out-dir", ben_out, "Output directory");
  ben->add_option("--centering", ben_centering, "mean | median")->check(CLI::IsMember({"mean", "median"}));
  ben->add_flag("--adaptive", ben_adaptive, "Adaptive tail constant");
  ben->add_option("--spike-scale", ben_spike, "Covariance spike when --noise skewed");
  ben->add_option("--jobs", ben_jobs, "Worker threads (0 = all cores)");

  // project2
  auto* prj = app.add_subcommand("project2", "Project onto the top two eigenvectors of a covariance estimate");
  std::string prj_input, prj_method = "filter", prj_output;
  FilterFlags prj_flags;
  prj->add_option("--input", prj_input, "Headerless CSV")->required();
  prj->add_option("--cov-method", prj_method, "filter | empirical | prune | ransac");
  prj->add_option("--output", prj_output, "CSV output path (default stdout)");
  prj_flags.add(prj);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*est) {
      const rf::FilterConfig cfg = est_flags.resolve(est);
      const rf::SampleSet s = load_csv(est_input, est_labeled);
      if (!(est_sigma > 0.0)) throw InputError("--sigma must be positive");
      rf::Json out;
      out["task"] = est_task;
      out["config"] = rf::to_json(cfg);
      if (est_task == "cov") {
        rf::CovarianceResult r = rf::filter_covariance(s, cfg);
        out["estimate"] = matrix_json(r.estimate.covariance);
        out["diagnostics"] = rf::diagnostics_to_json(r.diagnostics);
      } else {
        rf::MeanResult r = est_task == "mean" ? rf::filter_mean_subgaussian(s, cfg)
                                              : rf::filter_mean_second_moment(s, cfg.epsilon, est_sigma, cfg);
        out["estimate"] = vector_json(r.estimate);
        out["diagnostics"] = rf::diagnostics_to_json(r.diagnostics);
      }
      emit(est_output, out.dump(2) + "\n");
      return kOk;
    }

    if (*cor) {
      rf::ExperimentConfig c;
      rf::Index d = cor_dim;
      int trial = cor_trial;
      if (!cor_config.empty()) {
        const rf::Json j = read_json_file(cor_config);
        c = rf::experiment_config_from(j.at("experiment"));
        d = j.at("d").get<rf::Index>();
        trial = j.at("trial").get<int>();
      } else {
        c.dims = {cor_dim};
        c.epsilon = cor_eps;
        c.samples_rule = rf::SamplesRule::Fixed;
        c.fixed_n = cor_n;
        c.inliers = {cor_inliers, cor_mean, cor_spike, cor_sigma};
        c.noise = {cor_noise, cor_point};
        c.methods = {"empirical"};
        c.trials = 1;
        c.seed = cor_seed;
      }
      rf::SampleSet s = [&] {
        try {
          if (!(c.epsilon >= 0.0 && c.epsilon < 0.5)) throw rf::InvalidArgument("--epsilon outside [0, 1/2)");
          if (c.samples(d) < 1 || d < 1) throw rf::InvalidArgument("--n and --dim must be positive");
          return rf::experiment_data(c, d, trial);
        } catch (const rf::InvalidArgument& e) {
          throw InputError(e.what());
        }
      }();
      std::ostringstream csv;
      rf::write_csv(csv, s, true);
      emit(cor_output, csv.str());
      rf::Json side;
      side["experiment"] = rf::to_json(c);
      side["d"] = d;
      side["trial"] = trial;
      side["data_stream"] = rf::data_stream(d, trial);
      side["outliers"] = s.count(rf::Label::Outlier);
      emit(cor_output + ".json", side.dump(2) + "\n");
      return kOk;
    }

    if (*ben) {
      rf::ExperimentConfig c = rf::ExperimentConfig::defaults(rf::task_from(ben_task));
      if (!ben_config.empty()) c = rf::experiment_config_from(read_json_file(ben_config));
      if (ben->count("--task") && rf::task_from(ben_task) != c.task) {
        c = rf::ExperimentConfig::defaults(rf::task_from(ben_task));
      }
      if (!ben_dims.empty()) c.dims = parse_dims(ben_dims);
      if (ben_eps >= 0.0) {
        c.epsilon = ben_eps;
        if (ben_eps > 0.0) c.filter.epsilon = ben_eps;
      }
      if (!ben_noise.empty()) {
        c.noise.kind = ben_noise;
        if (ben_noise == "skewed") c.inliers.spike_scale = ben_spike;
      } else if (ben->count("--spike-scale")) {
        c.inliers.spike_scale = ben_spike;
      }
      if (!ben_methods.empty()) c.methods = split_list(ben_methods);
      if (ben_trials > 0) c.trials = ben_trials;
      if (ben->count("--seed")) c.seed = ben_seed;
      if (!ben_centering.empty()) c.filter.centering = rf::centering_from(ben_centering);
      if (ben_adaptive) c.filter.adaptive = true;
      try {
        c.validate();
        for (rf::Index d : c.dims) (void)rf::build_noise(c.noise, d, c.seed), (void)rf::build_inliers(c.inliers, d);
      } catch (const rf::InvalidArgument& e) {
        throw InputError(e.what());
      }
      const rf::BenchResult r = rf::run_bench(c, ben_jobs);
      rf::write_bench_outputs(r, ben_out);
      for (const auto& cell : r.cells)
        if (!cell.ok)
          std::cerr << "method failure: d=" << cell.dimension << " method=" << cell.method
                    << " trial=" << cell.trial << ": " << cell.failure << "\n";
      return r.any_failure ? kMethodFailure : kOk;
    }

    if (*prj) {
      const rf::FilterConfig cfg = prj_flags.resolve(prj);
      const rf::SampleSet s = load_csv(prj_input, false);
      if (s.dim() < 2) throw InputError("project2 needs at least 2 columns");
      const rf::MatrixXd cov = estimate_cov(prj_method, s, cfg);
      const rf::SymmetricEigen eig = rf::jacobi_eigen(cov);
      const rf::Index d = s.dim();
      rf::MatrixXd basis(d, 2);
      basis.col(0) = eig.vectors.col(d - 1);
      basis.col(1) = eig.vectors.col(d - 2);
      std::ostringstream csv;
      rf::write_matrix_csv(csv, s.data() * basis);
      emit(prj_output, csv.str());
      return kOk;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const rf::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "method failure: " << e.what() << "\n";
    return kMethodFailure;
  }
  return kOk;
}
