#pragma once

#include <cmath>
#include <utility>

#include "filter_common.hpp"
#include "naive_prune.hpp"
#include "tail.hpp"

namespace robust_filter {

namespace streams {
inline constexpr std::uint64_t kMeanFilter = 0x6d65616e;
inline constexpr std::uint64_t kSecondMomentFilter = 0x32ed;
inline constexpr std::uint64_t kCovarianceFilter = 0xc0;
}  // namespace streams

inline double mean_filter_threshold(const FilterConfig& cfg) {
  return cfg.thres_constant * cfg.epsilon * std::log(1.0 / cfg.epsilon);
}

// One round for sub-gaussian data with identity covariance.
inline StepOutcome<VectorXd> filter_mean_subgaussian_step(const SampleSet& s, const FilterConfig& cfg, double c2,
                                                          RngStream& rng) {
  const MatrixXd& x = s.data();
  const VectorXd mu = sample_mean(x);
  MatrixXd dev = second_moment_about(x, mu);
  dev.diagonal().array() -= 1.0;
  const EigenPair top = top_eigenpair(dev, cfg.power, rng);
  const double lambda = std::abs(top.value);

  StepInfo info;
  info.spectral_value = lambda;
  info.power_converged = top.converged;
  if (lambda <= mean_filter_threshold(cfg)) return StepOutcome<VectorXd>::estimate(mu, std::move(info));

  const double delta = 3.0 * std::sqrt(cfg.epsilon * lambda);
  const std::vector<double> proj = to_std(x * top.vector);
  const double center = robust_center(proj, cfg.centering);
  const TailFunction tail =
      TailFunction::sub_gaussian(static_cast<double>(s.dim()), cfg.epsilon, cfg.tau, cfg.nu, c2);
  const std::optional<Violation> v = find_violation_cut(proj, center, delta, tail);
  if (!v) throw FilterStuck("no threshold violates the sub-gaussian tail bound", lambda);

  IndexList keep;
  for (std::size_t i = 0; i < proj.size(); ++i)
    if (std::abs(proj[i] - center) < v->cut) keep.push_back(static_cast<Index>(i));
  info.c2_dependent = true;
  info.thresholds.push_back({v->t, delta, c2});
  return StepOutcome<VectorXd>::retained(std::move(keep), std::move(info));
}

inline StepOutcome<VectorXd> filter_mean_subgaussian_step(const SampleSet& s, const FilterConfig& cfg) {
  RngStream rng(cfg.seed, streams::kMeanFilter);
  return filter_mean_subgaussian_step(s, cfg, cfg.c2_initial, rng);
}

struct MeanResult {
  VectorXd estimate;
  FilterDiagnostics diagnostics;
};

// NaivePrune once, then filter until the spectral test passes.
inline MeanResult filter_mean_subgaussian(const SampleSet& s, const FilterConfig& cfg) {
  cfg.validate();
  MeanResult r;
  FilterDiagnostics& diag = r.diagnostics;
  diag.initial_size = s.size();
  IndexList current = naive_prune(s, cfg.tau, cfg.nu);
  if (current.empty()) throw Error("NaivePrune removed every point");
  diag.pruned = s.size() - static_cast<Index>(current.size());
  diag.removed_per_iteration.push_back(diag.pruned);

  RngStream rng(cfg.seed, streams::kMeanFilter);
  auto step = [&](const SampleSet& sub, double c2) { return filter_mean_subgaussian_step(sub, cfg, c2, rng); };
  auto fallback = [](const SampleSet& sub) { return sample_mean(sub.data()); };
  r.estimate = run_filter_loop<VectorXd>(s, std::move(current), cfg, cfg.c2_initial, cfg.adaptive, step,
                                         fallback, diag);
  record_provenance(s, diag);
  return r;
}

// One round for bounded second moment (covariance <= I after rescaling).
inline StepOutcome<VectorXd> filter_mean_second_moment_step(const SampleSet& s, RngStream& rng,
                                                            const PowerOptions& power = {}) {
  const MatrixXd& x = s.data();
  const VectorXd mu = sample_mean(x);
  const EigenPair top = top_eigenpair(second_moment_about(x, mu), power, rng);
  StepInfo info;
  info.spectral_value = top.value;
  info.power_converged = top.converged;
  if (top.value <= 9.0) return StepOutcome<VectorXd>::estimate(mu, std::move(info));

  const VectorXd proj = ((x.rowwise() - mu.transpose()) * top.vector).cwiseAbs();
  const double z = std::sqrt(rng.uniform_pos());
  const double t = z * proj.maxCoeff();
  IndexList keep;
  for (Index i = 0; i < proj.size(); ++i)
    if (proj(i) < t) keep.push_back(i);
  if (keep.empty()) throw FilterStuck("random threshold would remove every point", top.value);
  info.thresholds.push_back({t, 0.0, std::numeric_limits<double>::quiet_NaN()});
  return StepOutcome<VectorXd>::retained(std::move(keep), std::move(info));
}

// Divides by sigma, filters, multiplies back.
inline MeanResult filter_mean_second_moment(const SampleSet& s, double epsilon, double sigma,
                                            const FilterConfig& cfg) {
  if (!(sigma > 0.0)) throw InvalidArgument("filter_mean_second_moment: sigma must be positive");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidArgument("filter_mean_second_moment: epsilon outside [0, 1/2)");
  MeanResult r;
  FilterDiagnostics& diag = r.diagnostics;
  diag.initial_size = s.size();
  const SampleSet scaled(s.data() / sigma, s.labeled() ? std::optional(s.labels()) : std::nullopt);

  RngStream rng(cfg.seed, streams::kSecondMomentFilter);
  auto step = [&](const SampleSet& sub, double) { return filter_mean_second_moment_step(sub, rng, cfg.power); };
  auto fallback = [](const SampleSet& sub) { return sample_mean(sub.data()); };
  FilterConfig loop_cfg = cfg;
  loop_cfg.max_iterations = std::max<int>(cfg.max_iterations, static_cast<int>(s.size()));
  const VectorXd est =
      run_filter_loop<VectorXd>(scaled, all_rows(s.size()), loop_cfg, 0.0, false, step, fallback, diag);
  r.estimate = est * sigma;
  record_provenance(s, diag);
  return r;
}

}  // namespace robust_filter
