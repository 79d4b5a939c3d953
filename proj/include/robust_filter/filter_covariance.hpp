#pragma once

#include <cmath>
#include <utility>

#include "filter_common.hpp"
#include "filter_mean.hpp"
#include "tail.hpp"

namespace robust_filter {

inline double covariance_termination_factor(const FilterConfig& cfg) {
  const double l = std::log(1.0 / cfg.epsilon);
  return 1.0 + cfg.cov_gap_constant * cfg.epsilon * l * l;
}

// One round for mean-zero Gaussian data with unknown covariance.
inline StepOutcome<GaussianParams> filter_covariance_step(const SampleSet& s, const FilterConfig& cfg, double c2,
                                                          RngStream& rng) {
  const MatrixXd& x = s.data();
  const Index n = s.size();
  const Index d = s.dim();
  const MatrixXd sigma = symmetrize(x.transpose() * x / static_cast<double>(n));
  const MatrixXd r = inverse_sqrt(sigma);
  const MatrixXd y = x * r;

  StepInfo info;
  const double far = cfg.cov_outlier_constant * static_cast<double>(d) * std::log(static_cast<double>(n) / cfg.tau);
  const VectorXd q = y.rowwise().squaredNorm();
  IndexList keep;
  for (Index i = 0; i < n; ++i)
    if (q(i) < far) keep.push_back(i);
  if (static_cast<Index>(keep.size()) < n) return StepOutcome<GaussianParams>::retained(std::move(keep), info);

  const FourthMomentOperator op(y);
  const EigenPair top = top_eigenpair_lanczos([&](const VectorXd& in, VectorXd& out) { op.apply(in, out); },
                                              op.size(), cfg.power, rng);
  info.spectral_value = top.value;
  info.power_converged = top.converged;

  const MatrixXd v = symmetrize(sharpen(top.vector));
  const double trace = v.trace();
  const VectorXd p = ((y * v).cwiseProduct(y).rowwise().sum().array() - trace) / std::sqrt(2.0);
  const double qvar = variance_of_quadratic(v);
  if (top.value <= covariance_termination_factor(cfg) * 2.0 * qvar)
    return StepOutcome<GaussianParams>::estimate(GaussianParams(VectorXd::Zero(d), sigma, cfg.spectral_tol * 1e3),
                                                 std::move(info));

  const std::vector<double> pv = to_std(p);
  const double mu = median_of(pv);
  const double slack = cfg.resolved_cov_slack();
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  bool any = false;
  if (cfg.cov_tail == CovarianceTail::Weakened) {
    std::vector<double> dev(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) dev[i] = std::abs(pv[i] - mu);
    const auto t = find_violation_in_deviations(dev, slack, TailFunction::covariance_weakened(cfg.epsilon),
                                                cfg.resolved_cov_t_floor());
    if (t) {
      any = true;
      info.thresholds.push_back({t->t, slack, c2});
      for (std::size_t i = 0; i < dev.size(); ++i) drop[i] = dev[i] >= t->t;
    }
  } else {
    const SymmetricEigen ev = jacobi_eigen(v);
    const double frob = ev.values.norm();
    const double right = std::max(ev.values.maxCoeff(), 0.0);
    const double left = std::max(-ev.values.minCoeff(), 0.0);
    for (double sign : {1.0, -1.0}) {
      std::vector<double> dev(pv.size());
      for (std::size_t i = 0; i < pv.size(); ++i) dev[i] = sign * (pv[i] - mu);
      const TailFunction tail =
          TailFunction::hanson_wright(cfg.epsilon, frob, sign > 0 ? right : left, cfg.cov_tail_c1, c2);
      const auto t = find_violation_in_deviations(dev, slack, tail);
      if (!t) continue;
      any = true;
      info.thresholds.push_back({sign * t->t, slack, c2});
      for (std::size_t i = 0; i < dev.size(); ++i)
        if (dev[i] >= t->t) drop[i] = true;
    }
  }
  if (!any) throw FilterStuck("no threshold violates the covariance tail bound", top.value);
  keep.clear();
  for (Index i = 0; i < n; ++i)
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  info.c2_dependent = cfg.cov_tail == CovarianceTail::HansonWright;
  return StepOutcome<GaussianParams>::retained(std::move(keep), std::move(info));
}

inline StepOutcome<GaussianParams> filter_covariance_step(const SampleSet& s, const FilterConfig& cfg) {
  RngStream rng(cfg.seed, streams::kCovarianceFilter);
  return filter_covariance_step(s, cfg, cfg.cov_c2, rng);
}

struct CovarianceResult {
  GaussianParams estimate;
  FilterDiagnostics diagnostics;
};

inline CovarianceResult filter_covariance(const SampleSet& s, const FilterConfig& cfg) {
  cfg.validate();
  if (s.size() <= s.dim()) throw InvalidArgument("filter_covariance: need more samples than dimensions");
  CovarianceResult r;
  FilterDiagnostics& diag = r.diagnostics;
  diag.initial_size = s.size();
  RngStream rng(cfg.seed, streams::kCovarianceFilter);
  auto step = [&](const SampleSet& sub, double c2) { return filter_covariance_step(sub, cfg, c2, rng); };
  auto fallback = [&](const SampleSet& sub) {
    const MatrixXd& x = sub.data();
    return GaussianParams(VectorXd::Zero(sub.dim()), symmetrize(x.transpose() * x / static_cast<double>(x.rows())),
                          cfg.spectral_tol * 1e3);
  };
  r.estimate = run_filter_loop<GaussianParams>(s, all_rows(s.size()), cfg, cfg.cov_c2, cfg.adaptive, step,
                                               fallback, diag);
  record_provenance(s, diag);
  return r;
}

}  // namespace robust_filter
