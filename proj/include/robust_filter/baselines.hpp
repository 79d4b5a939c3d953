#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "naive_prune.hpp"

namespace robust_filter {

inline VectorXd empirical_mean(const SampleSet& s) { return sample_mean(s.data()); }

// Normalized by n. With assume_zero_mean the second moment about 0.
inline MatrixXd empirical_cov(const SampleSet& s, bool assume_zero_mean) {
  const MatrixXd& x = s.data();
  if (assume_zero_mean) return symmetrize(x.transpose() * x / static_cast<double>(x.rows()));
  if (s.size() < 2) throw InvalidArgument("empirical_cov: need n >= 2 without assume_zero_mean");
  return second_moment_about(x, sample_mean(x));
}

enum class PruneTarget { Mean, Cov };

inline IndexList prune_rows(const SampleSet& s, PruneTarget target) {
  const MatrixXd& x = s.data();
  const double n = static_cast<double>(s.size());
  const double d = static_cast<double>(s.dim());
  IndexList keep;
  if (target == PruneTarget::Mean) {
    const VectorXd c = coordinatewise_median(x);
    const double radius = 2.0 * std::sqrt(d * std::log(n));
    for (Index i = 0; i < s.size(); ++i)
      if ((x.row(i) - c.transpose()).norm() <= radius) keep.push_back(i);
  } else {
    const double bound = 4.0 * d * std::log(n);
    for (Index i = 0; i < s.size(); ++i)
      if (x.row(i).squaredNorm() <= bound) keep.push_back(i);
  }
  return keep;
}

// Mean target returns a d x 1 matrix.
inline MatrixXd prune_then_estimate(const SampleSet& s, double epsilon, PruneTarget target) {
  (void)epsilon;
  if (s.size() < 2) throw InvalidArgument("prune_then_estimate: need n >= 2");
  const IndexList keep = prune_rows(s, target);
  if (keep.empty()) throw Error("prune_then_estimate: every point was pruned");
  const SampleSet kept = s.subset(keep);
  if (target == PruneTarget::Mean) return empirical_mean(kept);
  return empirical_cov(kept, true);
}

struct GeometricMedianResult {
  VectorXd median;
  int iterations = 0;
  bool converged = false;
};

inline double sum_of_distances(const MatrixXd& x, const VectorXd& m) {
  return (x.rowwise() - m.transpose()).rowwise().norm().sum();
}

// Weiszfeld with the Vardi-Zhang correction when an iterate sits on a
// data point.
inline GeometricMedianResult geometric_median(const SampleSet& s, double tol = 1e-10, int max_iter = 10000) {
  const MatrixXd& x = s.data();
  const Index n = s.size();
  GeometricMedianResult r;
  VectorXd y = sample_mean(x);
  if (n == 1) {
    r.median = x.row(0).transpose();
    r.converged = true;
    return r;
  }
  for (int it = 1; it <= max_iter; ++it) {
    VectorXd num = VectorXd::Zero(s.dim());
    double den = 0.0;
    Index coincide = 0;
    VectorXd pull = VectorXd::Zero(s.dim());
    for (Index i = 0; i < n; ++i) {
      const VectorXd diff = x.row(i).transpose() - y;
      const double dist = diff.norm();
      if (dist < 1e-12) {
        ++coincide;
        continue;
      }
      num += x.row(i).transpose() / dist;
      den += 1.0 / dist;
      pull += diff / dist;
    }
    VectorXd next;
    if (den == 0.0) {
      next = y;
    } else if (coincide == 0) {
      next = num / den;
    } else {
      const VectorXd t = num / den;
      const double rnorm = pull.norm();
      const double eta = static_cast<double>(coincide);
      if (rnorm <= eta) {
        next = y;  // y is the median
      } else {
        const double w = std::max(0.0, 1.0 - eta / rnorm);
        next = w * t + (1.0 - w) * y;
      }
    }
    const double step = (next - y).norm();
    y = next;
    r.iterations = it;
    if (step < tol) {
      r.converged = true;
      break;
    }
  }
  r.median = y;
  return r;
}

inline VectorXd ransac_mean(const SampleSet& s, double epsilon, int trials, RngStream& rng) {
  (void)epsilon;
  const MatrixXd& x = s.data();
  const Index n = s.size();
  const Index d = s.dim();
  if (n <= d) throw InvalidArgument("ransac_mean: need n > d");
  const double radius2 = 4.0 * static_cast<double>(d);
  Index best_count = -1;
  VectorXd best;
  for (int t = 0; t < trials; ++t) {
    VectorXd cand = VectorXd::Zero(d);
    for (std::size_t r : rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(d + 1)))
      cand += x.row(static_cast<Index>(r)).transpose();
    cand /= static_cast<double>(d + 1);
    const Index count = ((x.rowwise() - cand.transpose()).rowwise().squaredNorm().array() <= radius2).count();
    if (count > best_count) {
      best_count = count;
      best = cand;
    }
  }
  IndexList in;
  for (Index i = 0; i < n; ++i)
    if ((x.row(i).transpose() - best).squaredNorm() <= radius2) in.push_back(i);
  if (in.empty()) return best;
  return sample_mean(s.subset(in).data());
}

// Subsets of size max(d + 1, d(d+1)/2); score = #points with
// x^T C^-1 x <= 2d. Rounds with a singular subset covariance are skipped.
inline MatrixXd ransac_mve_cov(const SampleSet& s, double epsilon, int trials, RngStream& rng) {
  (void)epsilon;
  const MatrixXd& x = s.data();
  const Index n = s.size();
  const Index d = s.dim();
  const Index k = std::max<Index>(d + 1, d * (d + 1) / 2);
  if (n <= k) throw InvalidArgument("ransac_mve_cov: need n > d(d+1)/2");
  const double bound = 2.0 * static_cast<double>(d);
  auto inliers_of = [&](const MatrixXd& r) {
    return ((x * r).rowwise().squaredNorm().array() <= bound).eval();
  };
  Index best_count = -1;
  MatrixXd best_r;
  for (int t = 0; t < trials; ++t) {
    MatrixXd sub(k, d);
    Index row = 0;
    for (std::size_t r : rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(k)))
      sub.row(row++) = x.row(static_cast<Index>(r));
    const MatrixXd c = symmetrize(sub.transpose() * sub / static_cast<double>(k));
    MatrixXd r;
    try {
      r = inverse_sqrt(c);
    } catch (const SingularMatrix&) {
      continue;
    }
    const Index count = inliers_of(r).count();
    if (count > best_count) {
      best_count = count;
      best_r = r;
    }
  }
  if (best_count < 0) throw Error("ransac_mve_cov: every subset covariance was singular");
  const auto mask = inliers_of(best_r);
  IndexList in;
  for (Index i = 0; i < n; ++i)
    if (mask(i)) in.push_back(i);
  return empirical_cov(s.subset(in), true);
}

}  // namespace robust_filter
