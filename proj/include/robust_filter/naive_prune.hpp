#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"
#include "tail.hpp"

namespace robust_filter {

inline double naive_prune_radius(Index n, Index d, double tau, double nu) {
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  return 2.0 * std::sqrt(2.0 * nu * static_cast<double>(d) * std::log(2.0 * nd / tau));
}

inline VectorXd coordinatewise_median(const MatrixXd& x) {
  VectorXd c(x.cols());
  for (Index j = 0; j < x.cols(); ++j) c(j) = median_of(to_std(x.col(j)));
  return c;
}

// Keeps x iff at least n/2 points (x included) lie within the radius of x.
// Distances to the coordinatewise median certify most points either way;
// the rest are counted exactly.
inline IndexList naive_prune(const SampleSet& s, double tau, double nu = 1.0) {
  const Index n = s.size();
  if (n < 2) return all_rows(n);
  const MatrixXd& x = s.data();
  const double radius = naive_prune_radius(n, s.dim(), tau, nu);
  const double r2 = radius * radius;
  const double half = 0.5 * static_cast<double>(n);
  const VectorXd c = coordinatewise_median(x);
  const VectorXd dist = (x.rowwise() - c.transpose()).rowwise().norm();
  std::vector<double> sorted = to_std(dist);
  std::sort(sorted.begin(), sorted.end());
  const auto need = static_cast<std::size_t>(std::ceil(half));
  const double r_half = sorted[need - 1];
  const double margin = 1e-12 * (radius + sorted.back());

  IndexList keep;
  for (Index i = 0; i < n; ++i) {
    const double di = dist(i);
    if (di + r_half <= radius - margin) {
      keep.push_back(i);
      continue;
    }
    const double lo = di - radius - margin;
    const double hi = di + radius + margin;
    const auto band = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), hi) -
                                          std::lower_bound(sorted.begin(), sorted.end(), lo));
    if (band < half) continue;
    Index within = 0;
    for (Index j = 0; j < n; ++j) {
      if (dist(j) < lo || dist(j) > hi) continue;
      if ((x.row(j) - x.row(i)).squaredNorm() <= r2) ++within;
    }
    if (static_cast<double>(within) >= half) keep.push_back(i);
  }
  return keep;
}

}  // namespace robust_filter
