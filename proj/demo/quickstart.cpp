// Corrupts a Gaussian sample with hypercube noise and compares the adaptive
// filter to the empirical mean.

#include <iostream>

#include "robust_filter/robust_filter.hpp"

int main() {
  namespace rf = robust_filter;
  const rf::Index d = 50;
  const double eps = 0.1;
  const rf::Index n = 20000;

  rf::RngStream rng(2024, 0);
  const auto inliers = rf::InlierModel::gaussian(rf::VectorXd::Ones(d), rf::MatrixXd::Identity(d, d));
  const rf::SampleSet data = rf::corrupt(inliers, rf::NoiseModel::hypercube_mixture(), n, eps, rng);

  rf::FilterConfig cfg;
  cfg.epsilon = eps;
  cfg.adaptive = true;
  const rf::MeanResult res = rf::filter_mean_subgaussian(data, cfg);

  std::cout << "outliers planted:     " << data.count(rf::Label::Outlier) << "\n"
            << "outliers removed:     " << *res.diagnostics.removed_outliers << "\n"
            << "inliers removed:      " << *res.diagnostics.removed_inliers << "\n"
            << "filter iterations:    " << res.diagnostics.iterations << "\n"
            << "empirical mean error: " << rf::l2_error(rf::empirical_mean(data), inliers.mean) << "\n"
            << "filtered mean error:  " << rf::l2_error(res.estimate, inliers.mean) << "\n"
            << "inlier-only error:    " << rf::l2_error(rf::empirical_mean(data.inliers()), inliers.mean) << "\n";
}
