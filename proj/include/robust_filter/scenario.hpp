#pragma once

#include <string>

#include "adversary.hpp"

namespace robust_filter {

namespace streams {
inline constexpr std::uint64_t kRotation = 0x726f74;
inline constexpr std::uint64_t kData = 0x64617461;
inline constexpr std::uint64_t kMethod = 0x6d6574;
}  // namespace streams

// Named, JSON-friendly description of an inlier model at a given dimension.
struct InlierSpec {
  std::string kind = "gaussian";  // gaussian | heavy-tail
  double mean_value = 0.0;        // every coordinate of the mean
  double spike_scale = 0.0;       // gaussian covariance I + spike e1 e1^T
  double sigma = 1.0;             // heavy-tail scale
};

struct NoiseSpec {
  std::string kind = "zeros";  // hypercube | zeros | skewed | europe | pointmass
  double point_scale = 10.0;   // pointmass sits at point_scale * e1
};

inline InlierModel build_inliers(const InlierSpec& spec, Index d) {
  const VectorXd mean = VectorXd::Constant(d, spec.mean_value);
  if (spec.kind == "gaussian") {
    MatrixXd cov = MatrixXd::Identity(d, d);
    cov(0, 0) += spec.spike_scale;
    return InlierModel::gaussian(mean, cov);
  }
  if (spec.kind == "heavy-tail") return InlierModel::bounded_second_moment(mean, spec.sigma);
  throw InvalidArgument("unknown inlier kind '" + spec.kind + "'");
}

// The skewed-noise rotation depends only on (seed, d), so every trial at a
// dimension shares it.
inline MatrixXd experiment_rotation(std::uint64_t seed, Index d) {
  RngStream rng(seed, mix_ids({streams::kRotation, static_cast<std::uint64_t>(d)}));
  return haar_rotation(d, rng);
}

inline NoiseModel build_noise(const NoiseSpec& spec, Index d, std::uint64_t seed) {
  if (spec.kind == "hypercube") return NoiseModel::hypercube_mixture();
  if (spec.kind == "zeros") return NoiseModel::all_zeros();
  if (spec.kind == "skewed") return NoiseModel::skewed(experiment_rotation(seed, d));
  if (spec.kind == "europe") return NoiseModel::europe();
  if (spec.kind == "pointmass") {
    VectorXd v = VectorXd::Zero(d);
    v(0) = spec.point_scale;
    return NoiseModel::point_mass(v);
  }
  throw InvalidArgument("unknown noise kind '" + spec.kind + "'");
}

}  // namespace robust_filter
