#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "core.hpp"

namespace robust_filter {

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
// of R's diagonal folded into Q.
inline MatrixXd haar_rotation(Index d, RngStream& rng) {
  MatrixXd g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// 1/2 uniform {0,1}^d + 1/2 (first coord in {0,12}, second in {-2,0}, rest 0).
inline VectorXd sample_hypercube_mixture(Index d, RngStream& rng) {
  if (d < 2) throw InvalidArgument("sample_hypercube_mixture: need d >= 2");
  VectorXd x = VectorXd::Zero(d);
  if (rng.below(2) == 0) {
    for (Index i = 0; i < d; ++i) x(i) = static_cast<double>(rng.below(2));
  } else {
    x(0) = rng.below(2) == 0 ? 0.0 : 12.0;
    x(1) = rng.below(2) == 0 ? -2.0 : 0.0;
  }
  return x;
}

// Pre-rotation: d/2 coords in {-.5, 0, .5}, d/2 - 1 coords 0.8 * U{-2..2},
// last coord U{-100..100}.
inline VectorXd skewed_noise_unrotated(Index d, RngStream& rng) {
  if (d % 2 != 0 || d < 4) throw InvalidArgument("sample_skewed_cov_noise: need even d >= 4");
  VectorXd y(d);
  const Index h = d / 2;
  for (Index i = 0; i < h; ++i) y(i) = 0.5 * static_cast<double>(rng.uniform_int(-1, 1));
  for (Index i = h; i < d - 1; ++i) y(i) = 0.8 * static_cast<double>(rng.uniform_int(-2, 2));
  y(d - 1) = static_cast<double>(rng.uniform_int(-100, 100));
  return y;
}

inline VectorXd sample_skewed_cov_noise(Index d, const MatrixXd& rotation, RngStream& rng) {
  if (rotation.rows() != d || rotation.cols() != d)
    throw DimensionMismatch("sample_skewed_cov_noise: rotation must be d x d");
  return rotation * skewed_noise_unrotated(d, rng);
}

// First d/2 coords U{0,1,2}/24, last d/2 coords U{2,3}/24.
inline VectorXd sample_europe_noise(Index d, RngStream& rng) {
  if (d % 2 != 0 || d < 2) throw InvalidArgument("sample_europe_noise: need even d");
  VectorXd x(d);
  const Index h = d / 2;
  for (Index i = 0; i < h; ++i) x(i) = static_cast<double>(rng.uniform_int(0, 2)) / 24.0;
  for (Index i = h; i < d; ++i) x(i) = static_cast<double>(rng.uniform_int(2, 3)) / 24.0;
  return x;
}

enum class NoiseKind { HypercubeMixture, AllZeros, SkewedProductRotated, EuropeProduct, PointMass, Custom };

struct NoiseModel {
  using Sampler = std::function<VectorXd(Index d, RngStream& rng, const MatrixXd& inliers)>;

  NoiseKind kind = NoiseKind::AllZeros;
  MatrixXd rotation;
  VectorXd point;
  Sampler custom;

  static NoiseModel hypercube_mixture() { return {NoiseKind::HypercubeMixture, {}, {}, {}}; }
  static NoiseModel all_zeros() { return {NoiseKind::AllZeros, {}, {}, {}}; }
  static NoiseModel skewed(MatrixXd rotation) { return {NoiseKind::SkewedProductRotated, std::move(rotation), {}, {}}; }
  static NoiseModel europe() { return {NoiseKind::EuropeProduct, {}, {}, {}}; }
  static NoiseModel point_mass(VectorXd v) { return {NoiseKind::PointMass, {}, std::move(v), {}}; }
  static NoiseModel from(Sampler s) { return {NoiseKind::Custom, {}, {}, std::move(s)}; }

  // `inliers` is the full inlier draw, visible to Custom samplers only.
  VectorXd sample(Index d, RngStream& rng, const MatrixXd& inliers) const {
    switch (kind) {
      case NoiseKind::HypercubeMixture: return sample_hypercube_mixture(d, rng);
      case NoiseKind::AllZeros: return VectorXd::Zero(d);
      case NoiseKind::SkewedProductRotated: return sample_skewed_cov_noise(d, rotation, rng);
      case NoiseKind::EuropeProduct: return sample_europe_noise(d, rng);
      case NoiseKind::PointMass:
        if (point.size() != d) throw DimensionMismatch("NoiseModel: point mass has wrong dimension");
        return point;
      case NoiseKind::Custom: {
        VectorXd v = custom(d, rng, inliers);
        if (v.size() != d) throw DimensionMismatch("NoiseModel: custom sampler returned wrong dimension");
        return v;
      }
    }
    throw InvalidArgument("NoiseModel: unknown kind");
  }
};

enum class InlierKind { Gaussian, BoundedSecondMoment };

struct InlierModel {
  InlierKind kind = InlierKind::Gaussian;
  VectorXd mean;
  MatrixXd covariance;  // Gaussian only
  MatrixXd root;        // covariance^{1/2}
  double sigma = 1.0;   // BoundedSecondMoment only
  int dof = 5;

  static InlierModel gaussian(VectorXd mean, MatrixXd covariance) {
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
      throw DimensionMismatch("InlierModel: covariance does not match mean");
    InlierModel m;
    m.kind = InlierKind::Gaussian;
    m.root = sqrt_psd(covariance);
    m.mean = std::move(mean);
    m.covariance = std::move(covariance);
    return m;
  }

  // Independent Student-t(5) coordinates scaled to variance 0.6 sigma^2.
  static InlierModel bounded_second_moment(VectorXd mean, double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("InlierModel: sigma must be positive");
    InlierModel m;
    m.kind = InlierKind::BoundedSecondMoment;
    m.mean = std::move(mean);
    m.sigma = sigma;
    return m;
  }

  Index dim() const { return mean.size(); }

  MatrixXd population_covariance() const {
    if (kind == InlierKind::Gaussian) return covariance;
    return MatrixXd::Identity(dim(), dim()) * (0.6 * sigma * sigma);
  }
};

// Rows drawn in order, coordinates within a row in order.
inline SampleSet sample_inliers(const InlierModel& model, Index n, RngStream& rng) {
  const Index d = model.dim();
  if (n < 1 || d < 1) throw InvalidArgument("sample_inliers: need n >= 1 and d >= 1");
  MatrixXd z(n, d);
  if (model.kind == InlierKind::Gaussian) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) z(i, j) = rng.normal();
    MatrixXd x = z * model.root;
    x.rowwise() += model.mean.transpose();
    return SampleSet(std::move(x));
  }
  // t_5 has variance 5/3; 0.6 sigma * t_5 has variance 0.6 sigma^2.
  const double scale = 0.6 * model.sigma;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) z(i, j) = model.mean(j) + scale * rng.student_t(model.dof);
  return SampleSet(std::move(z));
}

// Draws m inliers, replaces a uniformly random Binomial(m, eps)-sized subset
// with noise, then shuffles rows.
inline SampleSet corrupt(const InlierModel& inliers, const NoiseModel& noise, Index m, double epsilon,
                         RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidArgument("corrupt: epsilon outside [0, 1/2)");
  const MatrixXd clean = sample_inliers(inliers, m, rng).data();
  MatrixXd x = clean;
  std::vector<Label> labels(static_cast<std::size_t>(m), Label::Inlier);
  const auto bad = static_cast<std::size_t>(rng.binomial(m, epsilon));
  for (std::size_t r : rng.sample_without_replacement(static_cast<std::size_t>(m), bad)) {
    x.row(static_cast<Index>(r)) = noise.sample(x.cols(), rng, clean).transpose();
    labels[r] = Label::Outlier;
  }
  std::vector<Index> perm = all_rows(m);
  rng.shuffle(perm);
  MatrixXd out(m, x.cols());
  std::vector<Label> out_labels(labels.size());
  for (Index i = 0; i < m; ++i) {
    out.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    out_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  return SampleSet(std::move(out), std::move(out_labels));
}

}  // namespace robust_filter
