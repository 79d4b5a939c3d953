#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace robust_filter {

enum class Label : std::uint8_t { Inlier = 0, Outlier = 1 };

using IndexList = std::vector<Index>;

// n x d sample, rows are points. Immutable after construction.
class SampleSet {
 public:
  explicit SampleSet(MatrixXd data, std::optional<std::vector<Label>> labels = std::nullopt)
      : data_(std::move(data)), labels_(std::move(labels)) {
    if (data_.rows() < 1 || data_.cols() < 1) throw InvalidArgument("SampleSet: need n >= 1 and d >= 1");
    if (!data_.allFinite()) throw InvalidArgument("SampleSet: non-finite entry");
    if (labels_ && static_cast<Index>(labels_->size()) != data_.rows())
      throw DimensionMismatch("SampleSet: label count does not match row count");
  }

  Index size() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }
  const MatrixXd& data() const { return data_; }
  bool labeled() const { return labels_.has_value(); }

  const std::vector<Label>& labels() const {
    if (!labels_) throw InvalidArgument("SampleSet: provenance labels required but absent");
    return *labels_;
  }

  Index count(Label l) const {
    const auto& ls = labels();
    return static_cast<Index>(std::count(ls.begin(), ls.end(), l));
  }

  SampleSet subset(std::span<const Index> rows) const {
    if (rows.empty()) throw InvalidArgument("SampleSet::subset: empty selection");
    MatrixXd out(static_cast<Index>(rows.size()), dim());
    std::optional<std::vector<Label>> ls;
    if (labels_) ls.emplace();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Index r = rows[k];
      if (r < 0 || r >= size()) throw InvalidArgument("SampleSet::subset: row index out of range");
      out.row(static_cast<Index>(k)) = data_.row(r);
      if (ls) ls->push_back((*labels_)[static_cast<std::size_t>(r)]);
    }
    return SampleSet(std::move(out), std::move(ls));
  }

  IndexList rows_with(Label l) const {
    IndexList out;
    const auto& ls = labels();
    for (std::size_t i = 0; i < ls.size(); ++i)
      if (ls[i] == l) out.push_back(static_cast<Index>(i));
    return out;
  }

  SampleSet inliers() const { return subset(rows_with(Label::Inlier)); }

  SampleSet unlabeled() const { return SampleSet(data_); }

 private:
  MatrixXd data_;
  std::optional<std::vector<Label>> labels_;
};

inline IndexList all_rows(Index n) {
  IndexList r(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

struct GaussianParams {
  VectorXd mean;
  MatrixXd covariance;

  GaussianParams() = default;
  GaussianParams(VectorXd m, MatrixXd c, double tol = 1e-9) : mean(std::move(m)), covariance(std::move(c)) {
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
      throw DimensionMismatch("GaussianParams: mean/covariance dimensions disagree");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol)
      throw InvalidArgument("GaussianParams: covariance is not symmetric");
    if (jacobi_eigen(covariance).values(0) < -tol)
      throw InvalidArgument("GaussianParams: covariance is not PSD");
  }
};

enum class Centering { Mean, Median };

enum class CovarianceTail {
  HansonWright,  // one-sided chaos bound, each side of the median tested separately
  Weakened       // 1 below 10 log(1/eps), eps / (T^2 log^2 T) above; symmetric test
};

struct FilterConfig {
  double epsilon = 0.1;
  double tau = 0.1;
  double nu = 1.0;
  Centering centering = Centering::Median;
  bool adaptive = false;
  double c2_initial = 1.0;
  double c2_min = 1.0 / 64.0;
  double c2_max = 64.0;
  int max_iterations = 1000;
  double spectral_tol = 1e-9;
  std::uint64_t seed = 0;

  PowerOptions power{};
  int max_probes = 20;

  // Mean filter stops once ||Sigma - I|| <= thres_constant * eps * log(1/eps).
  double thres_constant = 1.0;

  // Covariance filter.
  double cov_outlier_constant = 10.0;  // step (a): x^T Sigma'^-1 x >= C d log(n / tau)
  double cov_gap_constant = 0.5;       // lambda* <= (1 + C_gap eps log^2(1/eps)) * 2 Q
  CovarianceTail cov_tail = CovarianceTail::HansonWright;
  double cov_c2 = 1.25;                // tail sharpness when not adaptive; adaptive search starts here
  double cov_tail_c1 = 1.0;
  std::optional<double> cov_slack;     // default: 4/3 for Weakened, 0 for HansonWright
  std::optional<double> cov_t_floor;   // default: max(10 log(1/eps), 1.01 e), Weakened only

  double resolved_cov_slack() const {
    return cov_slack ? *cov_slack : (cov_tail == CovarianceTail::Weakened ? 4.0 / 3.0 : 0.0);
  }
  double resolved_cov_t_floor() const {
    return cov_t_floor ? *cov_t_floor : std::max(10.0 * std::log(1.0 / epsilon), 1.01 * std::exp(1.0));
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("FilterConfig: epsilon must lie in (0, 1/2)");
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("FilterConfig: tau must lie in (0, 1)");
    if (!(nu > 0.0)) throw InvalidArgument("FilterConfig: nu must be positive");
    if (!(c2_min > 0.0 && c2_min <= c2_initial && c2_initial <= c2_max))
      throw InvalidArgument("FilterConfig: need 0 < c2_min <= c2_initial <= c2_max");
    if (!(c2_min <= cov_c2 && cov_c2 <= c2_max))
      throw InvalidArgument("FilterConfig: need c2_min <= cov_c2 <= c2_max");
    if (max_iterations < 1) throw InvalidArgument("FilterConfig: max_iterations must be positive");
    if (!(spectral_tol > 0.0)) throw InvalidArgument("FilterConfig: spectral_tol must be positive");
    if (max_probes < 1) throw InvalidArgument("FilterConfig: max_probes must be positive");
    if (!(thres_constant > 0.0 && cov_outlier_constant > 0.0 && cov_gap_constant >= 0.0 && cov_tail_c1 > 0.0))
      throw InvalidArgument("FilterConfig: constants must be positive");
  }
};

struct ExperimentRow {
  Index dimension = 0;
  std::string method;
  double excess_error = 0.0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

inline double l2_error(const VectorXd& estimate, const VectorXd& truth) {
  if (estimate.size() != truth.size()) throw DimensionMismatch("l2_error: dimension mismatch");
  return (estimate - truth).norm();
}

// ||Sigma^-1/2 Sigma_hat Sigma^-1/2 - I||_F
inline double mahalanobis_error(const MatrixXd& estimate, const MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw DimensionMismatch("mahalanobis_error: dimension mismatch");
  const MatrixXd r = inverse_sqrt(truth);
  MatrixXd e = r * estimate * r;
  e.diagonal().array() -= 1.0;
  return e.norm();
}

inline VectorXd sample_mean(const MatrixXd& x) { return x.colwise().mean().transpose(); }

// (1/n) sum (x - c)(x - c)^T
inline MatrixXd second_moment_about(const MatrixXd& x, const VectorXd& c) {
  MatrixXd centered = x.rowwise() - c.transpose();
  MatrixXd m = centered.transpose() * centered / static_cast<double>(x.rows());
  return symmetrize(m);
}

inline double standard_normal_upper_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

struct ConditionCheck {
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct GoodSetMeanReport {
  ConditionCheck radius;          // (i)   max ||x - mu_G|| <= 2 sqrt(d log(n / tau))
  ConditionCheck halfspace_tail;  // (ii)  measured = worst |Pr_S - Pr_G| / allowance, bound = 1
  ConditionCheck mean_gap;        // (iii) ||mu_S - mu_G|| <= eps
  ConditionCheck second_moment;   // (iv)  ||M_S - I|| <= eps
  bool all() const { return radius.passed && halfspace_tail.passed && mean_gap.passed && second_moment.passed; }
};

// Top 10 eigenvectors of M_S plus `random_count` seeded unit vectors.
inline std::vector<VectorXd> default_good_set_directions(const SampleSet& s, const VectorXd& mu_g,
                                                         RngStream& rng, int random_count = 100) {
  const Index d = s.dim();
  SymmetricEigen e = jacobi_eigen(second_moment_about(s.data(), mu_g));
  std::vector<VectorXd> dirs;
  for (Index k = 0; k < std::min<Index>(10, d); ++k) dirs.push_back(e.vectors.col(d - 1 - k));
  for (int k = 0; k < random_count; ++k) {
    VectorXd v(d);
    for (Index i = 0; i < d; ++i) v(i) = rng.normal();
    dirs.push_back(v.normalized());
  }
  return dirs;
}

// Condition (ii) is compared against N(mu_G, I) halfspace probabilities and
// only along `directions`, for T on a geometric grid in [0.25, 8].
inline GoodSetMeanReport check_good_set_mean(const SampleSet& s, const VectorXd& mu_g, double epsilon,
                                             double tau, const std::vector<VectorXd>& directions) {
  if (mu_g.size() != s.dim()) throw DimensionMismatch("check_good_set_mean: mu_G has wrong dimension");
  if (s.labeled() && s.count(Label::Outlier) > 0)
    throw InvalidArgument("check_good_set_mean: set contains outlier rows");
  const double n = static_cast<double>(s.size());
  const double d = static_cast<double>(s.dim());
  const MatrixXd centered = s.data().rowwise() - mu_g.transpose();
  GoodSetMeanReport r;

  r.radius.bound = 2.0 * std::sqrt(d * std::max(std::log(n / tau), 1.0));
  r.radius.measured = centered.rowwise().norm().maxCoeff();
  r.radius.passed = r.radius.measured <= r.radius.bound;

  const double inner = d * std::log(d / (epsilon * tau));
  const double denom_log = inner > 1.0 ? std::max(1.0, std::log(inner)) : 1.0;
  double worst = 0.0;
  for (const VectorXd& v : directions) {
    if (v.size() != s.dim()) throw DimensionMismatch("check_good_set_mean: direction has wrong dimension");
    std::vector<double> proj(static_cast<std::size_t>(s.size()));
    const VectorXd p = centered * v.normalized();
    for (Index i = 0; i < s.size(); ++i) proj[static_cast<std::size_t>(i)] = p(i);
    std::sort(proj.begin(), proj.end());
    for (double t = 0.25; t <= 8.0 + 1e-12; t *= 1.25) {
      for (double sign : {1.0, -1.0}) {
        // Pr_S[sign * proj >= t]
        std::size_t cnt;
        if (sign > 0)
          cnt = static_cast<std::size_t>(proj.end() - std::lower_bound(proj.begin(), proj.end(), t));
        else
          cnt = static_cast<std::size_t>(std::upper_bound(proj.begin(), proj.end(), -t) - proj.begin());
        const double gap = std::abs(static_cast<double>(cnt) / n - standard_normal_upper_tail(t));
        const double allowance = epsilon / (t * t * denom_log);
        worst = std::max(worst, gap / allowance);
      }
    }
  }
  r.halfspace_tail.measured = worst;
  r.halfspace_tail.bound = 1.0;
  r.halfspace_tail.passed = worst <= 1.0;

  r.mean_gap.bound = epsilon;
  r.mean_gap.measured = (sample_mean(s.data()) - mu_g).norm();
  r.mean_gap.passed = r.mean_gap.measured <= epsilon;

  MatrixXd m = second_moment_about(s.data(), mu_g);
  m.diagonal().array() -= 1.0;
  SymmetricEigen e = jacobi_eigen(m);
  r.second_moment.bound = epsilon;
  r.second_moment.measured = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
  r.second_moment.passed = r.second_moment.measured <= epsilon;
  return r;
}

struct GoodSetSecondMomentReport {
  ConditionCheck mean_gap;    // ||mu_S - mu_P|| <= sqrt(eps)
  ConditionCheck covariance;  // ||Sigma_S|| <= 2
  bool all() const { return mean_gap.passed && covariance.passed; }
};

inline GoodSetSecondMomentReport check_good_set_second_moment(const SampleSet& s, const VectorXd& mu_p,
                                                              double epsilon) {
  if (mu_p.size() != s.dim()) throw DimensionMismatch("check_good_set_second_moment: mu_P has wrong dimension");
  GoodSetSecondMomentReport r;
  const VectorXd mu_s = sample_mean(s.data());
  r.mean_gap.bound = std::sqrt(epsilon);
  r.mean_gap.measured = (mu_s - mu_p).norm();
  r.mean_gap.passed = r.mean_gap.measured <= r.mean_gap.bound;
  SymmetricEigen e = jacobi_eigen(second_moment_about(s.data(), mu_s));
  r.covariance.bound = 2.0;
  r.covariance.measured = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
  r.covariance.passed = r.covariance.measured <= 2.0;
  return r;
}

}  // namespace robust_filter
