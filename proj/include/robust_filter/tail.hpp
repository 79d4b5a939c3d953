#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "core.hpp"

namespace robust_filter {

// 8 exp(-C2 T^2 / 2nu) + 8 eps / (T^2 max(1, log(d log(d / (eps tau)))))
inline double tail_subgaussian(double t, double d, double epsilon, double tau, double nu, double c2) {
  const double first = 8.0 * std::exp(-c2 * t * t / (2.0 * nu));
  if (epsilon == 0.0) return first;
  const double inner = d * std::log(d / (epsilon * tau));
  const double denom_log = inner > 0.0 ? std::max(1.0, std::log(inner)) : 1.0;
  return first + 8.0 * epsilon / (t * t * denom_log);
}

// 1 for T <= 10 log(1/eps), eps / (T^2 log^2 T) above.
inline double tail_covariance(double t, double epsilon) {
  if (t <= 10.0 * std::log(1.0 / epsilon)) return 1.0;
  const double l = std::log(t);
  return epsilon / (t * t * l * l);
}

// Solves sqrt2 (frob sqrt(x) + side_max x) = T for x >= 0.
inline double chaos_deviation_level(double t, double frob, double side_max) {
  const double c = t / std::sqrt(2.0);
  if (side_max < 1e-12) return (c / frob) * (c / frob);
  const double s = (-frob + std::sqrt(frob * frob + 4.0 * side_max * c)) / (2.0 * side_max);
  return s * s;
}

// One side of a centred Gaussian chaos sum a_i (g_i^2 - 1) / sqrt2:
// C1 exp(-C2 x(T)) + eps / (T^2 max(1, log T)^2), where x(T) inverts the
// Laurent-Massart deviation bound for that side.
inline double tail_hanson_wright(double t, double epsilon, double frob, double side_max, double c1, double c2) {
  const double l = std::max(1.0, std::log(t));
  return c1 * std::exp(-c2 * chaos_deviation_level(t, frob, side_max)) + epsilon / (t * t * l * l);
}

enum class TailKind { SubGaussian, CovarianceWeakened, HansonWright, Custom };

struct TailFunction {
  TailKind kind = TailKind::SubGaussian;
  double d = 1.0;
  double epsilon = 0.1;
  double tau = 0.1;
  double nu = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double frob = 1.0;
  double side_max = 0.0;
  std::function<double(double)> custom;

  static TailFunction sub_gaussian(double d, double epsilon, double tau, double nu, double c2) {
    TailFunction f;
    f.kind = TailKind::SubGaussian;
    f.d = d;
    f.epsilon = epsilon;
    f.tau = tau;
    f.nu = nu;
    f.c2 = c2;
    return f;
  }
  static TailFunction covariance_weakened(double epsilon) {
    TailFunction f;
    f.kind = TailKind::CovarianceWeakened;
    f.epsilon = epsilon;
    return f;
  }
  static TailFunction hanson_wright(double epsilon, double frob, double side_max, double c1, double c2) {
    TailFunction f;
    f.kind = TailKind::HansonWright;
    f.epsilon = epsilon;
    f.frob = frob;
    f.side_max = side_max;
    f.c1 = c1;
    f.c2 = c2;
    return f;
  }
  static TailFunction from(std::function<double(double)> fn) {
    TailFunction f;
    f.kind = TailKind::Custom;
    f.custom = std::move(fn);
    return f;
  }

  bool has_c2() const { return kind == TailKind::SubGaussian || kind == TailKind::HansonWright; }

  TailFunction with_c2(double c) const {
    TailFunction f = *this;
    f.c2 = c;
    return f;
  }

  double operator()(double t) const {
    switch (kind) {
      case TailKind::SubGaussian: return tail_subgaussian(t, d, epsilon, tau, nu, c2);
      case TailKind::CovarianceWeakened: return tail_covariance(t, epsilon);
      case TailKind::HansonWright: return tail_hanson_wright(t, epsilon, frob, side_max, c1, c2);
      case TailKind::Custom: return custom(t);
    }
    return 1.0;
  }
};

struct Violation {
  double t = 0.0;    // violating thresholds fill (t_prev, t); t is their supremum
  double cut = 0.0;  // remove deviations >= cut (= t + delta)
};

// Smallest violating threshold over the continuum T > max(0, t_floor):
// on T + delta in [a_{j-1}, a_j) the exceedance Pr[dev > T + delta] is the
// constant #{dev >= a_j} / n while tail(T) falls, so interval j holds a
// violation iff #{dev >= a_j} / n > tail(a_j - delta). The denominator n is
// the full length of `deviations`.
inline std::optional<Violation> find_violation_in_deviations(std::span<const double> deviations, double delta,
                                                             const TailFunction& tail, double t_floor = 0.0) {
  if (deviations.empty()) throw InvalidArgument("find_violation_threshold: no values");
  std::vector<double> dev(deviations.begin(), deviations.end());
  std::sort(dev.begin(), dev.end());
  const double n = static_cast<double>(dev.size());
  std::size_t j = 0;
  while (j < dev.size()) {
    const double a = dev[j];
    const double t = a - delta;
    if (t > 0.0 && t > t_floor) {
      const double e = static_cast<double>(dev.size() - j) / n;
      if (e > tail(t)) return Violation{t, a};
    }
    while (j < dev.size() && dev[j] == a) ++j;
  }
  return std::nullopt;
}

inline std::optional<Violation> find_violation_cut(std::span<const double> values, double center, double delta,
                                                   const TailFunction& tail) {
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - center);
  return find_violation_in_deviations(dev, delta, tail);
}

// Supremum of the smallest run of violating thresholds; points with
// |value - center| >= T + delta are the ones that exceed it.
inline std::optional<double> find_violation_threshold(std::span<const double> values, double center, double delta,
                                                      const TailFunction& tail) {
  const auto v = find_violation_cut(values, center, delta, tail);
  if (!v) return std::nullopt;
  return v->t;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median: no values");
  const std::size_t n = v.size();
  const std::size_t hi = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  const double upper = v[hi];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi));
  return 0.5 * (lower + upper);
}

inline double robust_center(std::span<const double> values, Centering mode) {
  if (values.empty()) throw InvalidArgument("robust_center: no values");
  if (mode == Centering::Median) return median_of(std::vector<double>(values.begin(), values.end()));
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

inline std::vector<double> to_std(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace robust_filter
