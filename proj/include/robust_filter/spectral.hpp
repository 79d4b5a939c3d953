#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace robust_filter {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EigenPair {
  double value = 0.0;
  VectorXd vector;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Eigenvalues ascending; eigenvectors are the matching columns.
struct SymmetricEigen {
  VectorXd values;
  MatrixXd vectors;
  int sweeps = 0;
};

struct PowerOptions {
  double tol = 1e-7;
  int max_iter = 1000;
};

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline void require_square(const MatrixXd& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionMismatch(std::string(who) + ": expected a non-empty square matrix");
}

// Cyclic Jacobi on the symmetric part of m.
inline SymmetricEigen jacobi_eigen(const MatrixXd& m, int max_sweeps = 100) {
  require_square(m, "jacobi_eigen");
  const Index n = m.rows();
  MatrixXd a = symmetrize(m);
  MatrixXd v = MatrixXd::Identity(n, n);
  const double scale = a.norm();
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale || off == 0.0) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

namespace detail {

template <class Apply>
EigenPair power_run(Apply& apply, VectorXd v, double shift, const PowerOptions& opt) {
  const Index k = v.size();
  VectorXd w(k);
  EigenPair best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    apply(v, w);
    if (shift != 0.0) w += shift * v;
    const double lam = v.dot(w);
    const double res = (w - lam * v).norm();
    if (res / std::max(1.0, std::abs(lam)) < best.residual / std::max(1.0, std::abs(best.value)) ||
        it == 1) {
      best.value = lam;
      best.vector = v;
      best.residual = res;
      best.iterations = it;
    }
    if (res <= opt.tol * std::max(1.0, std::abs(lam))) {
      best.converged = true;
      best.iterations = it;
      return best;
    }
    const double nw = w.norm();
    if (nw == 0.0) {
      // v lies in the null space: exact eigenpair with value 0.
      best.value = 0.0;
      best.vector = v;
      best.residual = 0.0;
      best.converged = true;
      best.iterations = it;
      return best;
    }
    v = w / nw;
  }
  best.iterations = opt.max_iter;
  return best;
}

}  // namespace detail

// Largest-|lambda| eigenpair of a symmetric operator given as
// apply(const VectorXd& in, VectorXd& out). Plain power iteration from a
// seeded Gaussian start; if that stalls (e.g. +lambda and -lambda tie) the
// operator is re-run shifted by +rho and -rho, rho an estimate of the
// spectral radius, and the pair with the largest |Rayleigh quotient| wins.
// With `psd` the operator is known to be positive semidefinite, so there is
// no sign to resolve and the shifted runs are skipped. Non-convergence is
// reported through `converged`, with the residual of the returned pair.
template <class Apply>
EigenPair top_eigenpair(Apply&& apply, Index k, const PowerOptions& opt, RngStream& rng, bool psd = false) {
  if (k <= 0) throw InvalidArgument("top_eigenpair: dimension must be positive");
  VectorXd v0(k);
  for (Index i = 0; i < k; ++i) v0(i) = rng.normal();
  v0.normalize();
  EigenPair plain = detail::power_run(apply, v0, 0.0, opt);
  if (plain.converged || psd) return plain;

  VectorXd probe(k);
  apply(plain.vector, probe);
  const double rho = std::max(probe.norm(), std::abs(plain.value));
  int spent = plain.iterations;
  EigenPair best = plain;
  for (double sign : {1.0, -1.0}) {
    auto signed_apply = [&](const VectorXd& in, VectorXd& out) {
      apply(in, out);
      if (sign < 0) out = -out;
    };
    EigenPair shifted = detail::power_run(signed_apply, v0, rho, opt);
    spent += shifted.iterations;
    VectorXd av(k);
    apply(shifted.vector, av);
    EigenPair cand;
    cand.vector = shifted.vector;
    cand.value = shifted.vector.dot(av);
    cand.residual = (av - cand.value * shifted.vector).norm();
    cand.converged = cand.residual <= opt.tol * std::max(1.0, std::abs(cand.value));
    // Every Rayleigh quotient lies in [lambda_min, lambda_max], so the largest
    // |quotient| is the best estimate of the dominant eigenvalue.
    const double gap = std::abs(cand.value) - std::abs(best.value);
    const double eps = opt.tol * std::max(1.0, std::abs(best.value));
    if (gap > eps || (gap >= -eps && cand.converged && !best.converged)) best = cand;
  }
  best.iterations = spent;
  return best;
}

// Largest-|lambda| eigenpair by Lanczos with full reorthogonalization,
// restarted from the current Ritz vector every `basis` steps. Extreme Ritz
// values converge in far fewer matvecs than power iteration when the top of
// the spectrum is a flat bulk. opt.max_iter bounds the total matvec count.
template <class Apply>
EigenPair top_eigenpair_lanczos(Apply&& apply, Index k, const PowerOptions& opt, RngStream& rng,
                                Index basis = 120) {
  if (k <= 0) throw InvalidArgument("top_eigenpair_lanczos: dimension must be positive");
  VectorXd start(k);
  for (Index i = 0; i < k; ++i) start(i) = rng.normal();
  start.normalize();
  const Index m_max = std::max<Index>(2, std::min(basis, k));
  EigenPair best;
  best.residual = std::numeric_limits<double>::infinity();
  int spent = 0;
  VectorXd w(k);
  while (spent < opt.max_iter) {
    MatrixXd q(k, m_max);
    std::vector<double> alpha, beta;
    q.col(0) = start;
    Index m = 0;
    bool invariant = false;
    while (m < m_max && spent < opt.max_iter) {
      apply(q.col(m).eval(), w);
      ++spent;
      alpha.push_back(q.col(m).dot(w));
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(m + 1) * (q.leftCols(m + 1).transpose() * w);
      const double b = w.norm();
      ++m;
      if (b <= 1e-14 * std::max(1.0, std::abs(alpha.back()))) {
        invariant = true;
        break;
      }
      beta.push_back(b);
      if (m < m_max) q.col(m) = w / b;
    }
    MatrixXd t = MatrixXd::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    const SymmetricEigen te = jacobi_eigen(t);
    const Index pick = std::abs(te.values(0)) > std::abs(te.values(m - 1)) ? 0 : m - 1;
    VectorXd x = q.leftCols(m) * te.vectors.col(pick);
    x.normalize();
    apply(x, w);
    ++spent;
    EigenPair cand;
    cand.vector = x;
    cand.value = x.dot(w);
    cand.residual = (w - cand.value * x).norm();
    cand.converged = invariant || cand.residual <= opt.tol * std::max(1.0, std::abs(cand.value));
    if (cand.converged || cand.residual < best.residual) best = cand;
    if (cand.converged) break;
    start = x;
  }
  best.iterations = spent;
  return best;
}

inline EigenPair top_eigenpair_lanczos(const MatrixXd& m, const PowerOptions& opt, RngStream& rng,
                                       Index basis = 120) {
  require_square(m, "top_eigenpair_lanczos");
  return top_eigenpair_lanczos([&](const VectorXd& in, VectorXd& out) { out.noalias() = m * in; }, m.rows(),
                               opt, rng, basis);
}

inline EigenPair top_eigenpair(const MatrixXd& m, const PowerOptions& opt, RngStream& rng, bool psd = false) {
  require_square(m, "top_eigenpair");
  return top_eigenpair([&](const VectorXd& in, VectorXd& out) { out.noalias() = m * in; }, m.rows(),
                       opt, rng, psd);
}

// R with R M R = I. Fails if the smallest eigenvalue is below 1e-10 of the
// largest.
inline MatrixXd inverse_sqrt(const MatrixXd& m) {
  require_square(m, "inverse_sqrt");
  SymmetricEigen e = jacobi_eigen(m);
  const double top = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
  const double low = e.values(0);
  if (!(low >= 1e-10 * top) || top == 0.0)
    throw SingularMatrix("inverse_sqrt: smallest eigenvalue " + std::to_string(low) +
                             " is below 1e-10 * " + std::to_string(top),
                         low);
  VectorXd d = e.values.array().rsqrt();
  return symmetrize(e.vectors * d.asDiagonal() * e.vectors.transpose());
}

// PSD square root; eigenvalues in [-tol, 0) are clamped to zero.
inline MatrixXd sqrt_psd(const MatrixXd& m, double tol = 1e-9) {
  require_square(m, "sqrt_psd");
  SymmetricEigen e = jacobi_eigen(m);
  if (e.values(0) < -tol)
    throw InvalidArgument("sqrt_psd: matrix is not PSD (eigenvalue " + std::to_string(e.values(0)) + ")");
  VectorXd d = e.values.cwiseMax(0.0).cwiseSqrt();
  return symmetrize(e.vectors * d.asDiagonal() * e.vectors.transpose());
}

// Row-major: w[i*d + j] = M(i, j).
inline VectorXd flatten(const MatrixXd& m) {
  VectorXd w(m.rows() * m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w(i * m.cols() + j) = m(i, j);
  return w;
}

inline MatrixXd sharpen(const VectorXd& w) {
  const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(w.size()))));
  if (d * d != w.size() || d == 0)
    throw DimensionMismatch("sharpen: length " + std::to_string(w.size()) + " is not a perfect square");
  MatrixXd m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = w(i * d + j);
  return m;
}

// T = -vec(I) vec(I)^T + (1/n) sum_i z_i z_i^T with z_i = vec(y_i y_i^T),
// applied without forming the d^2 x d^2 matrix.
class FourthMomentOperator {
 public:
  explicit FourthMomentOperator(MatrixXd whitened) : y_(std::move(whitened)) {
    if (y_.rows() == 0 || y_.cols() == 0) throw InvalidArgument("FourthMomentOperator: empty sample");
  }

  Index dim() const { return y_.cols(); }
  Index size() const { return y_.cols() * y_.cols(); }
  Index samples() const { return y_.rows(); }
  const MatrixXd& whitened() const { return y_; }

  void apply(const VectorXd& w, VectorXd& out) const {
    const Index d = dim();
    if (w.size() != d * d) throw DimensionMismatch("FourthMomentOperator: input has wrong length");
    const MatrixXd wm = sharpen(w);
    yw_.noalias() = y_ * wm;
    const VectorXd s = yw_.cwiseProduct(y_).rowwise().sum();
    weighted_ = y_.array().colwise() * s.array();
    MatrixXd g = weighted_.transpose() * y_;
    g /= static_cast<double>(y_.rows());
    g.diagonal().array() -= wm.trace();
    out = flatten(g);
  }

  VectorXd operator()(const VectorXd& w) const {
    VectorXd out;
    apply(w, out);
    return out;
  }

 private:
  MatrixXd y_;
  mutable MatrixXd yw_;
  mutable MatrixXd weighted_;
};

inline VectorXd fourth_moment_matvec(const FourthMomentOperator& op, const VectorXd& w) { return op(w); }

// Var_{y ~ N(0, I)} of (y^T M y - tr M) / sqrt(2).
inline double variance_of_quadratic(const MatrixXd& m) {
  require_square(m, "variance_of_quadratic");
  double s = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double a = 0.5 * (m(i, j) + m(j, i));
      s += a * a;
    }
  return s;
}

}  // namespace robust_filter
