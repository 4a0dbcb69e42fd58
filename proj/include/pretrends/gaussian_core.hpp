#pragma once

#include <cmath>
#include <random>

#include "pretrends/errors.hpp"
#include "pretrends/extended_real.hpp"
#include "pretrends/linalg.hpp"

namespace pretrends {

/// Covariance of the coefficient vector (post, pre_1, ..., pre_K).
///
/// Construction validates symmetry and positive definiteness; the block
/// accessors follow the post-first ordering used throughout the library.
class CovarianceMatrix {
 public:
  /// Throws ValidationError if not square/symmetric, CholeskyFailure if not PD.
  explicit CovarianceMatrix(Mat entries);

  const Mat& matrix() const { return entries_; }
  Eigen::Index dim() const { return entries_.rows(); }
  /// Number of pre-period coefficients.
  Eigen::Index k() const { return entries_.rows() - 1; }

  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  double sigma11() const { return entries_(0, 0); }
  auto sigma12() const { return entries_.block(0, 1, 1, k()); }
  auto sigma21() const { return entries_.block(1, 0, k(), 1); }
  auto sigma22() const { return entries_.block(1, 1, k(), k()); }

  /// Leading block covering the post coefficient and the first `k` pre coefficients.
  CovarianceMatrix leading(Eigen::Index k) const;

 private:
  Mat entries_;
};

/// sigma2 on the diagonal, rho everywhere else.
template <typename Scalar = double>
struct EquicorrelatedSpec {
  Eigen::Index dim = 1;
  Scalar diag = 1;
  Scalar offdiag = 0;

  /// Positive common covariance strictly below the common variance.
  bool satisfies_common_structure() const { return offdiag > 0 && diag > offdiag; }

  Matrix<Scalar> to_matrix() const {
    Matrix<Scalar> m = Matrix<Scalar>::Constant(dim, dim, offdiag);
    m.diagonal().setConstant(diag);
    return m;
  }
};

/// Closed-form inverse of (sigma2 - rho) I + rho 11' by Sherman-Morrison.
template <typename Scalar>
Matrix<Scalar> equicorrelated_inverse(const EquicorrelatedSpec<Scalar>& spec) {
  if (spec.dim < 1) throw ValidationError("equicorrelated_inverse: dimension must be positive");
  if (spec.dim == 1) {
    if (spec.diag == Scalar(0)) throw SingularMatrix("equicorrelated_inverse: zero variance");
    return Matrix<Scalar>::Constant(1, 1, Scalar(1) / spec.diag);
  }
  const Scalar gap = spec.diag - spec.offdiag;
  if (!(gap > Scalar(0))) {
    throw SingularMatrix("equicorrelated_inverse: requires offdiag < diag");
  }
  const Scalar inv_gap = Scalar(1) / gap;
  const Scalar denom = Scalar(1) + Scalar(spec.dim) * spec.offdiag * inv_gap;
  if (!(denom > Scalar(0))) {
    throw SingularMatrix("equicorrelated_inverse: rank-one update is singular");
  }
  const Scalar shrink = spec.offdiag * inv_gap * inv_gap / denom;
  Matrix<Scalar> inv = Matrix<Scalar>::Constant(spec.dim, spec.dim, -shrink);
  inv.diagonal().array() += inv_gap;
  return inv;
}

/// Univariate normal truncated to [lower, upper].
class TruncatedNormalSpec {
 public:
  /// Throws ValidationError unless var > 0 and lower < upper.
  TruncatedNormalSpec(double mu, double var, ExtendedReal lower, ExtendedReal upper);

  double mu() const { return mu_; }
  double var() const { return var_; }
  ExtendedReal lower() const { return lower_; }
  ExtendedReal upper() const { return upper_; }

 private:
  double mu_;
  double var_;
  ExtendedReal lower_;
  ExtendedReal upper_;
};

double normal_cdf(double z);
/// log(1 - Phi(z)); switches to a Mills-ratio continued fraction above z = 6.
double log_normal_sf(double z);
/// log Phi(z).
double log_normal_cdf(double z);
/// Inverse standard normal CDF.
double normal_quantile(double p);

/// CDF of the truncated normal at x, evaluated in whichever tail keeps the
/// subtraction well conditioned. Values outside the window clamp to 0 or 1.
double tn_cdf(const TruncatedNormalSpec& spec, double x);

/// Finds the untruncated mean at which `observed` sits at quantile `target`
/// of the truncated law. Throws NoBracket when the root lies beyond
/// observed +/- 40 standard deviations.
double solve_tn_mean(double observed, double var, ExtendedReal lower, ExtendedReal upper,
                     double target);

/// Draws from N(mean, cov) through a cached Cholesky factor.
class MvnSampler {
 public:
  MvnSampler(Vec mean, const Mat& cov);

  template <typename Rng>
  Vec operator()(Rng& rng) const {
    std::normal_distribution<double> std_normal;
    Vec z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
    return mean_ + chol_ * z;
  }

  Eigen::Index dim() const { return mean_.size(); }

 private:
  Vec mean_;
  Mat chol_;
};

template <typename Rng>
Vec mvn_sample(const Vec& mean, const Mat& cov, Rng& rng) {
  return MvnSampler(mean, cov)(rng);
}

}  // namespace pretrends
