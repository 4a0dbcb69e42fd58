#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "pretrends/event_study.hpp"
#include "pretrends/pretest.hpp"

namespace pretrends {

struct EfficientEstimate {
  double estimate = 0.0;
  double variance = 0.0;
};

/// Sigma22^{-1} Sigma21, the regression of the post coefficient on the pre
/// coefficients. Throws SingularSigma22.
Vec efficient_weights(const CovarianceMatrix& sigma);

/// beta_post - Sigma12 Sigma22^{-1} beta_pre and its variance
/// Sigma11 - Sigma12 Sigma22^{-1} Sigma21. Independent of beta_pre under
/// joint normality.
EfficientEstimate efficient_estimator(const EstimateBundle& bundle);

/// The contrast (1, -Sigma22^{-1} Sigma21) whose inner product with beta is
/// the efficient estimator.
Vec efficient_contrast(const CovarianceMatrix& sigma);

/// Law of eta' beta_hat given A beta_hat <= b and the residual Z: a normal
/// with mean eta' beta and variance eta' Sigma eta truncated to [lower, upper].
struct ConditionalLaw {
  double observed = 0.0;
  double variance = 0.0;
  ExtendedReal lower = ExtendedReal::neg_inf();
  ExtendedReal upper = ExtendedReal::pos_inf();
  Vec z_vector;
  Vec c_vector;
  Vec eta;

  TruncatedNormalSpec spec_at(double mean) const { return {mean, variance, lower, upper}; }
};

ConditionalLaw condition_contrast(const EstimateBundle& bundle, const Vec& eta,
                                  const PolyhedralConstraint& constraint);

/// Mean at which the observed contrast sits at quantile `target` of its
/// truncated law. Returns an infinite value when no finite root exists
/// within reach of the bracketing search.
ExtendedReal quantile_unbiased_estimate(const ConditionalLaw& law, double target);

struct Interval {
  ExtendedReal lower;
  ExtendedReal upper;

  ExtendedReal width() const;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Equal-tailed 1 - alpha interval from the alpha/2 and 1 - alpha/2
/// quantile-unbiased estimates, sorted so that lower <= upper.
Interval conditional_ci(const ConditionalLaw& law, double alpha);

/// Contrast eta with eta' beta = gamma_m, the post coefficient net of a
/// degree-p polynomial fitted through (0, 0), (-1, beta_-1), ..., (-k, beta_-k)
/// and extrapolated to t = m. Ordered (post, pre_{-1}, ..., pre_{-k}).
template <typename Scalar = double>
Vector<Scalar> eta_gamma(int k, int p, int m = 1) {
  if (k < 1) throw ValidationError("eta_gamma: k must be at least 1");
  if (p < 1 || p > k) throw ValidationError("eta_gamma: trend order must satisfy 1 <= p <= k");
  if (m < 1) throw ValidationError("eta_gamma: post period index must be at least 1");

  // Polynomial design over t = 0, -1, ..., -k with 0^0 = 1.
  Matrix<Scalar> x(k + 1, p + 1);
  for (int row = 0; row <= k; ++row) {
    Scalar power(1);
    for (int col = 0; col <= p; ++col) {
      x(row, col) = power;
      power *= Scalar(-row);
    }
  }
  Vector<Scalar> at_m(p + 1);
  Scalar power(1);
  for (int col = 0; col <= p; ++col) {
    at_m(col) = power;
    power *= Scalar(m);
  }

  // Prediction weights X (X'X)^{-1} at_m = Q R^{-T} at_m.
  Eigen::HouseholderQR<Matrix<Scalar>> qr(x);
  const Matrix<Scalar> r = qr.matrixQR().topRows(p + 1).template triangularView<Eigen::Upper>();
  using std::abs;
  const Scalar rmax = r.diagonal().cwiseAbs().maxCoeff();
  if (r.diagonal().cwiseAbs().minCoeff() <= Scalar(1e-12) * rmax) {
    throw RankDeficientX("eta_gamma: polynomial design is rank deficient");
  }
  const Vector<Scalar> y = r.transpose().template triangularView<Eigen::Lower>().solve(at_m);
  const Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(k + 1, p + 1);
  const Vector<Scalar> weights = q * y;

  Vector<Scalar> eta(k + 1);
  eta(0) = Scalar(1);
  eta.tail(k) = -weights.tail(k);
  return eta;
}

struct WaldBlock {
  double estimate = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct ConditionalBlock {
  ExtendedReal estimate;
  Interval ci;
  Vec eta;
  /// Truncation window of the contrast.
  ExtendedReal window_lower;
  ExtendedReal window_upper;
};

struct InferenceReport {
  int k = 0;
  double alpha_pretest = 0.05;
  double alpha_ci = 0.05;
  bool pretest_passed = false;
  int trend_order = 1;
  WaldBlock traditional;
  WaldBlock efficient;
  /// Present only when the pre-test passed.
  std::optional<ConditionalBlock> median_unbiased_beta;
  std::optional<ConditionalBlock> median_unbiased_gamma;
};

/// Runs the pre-test and every estimator. Conditional blocks are computed
/// against the no-significant-pre-trend polyhedron and left empty when the
/// pre-test fails.
InferenceReport analyze(const EstimateBundle& bundle, double alpha_pretest = 0.05,
                        double alpha_ci = 0.05, int trend_order = 1);

struct ConditionalMoments {
  Vec mean;
  Mat cov;
  double acceptance = 0.0;
  std::size_t n_accepted = 0;
  std::size_t reps = 0;

  /// Monte Carlo standard error of each component of `mean`.
  Vec mean_standard_errors() const { return (cov.diagonal() / static_cast<double>(n_accepted)).cwiseSqrt(); }
};

/// Rejection-sampled mean and covariance of beta_hat ~ N(true_beta, sigma)
/// given A beta_hat <= b. Requires reps >= 10^4 and at least 100 accepted
/// draws (DegenerateAcceptance otherwise).
ConditionalMoments conditional_moment_oracle(const Vec& true_beta, const CovarianceMatrix& sigma,
                                             const PolyhedralConstraint& constraint, std::size_t reps,
                                             std::mt19937_64& rng);

}  // namespace pretrends
