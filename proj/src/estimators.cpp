#include "pretrends/estimators.hpp"

#include <algorithm>

namespace pretrends {

Vec efficient_weights(const CovarianceMatrix& sigma) {
  const auto llt = checked_llt<decltype(sigma.sigma22()), SingularSigma22>(sigma.sigma22(), "Sigma22");
  return llt.solve(sigma.sigma21());
}

EfficientEstimate efficient_estimator(const EstimateBundle& bundle) {
  const auto& sigma = bundle.sigma();
  const Vec w = efficient_weights(sigma);
  const double estimate = bundle.beta_post() - w.dot(bundle.beta_pre());
  const double variance = sigma.sigma11() - w.dot(sigma.sigma21().col(0));
  if (!(variance > 0)) throw SingularSigma22("efficient estimator has non-positive variance");
  return {estimate, variance};
}

Vec efficient_contrast(const CovarianceMatrix& sigma) {
  Vec eta(sigma.dim());
  eta << 1.0, -efficient_weights(sigma);
  return eta;
}

ConditionalLaw condition_contrast(const EstimateBundle& bundle, const Vec& eta,
                                  const PolyhedralConstraint& constraint) {
  const Vec beta = bundle.beta();
  const Mat& a = constraint.a_matrix;
  if (eta.size() != beta.size()) throw ValidationError("condition_contrast: eta has the wrong length");
  if (a.cols() != beta.size()) throw ValidationError("condition_contrast: constraint has the wrong width");
  if (eta.isZero(0.0)) throw ZeroContrast("condition_contrast: eta is zero");

  const Vec sigma_eta = bundle.sigma().matrix() * eta;
  const double variance = eta.dot(sigma_eta);
  if (!(variance > 0)) throw ZeroContrast("condition_contrast: eta' Sigma eta is not positive");

  ConditionalLaw law;
  law.eta = eta;
  law.variance = variance;
  law.observed = eta.dot(beta);
  law.c_vector = sigma_eta / variance;
  law.z_vector = beta - law.c_vector * law.observed;

  const Vec a_beta = a * beta;
  Vec slack = constraint.b_vector - a_beta;
  for (Eigen::Index j = 0; j < slack.size(); ++j) {
    const double scale = std::abs(constraint.b_vector(j)) + std::abs(a_beta(j));
    if (slack(j) < -1e-12 * (scale > 0 ? scale : 1.0)) {
      throw ConstraintViolated("condition_contrast: observed coefficients violate constraint row " +
                               std::to_string(j));
    }
    slack(j) = std::max(slack(j), 0.0);
  }

  // (b_j - (A Z)_j) / (A c)_j rewritten as observed + slack_j / (A c)_j,
  // which keeps the observed value inside its own window under rounding.
  const Vec a_c = a * law.c_vector;
  const double a_norm = a.rows() > 0 ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  const double zero_tol = 1e-10 * a_norm * law.c_vector.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < a_c.size(); ++j) {
    if (std::abs(a_c(j)) <= zero_tol) continue;
    const auto bound = ExtendedReal::finite(law.observed + slack(j) / a_c(j));
    if (a_c(j) > 0) {
      law.upper = std::min(law.upper, bound);
    } else {
      law.lower = std::max(law.lower, bound);
    }
  }
  return law;
}

ExtendedReal quantile_unbiased_estimate(const ConditionalLaw& law, double target) {
  try {
    return ExtendedReal::finite(solve_tn_mean(law.observed, law.variance, law.lower, law.upper, target));
  } catch (const NoBracket& e) {
    return e.direction() > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
  }
}

ExtendedReal Interval::width() const {
  if (!lower.is_finite() || !upper.is_finite()) return ExtendedReal::pos_inf();
  return ExtendedReal::finite(upper.value() - lower.value());
}

Interval conditional_ci(const ConditionalLaw& law, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("conditional_ci: alpha must lie in (0, 1)");
  // The solving mean decreases in the target quantile.
  const ExtendedReal a = quantile_unbiased_estimate(law, alpha / 2.0);
  const ExtendedReal b = quantile_unbiased_estimate(law, 1.0 - alpha / 2.0);
  return {std::min(a, b), std::max(a, b)};
}

namespace {

WaldBlock wald(double estimate, double variance, double z) {
  const double se = std::sqrt(variance);
  return {estimate, se, estimate - z * se, estimate + z * se};
}

ConditionalBlock conditional_block(const EstimateBundle& bundle, Vec eta,
                                   const PolyhedralConstraint& constraint, double alpha_ci) {
  const ConditionalLaw law = condition_contrast(bundle, eta, constraint);
  ConditionalBlock block;
  block.estimate = quantile_unbiased_estimate(law, 0.5);
  block.ci = conditional_ci(law, alpha_ci);
  block.eta = std::move(eta);
  block.window_lower = law.lower;
  block.window_upper = law.upper;
  return block;
}

}  // namespace

InferenceReport analyze(const EstimateBundle& bundle, double alpha_pretest, double alpha_ci,
                        int trend_order) {
  if (trend_order < 1 || trend_order > bundle.k()) {
    throw ValidationError("trend order " + std::to_string(trend_order) + " must lie in [1, " +
                          std::to_string(bundle.k()) + "]");
  }
  InferenceReport report;
  report.k = bundle.k();
  report.alpha_pretest = alpha_pretest;
  report.alpha_ci = alpha_ci;
  report.trend_order = trend_order;
  report.pretest_passed = passes_pretest(bundle, alpha_pretest);

  const double z = critical_value(alpha_ci);
  report.traditional = wald(bundle.beta_post(), bundle.sigma().sigma11(), z);
  const EfficientEstimate eff = efficient_estimator(bundle);
  report.efficient = wald(eff.estimate, eff.variance, z);

  if (report.pretest_passed) {
    const PolyhedralConstraint ns = build_ns_polyhedron(bundle.sigma(), alpha_pretest);
    report.median_unbiased_beta =
        conditional_block(bundle, Vec::Unit(bundle.k() + 1, 0), ns, alpha_ci);
    report.median_unbiased_gamma =
        conditional_block(bundle, eta_gamma(bundle.k(), trend_order, 1), ns, alpha_ci);
  }
  return report;
}

}  // namespace pretrends
