#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "pretrends/estimators.hpp"

using namespace pretrends;

namespace {

constexpr double kZ975 = 1.959963984540054;

CovarianceMatrix equicorrelated_sigma(int k, double v) {
  Mat m = Mat::Constant(k + 1, k + 1, v);
  m.diagonal().setConstant(2 * v);
  return CovarianceMatrix(m);
}

CovarianceMatrix random_covariance(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> z;
  Mat g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = z(rng);
  return CovarianceMatrix(g * g.transpose() + 0.2 * Mat::Identity(dim, dim));
}

Vec trend_beta(int k, double slope) {
  Vec beta(k + 1);
  beta(0) = slope;
  for (int j = 1; j <= k; ++j) beta(j) = -slope * j;
  return beta;
}

EstimateBundle bundle_of(const Vec& beta, const CovarianceMatrix& sigma) {
  return EstimateBundle(beta(0), beta.tail(beta.size() - 1), sigma);
}

}  // namespace

TEST(EfficientEstimator, UncorrelatedIsTraditional) {
  Mat m = Mat::Zero(3, 3);
  m.diagonal() << 0.5, 1.0, 2.0;
  m(1, 2) = m(2, 1) = 0.3;
  Vec pre(2);
  pre << 0.4, -0.7;
  const EfficientEstimate e = efficient_estimator(EstimateBundle(1.25, pre, CovarianceMatrix(m)));
  EXPECT_DOUBLE_EQ(e.estimate, 1.25);
  EXPECT_DOUBLE_EQ(e.variance, 0.5);
}

TEST(EfficientEstimator, EquicorrelatedStandardErrors) {
  // v calibrated so that the traditional standard error is 0.1265.
  const double v = 0.008;
  const CovarianceMatrix k1 = equicorrelated_sigma(1, v);
  EXPECT_NEAR(efficient_weights(k1)(0), 0.5, 1e-15);
  const EfficientEstimate e1 = efficient_estimator(EstimateBundle(0.0, Vec::Zero(1), k1));
  EXPECT_NEAR(e1.variance, 1.5 * v, 1e-15);
  EXPECT_NEAR(std::sqrt(e1.variance), 0.110, 1e-3);

  const CovarianceMatrix k8 = equicorrelated_sigma(8, v);
  EXPECT_LT((efficient_weights(k8) - Vec::Constant(8, 1.0 / 9)).cwiseAbs().maxCoeff(), 1e-14);
  const EfficientEstimate e8 = efficient_estimator(EstimateBundle(0.0, Vec::Zero(8), k8));
  EXPECT_NEAR(e8.variance, v * 10.0 / 9.0, 1e-15);
  EXPECT_NEAR(std::sqrt(e8.variance), 0.094, 1e-3);
}

TEST(EfficientEstimator, DecompositionIdentity) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + trial % 8;
    const CovarianceMatrix sigma = random_covariance(rng, k + 1);
    Vec beta(k + 1);
    for (int j = 0; j <= k; ++j) beta(j) = z(rng);
    const EstimateBundle b = bundle_of(beta, sigma);
    const double tilde = efficient_estimator(b).estimate;
    const double rebuilt = tilde + efficient_weights(sigma).dot(b.beta_pre());
    EXPECT_NEAR(b.beta_post(), rebuilt, 1e-12 * std::max(1.0, std::abs(b.beta_post())));
    EXPECT_NEAR(efficient_contrast(sigma).dot(beta), tilde, 1e-12 * std::max(1.0, std::abs(tilde)));
  }
}

TEST(ConditionContrast, EfficientContrastIsUntruncated) {
  std::mt19937_64 rng(32);
  for (int k = 1; k <= 6; ++k) {
    const CovarianceMatrix sigma = random_covariance(rng, k + 1);
    const EstimateBundle b(0.3, Vec::Zero(k), sigma);
    const ConditionalLaw law =
        condition_contrast(b, efficient_contrast(sigma), build_ns_polyhedron(sigma, 0.05));
    EXPECT_TRUE(law.lower.is_neg_inf()) << k;
    EXPECT_TRUE(law.upper.is_pos_inf()) << k;
  }
}

TEST(ConditionContrast, SinglePrePeriodByHand) {
  const double v = 0.008;
  const CovarianceMatrix sigma = equicorrelated_sigma(1, v);
  const PolyhedralConstraint ns = build_ns_polyhedron(sigma, 0.05);
  const double b = kZ975 * std::sqrt(2 * v);
  const double post = 0.21;
  const double pre = -0.07;
  Vec pre_vec(1);
  pre_vec << pre;
  const ConditionalLaw law = condition_contrast(EstimateBundle(post, pre_vec, sigma), Vec::Unit(2, 0), ns);
  // c = (1, 1/2); the pre coordinate is z_pre + x / 2 with z_pre = pre - post / 2,
  // and |z_pre + x / 2| <= b rearranges to the window below.
  const double z_pre = pre - post / 2;
  EXPECT_NEAR(law.lower.value(), -2 * b - 2 * z_pre, 1e-14);
  EXPECT_NEAR(law.upper.value(), 2 * b - 2 * z_pre, 1e-14);
  EXPECT_NEAR(law.c_vector(1), 0.5, 1e-15);
  EXPECT_NEAR(law.z_vector(1), z_pre, 1e-15);
  EXPECT_DOUBLE_EQ(law.variance, 2 * v);
}

TEST(ConditionContrast, MatchesLiteralFormulaAndGridScan) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> kdist(1, 3);
  int bounded_sides = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = kdist(rng);
    const int dim = k + 1;
    const CovarianceMatrix sigma = random_covariance(rng, dim);
    Vec beta(dim);
    for (int j = 0; j < dim; ++j) beta(j) = z(rng);
    // Random rows with a positive margin at beta so the constraint holds.
    const int rows = 1 + static_cast<int>(rng() % 6);
    Mat a(rows, dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
    const Vec b = a * beta + Vec::NullaryExpr(rows, [&] { return std::abs(z(rng)) + 0.05; });
    Vec eta(dim);
    for (int j = 0; j < dim; ++j) eta(j) = z(rng);

    const PolyhedralConstraint constraint(a, b);
    const ConditionalLaw law = condition_contrast(bundle_of(beta, sigma), eta, constraint);

    // Literal definition.
    const Vec c = sigma.matrix() * eta / eta.dot(sigma.matrix() * eta);
    const Vec zvec = beta - c * eta.dot(beta);
    const Vec ac = a * c;
    const Vec az = a * zvec;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int j = 0; j < rows; ++j) {
      const double bound = (b(j) - az(j)) / ac(j);
      if (ac(j) > 0) hi = std::min(hi, bound);
      if (ac(j) < 0) lo = std::max(lo, bound);
    }
    if (std::isinf(lo)) {
      EXPECT_TRUE(law.lower.is_neg_inf());
    } else {
      EXPECT_NEAR(law.lower.to_double(), lo, 1e-10 * std::max(1.0, std::abs(lo)));
    }
    if (std::isinf(hi)) {
      EXPECT_TRUE(law.upper.is_pos_inf());
    } else {
      EXPECT_NEAR(law.upper.to_double(), hi, 1e-10 * std::max(1.0, std::abs(hi)));
    }

    // Dense grid scan of {x : A (Z + c x) <= b}.
    const double span = 50.0;
    const int steps = 200000;
    const double h = span / steps;
    const auto [glo, ghi] = oracle::grid_window(a, b, zvec, c, law.observed, span, steps);
    if (std::isinf(glo)) {
      EXPECT_LT(law.lower.to_double(), law.observed - span + h);
    } else {
      EXPECT_LE(law.lower.value(), glo + 1e-9);
      EXPECT_GE(law.lower.value(), glo - h - 1e-9);
      ++bounded_sides;
    }
    if (std::isinf(ghi)) {
      EXPECT_GT(law.upper.to_double(), law.observed + span - h);
    } else {
      EXPECT_GE(law.upper.value(), ghi - 1e-9);
      EXPECT_LE(law.upper.value(), ghi + h + 1e-9);
      ++bounded_sides;
    }
  }
  EXPECT_GT(bounded_sides, 100);
}

TEST(ConditionContrast, Errors) {
  const CovarianceMatrix sigma = equicorrelated_sigma(2, 0.008);
  const PolyhedralConstraint ns = build_ns_polyhedron(sigma, 0.05);
  Vec pre(2);
  pre << 0.9, 0.0;
  EXPECT_THROW(condition_contrast(EstimateBundle(0.0, pre, sigma), Vec::Unit(3, 0), ns), ConstraintViolated);
  EXPECT_THROW(condition_contrast(EstimateBundle(0.0, Vec::Zero(2), sigma), Vec::Zero(3), ns), ZeroContrast);
  EXPECT_THROW(condition_contrast(EstimateBundle(0.0, Vec::Zero(2), sigma), Vec::Unit(2, 0), ns),
               ValidationError);
}

TEST(QuantileUnbiased, UntruncatedReducesToWald) {
  const CovarianceMatrix sigma = equicorrelated_sigma(3, 0.008);
  Vec pre(3);
  pre << 0.05, -0.02, 0.1;
  const EstimateBundle b(0.4, pre, sigma);
  const ConditionalLaw law = condition_contrast(b, efficient_contrast(sigma), build_ns_polyhedron(sigma, 0.05));
  const EfficientEstimate e = efficient_estimator(b);
  EXPECT_NEAR(quantile_unbiased_estimate(law, 0.5).value(), e.estimate, 1e-10);
  const Interval ci = conditional_ci(law, 0.05);
  EXPECT_NEAR(ci.lower.value(), e.estimate - kZ975 * std::sqrt(e.variance), 1e-9);
  EXPECT_NEAR(ci.upper.value(), e.estimate + kZ975 * std::sqrt(e.variance), 1e-9);
}

TEST(QuantileUnbiased, UnreachableRootBecomesInfinite) {
  ConditionalLaw law;
  law.variance = 1.0;
  law.lower = ExtendedReal::finite(0.0);
  law.upper = ExtendedReal::finite(1e-9);
  law.observed = 1e-9 * (1 - 1e-6);
  EXPECT_TRUE(quantile_unbiased_estimate(law, 0.025).is_pos_inf());
  const Interval ci = conditional_ci(law, 0.05);
  EXPECT_TRUE(ci.upper.is_pos_inf());
  EXPECT_TRUE(ci.width().is_pos_inf());
}

TEST(EtaGamma, SinglePrePeriodLinear) {
  const Vec eta = eta_gamma(1, 1, 1);
  ASSERT_EQ(eta.size(), 2);
  EXPECT_NEAR(eta(0), 1.0, 1e-14);
  EXPECT_NEAR(eta(1), 1.0, 1e-14);
  Vec trend(2);
  trend << 0.065, -0.065;
  EXPECT_NEAR(eta.dot(trend), 0.0, 1e-15);
}

TEST(EtaGamma, NoPreTrendLeavesPostUntouched) {
  for (int k = 1; k <= 6; ++k) {
    for (int p = 1; p <= k; ++p) {
      for (int m : {1, 2, 3}) {
        Vec beta = Vec::Zero(k + 1);
        beta(0) = 0.37;
        EXPECT_NEAR(eta_gamma(k, p, m).dot(beta), 0.37, 1e-14);
      }
    }
  }
}

TEST(EtaGamma, ReproducesPolynomialTrends) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> z;
  for (int p = 1; p <= 3; ++p) {
    for (int k = p; k <= 8; ++k) {
      for (int trial = 0; trial < 10; ++trial) {
        // beta_t = sum_{d=1..deg} a_d t^d, with beta_0 = 0 by construction.
        const int deg = 1 + trial % p;
        std::vector<double> coef(static_cast<std::size_t>(deg) + 1);
        for (auto& c : coef) c = z(rng);
        auto poly = [&](double t) {
          double s = 0.0;
          for (int d = 1; d <= deg; ++d) s += coef[static_cast<std::size_t>(d)] * std::pow(t, d);
          return s;
        };
        Vec beta(k + 1);
        beta(0) = poly(1.0);
        for (int j = 1; j <= k; ++j) beta(j) = poly(-j);
        EXPECT_NEAR(eta_gamma(k, p, 1).dot(beta), 0.0, 1e-10) << "k " << k << " p " << p;
      }
    }
  }
  Vec quad(4);
  quad << 1, 1, 4, 9;
  EXPECT_NEAR(eta_gamma(3, 2, 1).dot(quad), 0.0, 1e-12);
}

TEST(EtaGamma, LinearFitWeightsMatchLeastSquares) {
  // Least-squares line through (0, 0), (-1, y1), ..., (-4, y4) predicted at
  // t = 1, computed from the textbook slope and intercept formulas.
  const int k = 4;
  const Vec eta = eta_gamma(k, 1, 1);
  for (int j = 1; j <= k; ++j) {
    std::vector<double> y(k + 1, 0.0);
    y[static_cast<std::size_t>(j)] = 1.0;
    double tbar = 0.0;
    double ybar = 0.0;
    for (int i = 0; i <= k; ++i) {
      tbar += -i;
      ybar += y[static_cast<std::size_t>(i)];
    }
    tbar /= k + 1;
    ybar /= k + 1;
    double sty = 0.0;
    double stt = 0.0;
    for (int i = 0; i <= k; ++i) {
      sty += (-i - tbar) * (y[static_cast<std::size_t>(i)] - ybar);
      stt += (-i - tbar) * (-i - tbar);
    }
    const double slope = sty / stt;
    const double prediction = ybar + slope * (1.0 - tbar);
    EXPECT_NEAR(eta(j), -prediction, 1e-13) << j;
  }
  EXPECT_EQ(eta(0), 1.0);
}

TEST(EtaGamma, CubicExample) {
  const Vec eta = eta_gamma(3, 3, 1);
  Vec expected(4);
  expected << 1, 6, -4, 1;
  EXPECT_LT((eta - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(eta_gamma(2, 3, 1), ValidationError);
  EXPECT_THROW(eta_gamma(2, 0, 1), ValidationError);
  EXPECT_THROW(eta_gamma(2, 1, 0), ValidationError);
}

TEST(Analyze, PassingBundleFillsEveryBlock) {
  const CovarianceMatrix sigma = equicorrelated_sigma(3, 0.008);
  const InferenceReport r = analyze(EstimateBundle(0.12, Vec::Zero(3), sigma));
  EXPECT_TRUE(r.pretest_passed);
  ASSERT_TRUE(r.median_unbiased_beta.has_value());
  ASSERT_TRUE(r.median_unbiased_gamma.has_value());
  const auto& mb = *r.median_unbiased_beta;
  ASSERT_TRUE(mb.estimate.is_finite());
  EXPECT_TRUE(mb.ci.contains(mb.estimate.value()));
  EXPECT_NEAR(r.traditional.se, std::sqrt(0.016), 1e-15);
  EXPECT_NEAR(r.traditional.ci_upper - r.traditional.ci_lower, 2 * kZ975 * std::sqrt(0.016), 1e-12);
  EXPECT_EQ(r.median_unbiased_gamma->eta, eta_gamma(3, 1, 1));
}

TEST(Analyze, FailingBundleHasNoConditionalBlocks) {
  const CovarianceMatrix sigma = equicorrelated_sigma(3, 0.008);
  Vec pre = Vec::Zero(3);
  pre(1) = 3.0 * std::sqrt(0.016);
  const InferenceReport r = analyze(EstimateBundle(0.12, pre, sigma));
  EXPECT_FALSE(r.pretest_passed);
  EXPECT_FALSE(r.median_unbiased_beta.has_value());
  EXPECT_FALSE(r.median_unbiased_gamma.has_value());
  EXPECT_DOUBLE_EQ(r.traditional.estimate, 0.12);
  EXPECT_THROW(analyze(EstimateBundle(0.12, pre, sigma), 0.05, 0.05, 4), ValidationError);
}

TEST(MomentOracle, ParallelTrendsSymmetry) {
  const int k = 3;
  const CovarianceMatrix sigma = equicorrelated_sigma(k, 0.008);
  Vec beta = Vec::Zero(k + 1);
  beta(0) = 0.2;
  std::mt19937_64 rng(41);
  const ConditionalMoments m =
      conditional_moment_oracle(beta, sigma, build_ns_polyhedron(sigma, 0.05), 200000, rng);
  const Vec se = m.mean_standard_errors();
  for (int j = 0; j <= k; ++j) EXPECT_LT(std::abs(m.mean(j) - beta(j)), 4 * se(j)) << j;
  EXPECT_GT(m.acceptance, 0.8);
  EXPECT_LT(m.acceptance, 1.0);
}

TEST(MomentOracle, UpwardTrendBiasesBothPostEstimatorsUp) {
  for (int k : {1, 3, 5}) {
    const CovarianceMatrix sigma = equicorrelated_sigma(k, 0.008);
    const Vec beta = trend_beta(k, 0.065);
    std::mt19937_64 rng(42 + k);
    const ConditionalMoments m =
        conditional_moment_oracle(beta, sigma, build_ns_polyhedron(sigma, 0.05), 200000, rng);
    const Vec se = m.mean_standard_errors();
    EXPECT_GT(m.mean(0) - beta(0), 4 * se(0)) << k;
    // The efficient estimator is a fixed linear map of beta_hat.
    const Vec eta = efficient_contrast(sigma);
    const double eff_mean = eta.dot(m.mean);
    const double eff_se = std::sqrt(eta.dot(m.cov * eta) / static_cast<double>(m.n_accepted));
    EXPECT_GT(eff_mean - beta(0), 4 * eff_se) << k;
  }
}

TEST(MomentOracle, RegressionIdentityOnRandomRectangles) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 2.5);
  for (int trial = 0; trial < 8; ++trial) {
    const int k = 1 + trial % 4;
    const CovarianceMatrix sigma = random_covariance(rng, k + 1);
    Vec beta(k + 1);
    for (int j = 0; j <= k; ++j) beta(j) = 0.5 * z(rng);
    // Random box on the pre coordinates: lo_j <= beta_pre_j <= hi_j.
    Mat a = Mat::Zero(2 * k, k + 1);
    Vec b(2 * k);
    for (int j = 0; j < k; ++j) {
      const double sd = std::sqrt(sigma(j + 1, j + 1));
      const double center = beta(j + 1) + sd * z(rng);
      a(j, j + 1) = 1.0;
      b(j) = center + u(rng) * sd;
      a(k + j, j + 1) = -1.0;
      b(k + j) = -(center - u(rng) * sd);
    }
    const PolyhedralConstraint box(a, b);
    const Vec w = efficient_weights(sigma);

    std::mt19937_64 stream_a(1000 + 2 * trial);
    std::mt19937_64 stream_b(1001 + 2 * trial);
    const ConditionalMoments lhs = conditional_moment_oracle(beta, sigma, box, 200000, stream_a);
    const ConditionalMoments rhs = conditional_moment_oracle(beta, sigma, box, 200000, stream_b);

    // E[post | B] = post + w'(E[pre | B] - pre), sides from independent streams.
    const double predicted = beta(0) + w.dot(rhs.mean.tail(k) - beta.tail(k));
    const double var_rhs = w.dot(rhs.cov.bottomRightCorner(k, k) * w) / static_cast<double>(rhs.n_accepted);
    const double var_lhs = lhs.cov(0, 0) / static_cast<double>(lhs.n_accepted);
    EXPECT_LT(std::abs(lhs.mean(0) - predicted), 4 * std::sqrt(var_lhs + var_rhs)) << trial;

    // E[efficient | B] = post - w' pre.
    Vec eta(k + 1);
    eta << 1.0, -w;
    const double eff_se = std::sqrt(eta.dot(lhs.cov * eta) / static_cast<double>(lhs.n_accepted));
    EXPECT_LT(std::abs(eta.dot(lhs.mean) - (beta(0) - w.dot(beta.tail(k)))), 4 * eff_se) << trial;
  }
}

TEST(MomentOracle, RefusesDegenerateInputs) {
  const CovarianceMatrix sigma = equicorrelated_sigma(2, 0.008);
  std::mt19937_64 rng(44);
  EXPECT_THROW(conditional_moment_oracle(Vec::Zero(3), sigma, build_ns_polyhedron(sigma, 0.05), 100, rng),
               ValidationError);
  Vec far = Vec::Zero(3);
  far(1) = 10.0;
  EXPECT_THROW(conditional_moment_oracle(far, sigma, build_ns_polyhedron(sigma, 0.05), 10000, rng),
               DegenerateAcceptance);
}

TEST(Independence, EfficientEstimatorUncorrelatedWithPrePeriods) {
  const int k = 4;
  const CovarianceMatrix sigma = equicorrelated_sigma(k, 0.008);
  const MvnSampler sampler(trend_beta(k, 0.065), sigma.matrix());
  const Vec eta = efficient_contrast(sigma);
  std::mt19937_64 rng(45);
  constexpr int reps = 100000;
  std::vector<double> tilde(reps);
  std::vector<std::vector<double>> pre(k, std::vector<double>(reps));
  for (int i = 0; i < reps; ++i) {
    const Vec x = sampler(rng);
    tilde[i] = eta.dot(x);
    for (int j = 0; j < k; ++j) pre[j][i] = x(j + 1);
  }
  for (int j = 0; j < k; ++j) EXPECT_LT(std::abs(oracle::correlation(tilde, pre[j])), 4.0 / std::sqrt(reps));
}

TEST(ConditionalVariance, PostVarianceShrinksAndEfficientVarianceIsUnchanged) {
  for (int k = 1; k <= 5; ++k) {
    const CovarianceMatrix sigma = equicorrelated_sigma(k, 0.008);
    std::mt19937_64 rng(46 + k);
    const ConditionalMoments m =
        conditional_moment_oracle(Vec::Zero(k + 1), sigma, build_ns_polyhedron(sigma, 0.05), 100000, rng);
    EXPECT_LT(m.cov(0, 0), sigma.sigma11()) << k;
    const Vec eta = efficient_contrast(sigma);
    const double target = efficient_estimator(EstimateBundle(0.0, Vec::Zero(k), sigma)).variance;
    EXPECT_NEAR(eta.dot(m.cov * eta), target, 0.03 * target) << k;
  }
}

TEST(Coverage, ConditionalIntervalsCoverAfterPassing) {
  for (const double slope : {0.0, 0.065}) {
    const int k = 3;
    const CovarianceMatrix sigma = equicorrelated_sigma(k, 0.008);
    const Vec beta = trend_beta(k, slope);
    const MvnSampler sampler(beta, sigma.matrix());
    const PolyhedralConstraint ns = build_ns_polyhedron(sigma, 0.05);
    const Vec eta_b = Vec::Unit(k + 1, 0);
    const Vec eta_g = eta_gamma(k, 1, 1);
    std::mt19937_64 rng(47);
    int accepted = 0;
    int cover_beta = 0;
    int cover_gamma = 0;
    int below = 0;
    while (accepted < 20000) {
      const Vec x = sampler(rng);
      if (!ns.contains(x)) continue;
      ++accepted;
      const EstimateBundle b = bundle_of(x, sigma);
      const ConditionalLaw lb = condition_contrast(b, eta_b, ns);
      const ConditionalLaw lg = condition_contrast(b, eta_g, ns);
      ASSERT_TRUE(lb.lower <= lb.observed && lb.observed <= lb.upper);
      ASSERT_TRUE(lg.lower <= lg.observed && lg.observed <= lg.upper);
      cover_beta += conditional_ci(lb, 0.05).contains(beta(0));
      cover_gamma += conditional_ci(lg, 0.05).contains(eta_g.dot(beta));
      below += quantile_unbiased_estimate(lb, 0.05) <= beta(0);
    }
    EXPECT_NEAR(cover_beta / 20000.0, 0.95, 0.01) << slope;
    EXPECT_NEAR(cover_gamma / 20000.0, 0.95, 0.01) << slope;
    EXPECT_NEAR(below / 20000.0, 0.05, 0.01) << slope;
  }
}
