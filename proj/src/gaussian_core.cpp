#include "pretrends/gaussian_core.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <charconv>
#include <limits>
#include <numbers>

namespace pretrends {

std::string to_string(const ExtendedReal& x) {
  if (x.is_neg_inf()) return "-inf";
  if (x.is_pos_inf()) return "inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x.value());
  return std::string(buf, end);
}

CovarianceMatrix::CovarianceMatrix(Mat entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw ValidationError("covariance matrix must be square and non-empty");
  }
  if (!entries_.allFinite()) throw ValidationError("covariance matrix has non-finite entries");
  if (!is_symmetric(entries_)) throw ValidationError("covariance matrix is not symmetric");
  checked_llt(entries_, "covariance matrix");
}

CovarianceMatrix CovarianceMatrix::leading(Eigen::Index k) const {
  if (k < 0 || k > this->k()) throw ValidationError("leading block larger than covariance");
  return CovarianceMatrix(entries_.topLeftCorner(k + 1, k + 1));
}

TruncatedNormalSpec::TruncatedNormalSpec(double mu, double var, ExtendedReal lower,
                                         ExtendedReal upper)
    : mu_(mu), var_(var), lower_(lower), upper_(upper) {
  if (!std::isfinite(mu)) throw ValidationError("truncated normal: mean must be finite");
  if (!(var > 0) || !std::isfinite(var)) {
    throw ValidationError("truncated normal: variance must be positive");
  }
  if (!(lower < upper)) throw ValidationError("truncated normal: requires lower < upper");
}

namespace {

constexpr double kTailSwitch = 6.0;

// Q(z) / phi(z) for z >= 6, by backward evaluation of
// 1 / (z + 1 / (z + 2 / (z + 3 / (z + ...)))).
double mills_ratio(double z) {
  double t = z;
  for (int k = 60; k >= 1; --k) t = z + k / t;
  return 1.0 / t;
}

// log(1 - exp(d)) for d <= 0.
double log1mexp(double d) {
  return d > -std::numbers::ln2 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d));
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_sf(double z) {
  if (z < kTailSwitch) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  constexpr double log_sqrt_2pi = 0.91893853320467274178;
  return -0.5 * z * z - log_sqrt_2pi + std::log(mills_ratio(z));
}

double log_normal_cdf(double z) { return log_normal_sf(-z); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw ValidationError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double tn_cdf(const TruncatedNormalSpec& spec, double x) {
  if (x <= spec.lower()) return 0.0;
  if (spec.upper() <= x) return 1.0;

  const double sd = std::sqrt(spec.var());
  const double zx = (x - spec.mu()) / sd;
  const double inf = std::numeric_limits<double>::infinity();
  const double zl = spec.lower().is_finite() ? (spec.lower().value() - spec.mu()) / sd : -inf;
  const double zu = spec.upper().is_finite() ? (spec.upper().value() - spec.mu()) / sd : inf;

  double result;
  if (zl > 0) {
    // Window in the upper tail: work with survival functions.
    //   F = (Q(zl) - Q(zx)) / (Q(zl) - Q(zu))
    const double lq_l = log_normal_sf(zl);
    const double lq_x = log_normal_sf(zx);
    const double den = spec.upper().is_finite() ? -std::expm1(log_normal_sf(zu) - lq_l) : 1.0;
    if (!(den > 0)) throw DegenerateWindow("tn_cdf: truncation window carries no mass");
    result = -std::expm1(lq_x - lq_l) / den;
  } else if (zu < 0) {
    // Window in the lower tail: F = (Phi(zx) - Phi(zl)) / (Phi(zu) - Phi(zl)).
    const double lp_u = log_normal_cdf(zu);
    const double lp_x = log_normal_cdf(zx);
    double log_num = lp_x;
    double log_den = lp_u;
    if (spec.lower().is_finite()) {
      const double lp_l = log_normal_cdf(zl);
      log_num += log1mexp(lp_l - lp_x);
      log_den += log1mexp(lp_l - lp_u);
    }
    if (!std::isfinite(log_den)) throw DegenerateWindow("tn_cdf: truncation window carries no mass");
    result = std::exp(log_num - log_den);
  } else {
    const double p_l = spec.lower().is_finite() ? normal_cdf(zl) : 0.0;
    const double p_u = spec.upper().is_finite() ? normal_cdf(zu) : 1.0;
    const double den = p_u - p_l;
    if (!(den > 0)) throw DegenerateWindow("tn_cdf: truncation window carries no mass");
    if (zx <= 0) {
      result = (normal_cdf(zx) - p_l) / den;
    } else {
      // Upper half: subtract survival functions to keep precision near 1.
      const double q_x = 0.5 * std::erfc(zx / std::numbers::sqrt2);
      const double q_u = spec.upper().is_finite() ? 0.5 * std::erfc(zu / std::numbers::sqrt2) : 0.0;
      result = 1.0 - (q_x - q_u) / den;
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

double solve_tn_mean(double observed, double var, ExtendedReal lower, ExtendedReal upper,
                     double target) {
  if (!(target > 0 && target < 1)) throw ValidationError("solve_tn_mean: target must lie in (0, 1)");
  if (!(var > 0)) throw ValidationError("solve_tn_mean: variance must be positive");
  if (!(lower <= observed && observed <= upper)) {
    throw ValidationError("solve_tn_mean: observed value lies outside the truncation window");
  }
  const double sd = std::sqrt(var);
  constexpr double kMaxReach = 40.0;
  constexpr int kMaxIterations = 200;

  // F(mu) = P(X <= observed) is strictly decreasing in mu.
  auto cdf_at = [&](double mu) { return tn_cdf(TruncatedNormalSpec(mu, var, lower, upper), observed); };

  auto expand = [&](int sign) {
    double reach = 1.0;
    while (true) {
      const double mu = observed + sign * reach * sd;
      const double f = cdf_at(mu);
      if (sign < 0 ? f >= target : f <= target) return mu;
      if (reach >= kMaxReach) {
        throw NoBracket("solve_tn_mean: no root within 40 standard deviations", sign);
      }
      reach = std::min(2.0 * reach, kMaxReach);
    }
  };
  double lo = expand(-1);
  double hi = expand(+1);

  for (int i = 0; i < kMaxIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = cdf_at(mid);
    if (f == target) return mid;
    if (f > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * std::max(sd, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

MvnSampler::MvnSampler(Vec mean, const Mat& cov) : mean_(std::move(mean)) {
  if (cov.rows() != mean_.size() || cov.cols() != mean_.size()) {
    throw ValidationError("mvn_sample: mean and covariance dimensions disagree");
  }
  chol_ = checked_llt(cov, "sampling covariance").matrixL();
}

}  // namespace pretrends
