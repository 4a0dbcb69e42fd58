#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pretrends/event_study.hpp"

namespace oracle {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Truncated normal CDF by quadrature of the density over a finite window.
inline double tn_cdf_quadrature(double mu, double sd, double lower, double upper, double x) {
  // Scale the density to peak near 1 on the window so the absolute
  // quadrature tolerance is effectively relative.
  const double zl = (lower - mu) / sd;
  const double zu = (upper - mu) / sd;
  const double zmin = (zl <= 0 && zu >= 0) ? 0.0 : std::min(std::abs(zl), std::abs(zu));
  auto dens = [&](double v) {
    const double z = (v - mu) / sd;
    return std::exp(-0.5 * (z * z - zmin * zmin));
  };
  const double mass = integrate(dens, lower, upper);
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  return integrate(dens, lower, x) / mass;
}

/// Event-study coefficients from the saturated dummy regression
/// y ~ 1 + D + sum_{t != 0} 1{period = t} + sum_{t != 0} D 1{period = t},
/// read off the interaction terms. Returns (post, pre_{-1}, ..., pre_{-K}).
inline Eigen::VectorXd ols_event_study(const pretrends::PanelData& data) {
  const int k = data.k();
  std::vector<int> periods;
  for (int t = -k; t <= 1; ++t) {
    if (t != 0) periods.push_back(t);
  }
  const auto n = static_cast<Eigen::Index>(data.rows().size());
  const auto p = static_cast<Eigen::Index>(2 + 2 * periods.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = data.rows()[static_cast<std::size_t>(i)];
    y(i) = row.outcome;
    x(i, 0) = 1.0;
    x(i, 1) = row.treated ? 1.0 : 0.0;
    for (std::size_t j = 0; j < periods.size(); ++j) {
      if (row.period != periods[j]) continue;
      x(i, 2 + static_cast<Eigen::Index>(j)) = 1.0;
      if (row.treated) x(i, 2 + static_cast<Eigen::Index>(periods.size() + j)) = 1.0;
    }
  }
  const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(y);
  std::map<int, double> by_period;
  for (std::size_t j = 0; j < periods.size(); ++j) {
    by_period[periods[j]] = coef(2 + static_cast<Eigen::Index>(periods.size() + j));
  }
  Eigen::VectorXd out(k + 1);
  out(0) = by_period.at(1);
  for (int j = 1; j <= k; ++j) out(j) = by_period.at(-j);
  return out;
}

/// Scans x over [center - span, center + span] and returns the extent of the
/// feasible run containing `center` for {x : A (z + c x) <= b}. Ends that
/// reach the edge of the scan are reported as infinite.
inline std::pair<double, double> grid_window(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                             const Eigen::VectorXd& z, const Eigen::VectorXd& c, double center,
                                             double span, int steps) {
  auto feasible = [&](double x) { return ((a * (z + c * x)) - b).maxCoeff() <= 0.0; };
  const double h = span / steps;
  double lo = center;
  int i = 0;
  for (; i < steps && feasible(center - (i + 1) * h); ++i) lo = center - (i + 1) * h;
  if (i == steps) lo = -std::numeric_limits<double>::infinity();
  double hi = center;
  i = 0;
  for (; i < steps && feasible(center + (i + 1) * h); ++i) hi = center + (i + 1) * h;
  if (i == steps) hi = std::numeric_limits<double>::infinity();
  return {lo, hi};
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic two-sample KS critical value at level 0.01.
inline double ks_critical_01(std::size_t na, std::size_t nb) {
  const double n = static_cast<double>(na);
  const double m = static_cast<double>(nb);
  return 1.628 * std::sqrt((n + m) / (n * m));
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
