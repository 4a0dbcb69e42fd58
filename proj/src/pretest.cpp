#include "pretrends/pretest.hpp"

namespace pretrends {

PolyhedralConstraint::PolyhedralConstraint(Mat a, Vec b) : a_matrix(std::move(a)), b_vector(std::move(b)) {
  if (a_matrix.rows() != b_vector.size()) {
    throw ValidationError("polyhedron: A has " + std::to_string(a_matrix.rows()) + " rows but b has " +
                          std::to_string(b_vector.size()) + " entries");
  }
}

bool PolyhedralConstraint::contains(const Vec& x) const {
  if (x.size() != a_matrix.cols()) throw ValidationError("polyhedron: dimension mismatch");
  return ((a_matrix * x).array() <= b_vector.array()).all();
}

double critical_value(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("significance level must lie in (0, 1)");
  return normal_quantile(1.0 - alpha / 2.0);
}

namespace {

Vec pre_thresholds(const CovarianceMatrix& sigma, double c) {
  return c * sigma.matrix().diagonal().tail(sigma.k()).cwiseSqrt();
}

}  // namespace

PolyhedralConstraint build_ns_polyhedron(const CovarianceMatrix& sigma, double alpha) {
  const double c = critical_value(alpha);
  const Eigen::Index k = sigma.k();
  Mat a = Mat::Zero(2 * k, k + 1);
  a.block(0, 1, k, k).setIdentity();
  a.block(k, 1, k, k) = -Mat::Identity(k, k);
  const Vec half = pre_thresholds(sigma, c);
  Vec b(2 * k);
  b << half, half;
  return PolyhedralConstraint(std::move(a), std::move(b));
}

bool passes_pretest(const EstimateBundle& bundle, double alpha) {
  const Vec limits = pre_thresholds(bundle.sigma(), critical_value(alpha));
  for (Eigen::Index j = 0; j < limits.size(); ++j) {
    const double b = bundle.beta_pre()(j);
    if (!(b <= limits(j) && -b <= limits(j))) return false;
  }
  return true;
}

}  // namespace pretrends
