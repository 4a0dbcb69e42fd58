#pragma once

#include "pretrends/event_study.hpp"

namespace pretrends {

/// The event {beta : A beta <= b} over the stacked (post, pre) coefficients.
struct PolyhedralConstraint {
  Mat a_matrix;
  Vec b_vector;

  PolyhedralConstraint(Mat a, Vec b);

  Eigen::Index rows() const { return a_matrix.rows(); }

  /// Elementwise A x <= b (weak).
  bool contains(const Vec& x) const;
};

/// Two-sided normal critical value, Phi^{-1}(1 - alpha / 2).
double critical_value(double alpha);

/// No pre-period coefficient individually significant at level alpha,
/// written as [0 I; 0 -I] beta <= c_alpha [sd_pre; sd_pre].
PolyhedralConstraint build_ns_polyhedron(const CovarianceMatrix& sigma, double alpha);

/// |beta_pre_j| <= c_alpha sqrt(Sigma_jj) for every j; ties pass.
bool passes_pretest(const EstimateBundle& bundle, double alpha);

}  // namespace pretrends
