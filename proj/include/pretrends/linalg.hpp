#pragma once

#include <Eigen/Dense>

#include "pretrends/errors.hpp"

namespace pretrends {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Vector<double>;
using RowVec = RowVector<double>;
using Mat = Matrix<double>;

/// Symmetric to within `rel_tol` of the largest absolute entry.
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar rel_tol = 1e-12) {
  using std::abs;
  if (m.rows() != m.cols()) return false;
  const auto scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * (scale > 0 ? scale : 1);
}

/// Cholesky factorisation that throws instead of returning a status.
template <typename Derived, typename Error = CholeskyFailure>
Eigen::LLT<Matrix<typename Derived::Scalar>> checked_llt(const Eigen::MatrixBase<Derived>& m,
                                                         const char* what = "matrix") {
  Eigen::LLT<Matrix<typename Derived::Scalar>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(std::string(what) + " is not positive definite");
  }
  // LLT can report success on matrices whose pivots collapsed to zero.
  if ((llt.matrixL().toDenseMatrix().diagonal().array() <= 0).any()) {
    throw Error(std::string(what) + " is not positive definite");
  }
  return llt;
}

}  // namespace pretrends
