#ifndef LOCPRED_STATS_HPP
#define LOCPRED_STATS_HPP

#include "locpred/common.hpp"

#include <cmath>

namespace locpred {

/// Per-column affine standardization fitted on one matrix and applied to
/// others. Constant columns get unit scale so they map to zero.
template <typename Scalar>
struct Standardizer {
  Vector<Scalar> mean;
  Vector<Scalar> scale;

  template <typename Derived>
  static Standardizer fit(const Eigen::MatrixBase<Derived>& x) {
    Standardizer s;
    const auto n = static_cast<Scalar>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const Scalar var = (x.col(c).array() - s.mean[c]).square().sum() / n;
      s.scale[c] = var > Scalar(0) ? std::sqrt(var) : Scalar(1);
    }
    return s;
  }

  static Standardizer identity(Eigen::Index dim) {
    return {Vector<Scalar>::Zero(dim), Vector<Scalar>::Ones(dim)};
  }

  Eigen::Index dimension() const { return mean.size(); }

  template <typename Derived>
  Matrix<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
    return ((x.rowwise() - mean.transpose()).array().rowwise() /
            scale.transpose().array())
        .matrix();
  }

  template <typename Derived>
  Vector<Scalar> apply_row(const Eigen::MatrixBase<Derived>& row) const {
    return ((row.derived().transpose() - mean).array() / scale.array()).matrix();
  }
};

/// Pearson correlation; 0 when either side is constant.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar pearson(const Eigen::MatrixBase<DerivedA>& a,
                                  const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    throw DomainError("pearson: length mismatch");
  const auto ca = (a.array() - a.mean()).matrix();
  const auto cb = (b.array() - b.mean()).matrix();
  const Scalar saa = ca.squaredNorm();
  const Scalar sbb = cb.squaredNorm();
  if (!(saa > Scalar(0)) || !(sbb > Scalar(0))) return Scalar(0);
  return ca.dot(cb) / std::sqrt(saa * sbb);
}

/// Rows of `x` selected by index.
template <typename Derived, typename Indices>
Matrix<typename Derived::Scalar> take_rows(const Eigen::MatrixBase<Derived>& x,
                                           const Indices& rows) {
  Matrix<typename Derived::Scalar> out(static_cast<Eigen::Index>(rows.size()), x.cols());
  Eigen::Index r = 0;
  for (auto i : rows) out.row(r++) = x.row(static_cast<Eigen::Index>(i));
  return out;
}

/// Columns of `x` selected by index.
template <typename Derived, typename Indices>
Matrix<typename Derived::Scalar> take_cols(const Eigen::MatrixBase<Derived>& x,
                                           const Indices& cols) {
  Matrix<typename Derived::Scalar> out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (auto j : cols) out.col(c++) = x.col(static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace locpred

#endif  // LOCPRED_STATS_HPP
