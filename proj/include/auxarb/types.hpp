#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace auxarb {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using VectorXi = Eigen::VectorXi;
using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Auxiliary-task class label, valid range [0, K).
using ClassId = int;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().isFinite().all();
}

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(float x) { return std::isfinite(x); }

}  // namespace auxarb
