#ifndef ADAPTAA_SRC_EIGEN_MAPS_HPP_
#define ADAPTAA_SRC_EIGEN_MAPS_HPP_

#include <Eigen/Core>

namespace adaptaa {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

}  // namespace adaptaa

#endif  // ADAPTAA_SRC_EIGEN_MAPS_HPP_
