#pragma once

#include <boost/multiprecision/float128.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

namespace sdkn {

/// IEEE binary128. Flat-limit constructions need it: their interpolation
/// coefficients grow like sigma^-4 and cancel to O(1) results.
using Quad = boost::multiprecision::float128;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

using QMat = Mat<Quad>;
using QVec = Vec<Quad>;

template <class T>
inline double to_double(const T& v) {
  return static_cast<double>(v);
}

template <class To, class From>
Mat<To> cast_matrix(const Mat<From>& m) {
  Mat<To> out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out(i, j) = static_cast<To>(m(i, j));
  return out;
}

}  // namespace sdkn
