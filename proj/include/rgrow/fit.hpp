#pragma once

#include "rgrow/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace rgrow {

template <typename Scalar>
struct AmplitudeFit {
  Scalar amplitude{0};
  Scalar residual{0};
};

// Best single-amplitude fit of `y` by `l`: minimizes |y - a l|_2 over a.
//
//   a = (y.l) / (l.l),   residual = sqrt(max(0, |y|^2 - (y.l)^2 / |l|^2))
//
// A zero `l` gives a = 0 and residual |y|. With `positive_only`, negative
// optimal amplitudes are clamped to zero.
template <typename DerivedY, typename DerivedL>
AmplitudeFit<typename DerivedY::Scalar> fit_amplitude(const Eigen::MatrixBase<DerivedY>& y,
                                                      const Eigen::MatrixBase<DerivedL>& l,
                                                      bool positive_only = false) {
  using Scalar = typename DerivedY::Scalar;
  const Scalar yy = y.squaredNorm();
  const Scalar ll = l.squaredNorm();
  const Scalar yl = y.dot(l);
  if (!(ll > Scalar(0)) || (positive_only && yl <= Scalar(0))) {
    return {Scalar(0), std::sqrt(yy)};
  }
  return {yl / ll, std::sqrt(std::max(Scalar(0), yy - (yl * yl) / ll))};
}

// Isotropy penalty for merging clusters of sizes `size_i`, `size_j` that
// share a border of `border_sum` = B(i,j) + B(j,i) vertices:
//
//   R = lambda (|c_i| + |c_j|)^2 min(|c_i|, |c_j|) / border_sum
//
// Callers guarantee border_sum >= 1 for adjacent clusters.
template <typename Scalar>
Scalar regularization(long long size_i, long long size_j, long long border_ij, long long border_ji, Scalar lambda) {
  if (lambda == Scalar(0)) return Scalar(0);
  const long long border_sum = border_ij + border_ji;
  if (border_sum < 1) throw ConsistencyError("adjacent clusters with an empty border");
  const auto total = static_cast<Scalar>(size_i + size_j);
  const auto smaller = static_cast<Scalar>(std::min(size_i, size_j));
  return lambda * total * total * smaller / static_cast<Scalar>(border_sum);
}

}  // namespace rgrow
