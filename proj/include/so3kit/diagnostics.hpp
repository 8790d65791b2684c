#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "so3kit/sampling.hpp"

namespace so3kit {

struct OrthoReport {
  double eps1 = 0.0;
  double eps2_normalized = 0.0;
  double eps2_unnormalized = 0.0;
  Eigen::Index N = 0;
  int F = 0;
};

// mean absolute deviation of the row Gram from identity, rows scaled to unit
// norm first
double epsilon1(const SamplingMatrix& S);

enum class Eps2Mode { AsIs, BlockRescaled };

// (1/F) sum |(1/N) A^T A - I|; BlockRescaled scales rows to norm sqrt(F)
// before measuring so both delta conventions report the same number
double epsilon2(const SamplingMatrix& S, Eps2Mode mode);

OrthoReport ortho_report(const SamplingMatrix& S);

// relative commutator norm of f with a transform pair; the invariance form is
// apply_out_T = identity
template <class Fn, class In, class TIn, class TOut>
double equivariance_error(Fn&& f, const In& x, TIn&& apply_T, TOut&& apply_out_T) {
  const auto fx = f(x);
  const auto fTx = f(apply_T(x));
  const double den = std::max(fx.norm(), fTx.norm());
  if (den == 0.0) return 0.0;
  return (apply_out_T(fx) - fTx).norm() / den;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace so3kit
