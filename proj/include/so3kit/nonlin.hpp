#pragma once

#include <Eigen/Core>

#include "so3kit/activation.hpp"

namespace so3kit {

// one frequency-l field value, length 2l+1
struct FieldVector {
  int l = 0;
  Eigen::VectorXd v;
};

// v sigma(|v| - b) / (|v| + 1e-12), exactly equivariant since |v| is invariant
inline FieldVector norm_nonlinearity(const FieldVector& f, Activation sigma, double b) {
  const double n = f.v.norm();
  return {f.l, f.v * (activate(sigma, n - b) / (n + 1e-12))};
}

inline FieldVector gated_nonlinearity(const FieldVector& f, double s) {
  return {f.l, f.v * activate(Activation::Sigmoid, s)};
}

}  // namespace so3kit
