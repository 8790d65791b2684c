#pragma once

#include <Eigen/Core>
#include <string>

#include "so3kit/rotation.hpp"
#include "so3kit/wigner.hpp"

namespace so3kit {

enum class RepKind { Regular, Quotient };

// Band-limited representation descriptor. Coefficient vectors are laid out
// l-ascending; within a frequency the q(l) copies are contiguous, each copy a
// (2l+1)-subvector ordered m = -l..l. Regular types carry q(l) = 2l+1 copies
// (the columns of the coefficient matrix, column-major), quotient types one.
struct FieldType {
  RepKind kind = RepKind::Quotient;
  int L = 0;
  int F = 1;

  int q(int l) const { return kind == RepKind::Quotient ? 1 : 2 * l + 1; }
  int block_size(int l) const { return q(l) * (2 * l + 1); }
  int block_offset(int l) const {
    int off = 0;
    for (int k = 0; k < l; ++k) off += block_size(k);
    return off;
  }
  bool operator==(const FieldType&) const = default;
};

FieldType field_type(RepKind kind, int L);

// Coefficients of the Dirac delta at the origin coset: quotient block l is
// sqrt(2l+1) e_{m=0}, regular block l is sqrt(2l+1) vec(I). The unnormalized
// vector has squared norm F; `normalized` divides by sqrt(F).
Eigen::VectorXd delta_hat(const FieldType& t, bool normalized);

// Action of r on a coefficient vector: each (l, copy) subvector is mapped by
// wigner_d_real(l, r).
Eigen::VectorXd rho_apply(const FieldType& t, const Rotation& r, const Eigen::VectorXd& fhat);

// Channel-batched form: rows of `fhat` (c x F) are independent coefficient
// vectors; equivalent to right-multiplying by rho_matrix(t, r)^T.
Eigen::MatrixXd rho_apply(const FieldType& t, const Rotation& r, const Eigen::MatrixXd& fhat);

// dense F x F block-diagonal matrix of the action (test and oracle use)
Eigen::MatrixXd rho_matrix(const FieldType& t, const Rotation& r);

// checkpoint form: {"kind": "quotient"|"regular", "L": int}
std::string field_type_to_json(const FieldType& t);
FieldType field_type_from_json(const std::string& text);

}  // namespace so3kit
