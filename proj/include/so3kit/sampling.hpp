#pragma once

#include <Eigen/Core>

#include "so3kit/activation.hpp"
#include "so3kit/field_type.hpp"
#include "so3kit/rotation.hpp"

namespace so3kit {

// Row i samples the delta coefficients transported to grid element i, so a
// band-limited signal is evaluated on the grid by fhat . A^T. All rows share
// one norm (rotations are isometries); row_scale stores it.
struct SamplingMatrix {
  FieldType type;
  bool adaptive = false;
  Grid grid;  // meaningless when adaptive
  Eigen::MatrixXd A;
  double row_scale = 1.0;

  Eigen::Index n() const { return A.rows(); }
};

// Sphere grids are valid only for quotient types (points are lifted; the
// quotient delta makes the row independent of the lift). Group grids work for
// both kinds.
SamplingMatrix sampling_matrix(const FieldType& t, const Grid& grid, bool normalized);

// signal values on the grid, one row per channel
Eigen::MatrixXd ift(const SamplingMatrix& S, const Eigen::MatrixXd& fhat);

// least-squares coefficients from samples, SVD cutoff 1e-10 relative
Eigen::MatrixXd ft_pinv(const SamplingMatrix& S, const Eigen::MatrixXd& samples);

enum class FtMode { PInv, ApproxTranspose };

// sample, apply sigma pointwise, transform back; ApproxTranspose replaces the
// pseudoinverse by (F / (N row_scale^2)) A^T
Eigen::MatrixXd fourier_nonlinearity(const SamplingMatrix& S, const Eigen::MatrixXd& fhat,
                                     Activation act, FtMode mode);

}  // namespace so3kit
