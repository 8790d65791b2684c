#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "so3kit/field_type.hpp"
#include "so3kit/sampling.hpp"

namespace so3kit {

// Per-point steerable features. fields[l] holds one row per spatial point;
// within a row the mult(l) copies are contiguous, each a (2l+1)-segment.
struct FieldBundle {
  std::vector<Eigen::MatrixXd> fields;

  int levels() const { return static_cast<int>(fields.size()); }
  int points() const { return fields.empty() ? 0 : static_cast<int>(fields[0].rows()); }
  int mult(int l) const { return static_cast<int>(fields[l].cols()) / (2 * l + 1); }
};

// every copy of every frequency transported by the rotation
FieldBundle rotate_bundle(const FieldBundle& b, const Rotation& r);

// Frequency-diagonal linear map from input fields to the rows of a sampling
// matrix. w[l] has shape (n_rows * q_l) x mult_in(l): output copies may only
// mix input copies of the same frequency, which is what keeps the generated
// matrix transforming by right multiplication.
struct GeneratorWeights {
  std::vector<int> in_mult;
  FieldType out_type;
  int n_rows = 0;
  std::vector<Eigen::MatrixXd> w;
};

// weights i.i.d. normal, standard deviation 1/sqrt(mult_in(l))
GeneratorWeights build_generator(const std::vector<int>& in_mult, const FieldType& t, int n_rows,
                                 std::uint64_t seed);

struct PerPointSamplingMatrices {
  FieldType type;
  int n_rows = 0;
  std::vector<Eigen::MatrixXd> A;  // one n_rows x F matrix per point, unit rows

  int points() const { return static_cast<int>(A.size()); }
  SamplingMatrix at(int p) const {
    SamplingMatrix S;
    S.type = type;
    S.adaptive = true;
    S.A = A[p];
    S.row_scale = 1.0;
    return S;
  }
};

// rows assembled per point from the input fields, then scaled to unit norm;
// rows that come out shorter than 1e-8 are refused by name
PerPointSamplingMatrices generate_A(const GeneratorWeights& g, const FieldBundle& x);

// per point: (F/N) sigma(fhat A^T) A, exactly equivariant for any N
std::vector<Eigen::MatrixXd> adaptive_nonlinearity(const PerPointSamplingMatrices& As,
                                                   const std::vector<Eigen::MatrixXd>& fhat,
                                                   Activation act);

// keep the matrices of the surviving points, order preserved
PerPointSamplingMatrices downsample_indexing(const PerPointSamplingMatrices& As,
                                             const std::vector<int>& kept);

}  // namespace so3kit
