#include "so3kit/adaptive.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "so3kit/rng.hpp"
#include "so3kit/wigner.hpp"

namespace so3kit {

FieldBundle rotate_bundle(const FieldBundle& b, const Rotation& r) {
  FieldBundle out = b;
  const auto D = wigner_d_stack(b.levels() - 1, r);
  for (int l = 0; l < b.levels(); ++l) {
    const int dim = 2 * l + 1;
    for (int k = 0; k < b.mult(l); ++k)
      out.fields[l].middleCols(k * dim, dim) =
          b.fields[l].middleCols(k * dim, dim) * D[l].transpose();
  }
  return out;
}

GeneratorWeights build_generator(const std::vector<int>& in_mult, const FieldType& t, int n_rows,
                                 std::uint64_t seed) {
  if (n_rows < 1) throw std::invalid_argument("build_generator: need at least one row");
  for (int l = 0; l <= t.L; ++l)
    if (l >= static_cast<int>(in_mult.size()) || in_mult[l] < 1)
      throw std::invalid_argument("input provides no frequency-" + std::to_string(l) + " fields");

  GeneratorWeights g;
  g.in_mult = in_mult;
  g.out_type = t;
  g.n_rows = n_rows;
  Rng rng(seed);
  for (int l = 0; l <= t.L; ++l) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(in_mult[l]));
    Eigen::MatrixXd w(n_rows * t.q(l), in_mult[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = sd * rng.normal();
    g.w.push_back(std::move(w));
  }
  return g;
}

PerPointSamplingMatrices generate_A(const GeneratorWeights& g, const FieldBundle& x) {
  const FieldType& t = g.out_type;
  if (x.levels() <= t.L) throw std::invalid_argument("generate_A: input bundle too shallow");
  for (int l = 0; l <= t.L; ++l)
    if (x.mult(l) != g.in_mult[l])
      throw std::invalid_argument("generate_A: input multiplicity mismatch at frequency " +
                                  std::to_string(l));

  PerPointSamplingMatrices out;
  out.type = t;
  out.n_rows = g.n_rows;
  out.A.reserve(static_cast<size_t>(x.points()));
  for (int p = 0; p < x.points(); ++p) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.n_rows, t.F);
    for (int l = 0; l <= t.L; ++l) {
      const int dim = 2 * l + 1;
      const int off = t.block_offset(l);
      for (int i = 0; i < g.n_rows; ++i)
        for (int j = 0; j < t.q(l); ++j)
          for (int k = 0; k < g.in_mult[l]; ++k)
            A.row(i).segment(off + j * dim, dim) +=
                g.w[l](i * t.q(l) + j, k) * x.fields[l].row(p).segment(k * dim, dim);
    }
    for (int i = 0; i < g.n_rows; ++i) {
      const double n = A.row(i).norm();
      if (n < 1e-8)
        throw std::runtime_error("generate_A: degenerate row " + std::to_string(i) +
                                 " at point " + std::to_string(p));
      A.row(i) /= n;
    }
    out.A.push_back(std::move(A));
  }
  return out;
}

std::vector<Eigen::MatrixXd> adaptive_nonlinearity(const PerPointSamplingMatrices& As,
                                                   const std::vector<Eigen::MatrixXd>& fhat,
                                                   Activation act) {
  if (fhat.size() != As.A.size())
    throw std::invalid_argument("adaptive_nonlinearity: point count mismatch");
  const double scale = static_cast<double>(As.type.F) / static_cast<double>(As.n_rows);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(fhat.size());
  for (size_t p = 0; p < fhat.size(); ++p) {
    if (fhat[p].cols() != As.type.F)
      throw std::invalid_argument("adaptive_nonlinearity: coefficient width mismatch");
    out.push_back(scale * activate(act, fhat[p] * As.A[p].transpose()) * As.A[p]);
  }
  return out;
}

PerPointSamplingMatrices downsample_indexing(const PerPointSamplingMatrices& As,
                                             const std::vector<int>& kept) {
  if (kept.empty()) throw std::invalid_argument("empty downsample");
  PerPointSamplingMatrices out;
  out.type = As.type;
  out.n_rows = As.n_rows;
  int prev = -1;
  for (const int i : kept) {
    if (i <= prev) throw std::invalid_argument("downsample indices must be strictly increasing");
    if (i < 0 || i >= As.points())
      throw std::invalid_argument("downsample index out of range: " + std::to_string(i));
    out.A.push_back(As.A[i]);
    prev = i;
  }
  return out;
}

}  // namespace so3kit
