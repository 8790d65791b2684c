#include "so3kit/diagnostics.hpp"

#include "so3kit/io.hpp"

namespace so3kit {

namespace {

double mean_abs_dev_from_identity(const Eigen::MatrixXd& m, double denom) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += std::abs(m(i, j) - (i == j ? 1.0 : 0.0));
  return s / denom;
}

}  // namespace

double epsilon1(const SamplingMatrix& S) {
  const Eigen::MatrixXd U = S.A / S.row_scale;
  const double n = static_cast<double>(S.n());
  return mean_abs_dev_from_identity(U * U.transpose(), n);
}

double epsilon2(const SamplingMatrix& S, Eps2Mode mode) {
  const double target = mode == Eps2Mode::BlockRescaled
                            ? std::sqrt(static_cast<double>(S.type.F)) / S.row_scale
                            : 1.0;
  const Eigen::MatrixXd A = S.A * target;
  const double n = static_cast<double>(S.n());
  return mean_abs_dev_from_identity(A.transpose() * A / n, static_cast<double>(S.type.F));
}

OrthoReport ortho_report(const SamplingMatrix& S) {
  SamplingMatrix unit = S;
  unit.A /= S.row_scale;
  unit.row_scale = 1.0;
  OrthoReport r;
  r.eps1 = epsilon1(S);
  r.eps2_normalized = epsilon2(unit, Eps2Mode::AsIs);
  r.eps2_unnormalized = epsilon2(S, Eps2Mode::BlockRescaled);
  r.N = S.n();
  r.F = S.type.F;
  return r;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << fmt17(m(i, j));
    }
    os << '\n';
  }
}

}  // namespace so3kit
