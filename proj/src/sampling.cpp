#include "so3kit/sampling.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace so3kit {

SamplingMatrix sampling_matrix(const FieldType& t, const Grid& grid, bool normalized) {
  validate_grid(grid);
  if (grid.space == Space::Sphere && t.kind != RepKind::Quotient)
    throw std::invalid_argument("sampling_matrix: sphere grids require a quotient field type");

  const Eigen::VectorXd d = delta_hat(t, normalized);
  SamplingMatrix S;
  S.type = t;
  S.grid = grid;
  S.row_scale = d.norm();
  S.A.resize(static_cast<Eigen::Index>(grid.n()), t.F);
  for (int i = 0; i < grid.n(); ++i) {
    const Rotation g =
        grid.space == Space::Group ? grid.rotations[i] : lift_to_group(grid.points[i]);
    S.A.row(i) = rho_apply(t, g, d).transpose();
  }
  return S;
}

Eigen::MatrixXd ift(const SamplingMatrix& S, const Eigen::MatrixXd& fhat) {
  if (fhat.cols() != S.type.F)
    throw std::invalid_argument("ift: coefficient width does not match field type");
  return fhat * S.A.transpose();
}

Eigen::MatrixXd ft_pinv(const SamplingMatrix& S, const Eigen::MatrixXd& samples) {
  if (samples.cols() != S.n())
    throw std::invalid_argument("ft_pinv: sample width does not match grid size");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  return svd.solve(samples.transpose()).transpose();
}

Eigen::MatrixXd fourier_nonlinearity(const SamplingMatrix& S, const Eigen::MatrixXd& fhat,
                                     Activation act, FtMode mode) {
  const Eigen::MatrixXd s = activate(act, ift(S, fhat));
  if (mode == FtMode::PInv) return ft_pinv(S, s);
  const double scale =
      static_cast<double>(S.type.F) / (static_cast<double>(S.n()) * S.row_scale * S.row_scale);
  return scale * s * S.A;
}

}  // namespace so3kit
