#include "so3kit/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "so3kit/wigner.hpp"

namespace so3kit {

PointCloud make_cloud(const Eigen::MatrixXd& pts, int label) {
  if (pts.rows() < 1 || pts.cols() != 3)
    throw std::invalid_argument("make_cloud: need an n x 3 point matrix");
  PointCloud c;
  c.points = pts.rowwise() - pts.colwise().mean();
  c.label = label;
  return c;
}

PointCloud rotate_cloud(const PointCloud& c, const Rotation& r) {
  PointCloud out = c;
  out.points = c.points * matrix(r).transpose();
  return out;
}

FieldBundle harmonic_lift(const PointCloud& c, double radius, int n_radial, int L) {
  if (radius <= 0.0) throw std::invalid_argument("harmonic_lift: radius must be positive");
  if (n_radial < 1) throw std::invalid_argument("harmonic_lift: need at least one radial bin");
  const int n = static_cast<int>(c.points.rows());
  const double h = radius / n_radial;

  FieldBundle b;
  for (int l = 0; l <= L; ++l)
    b.fields.push_back(Eigen::MatrixXd::Zero(n, n_radial * (2 * l + 1)));

  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (q == p) continue;
      const Eigen::Vector3d diff = c.points.row(q) - c.points.row(p);
      const double d = diff.norm();
      if (d == 0.0 || d > radius) continue;
      const auto D = wigner_d_stack(L, lift_to_group(diff / d));
      for (int bin = 0; bin < n_radial; ++bin) {
        const double center = (bin + 0.5) * h;
        const double w = 1.0 - std::abs(d - center) / h;
        if (w <= 0.0) continue;
        for (int l = 0; l <= L; ++l) {
          const int dim = 2 * l + 1;
          b.fields[l].row(p).segment(bin * dim, dim) +=
              w * std::sqrt(2.0 * l + 1.0) * D[l].col(l).transpose();
        }
      }
    }
  return b;
}

std::vector<int> fps(const PointCloud& c, double ratio) {
  if (ratio <= 0.0 || ratio > 1.0) throw std::invalid_argument("fps: ratio must be in (0, 1]");
  const int n = static_cast<int>(c.points.rows());
  const int count = std::min(n, std::max(1, static_cast<int>(std::lround(ratio * n))));

  // Ties go to the lower index. The comparison carries a relative slack so
  // that geometrically equal distances (e.g. any two points seen from their
  // centroid) cannot be reordered by coordinate rounding after a rotation.
  auto beats = [](double cand, double best) {
    return cand > best + 1e-9 * std::max({cand, best, 1.0});
  };

  int start = 0;
  double best = -1.0;
  const Eigen::RowVector3d centroid = c.points.colwise().mean();
  for (int i = 0; i < n; ++i) {
    const double d = (c.points.row(i) - centroid).squaredNorm();
    if (beats(d, best)) {
      best = d;
      start = i;
    }
  }

  std::vector<int> chosen = {start};
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(chosen.size()) < count) {
    const int last = chosen.back();
    for (int i = 0; i < n; ++i)
      dist[i] = std::min(dist[i], (c.points.row(i) - c.points.row(last)).squaredNorm());
    int pick = -1;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      if (dist[i] == 0.0) continue;  // already selected or coincident with one
      if (beats(dist[i], far)) {
        far = dist[i];
        pick = i;
      }
    }
    if (pick < 0) {  // all remaining points coincide with selections
      for (int i = 0; i < n && static_cast<int>(chosen.size()) < count; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
      break;
    }
    chosen.push_back(pick);
  }
  return chosen;
}

FieldBundle equivariant_linear(const std::vector<Eigen::MatrixXd>& w,
                               const Eigen::RowVectorXd& bias0, const FieldBundle& in) {
  if (w.size() != in.fields.size())
    throw std::invalid_argument("equivariant_linear: one weight matrix per frequency required");
  FieldBundle out;
  for (int l = 0; l < in.levels(); ++l) {
    const int dim = 2 * l + 1;
    const int m_in = in.mult(l);
    if (w[l].cols() != m_in)
      throw std::invalid_argument("equivariant_linear: input multiplicity mismatch");
    const int m_out = static_cast<int>(w[l].rows());
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(in.points(), m_out * dim);
    for (int j = 0; j < m_out; ++j)
      for (int k = 0; k < m_in; ++k)
        f.middleCols(j * dim, dim) += w[l](j, k) * in.fields[l].middleCols(k * dim, dim);
    if (l == 0) {
      if (bias0.size() != m_out)
        throw std::invalid_argument("equivariant_linear: scalar bias width mismatch");
      f.rowwise() += bias0;
    }
    out.fields.push_back(std::move(f));
  }
  return out;
}

Eigen::VectorXd invariant_pool(const FieldBundle& b) {
  std::vector<double> vals;
  const Eigen::RowVectorXd scalars = b.fields[0].colwise().mean();
  for (Eigen::Index j = 0; j < scalars.size(); ++j) vals.push_back(scalars[j]);
  for (int l = 1; l < b.levels(); ++l) {
    const int dim = 2 * l + 1;
    for (int k = 0; k < b.mult(l); ++k) {
      double acc = 0.0;
      for (int p = 0; p < b.points(); ++p)
        acc += b.fields[l].row(p).segment(k * dim, dim).norm();
      vals.push_back(acc / b.points());
    }
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace so3kit
