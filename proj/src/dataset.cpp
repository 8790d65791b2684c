#include "so3kit/dataset.hpp"

#include <stdexcept>

#include "so3kit/rng.hpp"

namespace so3kit {

std::vector<Eigen::MatrixXd> tetris_shapes() {
  std::vector<Eigen::MatrixXd> s;
  Eigen::MatrixXd m(4, 3);
  m << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;  // bar
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;  // square
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 2, 0, 0, 2, 1, 0;  // ell
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 2, 0, 0, 1, 1, 0;  // tee
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 1, 1, 0, 2, 1, 0;  // zigzag
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;  // corner
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1;  // staircase
  s.push_back(m);
  m << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 1;  // capped corner
  s.push_back(m);
  return s;
}

namespace {

PointCloud finish(const Eigen::MatrixXd& pts, int label) {
  PointCloud c = make_cloud(pts, label);
  const double r = c.points.rowwise().norm().maxCoeff();
  if (r > 0.0) c.points /= r;
  return c;
}

}  // namespace

Dataset gen_tetris(int n_per_class, double jitter, std::uint64_t seed, bool augment) {
  if (n_per_class < 1)
    throw std::invalid_argument("gen_tetris: need at least one cloud per class");
  const auto base = tetris_shapes();
  Rng rng(seed);
  auto jittered = [&](int cls) {
    Eigen::MatrixXd pts = base[cls];
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) += jitter * rng.normal();
    return pts;
  };

  Dataset d;
  d.augment_train = augment;
  for (int cls = 0; cls < 8; ++cls)
    for (int k = 0; k < n_per_class; ++k) d.train.push_back(finish(jittered(cls), cls));
  for (int cls = 0; cls < 8; ++cls)
    for (int k = 0; k < n_per_class; ++k) {
      const auto r = random_haar(rng);
      d.test.push_back(rotate_cloud(finish(jittered(cls), cls), r));
      d.test_rotations.push_back(r);
    }
  return d;
}

}  // namespace so3kit
