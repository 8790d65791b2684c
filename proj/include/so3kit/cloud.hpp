#pragma once

#include <Eigen/Core>
#include <vector>

#include "so3kit/adaptive.hpp"
#include "so3kit/rotation.hpp"

namespace so3kit {

struct PointCloud {
  Eigen::MatrixXd points;  // n x 3, centroid removed on ingestion
  int label = -1;
};

PointCloud make_cloud(const Eigen::MatrixXd& pts, int label = -1);
PointCloud rotate_cloud(const PointCloud& c, const Rotation& r);

// Per point, per frequency l <= L and radial bin b: sum over neighbors within
// the radius of hat_b(distance) times the frequency-l harmonic vector of the
// offset direction. Copies are ordered by bin. Isolated points get zeros.
FieldBundle harmonic_lift(const PointCloud& c, double radius, int n_radial, int L);

// Farthest-point sampling, fully deterministic: seeded at the point farthest
// from the centroid, every tie resolved toward the lowest index. Keeps
// max(1, round(ratio * n)) indices in selection order.
std::vector<int> fps(const PointCloud& c, double ratio);

// out copies = w[l] . in copies per frequency; l=0 additionally shifted
FieldBundle equivariant_linear(const std::vector<Eigen::MatrixXd>& w,
                               const Eigen::RowVectorXd& bias0, const FieldBundle& in);

// rotation-invariant readout: means of l=0 channels, then means of per-copy
// norms for each l >= 1
Eigen::VectorXd invariant_pool(const FieldBundle& b);

}  // namespace so3kit
