#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "so3kit/cloud.hpp"

namespace so3kit {

// canonical four-point shapes, one per class; pairwise non-congruent under
// rotation so the labels are decidable from geometry alone
std::vector<Eigen::MatrixXd> tetris_shapes();

struct Dataset {
  std::vector<PointCloud> train;  // canonical pose
  bool augment_train = true;      // rotate on the fly while training
  std::vector<PointCloud> test;   // pre-rotated
  std::vector<Rotation> test_rotations;
};

// n_per_class clouds per class per split. Each cloud: base shape plus
// coordinate-wise Gaussian jitter, centered, scaled to unit max radius.
Dataset gen_tetris(int n_per_class, double jitter, std::uint64_t seed, bool augment = true);

}  // namespace so3kit
