#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "so3kit/rng.hpp"

namespace so3kit {

// SO(3) element stored as a unit quaternion (w, x, y, z). The double cover is
// collapsed by a canonical sign choice: w > 0, or w == 0 and the first
// nonzero of (x, y, z) positive, so equality tests and serialized grids are
// unambiguous.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  Rotation(double w, double x, double y, double z);

  double w() const { return q_[0]; }
  double x() const { return q_[1]; }
  double y() const { return q_[2]; }
  double z() const { return q_[3]; }
  const Eigen::Vector4d& wxyz() const { return q_; }

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Eigen::Vector3d& axis, double angle);

 private:
  Eigen::Vector4d q_;
};

using S2Point = Eigen::Vector3d;

inline S2Point north() { return S2Point(0.0, 0.0, 1.0); }

Rotation compose(const Rotation& r1, const Rotation& r2);
Rotation inverse(const Rotation& r);
Rotation rot_x(double angle);
Rotation rot_y(double angle);
Rotation rot_z(double angle);
Eigen::Matrix3d matrix(const Rotation& r);
Rotation from_matrix(const Eigen::Matrix3d& m);

// rotation angle in [0, pi]
double rotation_angle(const Rotation& r);

// distance on SO(3) with antipodal identification: min(|q1-q2|, |q1+q2|)
double quat_distance(const Rotation& a, const Rotation& b);

// Haar-uniform rotation (normalized 4D Gaussian)
Rotation random_haar(Rng& rng);

S2Point act_on_sphere(const Rotation& r, const S2Point& p);

// some rotation g_p with act_on_sphere(g_p, north()) == p, chosen
// deterministically (axis-angle about north x p)
Rotation lift_to_group(const S2Point& p);

enum class Space { Group, Sphere };

// Sample set on SO(3) or S^2. Exactly one of the element vectors is populated,
// matching `space`. Elements are canonicalized and duplicate-free.
struct Grid {
  Space space = Space::Group;
  std::vector<Rotation> rotations;
  std::vector<S2Point> points;

  int n() const {
    return static_cast<int>(space == Space::Group ? rotations.size() : points.size());
  }
};

// throws std::invalid_argument on empty grids, mixed storage, or exact duplicates
void validate_grid(const Grid& g);

// the 24 rotational symmetries of the cube, generated by closure
Grid cubic_group();

// N points locally minimizing the Coulomb energy sum 1/dist via projected
// gradient descent: tangent-projected, per-point normalized descent direction,
// cosine-decayed step. Deterministic given (space, n, seed, steps, step_size);
// elements are sorted lexicographically after convergence.
Grid repulsion_grid(Space space, int n, int steps = 500, double step_size = 0.01,
                    std::uint64_t seed = 0);

// JSON array of [w,x,y,z] (Group) or [x,y,z] (Sphere), 17 significant digits
std::string grid_to_json(const Grid& g);
Grid grid_from_json(const std::string& text);

}  // namespace so3kit
