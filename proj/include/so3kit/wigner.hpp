#pragma once

#include <Eigen/Core>
#include <vector>

#include "so3kit/rotation.hpp"

namespace so3kit {

// largest supported frequency; bounds the recursion and all band limits
inline constexpr int kMaxL = 8;

// Real Wigner-D matrix of frequency l, a (2l+1)x(2l+1) real orthogonal matrix,
// homomorphic in r. Basis ordering m = -l..l. For l=1 this is P*matrix(r)*P^T
// with P mapping axes (x,y,z) to slots (m=1, m=-1, m=0), i.e. the rotation
// matrix conjugated into the (y,z,x) axis order.
Eigen::MatrixXd wigner_d_real(int l, const Rotation& r);

// all frequencies 0..L in one recursion pass (cheaper than repeated calls)
std::vector<Eigen::MatrixXd> wigner_d_stack(int L, const Rotation& r);

// Real spherical harmonics: the m=0 column of wigner_d_real(l, g_p) for any
// g_p taking north to p; well defined because that column is invariant under
// right rotations about the north axis.
Eigen::VectorXd real_sph_harm(int l, const S2Point& p);

}  // namespace so3kit
