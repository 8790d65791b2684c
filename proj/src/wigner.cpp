#include "so3kit/wigner.hpp"

#include <cmath>
#include <stdexcept>

namespace so3kit {

namespace {

// Recursive construction of real Wigner-D matrices from the l=1 matrix,
// after Ivanic & Ruedenberg, J. Phys. Chem. 100 (1996) 6342 (with the
// published errata). Entirely real; no Euler-angle extraction, so there are
// no pole singularities to special-case.
struct Recursion {
  const Eigen::Matrix3d& r1;                  // l=1 matrix, indices -1..1 shifted by +1
  const Eigen::MatrixXd& prev;                // D^{l-1}, indices shifted by +(l-1)
  int l;

  double r(int i, int j) const { return r1(i + 1, j + 1); }
  double d(int a, int b) const { return prev(a + l - 1, b + l - 1); }

  double P(int i, int a, int b) const {
    if (b == l) return r(i, 1) * d(a, l - 1) - r(i, -1) * d(a, -l + 1);
    if (b == -l) return r(i, 1) * d(a, -l + 1) + r(i, -1) * d(a, l - 1);
    return r(i, 0) * d(a, b);
  }

  double entry(int m, int n) const {
    const double denom = (std::abs(n) == l) ? double(2 * l) * (2 * l - 1)
                                            : double(l + n) * (l - n);
    const double u = std::sqrt(double(l + m) * (l - m) / denom);
    const double v = 0.5 *
                     std::sqrt((1.0 + (m == 0)) * (l + std::abs(m) - 1) * (l + std::abs(m)) / denom) *
                     (1 - 2 * (m == 0));
    const double w = -0.5 * std::sqrt(double(l - std::abs(m) - 1) * (l - std::abs(m)) / denom) *
                     (1 - (m == 0));
    double acc = 0.0;
    if (u != 0.0) acc += u * P(0, m, n);
    if (v != 0.0) {
      double V;
      if (m == 0)
        V = P(1, 1, n) + P(-1, -1, n);
      else if (m > 0)
        V = P(1, m - 1, n) * std::sqrt(1.0 + (m == 1)) - P(-1, -m + 1, n) * (1 - (m == 1));
      else
        V = P(1, m + 1, n) * (1 - (m == -1)) + P(-1, -m - 1, n) * std::sqrt(1.0 + (m == -1));
      acc += v * V;
    }
    if (w != 0.0) {
      double W;
      if (m > 0)
        W = P(1, m + 1, n) + P(-1, -m - 1, n);
      else
        W = P(1, m - 1, n) - P(-1, -m + 1, n);
      acc += w * W;
    }
    return acc;
  }
};

}  // namespace

std::vector<Eigen::MatrixXd> wigner_d_stack(int L, const Rotation& r) {
  if (L < 0 || L > kMaxL) throw std::invalid_argument("wigner: l out of range");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(L + 1);
  out.push_back(Eigen::MatrixXd::Ones(1, 1));
  if (L == 0) return out;

  const Eigen::Matrix3d m = matrix(r);
  // slot order (m=-1, 0, 1) corresponds to axes (y, z, x)
  const int axis[3] = {1, 2, 0};
  Eigen::Matrix3d r1;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r1(a, b) = m(axis[a], axis[b]);
  out.push_back(r1);

  for (int l = 2; l <= L; ++l) {
    Eigen::MatrixXd D(2 * l + 1, 2 * l + 1);
    const Recursion rec{r1, out.back(), l};
    for (int mm = -l; mm <= l; ++mm)
      for (int nn = -l; nn <= l; ++nn) D(mm + l, nn + l) = rec.entry(mm, nn);
    out.push_back(std::move(D));
  }
  return out;
}

Eigen::MatrixXd wigner_d_real(int l, const Rotation& r) {
  return wigner_d_stack(l, r).back();
}

Eigen::VectorXd real_sph_harm(int l, const S2Point& p) {
  return wigner_d_real(l, lift_to_group(p)).col(l);
}

}  // namespace so3kit
