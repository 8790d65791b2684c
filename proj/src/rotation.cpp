#include "so3kit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "json.hpp"

namespace so3kit {

namespace {

Eigen::Vector4d canonical(Eigen::Vector4d q) {
  if (q[0] < 0.0) return -q;
  if (q[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (q[i] < 0.0) return -q;
      if (q[i] > 0.0) break;
    }
  }
  return q;
}

}  // namespace

Rotation::Rotation(double w, double x, double y, double z) : q_(w, x, y, z) {
  const double n = q_.norm();
  if (!(n > 1e-14)) throw std::invalid_argument("rotation: zero quaternion");
  // skip the division when already unit so serialized values round-trip bit-exactly
  if (std::abs(n - 1.0) > 1e-13) q_ /= n;
  q_ = canonical(q_);
}

Rotation Rotation::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 1e-14)) throw std::invalid_argument("rotation: zero axis");
  const Eigen::Vector3d u = axis / n;
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return Rotation(std::cos(h), s * u.x(), s * u.y(), s * u.z());
}

Rotation compose(const Rotation& r1, const Rotation& r2) {
  const auto& a = r1.wxyz();
  const auto& b = r2.wxyz();
  return Rotation(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                  a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                  a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                  a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

Rotation inverse(const Rotation& r) {
  return Rotation(r.w(), -r.x(), -r.y(), -r.z());
}

Rotation rot_x(double angle) { return Rotation::from_axis_angle({1, 0, 0}, angle); }
Rotation rot_y(double angle) { return Rotation::from_axis_angle({0, 1, 0}, angle); }
Rotation rot_z(double angle) { return Rotation::from_axis_angle({0, 0, 1}, angle); }

Eigen::Matrix3d matrix(const Rotation& r) {
  const double w = r.w(), x = r.x(), y = r.y(), z = r.z();
  Eigen::Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return m;
}

Rotation from_matrix(const Eigen::Matrix3d& m) {
  // Shepperd's method: pick the largest of the four squared components
  const double t = m.trace();
  double w, x, y, z;
  if (t > m(0, 0) && t > m(1, 1) && t > m(2, 2)) {
    const double s = std::sqrt(1.0 + t) * 2.0;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  return Rotation(w, x, y, z);
}

double rotation_angle(const Rotation& r) {
  return 2.0 * std::atan2(Eigen::Vector3d(r.x(), r.y(), r.z()).norm(), std::abs(r.w()));
}

double quat_distance(const Rotation& a, const Rotation& b) {
  const double dm = (a.wxyz() - b.wxyz()).norm();
  const double dp = (a.wxyz() + b.wxyz()).norm();
  return std::min(dm, dp);
}

Rotation random_haar(Rng& rng) {
  while (true) {
    const double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
    if (Eigen::Vector4d(w, x, y, z).norm() > 1e-6) return Rotation(w, x, y, z);
  }
}

S2Point act_on_sphere(const Rotation& r, const S2Point& p) {
  return (matrix(r) * p).normalized();
}

Rotation lift_to_group(const S2Point& p) {
  const double c = p.z();
  if (c > 1.0 - 1e-12) return Rotation::identity();
  if (c < -1.0 + 1e-12) return rot_x(M_PI);
  const Eigen::Vector3d axis(-p.y(), p.x(), 0.0);  // north x p
  return Rotation::from_axis_angle(axis, std::atan2(axis.norm(), c));
}

void validate_grid(const Grid& g) {
  const bool group = g.space == Space::Group;
  if (group ? !g.points.empty() : !g.rotations.empty())
    throw std::invalid_argument("grid: element storage does not match space");
  const int n = g.n();
  if (n < 1) throw std::invalid_argument("grid: empty");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const bool dup = group ? g.rotations[i].wxyz() == g.rotations[j].wxyz()
                             : g.points[i] == g.points[j];
      if (dup) throw std::invalid_argument("grid: duplicate element");
    }
}

Grid cubic_group() {
  Grid g;
  g.space = Space::Group;
  g.rotations.push_back(Rotation::identity());
  const Rotation gens[2] = {rot_z(M_PI / 2), rot_x(M_PI / 2)};
  bool changed = true;
  while (changed) {
    changed = false;
    const auto snapshot = g.rotations;
    for (const auto& e : snapshot)
      for (const auto& gen : gens) {
        const Rotation c = compose(e, gen);
        const bool known = std::any_of(g.rotations.begin(), g.rotations.end(),
                                       [&](const Rotation& r) { return quat_distance(c, r) < 1e-9; });
        if (!known) {
          g.rotations.push_back(c);
          changed = true;
        }
      }
  }
  std::sort(g.rotations.begin(), g.rotations.end(), [](const Rotation& a, const Rotation& b) {
    return std::lexicographical_compare(a.wxyz().data(), a.wxyz().data() + 4,
                                        b.wxyz().data(), b.wxyz().data() + 4);
  });
  return g;
}

namespace {

// one projected-gradient pass shared by both spaces; rows of x are unit vectors
// in R^dim, dist(i,j) supplied by the caller through diff(i,j)
template <int Dim>
void repulsion_run(Eigen::Matrix<double, Eigen::Dynamic, Dim>& x, int steps, double step_size,
                   const std::function<Eigen::Matrix<double, 1, Dim>(
                       const Eigen::Matrix<double, Eigen::Dynamic, Dim>&, int, int)>& diff) {
  const int n = static_cast<int>(x.rows());
  Eigen::Matrix<double, Eigen::Dynamic, Dim> grad(n, Dim);
  for (int s = 0; s < steps; ++s) {
    const double eta = step_size * 0.5 * (1.0 + std::cos(M_PI * s / steps));
    grad.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const Eigen::Matrix<double, 1, Dim> v = diff(x, i, j);
        const double d = v.norm();
        grad.row(i) += v / (d * d * d);
      }
    for (int i = 0; i < n; ++i) {
      Eigen::Matrix<double, 1, Dim> t = grad.row(i);
      t -= t.dot(x.row(i)) * x.row(i);  // tangent projection
      const double tn = t.norm();
      if (tn > 1e-12) x.row(i) += eta * t / tn;
      x.row(i).normalize();
    }
  }
}

}  // namespace

Grid repulsion_grid(Space space, int n, int steps, double step_size, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("repulsion_grid: n must be >= 1");
  Grid g;
  g.space = space;
  Rng rng(seed);
  if (space == Space::Sphere) {
    if (n == 1) {
      g.points.push_back(north());
      return g;
    }
    Eigen::Matrix<double, Eigen::Dynamic, 3> x(n, 3);
    for (int i = 0; i < n; ++i) {
      Eigen::RowVector3d v;
      do {
        v << rng.normal(), rng.normal(), rng.normal();
      } while (v.norm() < 1e-6);
      x.row(i) = v.normalized();
    }
    repulsion_run<3>(x, steps, step_size,
                     [](const Eigen::Matrix<double, Eigen::Dynamic, 3>& p, int i, int j) {
                       return Eigen::RowVector3d(p.row(i) - p.row(j));
                     });
    g.points.reserve(n);
    for (int i = 0; i < n; ++i) g.points.push_back(x.row(i).transpose());
    std::sort(g.points.begin(), g.points.end(), [](const S2Point& a, const S2Point& b) {
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
  } else {
    if (n == 1) {
      g.rotations.push_back(Rotation::identity());
      return g;
    }
    Eigen::Matrix<double, Eigen::Dynamic, 4> x(n, 4);
    for (int i = 0; i < n; ++i) x.row(i) = random_haar(rng).wxyz().transpose();
    repulsion_run<4>(x, steps, step_size,
                     [](const Eigen::Matrix<double, Eigen::Dynamic, 4>& q, int i, int j) {
                       // nearest of the two antipodal representatives of j
                       const Eigen::RowVector4d dm = q.row(i) - q.row(j);
                       const Eigen::RowVector4d dp = q.row(i) + q.row(j);
                       return dm.norm() <= dp.norm() ? dm : dp;
                     });
    g.rotations.reserve(n);
    for (int i = 0; i < n; ++i)
      g.rotations.emplace_back(x(i, 0), x(i, 1), x(i, 2), x(i, 3));
    std::sort(g.rotations.begin(), g.rotations.end(), [](const Rotation& a, const Rotation& b) {
      return std::lexicographical_compare(a.wxyz().data(), a.wxyz().data() + 4,
                                          b.wxyz().data(), b.wxyz().data() + 4);
    });
  }
  validate_grid(g);
  return g;
}

std::string grid_to_json(const Grid& g) {
  std::string out = "[";
  char buf[32];
  auto append = [&](const double* v, int dim, bool last) {
    out += "[";
    for (int k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", v[k]);
      out += buf;
      if (k + 1 < dim) out += ", ";
    }
    out += last ? "]" : "],\n ";
  };
  const int n = g.n();
  for (int i = 0; i < n; ++i) {
    if (g.space == Space::Group)
      append(g.rotations[i].wxyz().data(), 4, i + 1 == n);
    else
      append(g.points[i].data(), 3, i + 1 == n);
  }
  out += "]\n";
  return out;
}

Grid grid_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("grid json: expected nonempty array");
  Grid g;
  const std::size_t dim = j.front().size();
  if (dim == 4) {
    g.space = Space::Group;
    for (const auto& e : j) g.rotations.emplace_back(e.at(0), e.at(1), e.at(2), e.at(3));
  } else if (dim == 3) {
    g.space = Space::Sphere;
    for (const auto& e : j) {
      S2Point p(e.at(0), e.at(1), e.at(2));
      const double n = p.norm();
      if (!(n > 1e-14)) throw std::invalid_argument("grid json: zero-length point");
      if (std::abs(n - 1.0) > 1e-13) p /= n;
      g.points.push_back(p);
    }
  } else {
    throw std::invalid_argument("grid json: elements must have 3 or 4 entries");
  }
  validate_grid(g);
  return g;
}

}  // namespace so3kit
