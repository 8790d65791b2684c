#include "doctest.h"

#include <algorithm>
#include <sstream>
#include <vector>

#include "so3kit/diagnostics.hpp"
#include "so3kit/rng.hpp"

#include "grids.hpp"

using namespace so3kit;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SamplingMatrix with_rows_reversed(const SamplingMatrix& S) {
  SamplingMatrix out = S;
  out.A = S.A.colwise().reverse();
  return out;
}

}  // namespace

TEST_CASE("row orthogonality metric") {
  const auto t = field_type(RepKind::Quotient, 3);

  Grid one;
  one.space = Space::Group;
  one.rotations = {Rotation::identity()};
  CHECK(epsilon1(sampling_matrix(t, one, true)) == 0.0);

  // at N = 8 the rows cannot be near-orthogonal for this bandwidth: each pair
  // picks up the reproducing kernel between grid points, and the sum of those
  // overlaps is order one; it grows with N once N exceeds F
  const auto S8 = sampling_matrix(t, repulsion_grid(Space::Sphere, 8), true);
  const double e8 = epsilon1(S8);
  CHECK(e8 > 0.5);
  CHECK(e8 < 1.0);

  const auto S64 = sampling_matrix(t, repulsion_grid(Space::Sphere, 64), true);
  CHECK(epsilon1(S64) > e8);

  CHECK(epsilon1(with_rows_reversed(S8)) == doctest::Approx(e8).epsilon(1e-14));

  // both delta conventions give identical values since rows are renormalized
  const auto S8u = sampling_matrix(t, repulsion_grid(Space::Sphere, 8), false);
  CHECK(epsilon1(S8u) == doctest::Approx(e8).epsilon(1e-12));
}

TEST_CASE("column orthogonality metric") {
  const auto tr = field_type(RepKind::Regular, 1);
  const auto Sc = sampling_matrix(tr, cubic_group(), false);
  CHECK(epsilon2(Sc, Eps2Mode::BlockRescaled) < 1e-12);
  CHECK(epsilon2(Sc, Eps2Mode::AsIs) < 1e-12);  // rows already at the unnormalized scale

  const auto tq = field_type(RepKind::Quotient, 3);
  const auto grid = shared_repulsion(Space::Sphere, 1024);
  const auto S = sampling_matrix(tq, grid, true);
  CHECK(epsilon2(S, Eps2Mode::BlockRescaled) < 0.05);

  // with unit rows the literal formula cannot approach zero: (1/N) A^T A
  // converges to I/F, leaving 1 - 1/F of the diagonal mass as deviation
  CHECK(epsilon2(S, Eps2Mode::AsIs) == doctest::Approx(1.0 - 1.0 / 16.0).epsilon(0.025));

  const auto rep = ortho_report(S);
  CHECK(rep.N == 1024);
  CHECK(rep.F == 16);
  CHECK(rep.eps1 == epsilon1(S));
  CHECK(rep.eps2_normalized == epsilon2(S, Eps2Mode::AsIs));
  CHECK(rep.eps2_unnormalized == epsilon2(S, Eps2Mode::BlockRescaled));

  CHECK(epsilon2(with_rows_reversed(S), Eps2Mode::BlockRescaled) ==
        doctest::Approx(epsilon2(S, Eps2Mode::BlockRescaled)).epsilon(1e-14));
}

TEST_CASE("relative equivariance error definition") {
  const Eigen::VectorXd x = (Eigen::VectorXd(3) << 1.0, 2.0, 2.0).finished();
  const auto ident = [](const Eigen::VectorXd& v) { return v; };
  const auto negate = [](const Eigen::VectorXd& v) { return Eigen::VectorXd(-v); };

  const auto constant = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Ones(3).eval();
  };
  CHECK(equivariance_error(constant, x, negate, ident) == 0.0);

  // an odd map measured in the invariance form maxes out at 2
  const auto odd = [](const Eigen::VectorXd& v) { return v.eval(); };
  CHECK(equivariance_error(odd, x, negate, ident) == doctest::Approx(2.0).epsilon(1e-15));

  const auto scaled = [](const Eigen::VectorXd& v) { return (5.0 * v).eval(); };
  CHECK(equivariance_error(scaled, x, negate, ident) ==
        doctest::Approx(equivariance_error(odd, x, negate, ident)).epsilon(1e-14));

  const auto zero = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(3).eval(); };
  CHECK(equivariance_error(zero, x, negate, ident) == 0.0);
}

TEST_CASE("fixed-grid layer equivariance improves with grid density") {
  Rng rng(31);
  const auto t = field_type(RepKind::Quotient, 3);
  std::vector<double> med;
  for (const int n : {8, 16, 32, 64}) {
    const auto S = sampling_matrix(t, repulsion_grid(Space::Sphere, n), true);
    const auto layer = [&](const Eigen::MatrixXd& f) {
      return fourier_nonlinearity(S, f, Activation::Elu, FtMode::PInv);
    };
    std::vector<double> errs;
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd fhat(1, t.F);
      for (int j = 0; j < t.F; ++j) fhat(0, j) = rng.normal();
      const auto r = random_haar(rng);
      const auto rot = [&](const Eigen::MatrixXd& f) { return rho_apply(t, r, f); };
      errs.push_back(equivariance_error(layer, fhat, rot, rot));
    }
    med.push_back(median(errs));
  }
  CHECK(med[1] < med[0]);
  CHECK(med[2] < med[1]);
  CHECK(med[3] < med[2]);
  CHECK(med[3] < 0.5 * med[0]);
  CHECK(med[3] < 0.05);
}

TEST_CASE("matrix csv serialization keeps full precision") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0 / 3.0, -2.0, 0.1, 12345.6789;
  std::ostringstream os;
  write_matrix_csv(os, m);
  std::istringstream is(os.str());
  std::string cell;
  Eigen::MatrixXd back(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      std::getline(is, cell, j == 1 ? '\n' : ',');
      back(i, j) = std::stod(cell);
    }
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}
