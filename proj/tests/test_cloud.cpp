#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "so3kit/cloud.hpp"
#include "so3kit/rng.hpp"
#include "so3kit/wigner.hpp"

using namespace so3kit;

namespace {

Eigen::MatrixXd randm(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

FieldBundle random_bundle(const std::vector<int>& mult, int points, Rng& rng) {
  FieldBundle b;
  for (size_t l = 0; l < mult.size(); ++l)
    b.fields.push_back(randm(points, mult[l] * (2 * static_cast<int>(l) + 1), rng));
  return b;
}

double bundle_gap(const FieldBundle& a, const FieldBundle& b) {
  double m = 0.0;
  for (size_t l = 0; l < a.fields.size(); ++l)
    m = std::max(m, (a.fields[l] - b.fields[l]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("cloud construction centers the points") {
  Rng rng(201);
  const Eigen::MatrixXd pts = randm(5, 3, rng);
  const auto c = make_cloud(pts, 3);
  CHECK(c.label == 3);
  CHECK(c.points.colwise().mean().norm() < 1e-14);
  // pairwise offsets survive the shift
  CHECK(((c.points.row(1) - c.points.row(0)) - (pts.row(1) - pts.row(0))).norm() < 1e-14);
  CHECK_THROWS(make_cloud(Eigen::MatrixXd::Zero(4, 2)));
  CHECK_THROWS(make_cloud(Eigen::MatrixXd::Zero(0, 3)));

  const auto r = random_haar(rng);
  const auto rc = rotate_cloud(c, r);
  CHECK((rc.points.row(2).transpose() - matrix(r) * c.points.row(2).transpose()).norm() < 1e-14);
  CHECK(rc.label == 3);
}

TEST_CASE("a lone neighbor straight above lands in the m=0 slot") {
  Eigen::MatrixXd pts(2, 3);
  pts << 0, 0, 0, 0, 0, 0.4;
  const auto b = harmonic_lift(make_cloud(pts), 1.0, 1, 3);
  REQUIRE(b.levels() == 4);
  REQUIRE(b.points() == 2);
  const double w = 0.9;  // hat centered at 0.5, width 1
  for (int l = 0; l <= 3; ++l) {
    REQUIRE(b.fields[l].cols() == 2 * l + 1);
    Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(2 * l + 1);
    expect(l) = w * std::sqrt(2.0 * l + 1.0);
    CHECK((b.fields[l].row(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
    // the partner sees the opposite direction: parity (-1)^l
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;
    CHECK((b.fields[l].row(1) - sign * expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lift rows follow the harmonic of the offset direction") {
  Rng rng(203);
  Eigen::MatrixXd pts(2, 3);
  pts.row(0).setZero();
  pts.row(1) << 0.3, -0.2, 0.1;
  const auto c = make_cloud(pts);
  const Eigen::Vector3d diff = (c.points.row(1) - c.points.row(0)).transpose();
  const double d = diff.norm();
  const auto b = harmonic_lift(c, 1.0, 1, 2);
  const double w = 1.0 - std::abs(d - 0.5);
  for (int l = 0; l <= 2; ++l) {
    const Eigen::VectorXd y = real_sph_harm(l, diff / d);
    CHECK((b.fields[l].row(0).transpose() - w * std::sqrt(2.0 * l + 1.0) * y)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("radial hat weights partition distances between bin centers") {
  auto pair_at = [](double d) {
    Eigen::MatrixXd pts(2, 3);
    pts << 0, 0, 0, d, 0, 0;
    return make_cloud(pts);
  };
  // radius 1, two bins: hats centered at 0.25 and 0.75, width 0.5
  auto row0 = [&](double d) {
    return Eigen::RowVector2d(harmonic_lift(pair_at(d), 1.0, 2, 0).fields[0].row(0));
  };
  CHECK((row0(0.25) - Eigen::RowVector2d(1.0, 0.0)).norm() < 1e-13);
  CHECK((row0(0.75) - Eigen::RowVector2d(0.0, 1.0)).norm() < 1e-13);
  CHECK((row0(0.5) - Eigen::RowVector2d(0.5, 0.5)).norm() < 1e-13);
  CHECK(row0(1.25).norm() == 0.0);
  for (const double d : {0.3, 0.45, 0.6, 0.7})
    CHECK(row0(d).sum() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS(harmonic_lift(pair_at(0.5), 0.0, 2, 1));
  CHECK_THROWS(harmonic_lift(pair_at(0.5), 1.0, 0, 1));
}

TEST_CASE("lifting a rotated cloud rotates the fields") {
  Rng rng(207);
  for (int trial = 0; trial < 3; ++trial) {
    const auto c = make_cloud(0.6 * randm(6, 3, rng));
    const auto r = random_haar(rng);
    const auto direct = harmonic_lift(rotate_cloud(c, r), 1.5, 2, 3);
    const auto moved = rotate_bundle(harmonic_lift(c, 1.5, 2, 3), r);
    CHECK(bundle_gap(direct, moved) < 1e-10);
  }
}

TEST_CASE("points outside every neighborhood contribute nothing") {
  Eigen::MatrixXd pts(3, 3);
  pts << 0, 0, 0, 0.3, 0, 0, 5, 0, 0;
  const auto b = harmonic_lift(make_cloud(pts), 1.0, 2, 2);
  for (int l = 0; l <= 2; ++l) CHECK(b.fields[l].row(2).norm() == 0.0);
  CHECK(b.fields[0].row(0).norm() > 0.1);
  CHECK(b.fields[0].row(1).norm() > 0.1);
}

TEST_CASE("farthest point sampling walks a line deterministically") {
  Eigen::MatrixXd pts(4, 3);
  pts << 0, 0, 0, 1, 0, 0, 2, 0, 0, 10, 0, 0;
  const auto c = make_cloud(pts);
  CHECK(fps(c, 1.0) == std::vector<int>{3, 0, 2, 1});
  CHECK(fps(c, 0.5) == std::vector<int>{3, 0});
  CHECK(fps(c, 0.01) == std::vector<int>{3});  // floor at one point
  CHECK_THROWS(fps(c, 0.0));
  CHECK_THROWS(fps(c, 1.5));
}

TEST_CASE("sampling indices ignore rigid rotation") {
  Rng rng(211);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = make_cloud(randm(12, 3, rng));
    const auto r = random_haar(rng);
    CHECK(fps(c, 0.5) == fps(rotate_cloud(c, r), 0.5));
    const auto all = fps(c, 1.0);
    std::vector<int> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 12; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("coincident points defer to the lower index") {
  Eigen::MatrixXd pts(4, 3);
  pts << 0, 0, 0, 2, 0, 0, 2, 0, 0, 1, 0, 0;
  const auto c = make_cloud(pts);
  // index 2 duplicates index 1, so it is skipped until nothing else remains
  CHECK(fps(c, 1.0) == std::vector<int>{0, 1, 3, 2});
  CHECK(fps(c, 0.75) == std::vector<int>{0, 1, 3});
}

TEST_CASE("frequency-wise linear map mixes copies like a dense layer") {
  Rng rng(213);
  FieldBundle in;
  in.fields.push_back(randm(5, 3, rng));
  const std::vector<Eigen::MatrixXd> w = {randm(2, 3, rng)};
  Eigen::RowVectorXd bias(2);
  bias << 0.3, -1.1;
  const auto out = equivariant_linear(w, bias, in);
  const Eigen::MatrixXd expect = (in.fields[0] * w[0].transpose()).rowwise() + bias;
  CHECK((out.fields[0] - expect).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("identity weights leave a bundle untouched") {
  Rng rng(217);
  const auto in = random_bundle({2, 2, 2}, 4, rng);
  const std::vector<Eigen::MatrixXd> w(3, Eigen::MatrixXd::Identity(2, 2));
  const auto out = equivariant_linear(w, Eigen::RowVectorXd::Zero(2), in);
  CHECK(bundle_gap(out, in) < 1e-15);
}

TEST_CASE("copy mixing commutes with rotation") {
  Rng rng(219);
  const auto in = random_bundle({2, 1, 3}, 4, rng);
  const std::vector<Eigen::MatrixXd> w = {randm(3, 2, rng), randm(2, 1, rng), randm(1, 3, rng)};
  const Eigen::RowVectorXd bias = randm(1, 3, rng);
  const auto r = random_haar(rng);
  const auto before = equivariant_linear(w, bias, rotate_bundle(in, r));
  const auto after = rotate_bundle(equivariant_linear(w, bias, in), r);
  CHECK(bundle_gap(before, after) < 1e-12);

  CHECK_THROWS(equivariant_linear({w[0], w[1]}, bias, in));
  CHECK_THROWS(equivariant_linear({w[0], w[0], w[2]}, bias, in));
  CHECK_THROWS(equivariant_linear(w, Eigen::RowVectorXd::Zero(2), in));
}

TEST_CASE("pooled readout collapses known norms") {
  FieldBundle b;
  Eigen::MatrixXd f0(1, 2);
  f0 << 1.5, -2.0;
  Eigen::MatrixXd f1(1, 3);
  f1 << 3.0, 0.0, 4.0;
  b.fields = {f0, f1};
  const Eigen::VectorXd pooled = invariant_pool(b);
  REQUIRE(pooled.size() == 3);
  CHECK(pooled(0) == doctest::Approx(1.5));
  CHECK(pooled(1) == doctest::Approx(-2.0));
  CHECK(pooled(2) == doctest::Approx(5.0));

  // norms average over points, scalars average signed
  FieldBundle two;
  two.fields = {Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(2, 3)};
  two.fields[0] << 1.0, -1.0;
  two.fields[1].row(0) << 3.0, 0.0, 4.0;
  const Eigen::VectorXd p2 = invariant_pool(two);
  CHECK(p2(0) == doctest::Approx(0.0));
  CHECK(p2(1) == doctest::Approx(2.5));
}

TEST_CASE("pooled readout is rotation invariant") {
  Rng rng(223);
  const auto b = random_bundle({3, 2, 2, 1}, 6, rng);
  const auto r = random_haar(rng);
  CHECK((invariant_pool(rotate_bundle(b, r)) - invariant_pool(b)).cwiseAbs().maxCoeff() < 1e-10);

  FieldBundle z;
  z.fields = {Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 6)};
  CHECK(invariant_pool(z).norm() == 0.0);
  CHECK(invariant_pool(z).size() == 4);
}
