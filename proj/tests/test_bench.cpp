#include "doctest.h"

#include <string>
#include <vector>

#include "so3kit/bench.hpp"

using namespace so3kit;

TEST_CASE("trimmed mean drops exactly one extreme at each end") {
  CHECK(runtime_protocol(std::vector<double>(11, 3.25)) == 3.25);

  std::vector<double> outlier(11, 2.0);
  outlier[4] = 100.0;
  CHECK(runtime_protocol(outlier) == 2.0);

  std::vector<double> ramp;
  for (int i = 1; i <= 13; ++i) ramp.push_back(i);
  CHECK(runtime_protocol(ramp) == doctest::Approx(7.0));  // drops 1 and 13

  std::vector<double> twin(11, 5.0);
  twin[0] = 9.0;
  twin[1] = 9.0;  // only one of the two highs is dropped
  CHECK(runtime_protocol(twin) == doctest::Approx((5.0 * 8 + 9.0) / 9));

  CHECK_THROWS(runtime_protocol(std::vector<double>(10, 1.0)));
  CHECK_THROWS(runtime_protocol(std::vector<double>{}));
}

TEST_CASE("timed protocol runs ten warm-ups plus eleven measured calls") {
  int calls = 0;
  const double ms = runtime_protocol(std::function<void()>([&] { ++calls; }));
  CHECK(calls == 21);
  CHECK(ms >= 0.0);
}

TEST_CASE("line fit recovers exact and constant data") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (const double v : x) y.push_back(3.0 * v + 2.0);
  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(3.0));
  CHECK(fit.intercept == doctest::Approx(2.0));
  CHECK(fit.r2 == doctest::Approx(1.0));

  const auto flat = fit_line(x, std::vector<double>(5, 4.0));
  CHECK(flat.slope == doctest::Approx(0.0));
  CHECK(flat.r2 == 1.0);

  const auto noisy = fit_line(x, {2.0, 8.0, 7.0, 14.0, 12.0});
  CHECK(noisy.r2 > 0.5);
  CHECK(noisy.r2 < 1.0);

  CHECK_THROWS(fit_line({1.0}, {2.0}));
  CHECK_THROWS(fit_line(x, {1.0, 2.0}));
  CHECK_THROWS(fit_line(std::vector<double>(3, 2.0), {1.0, 2.0, 3.0}));
}

TEST_CASE("bench rows carry sizes and print as csv") {
  const FieldType t = field_type(RepKind::Quotient, 1);  // F = 4
  const auto rows = bench_nonlinearity(t, 2, 16, {2, 4}, 7);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].layer == "fixed");
  CHECK(rows[1].layer == "adaptive");
  CHECK(rows[0].n == 2);
  CHECK(rows[3].n == 4);
  for (const auto& r : rows) {
    CHECK(r.c == 2);
    CHECK(r.f == 4);
    CHECK(r.m == 16);
    CHECK(r.wall_ms >= 0.0);
    CHECK(r.buffer_bytes == std::int64_t(r.n) * 2 * 16 * 8);
  }

  const auto text = bench_csv(rows);
  CHECK(text.rfind("layer,n,c,f,m,wall_ms,buffer_bytes\n", 0) == 0);
  CHECK(text.find("fixed,2,2,4,16,") != std::string::npos);
  CHECK(text.find("adaptive,4,2,4,16,") != std::string::npos);

  CHECK_THROWS(bench_nonlinearity(t, 0, 16, {2}, 7));
  CHECK_THROWS(bench_nonlinearity(t, 2, 16, {0}, 7));
}
