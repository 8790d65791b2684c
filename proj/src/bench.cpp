#include "so3kit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "so3kit/adaptive.hpp"
#include "so3kit/io.hpp"
#include "so3kit/rng.hpp"
#include "so3kit/sampling.hpp"

namespace so3kit {

std::string bench_csv(const std::vector<BenchRecord>& rows) {
  std::ostringstream out;
  out << "layer,n,c,f,m,wall_ms,buffer_bytes\n";
  for (const auto& r : rows)
    out << r.layer << ',' << r.n << ',' << r.c << ',' << r.f << ',' << r.m << ','
        << fmt17(r.wall_ms) << ',' << r.buffer_bytes << '\n';
  return out.str();
}

double runtime_protocol(const std::vector<double>& reps) {
  if (reps.size() < 11) throw std::invalid_argument("runtime_protocol: need at least 11 repetitions");
  const double total = std::accumulate(reps.begin(), reps.end(), 0.0);
  const auto [lo, hi] = std::minmax_element(reps.begin(), reps.end());
  return (total - *lo - *hi) / double(reps.size() - 2);
}

double runtime_protocol(const std::function<void()>& body) {
  for (int i = 0; i < 10; ++i) body();
  std::vector<double> reps;
  reps.reserve(11);
  for (int i = 0; i < 11; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    reps.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return runtime_protocol(reps);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("fit_line: need matched samples, at least 2");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<BenchRecord> bench_nonlinearity(const FieldType& carrier, int channels, int spatial,
                                            const std::vector<int>& n_sweep, std::uint64_t seed) {
  if (channels < 1 || spatial < 1) throw std::invalid_argument("bench_nonlinearity: bad sizes");
  Rng rng(seed);
  const int f = carrier.F;
  const auto randm = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };

  std::vector<BenchRecord> out;
  for (const int n : n_sweep) {
    if (n < 1) throw std::invalid_argument("bench_nonlinearity: bad grid size");
    const std::int64_t buffer = std::int64_t(n) * channels * spatial * 8;

    const auto grid = repulsion_grid(
        carrier.kind == RepKind::Quotient ? Space::Sphere : Space::Group, n, 500, 0.01, seed);
    const auto S = sampling_matrix(carrier, grid, false);
    const Eigen::MatrixXd flat = randm(Eigen::Index(spatial) * channels, f);
    Eigen::MatrixXd sink;
    const double t_fixed = runtime_protocol(std::function<void()>([&] {
      sink = fourier_nonlinearity(S, flat, Activation::Elu, FtMode::ApproxTranspose);
    }));
    out.push_back({"fixed", n, channels, f, spatial, t_fixed, buffer});

    FieldBundle x;
    std::vector<int> in_mult;
    for (int l = 0; l <= carrier.L; ++l) {
      x.fields.push_back(randm(spatial, 2 * l + 1));
      in_mult.push_back(1);
    }
    const auto gen = build_generator(in_mult, carrier, n, seed ^ 0x9e3779b97f4a7c15ull);
    const auto as = generate_A(gen, x);
    std::vector<Eigen::MatrixXd> fhat(spatial);
    for (int p = 0; p < spatial; ++p) fhat[p] = randm(channels, f);
    std::vector<Eigen::MatrixXd> sink2;
    const double t_adaptive = runtime_protocol(std::function<void()>(
        [&] { sink2 = adaptive_nonlinearity(as, fhat, Activation::Elu); }));
    out.push_back({"adaptive", n, channels, f, spatial, t_adaptive, buffer});
  }
  return out;
}

}  // namespace so3kit
