#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "so3kit/field_type.hpp"

namespace so3kit {

// one timed layer application; buffer_bytes is the transient sample grid,
// spatial x channels x n doubles
struct BenchRecord {
  std::string layer;
  int n = 0;
  int c = 0;
  int f = 0;
  int m = 0;
  double wall_ms = 0.0;
  std::int64_t buffer_bytes = 0;
};

std::string bench_csv(const std::vector<BenchRecord>& rows);

// trimmed mean of timed repetitions: one highest and one lowest dropped, the
// rest averaged; needs at least 11 entries
double runtime_protocol(const std::vector<double>& reps);

// runs body 10 times untimed as warm-up, then 11 timed repetitions fed to the
// trimmed mean above; returns milliseconds
double runtime_protocol(const std::function<void()>& body);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

// ordinary least squares on (x, y); r2 of a constant-in-constant-out fit is 1
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Wall time of the two nonlinearities at fixed channels / carrier / spatial
// samples, swept over the grid size. The grid-sampled variant uses the scaled
// transpose back-transform; the per-point variant applies its own sampling
// matrix at every spatial sample. Generation and grid construction are set-up
// cost and stay outside the timer.
std::vector<BenchRecord> bench_nonlinearity(const FieldType& carrier, int channels, int spatial,
                                            const std::vector<int>& n_sweep, std::uint64_t seed);

}  // namespace so3kit
