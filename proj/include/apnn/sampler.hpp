#pragma once

#include <cstdint>
#include <vector>

namespace apnn {

struct SamplerConfig {
  int dimension = 1;
  double horizon = 0.1;  // T
  int interior = 4096;
  int initial = 1024;
  // Time samples for the optional boundary term (0 disables it).
  int boundary = 0;
};

// Collocation points for one iteration. Spatial coordinates lie in [0,1),
// times in [0,T]. `y` arrays are empty in 1D. Velocities are not sampled:
// every point is paired with all quadrature nodes.
struct CollocationBatch {
  std::vector<double> t, x, y;          // interior
  std::vector<double> x0, y0;           // initial
  std::vector<double> tb, sb;           // boundary: time, tangential coordinate
};

// Uniform i.i.d. draws; the stream depends only on (seed, iteration).
CollocationBatch sample_batch(const SamplerConfig& cfg, std::uint64_t seed, std::uint64_t iteration);

}  // namespace apnn
