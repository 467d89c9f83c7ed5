#include "apnn/sampler.hpp"

#include "apnn/errors.hpp"
#include "apnn/random.hpp"

namespace apnn {

CollocationBatch sample_batch(const SamplerConfig& cfg, std::uint64_t seed, std::uint64_t iteration) {
  if (cfg.dimension != 1 && cfg.dimension != 2) throw InvalidArgument("dimension must be 1 or 2");
  if (cfg.interior <= 0 || cfg.initial <= 0 || cfg.boundary < 0) {
    throw InvalidArgument("sample counts must be positive");
  }
  if (!(cfg.horizon > 0.0)) throw InvalidArgument("horizon T must be positive");

  Xoshiro256 rng(seed, iteration);
  const bool two_d = cfg.dimension == 2;
  CollocationBatch b;
  b.t.resize(cfg.interior);
  b.x.resize(cfg.interior);
  if (two_d) b.y.resize(cfg.interior);
  for (int i = 0; i < cfg.interior; ++i) {
    b.t[i] = cfg.horizon * rng.uniform();
    b.x[i] = rng.uniform();
    if (two_d) b.y[i] = rng.uniform();
  }
  b.x0.resize(cfg.initial);
  if (two_d) b.y0.resize(cfg.initial);
  for (int i = 0; i < cfg.initial; ++i) {
    b.x0[i] = rng.uniform();
    if (two_d) b.y0[i] = rng.uniform();
  }
  b.tb.resize(cfg.boundary);
  if (two_d) b.sb.resize(cfg.boundary);
  for (int i = 0; i < cfg.boundary; ++i) {
    b.tb[i] = cfg.horizon * rng.uniform();
    if (two_d) b.sb[i] = rng.uniform();
  }
  return b;
}

}  // namespace apnn
