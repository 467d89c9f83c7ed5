#pragma once

// Adam with a stepwise exponential learning-rate decay, and the training loop
// sample -> loss -> gradient -> step for 1D and 2D surrogate sets.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apnn/nets.hpp"
#include "apnn/physics.hpp"
#include "apnn/sampler.hpp"

namespace apnn {

// eta_it = eta0 * gamma^floor(it / period)
struct Schedule {
  double eta0 = 1e-3;
  double gamma = 0.96;
  long period = 2500;

  void validate() const;
};

double lr_at(const Schedule& s, long it);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v2;
  long it = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(Index n) : m(Eigen::VectorXd::Zero(n)), v2(Eigen::VectorXd::Zero(n)) {}
};

// One bias-corrected Adam update of a flat vector. Entries listed in
// `clamp_offsets` are clamped to [kBetaMin, kBetaMax] afterwards. A NaN/Inf
// gradient throws NonFiniteError naming `iteration` and `term` before any
// state is touched.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               std::span<const Index> clamp_offsets = {}, long iteration = 0,
               const std::string& term = "gradient");

// Same, for one network; the betas are re-clamped and the offending slot is
// named in the error.
void adam_step(NetworkParams& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               long iteration = 0, const std::string& net_name = "net");

struct TrainConfig {
  double epsilon = 1.0;
  SurrogateOptions network;
  SamplerConfig sampler;  // dimension, T and batch sizes
  Schedule schedule;
  LossWeights weights;
  PhiConvention phi_convention = PhiConvention::kNonStiff;
  bool boundary_loss = false;
  long iterations = 20000;
  std::uint64_t seed = 0;
  long log_every = 100;
};

struct HistoryRow {
  long iter = 0;
  double total = 0, residual = 0, initial = 0, boundary = 0;
  std::vector<std::pair<std::string, double>> terms;
  double rel_l2 = -1.0;  // negative when no error callback is set
  double lr = 0.0;
  double seconds = 0.0;  // wall clock since the start of training
};

struct TrainingHistory {
  std::vector<HistoryRow> rows;
};

using ErrorFn1D = std::function<double(const SurrogateSet1D&)>;
using ErrorFn2D = std::function<double(const SurrogateSet2D&)>;
// Called after each logged row (progress reporting).
using LogFn = std::function<void(const HistoryRow&)>;

// Network initialization for a config: fixed stream of the run seed.
SurrogateSet1D initial_surrogates_1d(const TrainConfig& cfg);
SurrogateSet2D initial_surrogates_2d(const TrainConfig& cfg);

// Trains `set` in place for cfg.iterations steps. Rows are logged at every
// multiple of log_every (loss on that iteration's batch, before the step) and
// once after the last step. With zero iterations nothing is logged.
TrainingHistory train(SurrogateSet1D& set, const TrainConfig& cfg, const ErrorFn1D& error = {},
                      const LogFn& log = {});
TrainingHistory train(SurrogateSet2D& set, const TrainConfig& cfg, const ErrorFn2D& error = {},
                      const LogFn& log = {});

}  // namespace apnn
