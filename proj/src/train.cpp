#include "apnn/train.hpp"

#include <chrono>
#include <cmath>

#include "apnn/errors.hpp"
#include "apnn/random.hpp"

namespace apnn {

void Schedule::validate() const {
  if (!(eta0 > 0.0)) throw ConfigError("schedule.eta0", "must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("schedule.gamma", "must lie in (0, 1]");
  if (period < 1) throw ConfigError("schedule.period", "must be >= 1");
}

double lr_at(const Schedule& s, long it) {
  if (it < 0) throw InvalidArgument("lr_at: negative iteration");
  return s.eta0 * std::pow(s.gamma, static_cast<double>(it / s.period));
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               std::span<const Index> clamp_offsets, long iteration, const std::string& term) {
  if (grads.size() != params.size()) throw InvalidArgument("adam_step: gradient size mismatch");
  if (state.m.size() == 0 && state.v2.size() == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v2 = Eigen::VectorXd::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v2.size() != params.size()) {
    throw InvalidArgument("adam_step: optimizer state size mismatch");
  }
  if (!grads.allFinite()) throw NonFiniteError(iteration, term);

  ++state.it;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v2 = state.beta2 * state.v2 + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.it));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.it));
  params.array() -= lr * (state.m.array() / c1) / ((state.v2.array() / c2).sqrt() + state.eps);
  for (Index o : clamp_offsets) params[o] = ad::clamp(params[o], kBetaMin, kBetaMax);
}

void adam_step(NetworkParams& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               long iteration, const std::string& net_name) {
  if (!grads.allFinite()) {
    for (const auto& [name, slot] : params.named_slots()) {
      if (!grads.segment(slot.offset, slot.rows * slot.cols).allFinite()) {
        throw NonFiniteError(iteration, "gradient of " + net_name + "." + name);
      }
    }
  }
  const std::vector<Index> betas = params.beta_offsets();
  adam_step(params.values(), grads, state, lr, betas, iteration, "gradient of " + net_name);
}

namespace {

constexpr std::uint64_t kInitStream = ~std::uint64_t{0};

void check_config(const TrainConfig& cfg, int dimension) {
  if (cfg.sampler.dimension != dimension) {
    throw ConfigError("dimension", "sampler dimension does not match the surrogate set");
  }
  if (cfg.iterations < 0) throw ConfigError("iterations", "must be >= 0");
  if (cfg.log_every < 1) throw ConfigError("log_every", "must be >= 1");
  cfg.schedule.validate();
}

LossOptions loss_options(const TrainConfig& cfg) {
  LossOptions o;
  o.weights = cfg.weights;
  o.phi_convention = cfg.phi_convention;
  o.boundary = cfg.boundary_loss;
  o.ic1 = benchmark_initial_condition_1d();
  o.ic2 = benchmark_initial_condition_2d();
  return o;
}

template <class Set>
LossGraph build(ad::Tape& tape, const Set& set, const CollocationBatch& b, const LossOptions& o,
                GradSinks g) {
  if constexpr (std::is_same_v<Set, SurrogateSet1D>) {
    return build_loss_1d(tape, set, b, o, g);
  } else {
    return build_loss_2d(tape, set, b, o, g);
  }
}

template <class Set, class ErrorFn>
TrainingHistory train_impl(Set& set, const TrainConfig& cfg, const ErrorFn& error,
                           const LogFn& log) {
  const LossOptions opts = loss_options(cfg);
  auto nets = set.networks();
  std::vector<Eigen::VectorXd> grads;
  std::vector<AdamState> states;
  std::vector<double*> sinks;
  for (auto& [name, p] : nets) {
    grads.emplace_back(Eigen::VectorXd::Zero(p->size()));
    states.emplace_back(p->size());
  }
  for (auto& g : grads) sinks.push_back(g.data());

  TrainingHistory history;
  const auto start = std::chrono::steady_clock::now();
  auto record = [&](long it, const ad::Tape& tape, const LossGraph& graph) {
    const LossBreakdown br = read_breakdown(tape, graph, cfg.weights);
    HistoryRow row;
    row.iter = it;
    row.total = br.total();
    row.residual = br.residual;
    row.initial = br.initial;
    row.boundary = br.boundary;
    row.terms = br.terms;
    row.lr = lr_at(cfg.schedule, it);
    if (error) row.rel_l2 = error(set);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.rows.push_back(row);
    if (log) log(history.rows.back());
  };
  auto check_finite = [&](long it, const ad::Tape& tape, const LossGraph& graph) {
    if (std::isfinite(tape.scalar(graph.total))) return;
    for (const auto& [name, v] : graph.terms) {
      if (!std::isfinite(tape.scalar(v))) throw NonFiniteError(it, "loss term " + name);
    }
    throw NonFiniteError(it, "loss");
  };

  for (long it = 0; it < cfg.iterations; ++it) {
    const CollocationBatch batch = sample_batch(cfg.sampler, cfg.seed, static_cast<std::uint64_t>(it));
    for (auto& g : grads) g.setZero();
    ad::Tape tape;
    const LossGraph graph = build(tape, set, batch, opts, sinks);
    check_finite(it, tape, graph);
    if (it % cfg.log_every == 0) record(it, tape, graph);
    tape.backward(graph.total);
    const double lr = lr_at(cfg.schedule, it);
    for (std::size_t n = 0; n < nets.size(); ++n) {
      adam_step(*nets[n].second, grads[n], states[n], lr, it, nets[n].first);
    }
  }
  if (cfg.iterations > 0) {
    const long it = cfg.iterations;
    const CollocationBatch batch = sample_batch(cfg.sampler, cfg.seed, static_cast<std::uint64_t>(it));
    ad::Tape tape;
    const LossGraph graph = build(tape, set, batch, opts, {});
    check_finite(it, tape, graph);
    record(it, tape, graph);
  }
  return history;
}

}  // namespace

SurrogateSet1D initial_surrogates_1d(const TrainConfig& cfg) {
  check_config(cfg, 1);
  Xoshiro256 rng(cfg.seed, kInitStream);
  return SurrogateSet1D::create(cfg.network, cfg.epsilon, rng);
}

SurrogateSet2D initial_surrogates_2d(const TrainConfig& cfg) {
  check_config(cfg, 2);
  Xoshiro256 rng(cfg.seed, kInitStream);
  return SurrogateSet2D::create(cfg.network, cfg.epsilon, rng);
}

TrainingHistory train(SurrogateSet1D& set, const TrainConfig& cfg, const ErrorFn1D& error,
                      const LogFn& log) {
  check_config(cfg, 1);
  return train_impl(set, cfg, error, log);
}

TrainingHistory train(SurrogateSet2D& set, const TrainConfig& cfg, const ErrorFn2D& error,
                      const LogFn& log) {
  check_config(cfg, 2);
  return train_impl(set, cfg, error, log);
}

}  // namespace apnn
