#pragma once

// Run configuration: JSON with a strict schema. Every key is optional except
// where noted; unknown keys anywhere are rejected with a ConfigError naming
// the dotted path of the offending field.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "apnn/physics.hpp"
#include "apnn/reference.hpp"
#include "apnn/train.hpp"

namespace apnn {

struct ReferenceOptions {
  FdGrid grid;
  // eps at or below this uses the analytic diffusion limit as reference.
  double limit_oracle_below = 1e-5;
};

// Output times, and the spatial grid of the reference solver.
struct EvaluationGrid {
  std::vector<double> times;
};

struct RunConfig {
  int dimension = 1;
  double epsilon = 1.0;
  double horizon = 0.1;
  SurrogateOptions network;
  Schedule schedule;
  int interior = 4096;
  int initial = 1024;
  int boundary = 0;
  LossWeights weights;
  PhiConvention phi_convention = PhiConvention::kNonStiff;
  long iterations = 20000;
  std::uint64_t seed = 0;
  long log_every = 100;
  ReferenceOptions reference;
  EvaluationGrid evaluation;
  std::string output_dir = "out";
  std::vector<double> epsilons;  // sweep only

  TrainConfig train_config() const;
  void validate() const;
};

// Throws ConfigError("<field>", ...) on schema or value errors.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved config (defaults filled in); parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& c);

}  // namespace apnn
