#pragma once

// Orchestration behind the command-line runner: reference solve, training
// with periodic error evaluation, artifact tables, and the epsilon sweep.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "apnn/config.hpp"
#include "apnn/plot.hpp"
#include "apnn/train.hpp"

namespace apnn {

// rho of the reference on the evaluation grid, flattened as: for each output
// time, for each y (2D), for each x.
struct ReferenceSamples {
  std::vector<double> t, x, y, rho;
  bool analytic = false;  // diffusion limit used instead of the FD solver
};

ReferenceSamples reference_samples(const RunConfig& cfg);

struct RunResult {
  TrainingHistory history;
  CsvTable loss;   // iter,total,residual,initial,boundary
  CsvTable error;  // iter,rel_l2
  CsvTable rho;    // x[,y],t,rho_pred,rho_ref
  double final_rel_l2 = 0.0;
  double final_loss = 0.0;
  std::vector<std::pair<std::string, NetworkParams>> params;
};

// Trains per `cfg` and tabulates everything; nothing is written.
RunResult run_experiment(const RunConfig& cfg, const LogFn& log = {});

// Writes config_echo.json, loss_history.csv, error_history.csv,
// rho_profile.csv (1D) or rho_field.csv (2D), params.ckpt and plots/*.svg,
// each through a temporary file and a rename.
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& r);

// Sorted ascending with duplicates removed; each dropped value is reported
// through `warn`.
std::vector<double> dedupe_epsilons(const std::vector<double>& eps,
                                    const std::function<void(const std::string&)>& warn = {});

struct SweepResult {
  CsvTable table;  // epsilon,rel_l2,loss,loss_over_eps,loss_plus_eps2
  std::vector<RunResult> runs;
};

// One run per distinct epsilon with otherwise identical settings. Needs at
// least two distinct values.
SweepResult run_sweep(const RunConfig& cfg, const std::function<void(const std::string&)>& warn = {},
                      const LogFn& log = {});
void write_sweep_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const SweepResult& s);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace apnn
