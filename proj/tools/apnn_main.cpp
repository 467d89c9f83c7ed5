// apnn: run / sweep / plot front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration or
// CSV schema, 3 non-finite loss or gradient, 4 I/O failure.
// Log verbosity comes from APNN_LOG (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "apnn/config.hpp"
#include "apnn/errors.hpp"
#include "apnn/experiment.hpp"
#include "apnn/plot.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<long> iters;
};

apnn::RunConfig load(const std::string& path, const Overrides& o) {
  apnn::RunConfig cfg = apnn::load_run_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.iters) cfg.iterations = *o.iters;
  cfg.validate();
  return cfg;
}

apnn::LogFn progress() {
  return [](const apnn::HistoryRow& r) {
    spdlog::info("iter {:>7}  loss {:.4e} (res {:.3e}, init {:.3e})  rel_l2 {:.4e}  {:.0f}s", r.iter,
                 r.total, r.residual, r.initial, r.rel_l2, r.seconds);
  };
}

int run(const std::string& path, const Overrides& o) {
  const apnn::RunConfig cfg = load(path, o);
  spdlog::info("run: dimension {}, epsilon {:g}, {} iterations -> {}", cfg.dimension, cfg.epsilon,
               cfg.iterations, cfg.output_dir);
  const apnn::RunResult r = apnn::run_experiment(cfg, progress());
  apnn::write_run_outputs(cfg.output_dir, cfg, r);
  spdlog::info("final loss {:.4e}, relative l2 {:.4e}", r.final_loss, r.final_rel_l2);
  return 0;
}

int sweep(const std::string& path, const Overrides& o) {
  const apnn::RunConfig cfg = load(path, o);
  auto warn = [](const std::string& m) { spdlog::warn("{}", m); };
  const apnn::SweepResult s = apnn::run_sweep(cfg, warn, progress());
  apnn::write_sweep_outputs(cfg.output_dir, cfg, s);
  for (const auto& row : s.table.rows) {
    spdlog::info("epsilon {:g}: relative l2 {:.4e}, loss {:.4e}", row[0], row[1], row[2]);
  }
  return 0;
}

int plot(const std::string& csv, const std::string& kind, const std::string& out) {
  const apnn::PlotKind k = apnn::parse_plot_kind(kind);
  const std::string svg = apnn::render_svg(apnn::read_csv(csv), k);
  const std::filesystem::path p(out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  apnn::write_file_atomic(p, svg);
  return 0;
}

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("APNN_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Asymptotic-preserving neural surrogates for radiative transfer"};
  app.require_subcommand(1);
  Overrides o;
  auto add_overrides = [&o](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "Override the seed");
    sub->add_option_function<std::string>("--out-dir", [&o](const std::string& v) { o.out_dir = v; },
                                          "Override the output directory");
    sub->add_option_function<long>("--iters", [&o](long v) { o.iters = v; }, "Override the iteration count");
  };

  std::string config;
  CLI::App* run_cmd = app.add_subcommand("run", "Train one configuration and write its artifacts");
  run_cmd->add_option("config", config, "JSON run configuration")->required();
  add_overrides(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train over the configured epsilon list");
  sweep_cmd->add_option("config", config, "JSON configuration with an 'epsilons' list")->required();
  add_overrides(sweep_cmd);

  std::string csv, kind, out;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render a CSV artifact as SVG");
  plot_cmd->add_option("csv", csv, "Input table")->required();
  plot_cmd->add_option("--kind", kind, "loss, error, profile, field or sweep")->required();
  plot_cmd->add_option("--out", out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return run(config, o);
    if (*sweep_cmd) return sweep(config, o);
    return plot(csv, kind, out);
  } catch (const apnn::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const apnn::NonFiniteError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const apnn::IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("I/O error: {}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
