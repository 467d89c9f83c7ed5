#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "apnn/config.hpp"
#include "apnn/errors.hpp"
#include "apnn/experiment.hpp"
#include "apnn/plot.hpp"

using namespace apnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("apnn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Small 1D configuration that runs in well under a second.
nlohmann::json quick_config(const fs::path& out) {
  return {{"dimension", 1},
          {"epsilon", 1.0},
          {"horizon", 0.1},
          {"network", {{"width", 6}, {"blocks", 1}, {"harmonics", 2}, {"quadrature_nodes", 4}}},
          {"counts", {{"interior", 16}, {"initial", 8}}},
          {"iterations", 0},
          {"seed", 3},
          {"reference", {{"nx", 40}, {"velocity_nodes", 4}}},
          {"evaluation", {{"times", {0.05, 0.1}}}},
          {"output_dir", out.string()}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(APNN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults and round trip") {
    const RunConfig c = parse_run_config(nlohmann::json::object());
    CHECK(c.dimension == 1);
    CHECK(c.network.width == 128);
    CHECK(c.iterations == 20000);
    CHECK(c.weights.lambda1 == 10.0);
    CHECK(c.evaluation.times == std::vector<double>{0.05, 0.1});
    const RunConfig d = parse_run_config({{"dimension", 2}});
    CHECK(d.network.width == 256);
    CHECK(d.iterations == 50000);
    const RunConfig e = parse_run_config(to_json(parse_run_config(quick_config("x"))));
    CHECK(to_json(e) == to_json(parse_run_config(quick_config("x"))));
  }

  TEST_CASE("config errors name the field") {
    auto field_of = [](const nlohmann::json& j) {
      try {
        parse_run_config(j);
      } catch (const ConfigError& e) {
        return e.field();
      }
      return std::string("<none>");
    };
    CHECK(field_of({{"epsilon", -1.0}}) == "epsilon");
    CHECK(field_of({{"network", {{"widht", 3}}}}) == "network.widht");
    CHECK(field_of({{"schedule", {{"gamma", 2.0}}}}) == "schedule.gamma");
    CHECK(field_of({{"phi_convention", "soft"}}) == "phi_convention");
    CHECK(field_of({{"evaluation", {{"times", {0.5}}}}}) == "evaluation.times");
    CHECK(field_of({{"counts", {{"boundary", 4}}}}) == "counts.boundary");
    CHECK(field_of({{"iterations", 1.5}}) == "iterations");
  }

  TEST_CASE("csv round trip and plot schemas") {
    CsvTable t;
    t.header = expected_columns(PlotKind::kLoss);
    t.rows = {{0, 1.0, 0.5, 0.5, 0}, {100, 0.1 / 3, 0.02, 1e-300, 0}};
    const fs::path dir = scratch("csv");
    write(dir / "loss.csv", format_csv(t));
    const CsvTable back = read_csv(dir / "loss.csv");
    CHECK(back.header == t.header);
    CHECK(back.rows[1][1] == t.rows[1][1]);
    const std::string svg = render_svg(back, PlotKind::kLoss);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg == render_svg(read_csv(dir / "loss.csv"), PlotKind::kLoss));
    CHECK_THROWS_AS(render_svg(back, PlotKind::kSweep), ConfigError);
    CHECK_THROWS_AS(read_csv(dir / "absent.csv"), IoError);
    CHECK_THROWS_AS(parse_plot_kind("pie"), ConfigError);
  }

  TEST_CASE("profile plot draws prediction and reference per time") {
    CsvTable t;
    t.header = expected_columns(PlotKind::kProfile);
    for (double time : {0.05, 0.1, 0.2})
      for (int i = 0; i < 10; ++i) t.rows.push_back({i / 10.0, time, 1.0 + time * i, 1.0 + time * i * 0.9});
    CHECK(count(render_svg(t, PlotKind::kProfile), "<polyline") == 6);
  }

  TEST_CASE("untrained run writes every artifact") {
    const fs::path out = scratch("zero");
    const RunConfig cfg = parse_run_config(quick_config(out));
    const RunResult r = run_experiment(cfg);
    write_run_outputs(out, cfg, r);
    for (const char* f : {"config_echo.json", "loss_history.csv", "error_history.csv", "rho_profile.csv",
                          "params.ckpt", "plots/loss.svg", "plots/error.svg", "plots/profile.svg"}) {
      CHECK_MESSAGE(fs::exists(out / f), f);
    }
    const CsvTable err = read_csv(out / "error_history.csv");
    REQUIRE(err.rows.size() == 1);
    CHECK(std::isfinite(err.rows[0][1]));
    CHECK(err.rows[0][1] > 0.0);
    const CsvTable prof = read_csv(out / "rho_profile.csv");
    CHECK(prof.header == std::vector<std::string>{"x", "t", "rho_pred", "rho_ref"});
    CHECK(prof.rows.size() == 80);
    CHECK(prof.rows.front()[1] == 0.05);
    CHECK(prof.rows.back()[1] == 0.1);
    // The recorded error is the untrained network's error on the same grid.
    std::vector<double> pred, ref;
    for (const auto& row : prof.rows) {
      pred.push_back(row[2]);
      ref.push_back(row[3]);
    }
    CHECK(err.rows[0][1] == doctest::Approx(relative_l2(pred, ref)).epsilon(1e-12));
    fs::remove_all(out);
  }

  TEST_CASE("re-running the echoed config reproduces the history") {
    const fs::path out = scratch("echo");
    nlohmann::json j = quick_config(out / "a");
    j["iterations"] = 4;
    j["log_every"] = 2;
    const RunConfig cfg = parse_run_config(j);
    write_run_outputs(cfg.output_dir, cfg, run_experiment(cfg));
    RunConfig again = load_run_config(out / "a" / "config_echo.json");
    again.output_dir = (out / "b").string();
    write_run_outputs(again.output_dir, again, run_experiment(again));
    CHECK(slurp(out / "a" / "loss_history.csv") == slurp(out / "b" / "loss_history.csv"));
    CHECK(slurp(out / "a" / "plots" / "loss.svg") == slurp(out / "b" / "plots" / "loss.svg"));
    fs::remove_all(out);
  }

  TEST_CASE("sweep table") {
    std::vector<std::string> warnings;
    const auto eps = dedupe_epsilons({1e-2, 1.0, 1e-4, 1.0}, [&](const std::string& w) { warnings.push_back(w); });
    CHECK(eps == std::vector<double>{1e-4, 1e-2, 1.0});
    CHECK(warnings.size() == 1);

    const fs::path out = scratch("sweep");
    nlohmann::json j = quick_config(out);
    j["epsilons"] = {1.0, 1e-2, 1e-4};
    j["horizon"] = 0.01;
    j["evaluation"] = {{"times", {0.01}}};
    const RunConfig cfg = parse_run_config(j);
    const SweepResult s = run_sweep(cfg);
    write_sweep_outputs(out, cfg, s);
    const CsvTable t = read_csv(out / "sweep.csv");
    CHECK(t.header == std::vector<std::string>{"epsilon", "rel_l2", "loss", "loss_over_eps", "loss_plus_eps2"});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0][0] < t.rows[1][0]);
    CHECK(t.rows[1][0] < t.rows[2][0]);
    CHECK(t.rows[0][3] == doctest::Approx(t.rows[0][2] / t.rows[0][0]));
    CHECK(fs::exists(out / "plots" / "sweep.svg"));
    CHECK(fs::exists(out / "eps_0.0001" / "loss_history.csv"));
    j["epsilons"] = {0.5, 0.5};
    CHECK_THROWS_AS(run_sweep(parse_run_config(j)), ConfigError);
    fs::remove_all(out);
  }

  TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("exit");
    nlohmann::json bad = quick_config(dir / "out");
    bad["epsilon"] = -1.0;
    write(dir / "bad.json", bad.dump());
    CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out"));

    write(dir / "broken.json", "{\"epsilon\": ");
    CHECK(run_cli("run " + (dir / "broken.json").string()) == 2);
    CHECK(run_cli("run " + (dir / "missing.json").string()) == 4);
    CHECK(run_cli("frobnicate") == 2);

    write(dir / "good.json", quick_config(dir / "out").dump());
    CHECK(run_cli("run " + (dir / "good.json").string()) == 0);
    CHECK(fs::exists(dir / "out" / "plots" / "profile.svg"));

    const std::string loss = (dir / "out" / "loss_history.csv").string();
    CHECK(run_cli("plot " + loss + " --kind loss --out " + (dir / "p1.svg").string()) == 0);
    CHECK(run_cli("plot " + loss + " --kind loss --out " + (dir / "p2.svg").string()) == 0);
    CHECK(slurp(dir / "p1.svg") == slurp(dir / "p2.svg"));
    CHECK(run_cli("plot " + loss + " --kind field --out " + (dir / "p3.svg").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "p3.svg"));
    fs::remove_all(dir);
  }
}
