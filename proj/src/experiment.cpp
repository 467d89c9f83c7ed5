#include "apnn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "apnn/errors.hpp"
#include "apnn/reference.hpp"

namespace apnn {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << contents;
    os.flush();
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

ReferenceSamples reference_samples(const RunConfig& cfg) {
  ReferenceSamples s;
  const auto& times = cfg.evaluation.times;
  const FdGrid& g = cfg.reference.grid;
  s.analytic = cfg.epsilon <= cfg.reference.limit_oracle_below;
  if (cfg.dimension == 1) {
    const auto ic = benchmark_initial_condition_1d();
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(g.nx, 0.0, (g.nx - 1.0) / g.nx);
    std::vector<Eigen::VectorXd> rho;
    if (s.analytic) {
      const QuadratureRule rule = gauss_legendre(g.velocity_nodes, 0.0, 1.0);
      const ScaleParameter unit(1.0);
      const CosineSeries1D series = CosineSeries1D::fit(
          [&](double xx) { return initial_fields_1d(ic, unit, rule, xx, rule.nodes[0]).rho; }, 16);
      for (double t : times) {
        Eigen::VectorXd r(g.nx);
        for (int i = 0; i < g.nx; ++i) r[i] = limit_solution_1d(t, x[i], series, 0.0).rho;
        rho.push_back(r);
      }
    } else {
      rho = solve_kinetic_fd_1d(cfg.epsilon, g, ic, times).rho;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      for (int i = 0; i < g.nx; ++i) {
        s.t.push_back(times[k]);
        s.x.push_back(x[i]);
        s.rho.push_back(rho[k][i]);
      }
    }
  } else {
    const auto ic = benchmark_initial_condition_2d();
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(g.nx, 0.0, (g.nx - 1.0) / g.nx);
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(g.ny, 0.0, (g.ny - 1.0) / g.ny);
    std::vector<Eigen::MatrixXd> rho;
    if (s.analytic) {
      const QuadratureRule rule = normalized_quarter_circle_rule(g.velocity_nodes);
      const ScaleParameter unit(1.0);
      const double a = std::cos(rule.nodes[0]), b = std::sin(rule.nodes[0]);
      const CosineSeries2D series = CosineSeries2D::fit(
          [&](double xx, double yy) { return initial_fields_2d(ic, unit, rule, xx, yy, a, b).rho; }, 8);
      for (double t : times) {
        Eigen::MatrixXd r(g.nx, g.ny);
        for (int l = 0; l < g.ny; ++l)
          for (int i = 0; i < g.nx; ++i) r(i, l) = limit_solution_2d(t, x[i], y[l], series, a, b).rho;
        rho.push_back(r);
      }
    } else {
      rho = solve_kinetic_fd_2d(cfg.epsilon, g, ic, times).rho;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      for (int l = 0; l < g.ny; ++l) {
        for (int i = 0; i < g.nx; ++i) {
          s.t.push_back(times[k]);
          s.x.push_back(x[i]);
          s.y.push_back(y[l]);
          s.rho.push_back(rho[k](i, l));
        }
      }
    }
  }
  return s;
}

namespace {

template <class Set>
Eigen::VectorXd predict(const Set& set, const ReferenceSamples& ref) {
  if constexpr (std::is_same_v<Set, SurrogateSet1D>) {
    return density_1d(set, ref.t, ref.x);
  } else {
    return density_2d(set, ref.t, ref.x, ref.y);
  }
}

template <class Set>
RunResult run_with(Set set, const RunConfig& cfg, const LogFn& log) {
  const ReferenceSamples ref = reference_samples(cfg);
  auto error = [&](const Set& s) {
    const Eigen::VectorXd p = predict(s, ref);
    return relative_l2({p.data(), static_cast<std::size_t>(p.size())}, ref.rho);
  };
  const TrainConfig tc = cfg.train_config();

  RunResult r;
  r.history = train(set, tc, error, log);
  if (r.history.rows.empty()) {
    // Untrained network: one row with the loss of the first batch.
    LossOptions lo;
    lo.weights = tc.weights;
    lo.phi_convention = tc.phi_convention;
    lo.boundary = tc.boundary_loss;
    lo.ic1 = benchmark_initial_condition_1d();
    lo.ic2 = benchmark_initial_condition_2d();
    const LossBreakdown br = loss_total(set, sample_batch(tc.sampler, tc.seed, 0), lo);
    HistoryRow row;
    row.total = br.total();
    row.residual = br.residual;
    row.initial = br.initial;
    row.boundary = br.boundary;
    row.terms = br.terms;
    row.rel_l2 = error(set);
    row.lr = lr_at(tc.schedule, 0);
    r.history.rows.push_back(row);
    if (log) log(row);
  }

  r.loss.header = expected_columns(PlotKind::kLoss);
  r.error.header = expected_columns(PlotKind::kError);
  for (const HistoryRow& h : r.history.rows) {
    r.loss.rows.push_back({double(h.iter), h.total, h.residual, h.initial, h.boundary});
    r.error.rows.push_back({double(h.iter), h.rel_l2});
  }
  r.final_rel_l2 = r.history.rows.back().rel_l2;
  r.final_loss = r.history.rows.back().total;

  const Eigen::VectorXd pred = predict(set, ref);
  if (cfg.dimension == 1) {
    r.rho.header = expected_columns(PlotKind::kProfile);
    for (std::size_t i = 0; i < ref.rho.size(); ++i) r.rho.rows.push_back({ref.x[i], ref.t[i], pred[i], ref.rho[i]});
  } else {
    r.rho.header = expected_columns(PlotKind::kField);
    for (std::size_t i = 0; i < ref.rho.size(); ++i) {
      r.rho.rows.push_back({ref.x[i], ref.y[i], ref.t[i], pred[i], ref.rho[i]});
    }
  }
  for (const auto& [name, p] : std::as_const(set).networks()) r.params.emplace_back(name, *p);
  return r;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  const TrainConfig tc = cfg.train_config();
  if (cfg.dimension == 1) return run_with(initial_surrogates_1d(tc), cfg, log);
  return run_with(initial_surrogates_2d(tc), cfg, log);
}

void write_run_outputs(const fs::path& dir, const RunConfig& cfg, const RunResult& r) {
  std::error_code ec;
  fs::create_directories(dir / "plots", ec);
  if (ec) throw IoError("cannot create " + (dir / "plots").string() + ": " + ec.message());
  write_file_atomic(dir / "config_echo.json", to_json(cfg).dump(2) + "\n");
  write_file_atomic(dir / "loss_history.csv", format_csv(r.loss));
  write_file_atomic(dir / "error_history.csv", format_csv(r.error));
  const bool one_d = cfg.dimension == 1;
  write_file_atomic(dir / (one_d ? "rho_profile.csv" : "rho_field.csv"), format_csv(r.rho));
  std::vector<std::pair<std::string, const NetworkParams*>> nets;
  for (const auto& [name, p] : r.params) nets.emplace_back(name, &p);
  save_checkpoint((dir / "params.ckpt").string(), nets);
  write_file_atomic(dir / "plots" / "loss.svg", render_svg(r.loss, PlotKind::kLoss));
  write_file_atomic(dir / "plots" / "error.svg", render_svg(r.error, PlotKind::kError));
  if (one_d) {
    write_file_atomic(dir / "plots" / "profile.svg", render_svg(r.rho, PlotKind::kProfile));
  } else {
    write_file_atomic(dir / "plots" / "field.svg", render_svg(r.rho, PlotKind::kField));
  }
}

std::vector<double> dedupe_epsilons(const std::vector<double>& eps,
                                    const std::function<void(const std::string&)>& warn) {
  std::vector<double> out;
  for (double e : eps) {
    if (std::find(out.begin(), out.end(), e) != out.end()) {
      if (warn) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", e);
        warn(std::string("duplicate epsilon ") + buf + " ignored");
      }
      continue;
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

RunConfig sweep_member(const RunConfig& cfg, double eps) {
  RunConfig c = cfg;
  c.epsilon = eps;
  c.epsilons.clear();
  char buf[64];
  std::snprintf(buf, sizeof buf, "eps_%g", eps);
  c.output_dir = (fs::path(cfg.output_dir) / buf).string();
  return c;
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg, const std::function<void(const std::string&)>& warn,
                      const LogFn& log) {
  const std::vector<double> eps = dedupe_epsilons(cfg.epsilons, warn);
  if (eps.size() < 2) throw ConfigError("epsilons", "a sweep needs at least two distinct values");
  SweepResult s;
  s.table.header = expected_columns(PlotKind::kSweep);
  for (double e : eps) {
    RunResult r = run_experiment(sweep_member(cfg, e), log);
    s.table.rows.push_back({e, r.final_rel_l2, r.final_loss, r.final_loss / e, r.final_loss + e * e});
    s.runs.push_back(std::move(r));
  }
  return s;
}

void write_sweep_outputs(const fs::path& dir, const RunConfig& cfg, const SweepResult& s) {
  std::error_code ec;
  fs::create_directories(dir / "plots", ec);
  if (ec) throw IoError("cannot create " + (dir / "plots").string() + ": " + ec.message());
  write_file_atomic(dir / "config_echo.json", to_json(cfg).dump(2) + "\n");
  write_file_atomic(dir / "sweep.csv", format_csv(s.table));
  write_file_atomic(dir / "plots" / "sweep.svg", render_svg(s.table, PlotKind::kSweep));
  for (std::size_t k = 0; k < s.runs.size(); ++k) {
    const RunConfig member = sweep_member(cfg, s.table.rows[k][0]);
    write_run_outputs(fs::path(dir) / fs::path(member.output_dir).filename(), member, s.runs[k]);
  }
}

}  // namespace apnn
