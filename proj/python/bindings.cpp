#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "apnn/config.hpp"
#include "apnn/errors.hpp"
#include "apnn/experiment.hpp"
#include "apnn/nets.hpp"
#include "apnn/physics.hpp"
#include "apnn/quadrature.hpp"
#include "apnn/reference.hpp"
#include "apnn/sampler.hpp"
#include "apnn/train.hpp"

namespace py = pybind11;
using namespace apnn;

namespace {

// Configs cross the boundary as JSON text; the python side does json.dumps.
RunConfig config_from(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return parse_run_config(j);
}

py::dict table_dict(const CsvTable& t) {
  py::dict d;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    Eigen::VectorXd col(static_cast<Index>(t.rows.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) col[static_cast<Index>(r)] = t.rows[r][c];
    d[py::str(t.header[c])] = col;
  }
  return d;
}

py::dict run_dict(const RunResult& r) {
  py::dict d;
  d["loss"] = table_dict(r.loss);
  d["error"] = table_dict(r.error);
  d["rho"] = table_dict(r.rho);
  d["final_rel_l2"] = r.final_rel_l2;
  d["final_loss"] = r.final_loss;
  return d;
}

py::tuple rule_tuple(const QuadratureRule& q) { return py::make_tuple(q.nodes, q.weights); }

SurrogateOptions options_from(int width, int blocks, int harmonics, double time_scale, bool embedding,
                              int nodes) {
  SurrogateOptions o;
  o.width = width;
  o.blocks = blocks;
  o.harmonics = harmonics;
  o.time_scale = time_scale;
  o.periodic_embedding = embedding;
  o.quadrature_nodes = nodes;
  return o;
}

}  // namespace

PYBIND11_MODULE(_apnn, m) {
  m.doc() = "Parity-decomposed neural surrogates for multiscale radiative transfer";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("gauss_legendre", [](int n, double a, double b) { return rule_tuple(gauss_legendre(n, a, b)); },
        py::arg("n"), py::arg("a") = 0.0, py::arg("b") = 1.0, "Nodes and weights of an n-point rule on [a, b].");
  m.def("quarter_circle_rule", [](int n) { return rule_tuple(normalized_quarter_circle_rule(n)); }, py::arg("n"),
        "Angles on [0, pi/2] with weights summing to one.");
  m.def("fourier_embed", [](std::vector<double> x, int p) { return fourier_embed(x, p); }, py::arg("x"),
        py::arg("harmonics"));
  m.def("relative_l2", [](std::vector<double> c, std::vector<double> r) { return relative_l2(c, r); },
        py::arg("candidate"), py::arg("reference"));
  m.def("lr_at",
        [](double eta0, double gamma, long period, long it) { return lr_at(Schedule{eta0, gamma, period}, it); },
        py::arg("eta0"), py::arg("gamma"), py::arg("period"), py::arg("iteration"));

  m.def(
      "residuals_1d",
      [](const std::array<double, 9>& f, double v, double eps, double avg_v_jx) {
        const ParityFields1D p{f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]};
        return residuals_1d(p, v, ScaleParameter(eps), avg_v_jx);
      },
      py::arg("fields"), py::arg("v"), py::arg("epsilon"), py::arg("avg_v_jx") = 0.0,
      "d1..d3 for fields (rho, rho_t, rho_x, j, j_t, j_x, w, w_t, w_x).");

  m.def(
      "sample_batch",
      [](int dimension, double horizon, int interior, int initial, int boundary, std::uint64_t seed,
         std::uint64_t iteration) {
        SamplerConfig c{dimension, horizon, interior, initial, boundary};
        const CollocationBatch b = sample_batch(c, seed, iteration);
        py::dict d;
        d["t"] = b.t;
        d["x"] = b.x;
        d["y"] = b.y;
        d["x0"] = b.x0;
        d["y0"] = b.y0;
        d["tb"] = b.tb;
        d["sb"] = b.sb;
        return d;
      },
      py::arg("dimension") = 1, py::arg("horizon") = 0.1, py::arg("interior") = 4096, py::arg("initial") = 1024,
      py::arg("boundary") = 0, py::arg("seed") = 0, py::arg("iteration") = 0);

  m.def(
      "reference_1d",
      [](double eps, int nx, std::vector<double> times, int nodes) {
        FdGrid g;
        g.nx = nx;
        g.velocity_nodes = nodes;
        const FdTrajectory1D r = solve_kinetic_fd_1d(eps, g, benchmark_initial_condition_1d(), times);
        Eigen::MatrixXd rho(static_cast<Index>(times.size()), nx);
        for (std::size_t k = 0; k < times.size(); ++k) rho.row(static_cast<Index>(k)) = r.rho[k].transpose();
        return py::make_tuple(r.x, rho);
      },
      py::arg("epsilon"), py::arg("nx") = 200, py::arg("times") = std::vector<double>{0.1},
      py::arg("velocity_nodes") = 16, "Benchmark reference: (x, rho[time, x]).");
  m.def(
      "reference_2d",
      [](double eps, int n, std::vector<double> times, int nodes) {
        FdGrid g;
        g.nx = g.ny = n;
        g.velocity_nodes = nodes;
        const FdTrajectory2D r = solve_kinetic_fd_2d(eps, g, benchmark_initial_condition_2d(), times);
        return py::make_tuple(r.x, r.y, r.rho);
      },
      py::arg("epsilon"), py::arg("n") = 64, py::arg("times") = std::vector<double>{0.1},
      py::arg("velocity_nodes") = 16, "Benchmark reference: (x, y, [rho[x, y] per time]).");

  py::class_<WrappedPoint1D>(m, "WrappedPoint1D")
      .def_readonly("rho", &WrappedPoint1D::rho)
      .def_readonly("rho_t", &WrappedPoint1D::rho_t)
      .def_readonly("rho_x", &WrappedPoint1D::rho_x)
      .def_readonly("j", &WrappedPoint1D::j)
      .def_readonly("j_t", &WrappedPoint1D::j_t)
      .def_readonly("j_x", &WrappedPoint1D::j_x)
      .def_readonly("w", &WrappedPoint1D::w)
      .def_readonly("w_t", &WrappedPoint1D::w_t)
      .def_readonly("w_x", &WrappedPoint1D::w_x);
  py::class_<WrappedPoint2D>(m, "WrappedPoint2D")
      .def_readonly("rho", &WrappedPoint2D::rho)
      .def_readonly("phi", &WrappedPoint2D::phi)
      .def_readonly("j1", &WrappedPoint2D::j1)
      .def_readonly("j2", &WrappedPoint2D::j2)
      .def_readonly("w", &WrappedPoint2D::w);

  py::class_<SurrogateSet1D>(m, "Surrogate1D")
      .def(py::init([](double eps, std::uint64_t seed, int width, int blocks, int harmonics, double ts,
                       bool embedding, int nodes) {
             Xoshiro256 rng(seed, 0);
             return SurrogateSet1D::create(options_from(width, blocks, harmonics, ts, embedding, nodes), eps, rng);
           }),
           py::arg("epsilon"), py::arg("seed") = 0, py::arg("width") = 32, py::arg("blocks") = 4,
           py::arg("harmonics") = 4, py::arg("time_scale") = 1.0, py::arg("periodic_embedding") = true,
           py::arg("quadrature_nodes") = 16)
      .def_readwrite("epsilon", &SurrogateSet1D::epsilon)
      .def("wrap", py::overload_cast<const SurrogateSet1D&, double, double, double>(&wrap_structures_1d),
           py::arg("t"), py::arg("x"), py::arg("v"))
      .def("density",
           [](const SurrogateSet1D& s, std::vector<double> t, std::vector<double> x) { return density_1d(s, t, x); },
           py::arg("t"), py::arg("x"))
      .def(
          "loss",
          [](const SurrogateSet1D& s, int interior, int initial, std::uint64_t seed) {
            SamplerConfig c;
            c.interior = interior;
            c.initial = initial;
            LossOptions lo;
            lo.ic1 = benchmark_initial_condition_1d();
            const LossBreakdown b = loss_total(s, sample_batch(c, seed, 0), lo);
            return py::make_tuple(b.total(), b.residual, b.initial);
          },
          py::arg("interior") = 256, py::arg("initial") = 64, py::arg("seed") = 0,
          "(total, residual, initial) loss on the benchmark initial data.")
      .def("save", [](SurrogateSet1D& s, const std::string& p) { save_checkpoint(p, std::as_const(s).networks()); })
      .def("load", [](SurrogateSet1D& s, const std::string& p) { load_checkpoint(p, s.networks()); });

  py::class_<SurrogateSet2D>(m, "Surrogate2D")
      .def(py::init([](double eps, std::uint64_t seed, int width, int blocks, int harmonics, double ts,
                       bool embedding, int nodes) {
             Xoshiro256 rng(seed, 0);
             return SurrogateSet2D::create(options_from(width, blocks, harmonics, ts, embedding, nodes), eps, rng);
           }),
           py::arg("epsilon"), py::arg("seed") = 0, py::arg("width") = 32, py::arg("blocks") = 4,
           py::arg("harmonics") = 2, py::arg("time_scale") = 1.0, py::arg("periodic_embedding") = true,
           py::arg("quadrature_nodes") = 8)
      .def_readwrite("epsilon", &SurrogateSet2D::epsilon)
      .def("wrap", py::overload_cast<const SurrogateSet2D&, double, double, double, double, double>(&wrap_structures_2d),
           py::arg("t"), py::arg("x"), py::arg("y"), py::arg("xi"), py::arg("eta"))
      .def("density",
           [](const SurrogateSet2D& s, std::vector<double> t, std::vector<double> x, std::vector<double> y) {
             return density_2d(s, t, x, y);
           },
           py::arg("t"), py::arg("x"), py::arg("y"));

  m.def("normalize_config", [](const std::string& text) { return to_json(config_from(text)).dump(); },
        py::arg("config_json"), "Validates a run config and fills in defaults.");
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out_dir) {
        const RunConfig cfg = config_from(text);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
          if (!out_dir.empty()) write_run_outputs(out_dir, cfg, r);
        }
        return run_dict(r);
      },
      py::arg("config_json"), py::arg("out_dir") = "",
      "Trains per the config; writes the usual artifacts when out_dir is set.");
  m.def(
      "run_sweep",
      [](const std::string& text, const std::string& out_dir) {
        const RunConfig cfg = config_from(text);
        SweepResult s;
        {
          py::gil_scoped_release release;
          s = run_sweep(cfg);
          if (!out_dir.empty()) write_sweep_outputs(out_dir, cfg, s);
        }
        return table_dict(s.table);
      },
      py::arg("config_json"), py::arg("out_dir") = "");
}
