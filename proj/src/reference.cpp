#include "apnn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "apnn/errors.hpp"
#include "apnn/quadrature.hpp"

namespace apnn {

namespace {

double relaxation_phi(double eps) { return std::min(1.0, 1.0 / (eps * eps)); }

void check_grid(double eps, const FdGrid& g, int dimension) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("epsilon", "must be positive");
  if (g.nx < 3) throw ConfigError("reference.nx", "needs at least 3 cells");
  if (dimension == 2 && g.ny < 3) throw ConfigError("reference.ny", "needs at least 3 cells");
  if (g.velocity_nodes < 1) throw ConfigError("reference.velocity_nodes", "must be >= 1");
  if (!(g.cfl > 0.0 && g.cfl <= 1.0)) throw ConfigError("reference.cfl", "must lie in (0, 1]");
  if (!(g.diffusive > 0.0)) throw ConfigError("reference.diffusive", "must be positive");
  if (g.dt < 0.0) throw ConfigError("reference.dt", "must be >= 0");
  const double bound = max_stable_dt(eps, g, dimension);
  if (g.dt > bound * (1.0 + 1e-12)) {
    throw ConfigError("reference.dt", "time step " + std::to_string(g.dt) +
                                          " exceeds the stability bound " + std::to_string(bound));
  }
}

std::vector<double> checked_times(std::span<const double> times) {
  std::vector<double> out(times.begin(), times.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(out[k] >= 0.0) || !std::isfinite(out[k]) || (k > 0 && out[k] < out[k - 1])) {
      throw ConfigError("output_times", "must be finite, >= 0 and nondecreasing");
    }
  }
  return out;
}

// Upwind update of one periodic line of (r, j) moving with speed a.
struct LineTransport {
  std::vector<double> fr, fj;

  void operator()(double* r, double* j, Index n, Index stride, double a, double phi, double lam) {
    fr.resize(n);
    fj.resize(n);
    const double c = std::sqrt(phi);
    const double visc = 0.5 * std::abs(a) * c;
    for (Index i = 0; i < n; ++i) {
      const Index k = (i + 1 == n) ? 0 : i + 1;
      const double rl = r[i * stride], rr = r[k * stride];
      const double jl = j[i * stride], jr = j[k * stride];
      fr[i] = 0.5 * a * (jl + jr) - visc * (rr - rl);
      fj[i] = 0.5 * phi * a * (rl + rr) - visc * (jr - jl);
    }
    for (Index i = 0; i < n; ++i) {
      const Index p = (i == 0) ? n - 1 : i - 1;
      r[i * stride] -= lam * (fr[i] - fr[p]);
      j[i * stride] -= lam * (fj[i] - fj[p]);
    }
  }
};

// Steps from t to each output time; `step(h)` advances the state by h.
template <class Step, class Record>
long march(std::span<const double> times, double dt, Step&& step, Record&& record) {
  double t = 0.0;
  long steps = 0;
  for (double target : times) {
    while (t < target) {
      double h = std::min(dt, target - t);
      const bool last = target - (t + h) < 1e-12 * std::max(1.0, target);
      if (last) h = target - t;
      step(h);
      t = last ? target : t + h;
      ++steps;
    }
    t = target;
    record();
  }
  return steps;
}

}  // namespace

double max_stable_dt(double eps, const FdGrid& grid, int dimension) {
  double dx = 1.0 / grid.nx;
  if (dimension == 2) dx = std::min(dx, 1.0 / grid.ny);
  const double hyperbolic = grid.cfl * dx;
  const double e2 = eps * eps;
  const double kappa = 1.0 - e2 * relaxation_phi(eps);
  if (kappa <= 0.0) return hyperbolic;
  const double d = grid.diffusive * dx * dx;
  const double parabolic = (d + std::sqrt(d * d + 4.0 * kappa * d * e2)) / (2.0 * kappa);
  return std::min(hyperbolic, parabolic);
}

FdTrajectory1D solve_kinetic_fd_1d(double eps, const FdGrid& grid, const InitialCondition1D& f0,
                                   std::span<const double> output_times) {
  check_grid(eps, grid, 1);
  if (!f0) throw ConfigError("initial_condition", "missing");
  const std::vector<double> times = checked_times(output_times);
  const int n = grid.nx;
  const double dx = 1.0 / n;
  const QuadratureRule rule = gauss_legendre(grid.velocity_nodes, 0.0, 1.0);
  const Index q = rule.size();
  const double e2 = eps * eps;
  const double phi = relaxation_phi(eps);
  const double kappa = 1.0 - e2 * phi;

  FdTrajectory1D out;
  out.x = Eigen::VectorXd::LinSpaced(n, 0.0, dx * (n - 1));
  out.dt = grid.dt > 0.0 ? grid.dt : max_stable_dt(eps, grid, 1);
  Eigen::MatrixXd r(n, q), j(n, q);
  for (Index m = 0; m < q; ++m) {
    const double v = rule.nodes[m];
    for (int i = 0; i < n; ++i) {
      const double fp = f0(out.x[i], v), fm = f0(out.x[i], -v);
      r(i, m) = 0.5 * (fp + fm);
      j(i, m) = (fp - fm) / (2.0 * eps);
    }
  }

  LineTransport transport;
  Eigen::VectorXd dr(n);
  auto step = [&](double h) {
    for (Index m = 0; m < q; ++m) {
      transport(r.col(m).data(), j.col(m).data(), n, 1, rule.nodes[m], phi, h / dx);
    }
    const Eigen::VectorXd rho = r * rule.weights;
    r = ((e2 * r).colwise() + h * rho) / (e2 + h);
    for (Index m = 0; m < q; ++m) {
      for (int i = 0; i < n; ++i) {
        dr[i] = (r((i + 1) % n, m) - r((i + n - 1) % n, m)) / (2.0 * dx);
      }
      j.col(m) = (e2 * j.col(m) - (h * kappa * rule.nodes[m]) * dr) / (e2 + h);
    }
  };
  auto record = [&] { out.rho.push_back(r * rule.weights); };
  out.steps = march(times, out.dt, step, record);
  out.times = times;
  out.r = std::move(r);
  out.j = std::move(j);
  return out;
}

namespace {

// One (r, j) pair per angular node, each an nx x ny field.
struct Pair2D {
  std::vector<Eigen::MatrixXd> r, j;
};

}  // namespace

FdTrajectory2D solve_kinetic_fd_2d(double eps, const FdGrid& grid, const InitialCondition2D& f0,
                                   std::span<const double> output_times) {
  check_grid(eps, grid, 2);
  if (!f0) throw ConfigError("initial_condition", "missing");
  const std::vector<double> times = checked_times(output_times);
  const int nx = grid.nx, ny = grid.ny;
  const double dx = 1.0 / nx, dy = 1.0 / ny;
  const QuadratureRule rule = normalized_quarter_circle_rule(grid.velocity_nodes);
  const Index q = rule.size();
  const Eigen::VectorXd xi = rule.nodes.array().cos(), eta = rule.nodes.array().sin();
  const double e2 = eps * eps;
  const double phi = relaxation_phi(eps);
  const double kappa = 1.0 - e2 * phi;

  FdTrajectory2D out;
  out.x = Eigen::VectorXd::LinSpaced(nx, 0.0, dx * (nx - 1));
  out.y = Eigen::VectorXd::LinSpaced(ny, 0.0, dy * (ny - 1));
  out.dt = grid.dt > 0.0 ? grid.dt : max_stable_dt(eps, grid, 2);

  // p1: velocity (xi, -eta); p2: velocity (xi, eta).
  Pair2D p1, p2;
  for (Pair2D* p : {&p1, &p2}) {
    p->r.assign(q, Eigen::MatrixXd(nx, ny));
    p->j.assign(q, Eigen::MatrixXd(nx, ny));
  }
  for (Index m = 0; m < q; ++m) {
    for (int l = 0; l < ny; ++l) {
      for (int i = 0; i < nx; ++i) {
        const double x = out.x[i], y = out.y[l];
        const double fpp = f0(x, y, xi[m], eta[m]), fmm = f0(x, y, -xi[m], -eta[m]);
        const double fpm = f0(x, y, xi[m], -eta[m]), fmp = f0(x, y, -xi[m], eta[m]);
        p2.r[m](i, l) = 0.5 * (fpp + fmm);
        p2.j[m](i, l) = (fpp - fmm) / (2.0 * eps);
        p1.r[m](i, l) = 0.5 * (fpm + fmp);
        p1.j[m](i, l) = (fpm - fmp) / (2.0 * eps);
      }
    }
  }

  LineTransport transport;
  auto sweep_x = [&](Pair2D& p, double h) {
    for (Index m = 0; m < q; ++m) {
      for (int l = 0; l < ny; ++l) {
        transport(p.r[m].col(l).data(), p.j[m].col(l).data(), nx, 1, xi[m], phi, h / dx);
      }
    }
  };
  auto sweep_y = [&](Pair2D& p, double sign, double h) {
    for (Index m = 0; m < q; ++m) {
      for (int i = 0; i < nx; ++i) {
        transport(p.r[m].data() + i, p.j[m].data() + i, ny, nx, sign * eta[m], phi, h / dy);
      }
    }
  };
  auto density = [&] {
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(nx, ny);
    for (Index m = 0; m < q; ++m) rho += (0.5 * rule.weights[m]) * (p1.r[m] + p2.r[m]);
    return rho;
  };
  auto relax = [&](Pair2D& p, double sign, const Eigen::MatrixXd& rho, double h) {
    for (Index m = 0; m < q; ++m) {
      Eigen::MatrixXd& r = p.r[m];
      Eigen::MatrixXd& j = p.j[m];
      r = (e2 * r + h * rho) / (e2 + h);
      const double a = xi[m], b = sign * eta[m];
      for (int l = 0; l < ny; ++l) {
        const int lp = (l + 1) % ny, lm = (l + ny - 1) % ny;
        for (int i = 0; i < nx; ++i) {
          const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
          const double grad = a * (r(ip, l) - r(im, l)) / (2.0 * dx) + b * (r(i, lp) - r(i, lm)) / (2.0 * dy);
          j(i, l) = (e2 * j(i, l) - h * kappa * grad) / (e2 + h);
        }
      }
    }
  };
  auto average = [](Pair2D& a, const Pair2D& b) {
    for (std::size_t m = 0; m < a.r.size(); ++m) {
      a.r[m] = 0.5 * (a.r[m] + b.r[m]);
      a.j[m] = 0.5 * (a.j[m] + b.j[m]);
    }
  };
  auto step = [&](double h) {
    for (auto [p, sign] : {std::pair{&p1, -1.0}, std::pair{&p2, 1.0}}) {
      Pair2D yx = *p;
      sweep_x(*p, h);
      sweep_y(*p, sign, h);
      sweep_y(yx, sign, h);
      sweep_x(yx, h);
      average(*p, yx);
    }
    const Eigen::MatrixXd rho = density();
    relax(p1, -1.0, rho, h);
    relax(p2, 1.0, rho, h);
  };
  auto record = [&] { out.rho.push_back(density()); };
  out.steps = march(times, out.dt, step, record);
  out.times = times;
  return out;
}

double relative_l2(std::span<const double> candidate, std::span<const double> reference) {
  if (candidate.size() != reference.size()) {
    throw InvalidArgument("relative_l2: sample counts differ");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = candidate[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (!(den > 0.0)) throw InvalidArgument("relative_l2: reference has zero norm");
  return std::sqrt(num / den);
}

}  // namespace apnn
