#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "apnn/errors.hpp"
#include "apnn/reference.hpp"

using namespace apnn;

namespace {

constexpr double kPi = std::numbers::pi;

CosineSeries1D benchmark_series_1d() {
  const QuadratureRule rule = gauss_legendre(16, 0.0, 1.0);
  const auto ic = benchmark_initial_condition_1d();
  return CosineSeries1D::fit([&](double x) { return initial_fields_1d(ic, ScaleParameter(1.0), rule, x, 0.5).rho; },
                             8);
}

}  // namespace

TEST_SUITE("reference") {
  TEST_CASE("relative l2") {
    const std::vector<double> r{1.0, -2.0, 3.0};
    CHECK(relative_l2(r, r) == 0.0);
    const std::vector<double> c{1.01, -2.02, 3.03};
    CHECK(relative_l2(c, r) == doctest::Approx(0.01).epsilon(1e-12));
    const int n = 25;
    std::vector<double> ones(n, 1.0), bumped = ones;
    bumped[7] += 1.0;
    CHECK(relative_l2(bumped, ones) == doctest::Approx(1.0 / std::sqrt(double(n))).epsilon(1e-15));
    CHECK_THROWS_AS(relative_l2(r, std::vector<double>(3, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(relative_l2(r, ones), InvalidArgument);
  }

  TEST_CASE("homogeneous data stays put") {
    auto flat1 = [](double, double v) { return 0.7 + 0.2 * v * v; };
    FdGrid g;
    g.nx = 40;
    const double times[] = {0.0, 0.05};
    const FdTrajectory1D a = solve_kinetic_fd_1d(0.5, g, flat1, times);
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(a.rho[1][i] - a.rho[0][i]) <= 1e-13);
    auto flat2 = [](double, double, double xi, double) { return 1.0 + 0.1 * xi * xi; };
    FdGrid g2;
    g2.nx = 12;
    g2.ny = 12;
    g2.velocity_nodes = 8;
    const FdTrajectory2D b = solve_kinetic_fd_2d(0.5, g2, flat2, times);
    CHECK((b.rho[1] - b.rho[0]).cwiseAbs().maxCoeff() <= 1e-13);
  }

  TEST_CASE("step size guard") {
    FdGrid g;
    g.nx = 50;
    const double bound = max_stable_dt(1.0, g, 1);
    CHECK(bound == doctest::Approx(0.4 / 50));
    CHECK(max_stable_dt(1e-8, g, 1) == doctest::Approx(0.2 / 2500).epsilon(1e-6));
    g.dt = 1.5 * bound;
    const double t[] = {0.1};
    CHECK_THROWS_AS(solve_kinetic_fd_1d(1.0, g, benchmark_initial_condition_1d(), t), ConfigError);
    g.dt = 0.0;
    const double backwards[] = {0.1, 0.05};
    CHECK_THROWS_AS(solve_kinetic_fd_1d(1.0, g, benchmark_initial_condition_1d(), backwards), ConfigError);
    CHECK_THROWS_AS(solve_kinetic_fd_1d(-1.0, g, benchmark_initial_condition_1d(), t), ConfigError);
  }

  TEST_CASE("output times are hit exactly and mass is conserved") {
    FdGrid g;
    g.nx = 100;
    const double times[] = {0.0, 0.0123, 0.05};
    const FdTrajectory1D a = solve_kinetic_fd_1d(0.3, g, benchmark_initial_condition_1d(), times);
    REQUIRE(a.rho.size() == 3);
    CHECK(a.times[1] == 0.0123);
    const double m0 = a.rho[0].sum();
    CHECK(std::abs(a.rho[2].sum() - m0) <= 1e-10 * m0);
  }

  TEST_CASE("diffusive regime matches the limit and is asymptotic preserving") {
    FdGrid g;
    g.nx = 200;
    const double times[] = {0.01};
    const auto ic = benchmark_initial_condition_1d();
    const FdTrajectory1D a = solve_kinetic_fd_1d(1e-4, g, ic, times);
    const FdTrajectory1D b = solve_kinetic_fd_1d(1e-6, g, ic, times);
    const CosineSeries1D s = benchmark_series_1d();
    std::vector<double> lim(g.nx);
    for (int i = 0; i < g.nx; ++i) lim[i] = limit_solution_1d(0.01, a.x[i], s, 0.5).rho;
    CHECK(relative_l2({a.rho[0].data(), size_t(g.nx)}, lim) <= 1e-2);
    CHECK(relative_l2({a.rho[0].data(), size_t(g.nx)}, {b.rho[0].data(), size_t(g.nx)}) <= 1e-3);
  }

  TEST_CASE("kinetic regime converges under refinement") {
    const double times[] = {0.1};
    const auto ic = benchmark_initial_condition_1d();
    FdGrid fine;
    fine.nx = 1600;
    const FdTrajectory1D f = solve_kinetic_fd_1d(1.0, fine, ic, times);
    double prev = 0.0;
    for (int n : {100, 200}) {
      FdGrid g;
      g.nx = n;
      const FdTrajectory1D c = solve_kinetic_fd_1d(1.0, g, ic, times);
      std::vector<double> sub(n);
      for (int i = 0; i < n; ++i) sub[i] = f.rho[0][i * (1600 / n)];
      const double e = relative_l2({c.rho[0].data(), size_t(n)}, sub);
      if (prev > 0.0) CHECK(prev / e >= 1.8);
      prev = e;
    }
  }

  TEST_CASE("2D axis exchange commutes with the solve") {
    auto f = [](double x, double y, double a, double b) {
      return 1 + 0.3 * std::cos(2 * kPi * x) + 0.2 * std::sin(4 * kPi * y) + 0.1 * a - 0.05 * a * b;
    };
    auto ft = [&](double x, double y, double a, double b) { return f(y, x, b, a); };
    FdGrid g;
    g.nx = 16;
    g.ny = 16;
    g.velocity_nodes = 8;
    const double t[] = {0.05};
    const FdTrajectory2D a = solve_kinetic_fd_2d(0.5, g, f, t), b = solve_kinetic_fd_2d(0.5, g, ft, t);
    CHECK((a.rho[0] - b.rho[0].transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    const FdTrajectory2D m = solve_kinetic_fd_2d(0.5, g, f, std::vector<double>{0.0, 0.05});
    CHECK(std::abs(m.rho[1].sum() - m.rho[0].sum()) <= 1e-10 * m.rho[0].sum());
  }
}
