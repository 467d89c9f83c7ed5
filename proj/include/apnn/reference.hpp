#pragma once

// Finite-difference reference for the kinetic equation in parity form, and
// the relative l2 error metric.
//
// Diffusive-relaxation splitting on (r, j), r = even part, j = odd part / eps:
//   transport   r_t + a j_x = 0,  j_t + phi a r_x = 0,  phi = min(1, 1/eps^2),
//               first-order upwinding in r +/- j / sqrt(phi) (speeds +/- a sqrt(phi));
//   relaxation  r' = (eps^2 r + dt rho) / (eps^2 + dt),
//               j' = (eps^2 j - dt (1 - eps^2 phi) a D r') / (eps^2 + dt),
//               D the central difference, solved pointwise.
// In 2D the pairs (r1, j1) and (r2, j2) move with velocities (xi, -eta) and
// (xi, eta); transport is split by axis and symmetrized as (XY + YX) / 2.
// Nodes sit at x_i = i / nx on the periodic unit interval.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "apnn/physics.hpp"

namespace apnn {

struct FdGrid {
  int nx = 200;
  int ny = 64;              // used in 2D only
  int velocity_nodes = 16;  // Gauss-Legendre nodes on [0,1] or [0, pi/2]
  double dt = 0.0;          // 0 selects the largest stable step
  double cfl = 0.4;         // dt <= cfl * dx
  double diffusive = 0.2;   // parabolic bound, see max_stable_dt
};

// Largest step allowed on `grid` at `eps`: min(cfl dx, dt_d) where dt_d solves
// dt^2 (1 - eps^2 phi) / (eps^2 + dt) = diffusive dx^2 (no bound when the
// left side vanishes). As eps -> 0 this is diffusive * dx^2.
double max_stable_dt(double eps, const FdGrid& grid, int dimension);

struct FdTrajectory1D {
  Eigen::VectorXd x;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> rho;  // rho[k](i) at x_i, times[k]
  Eigen::MatrixXd r, j;              // final state, cell x node
  double dt = 0.0;
  long steps = 0;
};

struct FdTrajectory2D {
  Eigen::VectorXd x, y;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> rho;  // rho[k](i, l) at (x_i, y_l), times[k]
  double dt = 0.0;
  long steps = 0;
};

// Output times must be nondecreasing and >= 0; each is reached exactly by
// shortening the step before it. Throws ConfigError if grid.dt exceeds
// max_stable_dt or the grid is malformed.
FdTrajectory1D solve_kinetic_fd_1d(double eps, const FdGrid& grid, const InitialCondition1D& f0,
                                   std::span<const double> output_times);
FdTrajectory2D solve_kinetic_fd_2d(double eps, const FdGrid& grid, const InitialCondition2D& f0,
                                   std::span<const double> output_times);

// sqrt(sum |c - r|^2 / sum |r|^2). Throws InvalidArgument on size mismatch or
// an all-zero reference.
double relative_l2(std::span<const double> candidate, std::span<const double> reference);

}  // namespace apnn
