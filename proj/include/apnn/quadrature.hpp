#pragma once

#include <Eigen/Dense>

#include <span>

namespace apnn {

// Nodes and positive weights of an interpolatory rule on [a, b]; nodes are
// strictly increasing.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  double a = 0.0;
  double b = 1.0;

  Eigen::Index size() const { return nodes.size(); }
};

// n-point Gauss-Legendre rule mapped to [a, b]; exact for polynomials of
// degree <= 2n-1.
QuadratureRule gauss_legendre(int n, double a, double b);

// Velocity average <g> = int_0^1 g dv over the half slab.
double average_1d(std::span<const double> values, const QuadratureRule& rule);

// Velocity average over the positive quarter of the unit circle,
// <g> = (2/pi) int_0^{pi/2} g(cos th, sin th) dth. `rule` lives on angles.
double average_2d(std::span<const double> values, const QuadratureRule& rule);

// Angular rule on [0, pi/2] with the (2/pi) normalization folded into the
// weights, so plain weighted sums are quarter-circle averages.
QuadratureRule normalized_quarter_circle_rule(int n);

}  // namespace apnn
