#include "apnn/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "apnn/errors.hpp"

namespace apnn {

namespace {

// P_n(z) and P_n'(z) by the three-term recurrence.
std::pair<double, double> legendre(int n, double z) {
  double prev = 1.0, cur = z;
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * z * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  if (n == 1) prev = 1.0;
  return {cur, n * (z * cur - prev) / (z * z - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  if (!(a < b)) throw InvalidArgument("gauss_legendre: need a < b");

  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, z);
      const double step = p / dp;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double dp = legendre(n, z).second;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;

  QuadratureRule rule;
  rule.a = a;
  rule.b = b;
  const double mid = 0.5 * (a + b), half_len = 0.5 * (b - a);
  rule.nodes = (mid + half_len * x.array()).matrix();
  rule.weights = half_len * w;
  return rule;
}

namespace {
double weighted_sum(std::span<const double> values, const QuadratureRule& rule, const char* who) {
  if (static_cast<Eigen::Index>(values.size()) != rule.size()) {
    throw InvalidArgument(std::string(who) + ": " + std::to_string(values.size()) +
                          " values for " + std::to_string(rule.size()) + " nodes");
  }
  double s = 0.0;
  for (Eigen::Index q = 0; q < rule.size(); ++q) s += rule.weights[q] * values[q];
  return s;
}
}  // namespace

double average_1d(std::span<const double> values, const QuadratureRule& rule) {
  return weighted_sum(values, rule, "average_1d");
}

double average_2d(std::span<const double> values, const QuadratureRule& rule) {
  return (2.0 / std::numbers::pi) * weighted_sum(values, rule, "average_2d");
}

QuadratureRule normalized_quarter_circle_rule(int n) {
  QuadratureRule r = gauss_legendre(n, 0.0, std::numbers::pi / 2);
  r.weights *= 2.0 / std::numbers::pi;
  return r;
}

}  // namespace apnn
