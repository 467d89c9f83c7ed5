#pragma once

// Parity-decomposed radiative transfer: residuals of the rho/j/w (1D) and
// rho/phi/j1/j2/w (2D) systems, loss assembly, the maps between f and its
// parity fields, and the analytic diffusion limits.
//
// 1D:  f = rho + eps j + eps^2 w,  <g> = int_0^1 g dv,  <w> = 0
//   d1 = rho_t + <v j_x>
//   d2 = eps^2 j_t + v rho_x + eps^2 v w_x + j
//   d3 = eps^2 w_t + w + v j_x - <v j_x>
// 2D:  (r1+r2)/2 = rho + eps^2 w, phi = r2 - r1, <g> = (2/pi) int g dth,
//   with F = xi (j1+j2)_x + eta (j2-j1)_y,
//   d1 = 2 rho_t + <F>
//   d2 = 2 eps^2 w_t + F - <F> + 2 w
//   d3 = eps^2 phi_t + eps^2 xi (j2-j1)_x + eps^2 eta (j1+j2)_y + phi   (non-stiff)
//      = phi_t + xi (j2-j1)_x + eta (j1+j2)_y + phi / eps^2            (stiff)
//   d4 = eps^2 (j1+j2)_t + (j1+j2) + 2 xi (rho + eps^2 w)_x + eta phi_y
//   d5 = eps^2 (j2-j1)_t + (j2-j1) + xi phi_x + 2 eta (rho + eps^2 w)_y

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apnn/autodiff.hpp"
#include "apnn/nets.hpp"
#include "apnn/quadrature.hpp"
#include "apnn/sampler.hpp"

namespace apnn {

// Knudsen number, eps > 0.
class ScaleParameter {
 public:
  explicit ScaleParameter(double epsilon);
  double value() const { return epsilon_; }
  double squared() const { return epsilon_ * epsilon_; }

 private:
  double epsilon_;
};

struct ParityFields1D {
  double rho = 0, rho_t = 0, rho_x = 0;
  double j = 0, j_t = 0, j_x = 0;
  double w = 0, w_t = 0, w_x = 0;
};

// All partials a 2D residual needs; velocity-dependent fields at one (xi, eta).
struct ParityFields2D {
  double rho = 0, rho_t = 0, rho_x = 0, rho_y = 0;
  double phi = 0, phi_t = 0, phi_x = 0, phi_y = 0;
  double j1 = 0, j1_t = 0, j1_x = 0, j1_y = 0;
  double j2 = 0, j2_t = 0, j2_x = 0, j2_y = 0;
  double w = 0, w_t = 0, w_x = 0, w_y = 0;
};

enum class PhiConvention { kNonStiff, kStiff };

// `avg_v_jx` is <v j_x> at the same (t, x).
std::array<double, 3> residuals_1d(const ParityFields1D& f, double v, ScaleParameter eps,
                                   double avg_v_jx);
// `avg_flux` is <xi (j1+j2)_x + eta (j2-j1)_y> at the same (t, x, y).
std::array<double, 5> residuals_2d(const ParityFields2D& f, double xi, double eta,
                                   ScaleParameter eps, double avg_flux,
                                   PhiConvention conv = PhiConvention::kNonStiff);

// xi (j1+j2)_x + eta (j2-j1)_y, the quantity averaged in d1 and d2.
double flux_divergence_2d(const ParityFields2D& f, double xi, double eta);

struct LossWeights {
  double lambda1 = 10.0;  // initial rho
  double lambda2 = 1.0;   // initial j, w (and phi in 2D)
  double lambda3 = 1.0;   // boundary rho
  double lambda4 = 1.0;   // boundary j, w (and phi in 2D)
};

struct LossBreakdown {
  double residual = 0.0;
  double initial = 0.0;
  double boundary = 0.0;
  // Named sub-terms, already weighted: "d1".."d5", "ic_rho", "ic_j", ...
  std::vector<std::pair<std::string, double>> terms;
  LossWeights lambdas;

  double total() const { return residual + initial + boundary; }
  double term(const std::string& name) const;
};

using InitialCondition1D = std::function<double(double x, double v)>;
using InitialCondition2D = std::function<double(double x, double y, double xi, double eta)>;

// rho_IC and, at velocity v, j_IC and w_IC from f_IC through the parity algebra.
struct InitialPoint1D {
  double rho = 0, j = 0, w = 0;
};
InitialPoint1D initial_fields_1d(const InitialCondition1D& f, ScaleParameter eps,
                                 const QuadratureRule& rule, double x, double v);

// Velocity (xi, eta) with xi, eta > 0; `rule` must be a normalized angular rule.
struct InitialPoint2D {
  double rho = 0, phi = 0, j1 = 0, j2 = 0, w = 0;
};
InitialPoint2D initial_fields_2d(const InitialCondition2D& f, ScaleParameter eps,
                                 const QuadratureRule& rule, double x, double y, double xi,
                                 double eta);

// Parity fields of f tabulated at +/- the rule's nodes.
struct Decomposed1D {
  double rho = 0;
  Eigen::VectorXd j, w;
};
Decomposed1D decompose_f_1d(std::span<const double> f_plus, std::span<const double> f_minus,
                            const QuadratureRule& rule, ScaleParameter eps);

// f at the four sign patterns (xi,eta), (-xi,-eta), (xi,-eta), (-xi,eta) per node.
struct Decomposed2D {
  double rho = 0;
  Eigen::VectorXd phi, j1, j2, w;
};
Decomposed2D decompose_f_2d(std::span<const double> f_pp, std::span<const double> f_mm,
                            std::span<const double> f_pm, std::span<const double> f_mp,
                            const QuadratureRule& rule, ScaleParameter eps);

// (f(+v), f(-v)) = rho + eps^2 w +/- eps j.
std::pair<double, double> reconstruct_f_1d(double rho, double j, double w, ScaleParameter eps);

struct QuadrantValues {
  double pp = 0;  // f(xi, eta)
  double mm = 0;  // f(-xi, -eta)
  double pm = 0;  // f(xi, -eta)
  double mp = 0;  // f(-xi, eta)
};
QuadrantValues reconstruct_f_2d(double rho, double phi, double j1, double j2, double w,
                                ScaleParameter eps);

// mean + sum_k a_k cos(2 pi k x)
struct CosineSeries1D {
  double mean = 0.0;
  std::vector<std::pair<int, double>> modes;  // (k, a_k), k >= 1

  double operator()(double x) const;
  // Projects f on cosines up to max_k; throws UnsupportedInput if f is not
  // reproduced to `tol` (sine content, higher harmonics, non-periodic data).
  static CosineSeries1D fit(const std::function<double(double)>& f, int max_k, double tol = 1e-10);
};

// mean + sum a cos(2 pi kx x) cos(2 pi ky y)
struct CosineSeries2D {
  struct Mode {
    int kx = 0, ky = 0;
    double amplitude = 0.0;
  };
  double mean = 0.0;
  std::vector<Mode> modes;

  double operator()(double x, double y) const;
  static CosineSeries2D fit(const std::function<double(double, double)>& f, int max_k,
                            double tol = 1e-10);
};

// Diffusion limit rho_t = rho_xx / 3 and w = (v^2 - 1/3) rho_xx.
struct LimitPoint {
  double rho = 0, w = 0;
};
LimitPoint limit_solution_1d(double t, double x, const CosineSeries1D& ic, double v);
// Diffusion limit rho_t = (rho_xx + rho_yy) / 2, w = (xi^2-1/2) rho_xx + (eta^2-1/2) rho_yy.
LimitPoint limit_solution_2d(double t, double x, double y, const CosineSeries2D& ic, double xi,
                             double eta);

// Initial data of the experiments: p(x) exp(-v^2/2)/sqrt(2 pi) with
// p = 1 + cos(4 pi x) in 1D and 1 + (cos 2 pi x + cos 2 pi y)/2 in 2D.
InitialCondition1D benchmark_initial_condition_1d();
InitialCondition2D benchmark_initial_condition_2d();

struct LossOptions {
  LossWeights weights;
  InitialCondition1D ic1;
  InitialCondition2D ic2;
  PhiConvention phi_convention = PhiConvention::kNonStiff;
  // Boundary term; only meaningful without the periodic embedding.
  bool boundary = false;
};

// Scalar loss nodes recorded on a tape, ready for backward().
struct LossGraph {
  ad::Var total;
  ad::Var residual;
  ad::Var initial;
  ad::Var boundary;  // invalid when the boundary term is off
  std::vector<std::pair<std::string, ad::Var>> terms;
};

LossGraph build_loss_1d(ad::Tape& tape, const SurrogateSet1D& set, const CollocationBatch& batch,
                        const LossOptions& opts, GradSinks grads = {});
LossGraph build_loss_2d(ad::Tape& tape, const SurrogateSet2D& set, const CollocationBatch& batch,
                        const LossOptions& opts, GradSinks grads = {});

LossBreakdown loss_total(const SurrogateSet1D& set, const CollocationBatch& batch,
                         const LossOptions& opts);
LossBreakdown loss_total(const SurrogateSet2D& set, const CollocationBatch& batch,
                         const LossOptions& opts);

// Residual part of the 1D loss with every eps^2 term dropped: the loss of the
// limiting equations that R_residual approaches as eps -> 0.
double residual_limit_loss_1d(const SurrogateSet1D& set, const CollocationBatch& batch);

LossBreakdown read_breakdown(const ad::Tape& tape, const LossGraph& g, const LossWeights& w);

}  // namespace apnn
