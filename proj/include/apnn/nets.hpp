#pragma once

// AdaptiveResNet sub-networks, periodic Fourier input features, and the
// wrappers that give the raw network outputs their parity, zero-mean and
// positivity structure.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apnn/autodiff.hpp"
#include "apnn/quadrature.hpp"
#include "apnn/random.hpp"

namespace apnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kBetaMin = 0.05;
inline constexpr double kBetaMax = 1.0;
inline constexpr double kBetaInit = 0.9;

struct Architecture {
  int input_dim = 1;
  int width = 128;
  int blocks = 4;
  int output_dim = 1;
};

// All parameters of one AdaptiveResNet in a single flat vector:
//   W_in, b_in, then per block (W1, b1, W2, b2, beta), then W_out, b_out.
class NetworkParams {
 public:
  struct Slot {
    Index offset = 0;
    Index rows = 0;
    Index cols = 1;
  };

  NetworkParams() = default;
  // Zero weights and biases, every beta at its initial value.
  explicit NetworkParams(Architecture arch);

  const Architecture& arch() const { return arch_; }
  Index size() const { return values_.size(); }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  Slot input_weight() const;
  Slot input_bias() const;
  Slot block_w1(int l) const;
  Slot block_b1(int l) const;
  Slot block_w2(int l) const;
  Slot block_b2(int l) const;
  Slot block_beta(int l) const;
  Slot output_weight() const;
  Slot output_bias() const;

  Eigen::Map<Matrix> view(Slot s) { return {values_.data() + s.offset, s.rows, s.cols}; }
  Eigen::Map<const Matrix> view(Slot s) const { return {values_.data() + s.offset, s.rows, s.cols}; }
  // Tape reference; gradients land at grad_base + offset when grad_base is set.
  ad::ParamRef ref(Slot s, double* grad_base) const;

  double beta(int l) const { return values_[block_beta(l).offset]; }
  std::vector<Index> beta_offsets() const;
  void clamp_betas();

  // Xavier-uniform weights, zero biases, beta = 0.9.
  void initialize(Xoshiro256& rng);

  // Stable names ("input.W", "block0.W1", ..., "output.b") with their slots.
  std::vector<std::pair<std::string, Slot>> named_slots() const;

 private:
  Index block_base(int l) const;

  Architecture arch_;
  Vector values_;
};

// Uniform on +-sqrt(6 / (fan_in + fan_out)), fan_in = cols, fan_out = rows.
Matrix xavier_init(Index rows, Index cols, Xoshiro256& rng);

// g(z) for a batch of feature columns, with betas read through the clamp.
Matrix resnet_forward(const NetworkParams& params, const Matrix& z);
ad::Var resnet_forward(ad::Tape& tape, const NetworkParams& params, double* grad, ad::Var z);

// {sin(2 pi k x), cos(2 pi k x)}_{k=1..P} per coordinate, interleaved by k.
Vector fourier_embed(std::span<const double> x, int harmonics);

struct SurrogateOptions {
  int width = 128;
  int blocks = 4;
  int harmonics = 4;
  // Network sees t * time_scale.
  double time_scale = 1.0;
  // Without the embedding, space enters raw and periodicity must be learned.
  bool periodic_embedding = true;
  int quadrature_nodes = 16;
};

// Input coordinate ids for tangent requests.
enum Coord : int { kT = 0, kX = 1, kY = 2 };

// rho_net(t,x), j_net(t,x,v), w_net(t,x,v) and the 1D velocity rule on [0,1].
struct SurrogateSet1D {
  NetworkParams rho_net;
  NetworkParams j_net;
  NetworkParams w_net;
  double epsilon = 1.0;
  SurrogateOptions options;
  QuadratureRule rule;

  static SurrogateSet1D create(const SurrogateOptions& opts, double epsilon, Xoshiro256& rng);
  std::vector<std::pair<std::string, NetworkParams*>> networks();
  std::vector<std::pair<std::string, const NetworkParams*>> networks() const;
};

// rho_net(t,x,y) and phi/j1/j2/w nets of (t,x,y,xi,eta); angular rule on [0,pi/2].
struct SurrogateSet2D {
  NetworkParams rho_net;
  NetworkParams phi_net;
  NetworkParams j1_net;
  NetworkParams j2_net;
  NetworkParams w_net;
  double epsilon = 1.0;
  SurrogateOptions options;
  QuadratureRule rule;  // normalized: weights sum to 1

  static SurrogateSet2D create(const SurrogateOptions& opts, double epsilon, Xoshiro256& rng);
  std::vector<std::pair<std::string, NetworkParams*>> networks();
  std::vector<std::pair<std::string, const NetworkParams*>> networks() const;
};

// Wrapped fields on a tape for B points crossed with M velocities.
// Columns of velocity-dependent fields are velocity-major: col = m*B + p.
// Every node carries 1 + dirs.size() blocks (value, then d/d dirs[i]).
struct Wrapped1D {
  ad::Var rho;  // B columns
  ad::Var j;    // M*B columns
  ad::Var w;    // M*B columns
  Index points = 0;
  Index velocities = 0;
};

struct Wrapped2D {
  ad::Var rho;
  ad::Var phi;
  ad::Var j1;
  ad::Var j2;
  ad::Var w;
  Index points = 0;
  Index velocities = 0;
};

// Gradient sinks, one per network in networks() order; entries may be null.
using GradSinks = std::span<double* const>;

Wrapped1D wrap_structures_1d(ad::Tape& tape, const SurrogateSet1D& set,
                             std::span<const double> t, std::span<const double> x,
                             std::span<const double> v, std::span<const int> dirs,
                             GradSinks grads = {});

// Velocities as (xi, eta) pairs, normally (cos th, sin th) at the rule's
// angles; the sign patterns are applied inside.
Wrapped2D wrap_structures_2d(ad::Tape& tape, const SurrogateSet2D& set,
                             std::span<const double> t, std::span<const double> x,
                             std::span<const double> y, std::span<const double> xi,
                             std::span<const double> eta, std::span<const int> dirs,
                             GradSinks grads = {});

// Pointwise wrapped values with first partials in t and x (and y).
struct WrappedPoint1D {
  double rho = 0, rho_t = 0, rho_x = 0;
  double j = 0, j_t = 0, j_x = 0;
  double w = 0, w_t = 0, w_x = 0;
};

struct WrappedPoint2D {
  double rho = 0, phi = 0, j1 = 0, j2 = 0, w = 0;
};

// v may be any value in [-1, 1]; the rule average inside w uses the set's nodes.
WrappedPoint1D wrap_structures_1d(const SurrogateSet1D& set, double t, double x, double v);
// (xi, eta) may carry any signs; wrappers are evaluated at the given pair.
WrappedPoint2D wrap_structures_2d(const SurrogateSet2D& set, double t, double x, double y,
                                  double xi, double eta);

// rho_theta on a batch of (t, x[, y]) points without building a tape.
Vector density_1d(const SurrogateSet1D& set, std::span<const double> t, std::span<const double> x);
Vector density_2d(const SurrogateSet2D& set, std::span<const double> t, std::span<const double> x,
                  std::span<const double> y);

// Text checkpoint: header line, then per array "<name> <rows> <cols>" and the
// values in column-major order with round-trip precision. Written atomically.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const NetworkParams*>>& nets);
// Loads into networks with matching names and shapes; throws IoError otherwise.
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, NetworkParams*>>& nets);

}  // namespace apnn
