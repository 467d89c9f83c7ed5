#pragma once

// Batched tape for forward-over-reverse differentiation.
//
// Every node holds a matrix laid out as `blocks` column blocks of equal
// width: block 0 is the primal value, blocks 1..K-1 are forward tangents
// (directional derivatives with respect to chosen network inputs). Each
// primitive propagates tangents during the forward pass, and the reverse
// sweep differentiates the whole primal+tangent computation, so parameter
// gradients flow through input-derivative terms such as d/dx of a network.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

#include "apnn/errors.hpp"

namespace apnn::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Scalar clamp. The derivative is 1 strictly inside (lo, hi) and 0 elsewhere,
// including at the end points.
double clamp(double value, double lo, double hi);
double clamp_derivative(double value, double lo, double hi);

// Elementwise kernels shared by the tape and plain batch evaluation.
Matrix tanh_values(const Eigen::Ref<const Matrix>& a);
Matrix softplus_values(const Eigen::Ref<const Matrix>& a);
Matrix sigmoid_values(const Eigen::Ref<const Matrix>& a);

// Trainable storage seen by the tape. `grad` may be null for inference-only
// tapes; otherwise the reverse sweep accumulates into it (same layout as value).
struct ParamRef {
  const double* value = nullptr;
  double* grad = nullptr;
  Index rows = 0;
  Index cols = 1;

  Eigen::Map<const Matrix> matrix() const { return {value, rows, cols}; }
  Index size() const { return rows * cols; }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Ordered list of distinct input coordinates to differentiate against.
struct DerivativeRequest {
  std::vector<int> input_indices;

  // Throws InvalidRequest on duplicates or indices outside [0, arity).
  void validate(Index arity) const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf whose value already carries `blocks` column blocks (tangent seeds
  // included). Constants receive no gradient.
  Var constant(Matrix value, int blocks = 1);
  // Leaf exposing a parameter array as a primal-only node.
  Var parameter(const ParamRef& p);

  // W x + b, with b added to the primal block only.
  Var affine(const ParamRef& weight, const ParamRef& bias, Var x);
  Var tanh(Var x);
  Var softplus(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var mul(Var a, Var b);
  // clamp(beta)*keep + (1 - clamp(beta))*branch for a scalar parameter beta.
  Var blend(const ParamRef& beta, double lo, double hi, Var keep, Var branch);
  Var clamp(Var x, double lo, double hi);

  // Block k of x as a new primal-only node (k = 0 drops all tangents).
  Var block(Var x, int k);
  // Columns [start, start+count) of every block.
  Var cols(Var x, Index start, Index count);
  // x has `groups` consecutive column groups per block; returns sum_g w_g x_g.
  Var group_sum(Var x, int groups, std::span<const double> weights);
  // Repeats each block's columns `groups` times.
  Var tile(Var x, int groups);
  // Multiplies column c of every block by s[c].
  Var scale_cols(Var x, const Vector& s);
  // Scalar sum_c w_c x(0,c)^2 over a primal-only row vector.
  Var weighted_square_sum(Var x, const Vector& weights);

  // Reverse sweep from a 1x1 primal-only node. Accumulates into every
  // ParamRef::grad reachable from `root`.
  void backward(Var root);

  // Recomputes every node in recording order from its inputs and the current
  // parameter memory.
  void replay();

  const Matrix& value(Var v) const;
  // Gradient of the last backward() root with respect to v (empty if none).
  const Matrix& grad(Var v) const;
  int blocks(Var v) const;
  // Column count of one block.
  Index width(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  // Node ids in the order the last backward() visited them.
  const std::vector<int>& last_sweep() const { return sweep_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    int blocks = 1;
    std::function<void(Tape&, Node&)> forward;
    std::function<void(Tape&, Node&)> backward;
  };

  Var push(int blocks, std::function<void(Tape&, Node&)> forward,
           std::function<void(Tape&, Node&)> backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  Matrix& grad_of(int id);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<int> sweep_;
};

// Evaluates a scalar-input tape function f(tape, z) -> row-vector outputs at a
// single point, returning outputs and d output_m / d input_k for each
// requested k (partials(k, m)).
struct TangentResult {
  Vector outputs;
  Matrix partials;
};

template <class F>
TangentResult forward_with_tangents(F&& f, Index arity, const Vector& input,
                                    const DerivativeRequest& req) {
  if (input.size() != arity) {
    throw InvalidRequest("input arity " + std::to_string(input.size()) +
                         " does not match " + std::to_string(arity));
  }
  req.validate(arity);
  const int k = static_cast<int>(req.input_indices.size());
  Matrix z = Matrix::Zero(arity, k + 1);
  z.col(0) = input;
  for (int i = 0; i < k; ++i) z(req.input_indices[i], i + 1) = 1.0;
  Tape tape;
  Var out = f(tape, tape.constant(std::move(z), k + 1));
  const Matrix& y = tape.value(out);
  TangentResult r;
  r.outputs = y.col(0);
  r.partials.resize(k, y.rows());
  for (int i = 0; i < k; ++i) r.partials.row(i) = y.col(i + 1).transpose();
  return r;
}

}  // namespace apnn::ad
