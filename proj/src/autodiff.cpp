#include "apnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace apnn::ad {

namespace {

// Tapes allocate and free many multi-megabyte buffers per step; keeping them
// in the heap instead of fresh mmap pages avoids repeated page faults.
#if defined(__GLIBC__)
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

void require_same_layout(const Matrix& a, int ka, const Matrix& b, int kb, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || ka != kb) {
    throw InvalidArgument(std::string(op) + ": operand layouts differ (" +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + "/" +
                          std::to_string(ka) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + "/" + std::to_string(kb) + ")");
  }
}

}  // namespace

// tanh through exp, which Eigen vectorizes for doubles.
Matrix tanh_values(const Eigen::Ref<const Matrix>& a) {
  return (1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0)).matrix();
}

// log(1 + e^a) without overflow.
Matrix softplus_values(const Eigen::Ref<const Matrix>& a) {
  return (a.array().max(0.0) + (-a.array().abs()).exp().log1p()).matrix();
}

Matrix sigmoid_values(const Eigen::Ref<const Matrix>& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

double clamp(double value, double lo, double hi) {
  if (lo > hi) throw InvalidArgument("clamp: lo > hi");
  return std::min(std::max(value, lo), hi);
}

double clamp_derivative(double value, double lo, double hi) {
  if (lo > hi) throw InvalidArgument("clamp: lo > hi");
  return (value > lo && value < hi) ? 1.0 : 0.0;
}

void DerivativeRequest::validate(Index arity) const {
  std::vector<int> seen = input_indices;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw InvalidRequest("derivative request contains duplicate indices");
  }
  for (int i : input_indices) {
    if (i < 0 || i >= arity) {
      throw InvalidRequest("derivative index " + std::to_string(i) + " outside input arity " +
                           std::to_string(arity));
    }
  }
}

Var Tape::push(int blocks, std::function<void(Tape&, Node&)> forward,
               std::function<void(Tape&, Node&)> backward) {
  Node n;
  n.blocks = blocks;
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  Node& back = nodes_.back();
  back.forward(*this, back);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw ContractViolation("variable does not belong to this tape");
  }
}

Tape::Node& Tape::node(Var v) {
  check(v);
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  check(v);
  return nodes_[v.id];
}

Matrix& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

const Matrix& Tape::value(Var v) const { return node(v).value; }
const Matrix& Tape::grad(Var v) const { return node(v).grad; }
int Tape::blocks(Var v) const { return node(v).blocks; }
Index Tape::width(Var v) const {
  const Node& n = node(v);
  return n.value.cols() / n.blocks;
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.value.size() != 1) throw ContractViolation("scalar(): node is not 1x1");
  return n.value(0, 0);
}

Var Tape::constant(Matrix value, int blocks) {
  if (blocks < 1 || value.cols() % blocks != 0) {
    throw InvalidArgument("constant: column count not divisible into blocks");
  }
  auto stored = std::make_shared<Matrix>(std::move(value));
  return push(
      blocks, [stored](Tape&, Node& self) { self.value = *stored; }, nullptr);
}

Var Tape::parameter(const ParamRef& p) {
  return push(
      1, [p](Tape&, Node& self) { self.value = p.matrix(); },
      [p](Tape&, Node& self) {
        if (p.grad) Eigen::Map<Matrix>(p.grad, p.rows, p.cols) += self.grad;
      });
}

Var Tape::affine(const ParamRef& w, const ParamRef& b, Var x) {
  const Node& xn = node(x);
  if (w.cols != xn.value.rows() || b.rows != w.rows || b.cols != 1) {
    throw InvalidArgument("affine: weight " + std::to_string(w.rows) + "x" +
                          std::to_string(w.cols) + " cannot act on input with " +
                          std::to_string(xn.value.rows()) + " rows");
  }
  const int xid = x.id;
  const int k = xn.blocks;
  return push(
      k,
      [w, b, xid](Tape& t, Node& self) {
        const Matrix& xv = t.nodes_[xid].value;
        const Index n = xv.cols() / self.blocks;
        self.value.noalias() = w.matrix() * xv;
        self.value.leftCols(n).colwise() += Eigen::Map<const Vector>(b.value, b.rows);
      },
      [w, b, xid](Tape& t, Node& self) {
        const Matrix& xv = t.nodes_[xid].value;
        const Index n = xv.cols() / self.blocks;
        if (w.grad) Eigen::Map<Matrix>(w.grad, w.rows, w.cols).noalias() += self.grad * xv.transpose();
        if (b.grad) Eigen::Map<Vector>(b.grad, b.rows) += self.grad.leftCols(n).rowwise().sum();
        if (t.nodes_[xid].backward) {
          t.grad_of(xid).noalias() += w.matrix().transpose() * self.grad;
        }
      });
}

Var Tape::tanh(Var x) {
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        self.value.resize(a.rows(), a.cols());
        self.value.leftCols(n) = tanh_values(a.leftCols(n));
        const auto y0 = self.value.leftCols(n).array();
        for (int k = 1; k < self.blocks; ++k) {
          self.value.middleCols(k * n, n).array() = (1.0 - y0.square()) * a.middleCols(k * n, n).array();
        }
      },
      [xid](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        Matrix& ga = t.grad_of(xid);
        const auto y0 = self.value.leftCols(n).array();
        ga.leftCols(n).array() += self.grad.leftCols(n).array() * (1.0 - y0.square());
        for (int k = 1; k < self.blocks; ++k) {
          const auto gk = self.grad.middleCols(k * n, n).array();
          ga.leftCols(n).array() += gk * a.middleCols(k * n, n).array() * (-2.0 * y0 * (1.0 - y0.square()));
          ga.middleCols(k * n, n).array() += gk * (1.0 - y0.square());
        }
      });
}

Var Tape::softplus(Var x) {
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        self.value.resize(a.rows(), a.cols());
        self.value.leftCols(n) = softplus_values(a.leftCols(n));
        if (self.blocks > 1) {
          const Matrix s = sigmoid_values(a.leftCols(n));
          for (int k = 1; k < self.blocks; ++k) {
            self.value.middleCols(k * n, n) = (s.array() * a.middleCols(k * n, n).array()).matrix();
          }
        }
      },
      [xid](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        Matrix& ga = t.grad_of(xid);
        const Eigen::ArrayXXd s = sigmoid_values(a.leftCols(n)).array();
        Eigen::ArrayXXd g0 = self.grad.leftCols(n).array() * s;
        if (self.blocks > 1) {
          const Eigen::ArrayXXd ds = s * (1.0 - s);
          for (int k = 1; k < self.blocks; ++k) {
            const auto gk = self.grad.middleCols(k * n, n).array();
            g0 += gk * a.middleCols(k * n, n).array() * ds;
            ga.middleCols(k * n, n).array() += gk * s;
          }
        }
        ga.leftCols(n).array() += g0;
      });
}

Var Tape::add(Var a, Var b) {
  require_same_layout(node(a).value, node(a).blocks, node(b).value, node(b).blocks, "add");
  const int aid = a.id, bid = b.id;
  return push(
      node(a).blocks,
      [aid, bid](Tape& t, Node& self) { self.value = t.nodes_[aid].value + t.nodes_[bid].value; },
      [aid, bid](Tape& t, Node& self) {
        t.grad_of(aid) += self.grad;
        t.grad_of(bid) += self.grad;
      });
}

Var Tape::sub(Var a, Var b) {
  require_same_layout(node(a).value, node(a).blocks, node(b).value, node(b).blocks, "sub");
  const int aid = a.id, bid = b.id;
  return push(
      node(a).blocks,
      [aid, bid](Tape& t, Node& self) { self.value = t.nodes_[aid].value - t.nodes_[bid].value; },
      [aid, bid](Tape& t, Node& self) {
        t.grad_of(aid) += self.grad;
        t.grad_of(bid) -= self.grad;
      });
}

Var Tape::scale(Var a, double s) {
  const int aid = a.id;
  return push(
      node(a).blocks, [aid, s](Tape& t, Node& self) { self.value = s * t.nodes_[aid].value; },
      [aid, s](Tape& t, Node& self) { t.grad_of(aid) += s * self.grad; });
}

Var Tape::mul(Var a, Var b) {
  require_same_layout(node(a).value, node(a).blocks, node(b).value, node(b).blocks, "mul");
  const int aid = a.id, bid = b.id;
  return push(
      node(a).blocks,
      [aid, bid](Tape& t, Node& self) {
        const Matrix& av = t.nodes_[aid].value;
        const Matrix& bv = t.nodes_[bid].value;
        const Index n = av.cols() / self.blocks;
        self.value.resize(av.rows(), av.cols());
        self.value.leftCols(n) = (av.leftCols(n).array() * bv.leftCols(n).array()).matrix();
        for (int k = 1; k < self.blocks; ++k) {
          self.value.middleCols(k * n, n) =
              (av.leftCols(n).array() * bv.middleCols(k * n, n).array() +
               av.middleCols(k * n, n).array() * bv.leftCols(n).array())
                  .matrix();
        }
      },
      [aid, bid](Tape& t, Node& self) {
        const Matrix& av = t.nodes_[aid].value;
        const Matrix& bv = t.nodes_[bid].value;
        const Index n = av.cols() / self.blocks;
        Matrix& ga = t.grad_of(aid);
        Matrix& gb = t.grad_of(bid);
        ga.leftCols(n).array() += self.grad.leftCols(n).array() * bv.leftCols(n).array();
        gb.leftCols(n).array() += self.grad.leftCols(n).array() * av.leftCols(n).array();
        for (int k = 1; k < self.blocks; ++k) {
          const auto gk = self.grad.middleCols(k * n, n).array();
          ga.leftCols(n).array() += gk * bv.middleCols(k * n, n).array();
          gb.leftCols(n).array() += gk * av.middleCols(k * n, n).array();
          ga.middleCols(k * n, n).array() += gk * bv.leftCols(n).array();
          gb.middleCols(k * n, n).array() += gk * av.leftCols(n).array();
        }
      });
}

Var Tape::blend(const ParamRef& beta, double lo, double hi, Var keep, Var branch) {
  if (beta.size() != 1) throw InvalidArgument("blend: beta must be a scalar parameter");
  if (lo > hi) throw InvalidArgument("blend: lo > hi");
  require_same_layout(node(keep).value, node(keep).blocks, node(branch).value,
                      node(branch).blocks, "blend");
  const int gid = keep.id, hid = branch.id;
  return push(
      node(keep).blocks,
      [beta, lo, hi, gid, hid](Tape& t, Node& self) {
        const double c = ad::clamp(*beta.value, lo, hi);
        self.value = c * t.nodes_[gid].value + (1.0 - c) * t.nodes_[hid].value;
      },
      [beta, lo, hi, gid, hid](Tape& t, Node& self) {
        const double c = ad::clamp(*beta.value, lo, hi);
        if (beta.grad && clamp_derivative(*beta.value, lo, hi) != 0.0) {
          *beta.grad += (self.grad.array() *
                         (t.nodes_[gid].value.array() - t.nodes_[hid].value.array()))
                            .sum();
        }
        t.grad_of(gid) += c * self.grad;
        t.grad_of(hid) += (1.0 - c) * self.grad;
      });
}

Var Tape::clamp(Var x, double lo, double hi) {
  if (lo > hi) throw InvalidArgument("clamp: lo > hi");
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid, lo, hi](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        self.value.resize(a.rows(), a.cols());
        self.value.leftCols(n) = a.leftCols(n).cwiseMax(lo).cwiseMin(hi);
        const Eigen::ArrayXXd inside =
            (a.leftCols(n).array() > lo && a.leftCols(n).array() < hi).cast<double>();
        for (int k = 1; k < self.blocks; ++k) {
          self.value.middleCols(k * n, n) = (inside * a.middleCols(k * n, n).array()).matrix();
        }
      },
      [xid, lo, hi](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index n = a.cols() / self.blocks;
        const Eigen::ArrayXXd inside =
            (a.leftCols(n).array() > lo && a.leftCols(n).array() < hi).cast<double>();
        Matrix& ga = t.grad_of(xid);
        for (int k = 0; k < self.blocks; ++k) {
          ga.middleCols(k * n, n).array() += inside * self.grad.middleCols(k * n, n).array();
        }
      });
}

Var Tape::block(Var x, int k) {
  const Node& xn = node(x);
  if (k < 0 || k >= xn.blocks) {
    throw InvalidArgument("block: index " + std::to_string(k) + " out of range");
  }
  const int xid = x.id;
  return push(
      1,
      [xid, k](Tape& t, Node& self) {
        const Node& src = t.nodes_[xid];
        const Index n = src.value.cols() / src.blocks;
        self.value = src.value.middleCols(k * n, n);
      },
      [xid, k](Tape& t, Node& self) {
        const Node& src = t.nodes_[xid];
        const Index n = src.value.cols() / src.blocks;
        t.grad_of(xid).middleCols(k * n, n) += self.grad;
      });
}

Var Tape::cols(Var x, Index start, Index count) {
  const Index n = width(x);
  if (start < 0 || count < 0 || start + count > n) {
    throw InvalidArgument("cols: range outside block width");
  }
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid, start, count](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index w = a.cols() / self.blocks;
        self.value.resize(a.rows(), count * self.blocks);
        for (int k = 0; k < self.blocks; ++k) {
          self.value.middleCols(k * count, count) = a.middleCols(k * w + start, count);
        }
      },
      [xid, start, count](Tape& t, Node& self) {
        Matrix& ga = t.grad_of(xid);
        const Index w = ga.cols() / self.blocks;
        for (int k = 0; k < self.blocks; ++k) {
          ga.middleCols(k * w + start, count) += self.grad.middleCols(k * count, count);
        }
      });
}

Var Tape::group_sum(Var x, int groups, std::span<const double> weights) {
  const Index n = width(x);
  if (groups < 1 || n % groups != 0 || static_cast<int>(weights.size()) != groups) {
    throw InvalidArgument("group_sum: width not divisible into weighted groups");
  }
  const int xid = x.id;
  std::vector<double> w(weights.begin(), weights.end());
  return push(
      node(x).blocks,
      [xid, groups, w](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index bw = a.cols() / self.blocks;
        const Index m = bw / groups;
        self.value = Matrix::Zero(a.rows(), m * self.blocks);
        for (int k = 0; k < self.blocks; ++k) {
          for (int g = 0; g < groups; ++g) {
            self.value.middleCols(k * m, m) += w[g] * a.middleCols(k * bw + g * m, m);
          }
        }
      },
      [xid, groups, w](Tape& t, Node& self) {
        Matrix& ga = t.grad_of(xid);
        const Index bw = ga.cols() / self.blocks;
        const Index m = bw / groups;
        for (int k = 0; k < self.blocks; ++k) {
          for (int g = 0; g < groups; ++g) {
            ga.middleCols(k * bw + g * m, m) += w[g] * self.grad.middleCols(k * m, m);
          }
        }
      });
}

Var Tape::tile(Var x, int groups) {
  if (groups < 1) throw InvalidArgument("tile: groups must be positive");
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid, groups](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index m = a.cols() / self.blocks;
        self.value.resize(a.rows(), m * groups * self.blocks);
        for (int k = 0; k < self.blocks; ++k) {
          for (int g = 0; g < groups; ++g) {
            self.value.middleCols((k * groups + g) * m, m) = a.middleCols(k * m, m);
          }
        }
      },
      [xid, groups](Tape& t, Node& self) {
        Matrix& ga = t.grad_of(xid);
        const Index m = ga.cols() / self.blocks;
        for (int k = 0; k < self.blocks; ++k) {
          for (int g = 0; g < groups; ++g) {
            ga.middleCols(k * m, m) += self.grad.middleCols((k * groups + g) * m, m);
          }
        }
      });
}

Var Tape::scale_cols(Var x, const Vector& s) {
  if (s.size() != width(x)) throw InvalidArgument("scale_cols: scale length != block width");
  const int xid = x.id;
  return push(
      node(x).blocks,
      [xid, s](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        const Index m = s.size();
        self.value.resize(a.rows(), a.cols());
        for (int k = 0; k < self.blocks; ++k) {
          self.value.middleCols(k * m, m) = a.middleCols(k * m, m) * s.asDiagonal();
        }
      },
      [xid, s](Tape& t, Node& self) {
        Matrix& ga = t.grad_of(xid);
        const Index m = s.size();
        for (int k = 0; k < self.blocks; ++k) {
          ga.middleCols(k * m, m) += self.grad.middleCols(k * m, m) * s.asDiagonal();
        }
      });
}

Var Tape::weighted_square_sum(Var x, const Vector& weights) {
  const Node& xn = node(x);
  if (xn.blocks != 1 || xn.value.rows() != 1 || weights.size() != xn.value.cols()) {
    throw InvalidArgument("weighted_square_sum: expects a primal row vector matching the weights");
  }
  const int xid = x.id;
  return push(
      1,
      [xid, weights](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        self.value.resize(1, 1);
        self.value(0, 0) = (a.row(0).transpose().array().square() * weights.array()).sum();
      },
      [xid, weights](Tape& t, Node& self) {
        const Matrix& a = t.nodes_[xid].value;
        t.grad_of(xid).row(0).array() +=
            2.0 * self.grad(0, 0) * (a.row(0).transpose().array() * weights.array()).transpose();
      });
}

void Tape::backward(Var root) {
  Node& r = node(root);
  if (r.value.size() != 1 || r.blocks != 1) {
    throw ContractViolation("backward(): root must be a 1x1 primal-only node");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  sweep_.clear();
  r.grad = Matrix::Ones(1, 1);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    sweep_.push_back(id);
    if (n.backward) n.backward(*this, n);
  }
}

void Tape::replay() {
  for (Node& n : nodes_) n.forward(*this, n);
}

}  // namespace apnn::ad
