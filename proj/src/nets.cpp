#include "apnn/nets.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "apnn/errors.hpp"

namespace apnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Index param_count(const Architecture& a) {
  const Index m = a.width;
  return m * a.input_dim + m + a.blocks * (2 * m * m + 2 * m + 1) + a.output_dim * m + a.output_dim;
}

void check_arch(const Architecture& a) {
  if (a.input_dim < 1 || a.width < 1 || a.blocks < 0 || a.output_dim < 1) {
    throw InvalidArgument("architecture dimensions must be positive");
  }
}

}  // namespace

NetworkParams::NetworkParams(Architecture arch) : arch_(arch) {
  check_arch(arch_);
  values_ = Vector::Zero(param_count(arch_));
  for (int l = 0; l < arch_.blocks; ++l) values_[block_beta(l).offset] = kBetaInit;
}

NetworkParams::Slot NetworkParams::input_weight() const { return {0, arch_.width, arch_.input_dim}; }
NetworkParams::Slot NetworkParams::input_bias() const {
  return {Index(arch_.width) * arch_.input_dim, arch_.width, 1};
}

Index NetworkParams::block_base(int l) const {
  if (l < 0 || l >= arch_.blocks) throw InvalidArgument("block index out of range");
  const Index m = arch_.width;
  return m * arch_.input_dim + m + l * (2 * m * m + 2 * m + 1);
}

NetworkParams::Slot NetworkParams::block_w1(int l) const {
  return {block_base(l), arch_.width, arch_.width};
}
NetworkParams::Slot NetworkParams::block_b1(int l) const {
  const Index m = arch_.width;
  return {block_base(l) + m * m, m, 1};
}
NetworkParams::Slot NetworkParams::block_w2(int l) const {
  const Index m = arch_.width;
  return {block_base(l) + m * m + m, m, m};
}
NetworkParams::Slot NetworkParams::block_b2(int l) const {
  const Index m = arch_.width;
  return {block_base(l) + 2 * m * m + m, m, 1};
}
NetworkParams::Slot NetworkParams::block_beta(int l) const {
  const Index m = arch_.width;
  return {block_base(l) + 2 * m * m + 2 * m, 1, 1};
}
NetworkParams::Slot NetworkParams::output_weight() const {
  const Index m = arch_.width;
  return {m * arch_.input_dim + m + arch_.blocks * (2 * m * m + 2 * m + 1), arch_.output_dim, m};
}
NetworkParams::Slot NetworkParams::output_bias() const {
  const Slot w = output_weight();
  return {w.offset + w.rows * w.cols, arch_.output_dim, 1};
}

ad::ParamRef NetworkParams::ref(Slot s, double* grad_base) const {
  return ad::ParamRef{values_.data() + s.offset, grad_base ? grad_base + s.offset : nullptr, s.rows,
                      s.cols};
}

std::vector<Index> NetworkParams::beta_offsets() const {
  std::vector<Index> out;
  for (int l = 0; l < arch_.blocks; ++l) out.push_back(block_beta(l).offset);
  return out;
}

void NetworkParams::clamp_betas() {
  for (Index off : beta_offsets()) values_[off] = ad::clamp(values_[off], kBetaMin, kBetaMax);
}

void NetworkParams::initialize(Xoshiro256& rng) {
  values_.setZero();
  auto fill = [&](Slot s) { view(s) = xavier_init(s.rows, s.cols, rng); };
  fill(input_weight());
  for (int l = 0; l < arch_.blocks; ++l) {
    fill(block_w1(l));
    fill(block_w2(l));
    values_[block_beta(l).offset] = kBetaInit;
  }
  fill(output_weight());
}

std::vector<std::pair<std::string, NetworkParams::Slot>> NetworkParams::named_slots() const {
  std::vector<std::pair<std::string, Slot>> out{{"input.W", input_weight()}, {"input.b", input_bias()}};
  for (int l = 0; l < arch_.blocks; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    out.emplace_back(p + "W1", block_w1(l));
    out.emplace_back(p + "b1", block_b1(l));
    out.emplace_back(p + "W2", block_w2(l));
    out.emplace_back(p + "b2", block_b2(l));
    out.emplace_back(p + "beta", block_beta(l));
  }
  out.emplace_back("output.W", output_weight());
  out.emplace_back("output.b", output_bias());
  return out;
}

Matrix xavier_init(Index rows, Index cols, Xoshiro256& rng) {
  if (rows < 1 || cols < 1) throw InvalidArgument("xavier_init: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) w(r, c) = rng.uniform(-bound, bound);
  return w;
}

Matrix resnet_forward(const NetworkParams& p, const Matrix& z) {
  const Architecture& a = p.arch();
  if (z.rows() != a.input_dim) {
    throw InvalidArgument("resnet_forward: input has " + std::to_string(z.rows()) +
                          " rows, network expects " + std::to_string(a.input_dim));
  }
  Matrix g = p.view(p.input_weight()) * z;
  g.colwise() += p.view(p.input_bias()).col(0);
  Matrix h;
  for (int l = 0; l < a.blocks; ++l) {
    h.noalias() = p.view(p.block_w1(l)) * g;
    h.colwise() += p.view(p.block_b1(l)).col(0);
    h = ad::tanh_values(h);
    Matrix h2 = p.view(p.block_w2(l)) * h;
    h2.colwise() += p.view(p.block_b2(l)).col(0);
    h2 = ad::tanh_values(h2);
    const double c = ad::clamp(p.beta(l), kBetaMin, kBetaMax);
    g = c * g + (1.0 - c) * h2;
  }
  Matrix out = p.view(p.output_weight()) * g;
  out.colwise() += p.view(p.output_bias()).col(0);
  return out;
}

ad::Var resnet_forward(ad::Tape& tape, const NetworkParams& p, double* grad, ad::Var z) {
  const Architecture& a = p.arch();
  if (tape.value(z).rows() != a.input_dim) {
    throw InvalidArgument("resnet_forward: input has " + std::to_string(tape.value(z).rows()) +
                          " rows, network expects " + std::to_string(a.input_dim));
  }
  ad::Var g = tape.affine(p.ref(p.input_weight(), grad), p.ref(p.input_bias(), grad), z);
  for (int l = 0; l < a.blocks; ++l) {
    ad::Var h = tape.tanh(tape.affine(p.ref(p.block_w1(l), grad), p.ref(p.block_b1(l), grad), g));
    h = tape.tanh(tape.affine(p.ref(p.block_w2(l), grad), p.ref(p.block_b2(l), grad), h));
    g = tape.blend(p.ref(p.block_beta(l), grad), kBetaMin, kBetaMax, g, h);
  }
  return tape.affine(p.ref(p.output_weight(), grad), p.ref(p.output_bias(), grad), g);
}

Vector fourier_embed(std::span<const double> x, int harmonics) {
  if (harmonics < 1) throw InvalidArgument("fourier_embed: harmonics must be >= 1");
  Vector out(2 * harmonics * static_cast<Index>(x.size()));
  Index r = 0;
  for (double xi : x) {
    for (int k = 1; k <= harmonics; ++k) {
      out[r++] = std::sin(kTwoPi * k * xi);
      out[r++] = std::cos(kTwoPi * k * xi);
    }
  }
  return out;
}

namespace {

Index space_rows(const SurrogateOptions& o) { return o.periodic_embedding ? 2 * o.harmonics : 1; }

// Writes the features of one spatial coordinate into rows [row0, ...) of
// column `col`, and its derivative into `dcol` when dcol >= 0.
void write_space(Matrix& z, Index row0, Index col, Index dcol, double x, const SurrogateOptions& o) {
  if (!o.periodic_embedding) {
    z(row0, col) = x;
    if (dcol >= 0) z(row0, dcol) = 1.0;
    return;
  }
  for (int k = 1; k <= o.harmonics; ++k) {
    const double arg = kTwoPi * k * x;
    const double s = std::sin(arg), c = std::cos(arg);
    z(row0 + 2 * (k - 1), col) = s;
    z(row0 + 2 * (k - 1) + 1, col) = c;
    if (dcol >= 0) {
      z(row0 + 2 * (k - 1), dcol) = kTwoPi * k * c;
      z(row0 + 2 * (k - 1) + 1, dcol) = -kTwoPi * k * s;
    }
  }
}

// Feature columns for (t, x[, y]) points with tangent blocks for `dirs`.
Matrix point_features(const SurrogateOptions& o, std::span<const double> t,
                      std::span<const double> x, std::span<const double> y,
                      std::span<const int> dirs) {
  const Index b = static_cast<Index>(t.size());
  if (static_cast<Index>(x.size()) != b || (!y.empty() && static_cast<Index>(y.size()) != b)) {
    throw InvalidArgument("point coordinate arrays differ in length");
  }
  const bool two_d = !y.empty();
  const Index sr = space_rows(o);
  const Index rows = 1 + sr * (two_d ? 2 : 1);
  const Index k = 1 + static_cast<Index>(dirs.size());
  Matrix z = Matrix::Zero(rows, k * b);
  auto dir_col = [&](int coord, Index p) -> Index {
    for (Index i = 0; i < static_cast<Index>(dirs.size()); ++i)
      if (dirs[i] == coord) return (i + 1) * b + p;
    return -1;
  };
  for (int d : dirs) {
    if (d < kT || d > (two_d ? kY : kX)) throw InvalidRequest("tangent direction out of range");
  }
  for (Index p = 0; p < b; ++p) {
    z(0, p) = o.time_scale * t[p];
    if (Index c = dir_col(kT, p); c >= 0) z(0, c) = o.time_scale;
    write_space(z, 1, p, dir_col(kX, p), x[p], o);
    if (two_d) write_space(z, 1 + sr, p, dir_col(kY, p), y[p], o);
  }
  return z;
}

// Crosses point features (k blocks of b columns) with velocity columns
// `vel` (vrows x nv). Output column of (block kk, velocity m, point p) is
// (kk*nv + m)*b + p; velocity rows are zero in tangent blocks.
Matrix cross_velocities(const Matrix& base, Index k, const Matrix& vel) {
  const Index b = base.cols() / k;
  const Index nv = vel.cols();
  const Index br = base.rows();
  Matrix z = Matrix::Zero(br + vel.rows(), k * nv * b);
  for (Index kk = 0; kk < k; ++kk) {
    for (Index m = 0; m < nv; ++m) {
      const Index c0 = (kk * nv + m) * b;
      z.block(0, c0, br, b) = base.middleCols(kk * b, b);
      if (kk == 0) z.block(br, c0, vel.rows(), b) = vel.col(m).replicate(1, b);
    }
  }
  return z;
}

bool same_values(std::span<const double> a, const Vector& b) {
  if (static_cast<Index>(a.size()) != b.size()) return false;
  for (Index i = 0; i < b.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

double* sink(GradSinks g, std::size_t i) { return i < g.size() ? g[i] : nullptr; }

Index input_dim_space_time(const SurrogateOptions& o, int dims) { return 1 + dims * space_rows(o); }

}  // namespace

SurrogateSet1D SurrogateSet1D::create(const SurrogateOptions& o, double epsilon, Xoshiro256& rng) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  SurrogateSet1D s;
  s.epsilon = epsilon;
  s.options = o;
  s.rule = gauss_legendre(o.quadrature_nodes, 0.0, 1.0);
  const int base = static_cast<int>(input_dim_space_time(o, 1));
  s.rho_net = NetworkParams({base, o.width, o.blocks, 1});
  s.j_net = NetworkParams({base + 1, o.width, o.blocks, 1});
  s.w_net = NetworkParams({base + 1, o.width, o.blocks, 1});
  for (auto& [name, net] : s.networks()) net->initialize(rng);
  return s;
}

std::vector<std::pair<std::string, NetworkParams*>> SurrogateSet1D::networks() {
  return {{"rho_net", &rho_net}, {"j_net", &j_net}, {"w_net", &w_net}};
}
std::vector<std::pair<std::string, const NetworkParams*>> SurrogateSet1D::networks() const {
  return {{"rho_net", &rho_net}, {"j_net", &j_net}, {"w_net", &w_net}};
}

SurrogateSet2D SurrogateSet2D::create(const SurrogateOptions& o, double epsilon, Xoshiro256& rng) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  SurrogateSet2D s;
  s.epsilon = epsilon;
  s.options = o;
  s.rule = normalized_quarter_circle_rule(o.quadrature_nodes);
  const int base = static_cast<int>(input_dim_space_time(o, 2));
  s.rho_net = NetworkParams({base, o.width, o.blocks, 1});
  for (NetworkParams* n : {&s.phi_net, &s.j1_net, &s.j2_net, &s.w_net})
    *n = NetworkParams({base + 2, o.width, o.blocks, 1});
  for (auto& [name, net] : s.networks()) net->initialize(rng);
  return s;
}

std::vector<std::pair<std::string, NetworkParams*>> SurrogateSet2D::networks() {
  return {{"rho_net", &rho_net}, {"phi_net", &phi_net}, {"j1_net", &j1_net},
          {"j2_net", &j2_net},   {"w_net", &w_net}};
}
std::vector<std::pair<std::string, const NetworkParams*>> SurrogateSet2D::networks() const {
  return {{"rho_net", &rho_net}, {"phi_net", &phi_net}, {"j1_net", &j1_net},
          {"j2_net", &j2_net},   {"w_net", &w_net}};
}

Wrapped1D wrap_structures_1d(ad::Tape& tape, const SurrogateSet1D& set, std::span<const double> t,
                             std::span<const double> x, std::span<const double> v,
                             std::span<const int> dirs, GradSinks grads) {
  const Index b = static_cast<Index>(t.size());
  const Index m = static_cast<Index>(v.size());
  const Index q = set.rule.size();
  const int k = 1 + static_cast<int>(dirs.size());
  if (b == 0 || m == 0) throw InvalidArgument("wrap_structures_1d: empty batch");

  const Matrix base = point_features(set.options, t, x, {}, dirs);
  Wrapped1D out;
  out.points = b;
  out.velocities = m;
  out.rho = tape.softplus(resnet_forward(tape, set.rho_net, sink(grads, 0), tape.constant(base, k)));

  // j_net at (+v, -v).
  Matrix vel(1, 2 * m);
  for (Index i = 0; i < m; ++i) {
    vel(0, i) = v[i];
    vel(0, m + i) = -v[i];
  }
  const ad::Var jraw = resnet_forward(tape, set.j_net, sink(grads, 1),
                                      tape.constant(cross_velocities(base, k, vel), k));
  out.j = tape.scale(tape.sub(tape.cols(jraw, 0, m * b), tape.cols(jraw, m * b, m * b)), 0.5);

  // w_net at (+v, -v) and, unless v already is the node set, at (+nodes, -nodes).
  const bool reuse = same_values(v, set.rule.nodes);
  Matrix wvel = vel;
  if (!reuse) {
    wvel.conservativeResize(1, 2 * m + 2 * q);
    for (Index i = 0; i < q; ++i) {
      wvel(0, 2 * m + i) = set.rule.nodes[i];
      wvel(0, 2 * m + q + i) = -set.rule.nodes[i];
    }
  }
  const ad::Var wraw = resnet_forward(tape, set.w_net, sink(grads, 2),
                                      tape.constant(cross_velocities(base, k, wvel), k));
  const Index node_off = reuse ? 0 : 2 * m * b;
  const std::span<const double> wq(set.rule.weights.data(), q);
  const ad::Var mean_pos = tape.group_sum(tape.cols(wraw, node_off, q * b), static_cast<int>(q), wq);
  const ad::Var mean_neg =
      tape.group_sum(tape.cols(wraw, node_off + q * b, q * b), static_cast<int>(q), wq);
  const ad::Var sym = tape.add(tape.cols(wraw, 0, m * b), tape.cols(wraw, m * b, m * b));
  const ad::Var means = tape.tile(tape.add(mean_pos, mean_neg), static_cast<int>(m));
  out.w = tape.scale(tape.sub(sym, means), 0.5);
  return out;
}

Wrapped2D wrap_structures_2d(ad::Tape& tape, const SurrogateSet2D& set, std::span<const double> t,
                             std::span<const double> x, std::span<const double> y,
                             std::span<const double> xi, std::span<const double> eta,
                             std::span<const int> dirs, GradSinks grads) {
  const Index b = static_cast<Index>(t.size());
  const Index m = static_cast<Index>(xi.size());
  const Index q = set.rule.size();
  const int k = 1 + static_cast<int>(dirs.size());
  if (b == 0 || m == 0) throw InvalidArgument("wrap_structures_2d: empty batch");
  if (static_cast<Index>(eta.size()) != m) throw InvalidArgument("xi/eta length mismatch");
  if (y.empty()) throw InvalidArgument("wrap_structures_2d: y coordinates required");

  const Matrix base = point_features(set.options, t, x, y, dirs);
  Wrapped2D out;
  out.points = b;
  out.velocities = m;
  out.rho = tape.softplus(resnet_forward(tape, set.rho_net, sink(grads, 0), tape.constant(base, k)));

  // Sign patterns applied to (xi, eta).
  constexpr int kPP = 0, kMM = 1, kMP = 2, kPM = 3;
  constexpr double sx[4] = {1, -1, -1, 1};
  constexpr double sy[4] = {1, -1, 1, -1};
  auto velocities = [&](std::initializer_list<int> patterns, std::span<const double> a,
                        std::span<const double> c) {
    const Index n = static_cast<Index>(a.size());
    Matrix vel(2, static_cast<Index>(patterns.size()) * n);
    Index col = 0;
    for (int pat : patterns) {
      for (Index i = 0; i < n; ++i, ++col) {
        vel(0, col) = sx[pat] * a[i];
        vel(1, col) = sy[pat] * c[i];
      }
    }
    return vel;
  };
  auto slice = [&](ad::Var raw, Index group) { return tape.cols(raw, group * m * b, m * b); };

  const ad::Var phi_raw =
      resnet_forward(tape, set.phi_net, sink(grads, 1),
                     tape.constant(cross_velocities(base, k, velocities({kPP, kMM, kMP, kPM}, xi, eta)), k));
  out.phi = tape.scale(tape.sub(tape.add(slice(phi_raw, 0), slice(phi_raw, 1)),
                                tape.add(slice(phi_raw, 2), slice(phi_raw, 3))),
                       0.5);

  const ad::Var j1_raw = resnet_forward(
      tape, set.j1_net, sink(grads, 2),
      tape.constant(cross_velocities(base, k, velocities({kPM, kMP}, xi, eta)), k));
  out.j1 = tape.scale(tape.sub(slice(j1_raw, 0), slice(j1_raw, 1)), 0.5);

  const ad::Var j2_raw = resnet_forward(
      tape, set.j2_net, sink(grads, 3),
      tape.constant(cross_velocities(base, k, velocities({kPP, kMM}, xi, eta)), k));
  out.j2 = tape.scale(tape.sub(slice(j2_raw, 0), slice(j2_raw, 1)), 0.5);

  // w_net at the four patterns of the requested velocities, then of the nodes.
  Vector node_xi = set.rule.nodes.array().cos();
  Vector node_eta = set.rule.nodes.array().sin();
  const bool reuse = same_values(xi, node_xi) && same_values(eta, node_eta);
  Matrix wvel = velocities({kPP, kMM, kMP, kPM}, xi, eta);
  if (!reuse) {
    const Matrix nv = velocities({kPP, kMM, kMP, kPM}, std::span<const double>(node_xi.data(), q),
                                 std::span<const double>(node_eta.data(), q));
    Matrix both(2, wvel.cols() + nv.cols());
    both << wvel, nv;
    wvel = std::move(both);
  }
  const ad::Var w_raw = resnet_forward(tape, set.w_net, sink(grads, 4),
                                       tape.constant(cross_velocities(base, k, wvel), k));
  const Index node_off = reuse ? 0 : 4 * m * b;
  const std::span<const double> wq(set.rule.weights.data(), q);
  ad::Var sum = tape.add(tape.add(slice(w_raw, 0), slice(w_raw, 1)),
                         tape.add(slice(w_raw, 2), slice(w_raw, 3)));
  ad::Var mean;
  for (int pat = 0; pat < 4; ++pat) {
    const ad::Var avg =
        tape.group_sum(tape.cols(w_raw, node_off + pat * q * b, q * b), static_cast<int>(q), wq);
    mean = pat == 0 ? avg : tape.add(mean, avg);
  }
  out.w = tape.scale(tape.sub(sum, tape.tile(mean, static_cast<int>(m))), 0.5);
  return out;
}

WrappedPoint1D wrap_structures_1d(const SurrogateSet1D& set, double t, double x, double v) {
  ad::Tape tape;
  const int dirs[] = {kT, kX};
  const double ts[] = {t}, xs[] = {x}, vs[] = {v};
  const Wrapped1D w = wrap_structures_1d(tape, set, ts, xs, vs, dirs);
  const Matrix& r = tape.value(w.rho);
  const Matrix& j = tape.value(w.j);
  const Matrix& ww = tape.value(w.w);
  return {r(0, 0), r(0, 1), r(0, 2), j(0, 0), j(0, 1), j(0, 2), ww(0, 0), ww(0, 1), ww(0, 2)};
}

WrappedPoint2D wrap_structures_2d(const SurrogateSet2D& set, double t, double x, double y,
                                  double xi, double eta) {
  ad::Tape tape;
  const double ts[] = {t}, xs[] = {x}, ys[] = {y}, a[] = {xi}, c[] = {eta};
  const Wrapped2D w = wrap_structures_2d(tape, set, ts, xs, ys, a, c, {});
  return {tape.value(w.rho)(0, 0), tape.value(w.phi)(0, 0), tape.value(w.j1)(0, 0),
          tape.value(w.j2)(0, 0), tape.value(w.w)(0, 0)};
}

Vector density_1d(const SurrogateSet1D& set, std::span<const double> t, std::span<const double> x) {
  const Matrix z = point_features(set.options, t, x, {}, {});
  return ad::softplus_values(resnet_forward(set.rho_net, z)).row(0).transpose();
}

Vector density_2d(const SurrogateSet2D& set, std::span<const double> t, std::span<const double> x,
                  std::span<const double> y) {
  const Matrix z = point_features(set.options, t, x, y, {});
  return ad::softplus_values(resnet_forward(set.rho_net, z)).row(0).transpose();
}

namespace {
constexpr const char* kCheckpointHeader = "apnn-checkpoint 1";
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const NetworkParams*>>& nets) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw IoError("cannot open " + tmp + " for writing");
    os << kCheckpointHeader << '\n';
    char buf[32];
    for (const auto& [net_name, net] : nets) {
      for (const auto& [name, slot] : net->named_slots()) {
        os << net_name << '.' << name << ' ' << slot.rows << ' ' << slot.cols << '\n';
        const auto v = net->view(slot);
        for (Index i = 0; i < v.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%.17g", v.data()[i]);
          os << buf << (i + 1 == v.size() ? '\n' : ' ');
        }
      }
    }
    if (!os) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, NetworkParams*>>& nets) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint " + path);
  std::string header;
  std::getline(is, header);
  if (header != kCheckpointHeader) throw IoError("not a checkpoint file: " + path);
  for (const auto& [net_name, net] : nets) {
    for (const auto& [name, slot] : net->named_slots()) {
      std::string got;
      Index rows = 0, cols = 0;
      if (!(is >> got >> rows >> cols)) throw IoError("truncated checkpoint " + path);
      const std::string want = net_name + "." + name;
      if (got != want || rows != slot.rows || cols != slot.cols) {
        throw IoError("checkpoint array " + got + " (" + std::to_string(rows) + "x" +
                      std::to_string(cols) + ") does not match " + want + " (" +
                      std::to_string(slot.rows) + "x" + std::to_string(slot.cols) + ")");
      }
      auto v = net->view(slot);
      for (Index i = 0; i < v.size(); ++i) {
        std::string tok;
        if (!(is >> tok)) throw IoError("truncated checkpoint " + path);
        v.data()[i] = std::strtod(tok.c_str(), nullptr);
      }
    }
  }
}

}  // namespace apnn
