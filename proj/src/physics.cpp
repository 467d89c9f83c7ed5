#include "apnn/physics.hpp"

#include <cmath>
#include <numbers>

#include "apnn/errors.hpp"

namespace apnn {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

ScaleParameter::ScaleParameter(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be a positive finite number");
  }
}

std::array<double, 3> residuals_1d(const ParityFields1D& f, double v, ScaleParameter eps,
                                   double avg_v_jx) {
  const double e2 = eps.squared();
  return {f.rho_t + avg_v_jx,                                    //
          e2 * f.j_t + v * f.rho_x + e2 * v * f.w_x + f.j,       //
          e2 * f.w_t + f.w + v * f.j_x - avg_v_jx};
}

double flux_divergence_2d(const ParityFields2D& f, double xi, double eta) {
  return xi * (f.j1_x + f.j2_x) + eta * (f.j2_y - f.j1_y);
}

std::array<double, 5> residuals_2d(const ParityFields2D& f, double xi, double eta,
                                   ScaleParameter eps, double avg_flux, PhiConvention conv) {
  const double e2 = eps.squared();
  const double flux = flux_divergence_2d(f, xi, eta);
  const double phi_transport = xi * (f.j2_x - f.j1_x) + eta * (f.j1_y + f.j2_y);
  const double d3 = conv == PhiConvention::kNonStiff
                        ? e2 * f.phi_t + e2 * phi_transport + f.phi
                        : f.phi_t + phi_transport + f.phi / e2;
  return {2.0 * f.rho_t + avg_flux,
          2.0 * e2 * f.w_t + flux - avg_flux + 2.0 * f.w,
          d3,
          e2 * (f.j1_t + f.j2_t) + (f.j1 + f.j2) + 2.0 * xi * (f.rho_x + e2 * f.w_x) + eta * f.phi_y,
          e2 * (f.j2_t - f.j1_t) + (f.j2 - f.j1) + xi * f.phi_x + 2.0 * eta * (f.rho_y + e2 * f.w_y)};
}

double LossBreakdown::term(const std::string& name) const {
  for (const auto& [n, v] : terms)
    if (n == name) return v;
  throw InvalidArgument("no loss term named " + name);
}

Decomposed1D decompose_f_1d(std::span<const double> f_plus, std::span<const double> f_minus,
                            const QuadratureRule& rule, ScaleParameter eps) {
  const Index q = rule.size();
  if (static_cast<Index>(f_plus.size()) != q || static_cast<Index>(f_minus.size()) != q) {
    throw InvalidArgument("decompose_f_1d: tabulated f must match the rule's nodes");
  }
  Decomposed1D d;
  Vector r(q);
  d.j.resize(q);
  for (Index i = 0; i < q; ++i) {
    r[i] = 0.5 * (f_plus[i] + f_minus[i]);
    d.j[i] = (f_plus[i] - f_minus[i]) / (2.0 * eps.value());
  }
  d.rho = average_1d(std::span<const double>(r.data(), q), rule);
  d.w = (r.array() - d.rho) / eps.squared();
  return d;
}

Decomposed2D decompose_f_2d(std::span<const double> f_pp, std::span<const double> f_mm,
                            std::span<const double> f_pm, std::span<const double> f_mp,
                            const QuadratureRule& rule, ScaleParameter eps) {
  const Index q = rule.size();
  for (auto s : {f_pp, f_mm, f_pm, f_mp}) {
    if (static_cast<Index>(s.size()) != q) {
      throw InvalidArgument("decompose_f_2d: tabulated f must match the rule's nodes");
    }
  }
  Decomposed2D d;
  Vector rbar(q);
  d.phi.resize(q);
  d.j1.resize(q);
  d.j2.resize(q);
  for (Index i = 0; i < q; ++i) {
    const double r1 = 0.5 * (f_pm[i] + f_mp[i]);
    const double r2 = 0.5 * (f_pp[i] + f_mm[i]);
    d.j1[i] = (f_pm[i] - f_mp[i]) / (2.0 * eps.value());
    d.j2[i] = (f_pp[i] - f_mm[i]) / (2.0 * eps.value());
    d.phi[i] = r2 - r1;
    rbar[i] = 0.5 * (r1 + r2);
  }
  d.rho = rule.weights.dot(rbar);
  d.w = (rbar.array() - d.rho) / eps.squared();
  return d;
}

std::pair<double, double> reconstruct_f_1d(double rho, double j, double w, ScaleParameter eps) {
  const double r = rho + eps.squared() * w;
  return {r + eps.value() * j, r - eps.value() * j};
}

QuadrantValues reconstruct_f_2d(double rho, double phi, double j1, double j2, double w,
                                ScaleParameter eps) {
  const double base = rho + eps.squared() * w;
  const double r2 = base + 0.5 * phi;
  const double r1 = base - 0.5 * phi;
  return {r2 + eps.value() * j2, r2 - eps.value() * j2, r1 + eps.value() * j1,
          r1 - eps.value() * j1};
}

InitialPoint1D initial_fields_1d(const InitialCondition1D& f, ScaleParameter eps,
                                 const QuadratureRule& rule, double x, double v) {
  const Index q = rule.size();
  Vector fp(q), fm(q);
  for (Index i = 0; i < q; ++i) {
    fp[i] = f(x, rule.nodes[i]);
    fm[i] = f(x, -rule.nodes[i]);
  }
  const Decomposed1D d = decompose_f_1d({fp.data(), size_t(q)}, {fm.data(), size_t(q)}, rule, eps);
  const double r = 0.5 * (f(x, v) + f(x, -v));
  return {d.rho, (f(x, v) - f(x, -v)) / (2.0 * eps.value()), (r - d.rho) / eps.squared()};
}

InitialPoint2D initial_fields_2d(const InitialCondition2D& f, ScaleParameter eps,
                                 const QuadratureRule& rule, double x, double y, double xi,
                                 double eta) {
  const Index q = rule.size();
  Vector pp(q), mm(q), pm(q), mp(q);
  for (Index i = 0; i < q; ++i) {
    const double a = std::cos(rule.nodes[i]), b = std::sin(rule.nodes[i]);
    pp[i] = f(x, y, a, b);
    mm[i] = f(x, y, -a, -b);
    pm[i] = f(x, y, a, -b);
    mp[i] = f(x, y, -a, b);
  }
  auto sp = [q](const Vector& v) { return std::span<const double>(v.data(), size_t(q)); };
  const Decomposed2D d = decompose_f_2d(sp(pp), sp(mm), sp(pm), sp(mp), rule, eps);
  const double fpp = f(x, y, xi, eta), fmm = f(x, y, -xi, -eta);
  const double fpm = f(x, y, xi, -eta), fmp = f(x, y, -xi, eta);
  const double r1 = 0.5 * (fpm + fmp), r2 = 0.5 * (fpp + fmm);
  return {d.rho, r2 - r1, (fpm - fmp) / (2.0 * eps.value()), (fpp - fmm) / (2.0 * eps.value()),
          (0.5 * (r1 + r2) - d.rho) / eps.squared()};
}

double CosineSeries1D::operator()(double x) const {
  double s = mean;
  for (const auto& [k, a] : modes) s += a * std::cos(kTwoPi * k * x);
  return s;
}

CosineSeries1D CosineSeries1D::fit(const std::function<double(double)>& f, int max_k, double tol) {
  if (max_k < 0) throw InvalidArgument("max_k must be >= 0");
  const int n = 4 * max_k + 16;
  Vector samples(n);
  for (int i = 0; i < n; ++i) samples[i] = f(static_cast<double>(i) / n);
  CosineSeries1D s;
  s.mean = samples.mean();
  for (int k = 1; k <= max_k; ++k) {
    double a = 0.0;
    for (int i = 0; i < n; ++i) a += samples[i] * std::cos(kTwoPi * k * i / n);
    a *= 2.0 / n;
    if (std::abs(a) > tol) s.modes.emplace_back(k, a);
  }
  // Check on a staggered grid so aliasing and sine content are caught.
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.37) / n;
    if (std::abs(s(x) - f(x)) > tol * std::max(1.0, std::abs(f(x)))) {
      throw UnsupportedInput("initial data is not a cosine series with k <= " +
                             std::to_string(max_k));
    }
  }
  return s;
}

double CosineSeries2D::operator()(double x, double y) const {
  double s = mean;
  for (const Mode& m : modes) s += m.amplitude * std::cos(kTwoPi * m.kx * x) * std::cos(kTwoPi * m.ky * y);
  return s;
}

CosineSeries2D CosineSeries2D::fit(const std::function<double(double, double)>& f, int max_k,
                                   double tol) {
  if (max_k < 0) throw InvalidArgument("max_k must be >= 0");
  const int n = 4 * max_k + 16;
  Matrix samples(n, n);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) samples(i, l) = f(double(i) / n, double(l) / n);
  CosineSeries2D s;
  s.mean = samples.mean();
  for (int kx = 0; kx <= max_k; ++kx) {
    for (int ky = 0; ky <= max_k; ++ky) {
      if (kx == 0 && ky == 0) continue;
      double a = 0.0;
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l)
          a += samples(i, l) * std::cos(kTwoPi * kx * i / n) * std::cos(kTwoPi * ky * l / n);
      a *= (kx ? 2.0 : 1.0) * (ky ? 2.0 : 1.0) / (double(n) * n);
      if (std::abs(a) > tol) s.modes.push_back({kx, ky, a});
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      const double x = (i + 0.37) / n, y = (l + 0.61) / n;
      if (std::abs(s(x, y) - f(x, y)) > tol * std::max(1.0, std::abs(f(x, y)))) {
        throw UnsupportedInput("initial data is not a cosine series with k <= " +
                               std::to_string(max_k));
      }
    }
  }
  return s;
}

LimitPoint limit_solution_1d(double t, double x, const CosineSeries1D& ic, double v) {
  double rho = ic.mean, rho_xx = 0.0;
  for (const auto& [k, a] : ic.modes) {
    const double kk = kTwoPi * k;
    const double term = a * std::exp(-kk * kk * t / 3.0) * std::cos(kk * x);
    rho += term;
    rho_xx -= kk * kk * term;
  }
  return {rho, (v * v - 1.0 / 3.0) * rho_xx};
}

LimitPoint limit_solution_2d(double t, double x, double y, const CosineSeries2D& ic, double xi,
                             double eta) {
  double rho = ic.mean, rho_xx = 0.0, rho_yy = 0.0;
  for (const auto& m : ic.modes) {
    const double kx = kTwoPi * m.kx, ky = kTwoPi * m.ky;
    const double term =
        m.amplitude * std::exp(-(kx * kx + ky * ky) * t / 2.0) * std::cos(kx * x) * std::cos(ky * y);
    rho += term;
    rho_xx -= kx * kx * term;
    rho_yy -= ky * ky * term;
  }
  return {rho, (xi * xi - 0.5) * rho_xx + (eta * eta - 0.5) * rho_yy};
}

InitialCondition1D benchmark_initial_condition_1d() {
  return [](double x, double v) {
    return (1.0 + std::cos(4.0 * kPi * x)) * std::exp(-0.5 * v * v) / std::sqrt(kTwoPi);
  };
}

InitialCondition2D benchmark_initial_condition_2d() {
  return [](double x, double y, double xi, double eta) {
    const double p = 1.0 + 0.5 * (std::cos(kTwoPi * x) + std::cos(kTwoPi * y));
    return p * std::exp(-0.5 * (xi * xi + eta * eta)) / std::sqrt(kTwoPi);
  };
}

namespace {

// Column scale vector: value per velocity repeated over b points (velocity-major).
Vector per_velocity(const Vector& vals, Index b) {
  Vector out(vals.size() * b);
  for (Index q = 0; q < vals.size(); ++q) out.segment(q * b, b).setConstant(vals[q]);
  return out;
}

ad::Var sum_scalars(ad::Tape& tape, std::initializer_list<ad::Var> vars) {
  ad::Var acc;
  for (ad::Var v : vars) acc = acc.valid() ? tape.add(acc, v) : v;
  return acc;
}

ad::Var constant_row(ad::Tape& tape, const Vector& v) {
  return tape.constant(Matrix(v.transpose()), 1);
}

struct Residual1D {
  ad::Var d1, d2, d3;
};

Residual1D residual_nodes_1d(ad::Tape& tape, const SurrogateSet1D& set, const CollocationBatch& batch,
                             double e2, GradSinks grads) {
  const Index b = static_cast<Index>(batch.t.size());
  const Index q = set.rule.size();
  const std::span<const double> nodes(set.rule.nodes.data(), size_t(q));
  const int dirs[] = {kT, kX};
  const Wrapped1D f = wrap_structures_1d(tape, set, batch.t, batch.x, nodes, dirs, grads);
  const Vector vcols = per_velocity(set.rule.nodes, b);
  const std::span<const double> wq(set.rule.weights.data(), size_t(q));
  const int nq = static_cast<int>(q);

  const ad::Var rho_t = tape.block(f.rho, 1), rho_x = tape.block(f.rho, 2);
  const ad::Var j = tape.block(f.j, 0), j_t = tape.block(f.j, 1), j_x = tape.block(f.j, 2);
  const ad::Var w = tape.block(f.w, 0), w_t = tape.block(f.w, 1), w_x = tape.block(f.w, 2);

  const ad::Var v_jx = tape.scale_cols(j_x, vcols);
  const ad::Var avg = tape.group_sum(v_jx, nq, wq);
  Residual1D r;
  r.d1 = tape.add(rho_t, avg);
  r.d2 = tape.add(tape.add(tape.scale(j_t, e2), tape.scale_cols(tape.tile(rho_x, nq), vcols)),
                  tape.add(tape.scale(tape.scale_cols(w_x, vcols), e2), j));
  r.d3 = tape.sub(tape.add(tape.add(tape.scale(w_t, e2), w), v_jx), tape.tile(avg, nq));
  return r;
}

}  // namespace

LossGraph build_loss_1d(ad::Tape& tape, const SurrogateSet1D& set, const CollocationBatch& batch,
                        const LossOptions& opts, GradSinks grads) {
  const Index b = static_cast<Index>(batch.t.size());
  const Index b0 = static_cast<Index>(batch.x0.size());
  if (b == 0 || b0 == 0) throw InvalidArgument("loss: interior and initial batches must be nonempty");
  if (!opts.ic1) throw InvalidArgument("loss: 1D initial condition missing");
  const ScaleParameter eps(set.epsilon);
  const double e2 = eps.squared();
  const Index q = set.rule.size();
  const std::span<const double> nodes(set.rule.nodes.data(), size_t(q));
  const LossWeights& lw = opts.weights;
  LossGraph g;

  const Residual1D r = residual_nodes_1d(tape, set, batch, e2, grads);
  const Vector mean_b = Vector::Constant(b, 1.0 / b);
  const Vector quad_b = per_velocity(set.rule.weights, b) / double(b);
  const ad::Var l1 = tape.weighted_square_sum(r.d1, mean_b);
  const ad::Var l2 = tape.weighted_square_sum(r.d2, quad_b);
  const ad::Var l3 = tape.weighted_square_sum(r.d3, quad_b);
  g.residual = sum_scalars(tape, {l1, l2, l3});
  g.terms = {{"d1", l1}, {"d2", l2}, {"d3", l3}};

  // Initial layer at t = 0.
  const std::vector<double> zeros(b0, 0.0);
  const Wrapped1D f0 = wrap_structures_1d(tape, set, zeros, batch.x0, nodes, {}, grads);
  Vector rho_ic(b0), j_ic(q * b0), w_ic(q * b0);
  Vector fp(q), fm(q);
  for (Index p = 0; p < b0; ++p) {
    for (Index i = 0; i < q; ++i) {
      fp[i] = opts.ic1(batch.x0[p], set.rule.nodes[i]);
      fm[i] = opts.ic1(batch.x0[p], -set.rule.nodes[i]);
    }
    const Decomposed1D d = decompose_f_1d({fp.data(), size_t(q)}, {fm.data(), size_t(q)}, set.rule, eps);
    rho_ic[p] = d.rho;
    for (Index i = 0; i < q; ++i) {
      j_ic[i * b0 + p] = d.j[i];
      w_ic[i * b0 + p] = d.w[i];
    }
  }
  const Vector quad_b0 = per_velocity(set.rule.weights, b0) / double(b0);
  const ad::Var ic_rho = tape.weighted_square_sum(tape.sub(f0.rho, constant_row(tape, rho_ic)),
                                                  Vector::Constant(b0, lw.lambda1 / b0));
  const ad::Var ic_j = tape.weighted_square_sum(tape.sub(f0.j, constant_row(tape, j_ic)),
                                                (lw.lambda2 * e2) * quad_b0);
  const ad::Var ic_w = tape.weighted_square_sum(tape.sub(f0.w, constant_row(tape, w_ic)),
                                                (lw.lambda2 * e2 * e2) * quad_b0);
  g.initial = sum_scalars(tape, {ic_rho, ic_j, ic_w});
  g.terms.insert(g.terms.end(), {{"ic_rho", ic_rho}, {"ic_j", ic_j}, {"ic_w", ic_w}});

  if (opts.boundary && !batch.tb.empty()) {
    // Periodic matching of the x = 0 and x = 1 traces.
    const Index nb = static_cast<Index>(batch.tb.size());
    const std::vector<double> left(nb, 0.0), right(nb, 1.0);
    const Wrapped1D fl = wrap_structures_1d(tape, set, batch.tb, left, nodes, {}, grads);
    const Wrapped1D fr = wrap_structures_1d(tape, set, batch.tb, right, nodes, {}, grads);
    const Vector quad_nb = per_velocity(set.rule.weights, nb) / double(nb);
    const ad::Var bc_rho = tape.weighted_square_sum(tape.sub(fl.rho, fr.rho),
                                                    Vector::Constant(nb, lw.lambda3 / nb));
    const ad::Var bc_w = tape.weighted_square_sum(tape.sub(fl.w, fr.w), lw.lambda4 * quad_nb);
    const ad::Var bc_j = tape.weighted_square_sum(tape.sub(fl.j, fr.j), lw.lambda4 * quad_nb);
    g.boundary = sum_scalars(tape, {bc_rho, bc_w, bc_j});
    g.terms.insert(g.terms.end(), {{"bc_rho", bc_rho}, {"bc_w", bc_w}, {"bc_j", bc_j}});
  }

  g.total = g.boundary.valid() ? sum_scalars(tape, {g.residual, g.initial, g.boundary})
                               : tape.add(g.residual, g.initial);
  return g;
}

double residual_limit_loss_1d(const SurrogateSet1D& set, const CollocationBatch& batch) {
  ad::Tape tape;
  const Index b = static_cast<Index>(batch.t.size());
  if (b == 0) throw InvalidArgument("loss: interior batch must be nonempty");
  const Residual1D r = residual_nodes_1d(tape, set, batch, 0.0, {});
  const Vector quad_b = per_velocity(set.rule.weights, b) / double(b);
  return tape.scalar(tape.weighted_square_sum(r.d1, Vector::Constant(b, 1.0 / b))) +
         tape.scalar(tape.weighted_square_sum(r.d2, quad_b)) +
         tape.scalar(tape.weighted_square_sum(r.d3, quad_b));
}

LossGraph build_loss_2d(ad::Tape& tape, const SurrogateSet2D& set, const CollocationBatch& batch,
                        const LossOptions& opts, GradSinks grads) {
  const Index b = static_cast<Index>(batch.t.size());
  const Index b0 = static_cast<Index>(batch.x0.size());
  if (b == 0 || b0 == 0) throw InvalidArgument("loss: interior and initial batches must be nonempty");
  if (batch.y.size() != batch.t.size() || batch.y0.size() != batch.x0.size()) {
    throw InvalidArgument("loss: 2D batch needs y coordinates");
  }
  if (!opts.ic2) throw InvalidArgument("loss: 2D initial condition missing");
  const ScaleParameter eps(set.epsilon);
  const double e2 = eps.squared();
  const Index q = set.rule.size();
  const int nq = static_cast<int>(q);
  const Vector xi_n = set.rule.nodes.array().cos();
  const Vector eta_n = set.rule.nodes.array().sin();
  const std::span<const double> xs(xi_n.data(), size_t(q)), es(eta_n.data(), size_t(q));
  const std::span<const double> wq(set.rule.weights.data(), size_t(q));
  const LossWeights& lw = opts.weights;
  LossGraph g;

  const int dirs[] = {kT, kX, kY};
  const Wrapped2D f = wrap_structures_2d(tape, set, batch.t, batch.x, batch.y, xs, es, dirs, grads);
  const Vector xi_c = per_velocity(xi_n, b), eta_c = per_velocity(eta_n, b);
  const ad::Var jp = tape.add(f.j1, f.j2);  // j1 + j2
  const ad::Var jm = tape.sub(f.j2, f.j1);  // j2 - j1
  auto blk = [&](ad::Var v, int k) { return tape.block(v, k); };
  auto xi_times = [&](ad::Var v) { return tape.scale_cols(v, xi_c); };
  auto eta_times = [&](ad::Var v) { return tape.scale_cols(v, eta_c); };

  const ad::Var flux = tape.add(xi_times(blk(jp, 2)), eta_times(blk(jm, 3)));
  const ad::Var avg = tape.group_sum(flux, nq, wq);
  const ad::Var d1 = tape.add(tape.scale(blk(f.rho, 1), 2.0), avg);
  const ad::Var d2 = tape.add(tape.add(tape.scale(blk(f.w, 1), 2.0 * e2), tape.sub(flux, tape.tile(avg, nq))),
                              tape.scale(blk(f.w, 0), 2.0));
  const ad::Var phi_transport = tape.add(xi_times(blk(jm, 2)), eta_times(blk(jp, 3)));
  const ad::Var d3 =
      opts.phi_convention == PhiConvention::kNonStiff
          ? tape.add(tape.scale(tape.add(blk(f.phi, 1), phi_transport), e2), blk(f.phi, 0))
          : tape.add(tape.add(blk(f.phi, 1), phi_transport), tape.scale(blk(f.phi, 0), 1.0 / e2));
  const ad::Var rho_w_x = tape.add(tape.tile(blk(f.rho, 2), nq), tape.scale(blk(f.w, 2), e2));
  const ad::Var rho_w_y = tape.add(tape.tile(blk(f.rho, 3), nq), tape.scale(blk(f.w, 3), e2));
  const ad::Var d4 = tape.add(tape.add(tape.scale(blk(jp, 1), e2), blk(jp, 0)),
                              tape.add(tape.scale(xi_times(rho_w_x), 2.0), eta_times(blk(f.phi, 3))));
  const ad::Var d5 = tape.add(tape.add(tape.scale(blk(jm, 1), e2), blk(jm, 0)),
                              tape.add(xi_times(blk(f.phi, 2)), tape.scale(eta_times(rho_w_y), 2.0)));

  const Vector quad_b = per_velocity(set.rule.weights, b) / double(b);
  const ad::Var l1 = tape.weighted_square_sum(d1, Vector::Constant(b, 1.0 / b));
  const ad::Var l2 = tape.weighted_square_sum(d2, quad_b);
  const ad::Var l3 = tape.weighted_square_sum(d3, quad_b);
  const ad::Var l4 = tape.weighted_square_sum(d4, quad_b);
  const ad::Var l5 = tape.weighted_square_sum(d5, quad_b);
  g.residual = sum_scalars(tape, {l1, l2, l3, l4, l5});
  g.terms = {{"d1", l1}, {"d2", l2}, {"d3", l3}, {"d4", l4}, {"d5", l5}};

  const std::vector<double> zeros(b0, 0.0);
  const Wrapped2D f0 = wrap_structures_2d(tape, set, zeros, batch.x0, batch.y0, xs, es, {}, grads);
  Vector rho_ic(b0), phi_ic(q * b0), jp_ic(q * b0), jm_ic(q * b0), w_ic(q * b0);
  Vector pp(q), mm(q), pm(q), mp(q);
  auto sp = [q](const Vector& v) { return std::span<const double>(v.data(), size_t(q)); };
  for (Index p = 0; p < b0; ++p) {
    const double x = batch.x0[p], y = batch.y0[p];
    for (Index i = 0; i < q; ++i) {
      pp[i] = opts.ic2(x, y, xi_n[i], eta_n[i]);
      mm[i] = opts.ic2(x, y, -xi_n[i], -eta_n[i]);
      pm[i] = opts.ic2(x, y, xi_n[i], -eta_n[i]);
      mp[i] = opts.ic2(x, y, -xi_n[i], eta_n[i]);
    }
    const Decomposed2D d = decompose_f_2d(sp(pp), sp(mm), sp(pm), sp(mp), set.rule, eps);
    rho_ic[p] = d.rho;
    for (Index i = 0; i < q; ++i) {
      phi_ic[i * b0 + p] = d.phi[i];
      jp_ic[i * b0 + p] = d.j1[i] + d.j2[i];
      jm_ic[i * b0 + p] = d.j2[i] - d.j1[i];
      w_ic[i * b0 + p] = d.w[i];
    }
  }
  const Vector quad_b0 = per_velocity(set.rule.weights, b0) / double(b0);
  const ad::Var ic_rho = tape.weighted_square_sum(tape.sub(f0.rho, constant_row(tape, rho_ic)),
                                                  Vector::Constant(b0, lw.lambda1 / b0));
  const ad::Var ic_w = tape.weighted_square_sum(tape.sub(f0.w, constant_row(tape, w_ic)),
                                                (lw.lambda2 * e2 * e2) * quad_b0);
  const ad::Var ic_phi = tape.weighted_square_sum(tape.sub(f0.phi, constant_row(tape, phi_ic)),
                                                  lw.lambda2 * quad_b0);
  const ad::Var ic_jp = tape.weighted_square_sum(
      tape.sub(tape.add(f0.j1, f0.j2), constant_row(tape, jp_ic)), (lw.lambda2 * e2) * quad_b0);
  const ad::Var ic_jm = tape.weighted_square_sum(
      tape.sub(tape.sub(f0.j2, f0.j1), constant_row(tape, jm_ic)), (lw.lambda2 * e2) * quad_b0);
  g.initial = sum_scalars(tape, {ic_rho, ic_w, ic_phi, ic_jp, ic_jm});
  g.terms.insert(g.terms.end(), {{"ic_rho", ic_rho}, {"ic_w", ic_w}, {"ic_phi", ic_phi},
                                 {"ic_jp", ic_jp}, {"ic_jm", ic_jm}});

  if (opts.boundary && !batch.tb.empty()) {
    // Both face pairs stacked: x-faces (0,s)/(1,s) then y-faces (s,0)/(s,1).
    const Index nb = static_cast<Index>(batch.tb.size());
    std::vector<double> t2(batch.tb), lx, ly, rx, ry;
    t2.insert(t2.end(), batch.tb.begin(), batch.tb.end());
    lx.assign(nb, 0.0);
    lx.insert(lx.end(), batch.sb.begin(), batch.sb.end());
    ly.assign(batch.sb.begin(), batch.sb.end());
    ly.insert(ly.end(), nb, 0.0);
    rx.assign(nb, 1.0);
    rx.insert(rx.end(), batch.sb.begin(), batch.sb.end());
    ry.assign(batch.sb.begin(), batch.sb.end());
    ry.insert(ry.end(), nb, 1.0);
    const Wrapped2D fl = wrap_structures_2d(tape, set, t2, lx, ly, xs, es, {}, grads);
    const Wrapped2D fr = wrap_structures_2d(tape, set, t2, rx, ry, xs, es, {}, grads);
    const Vector quad_nb = per_velocity(set.rule.weights, 2 * nb) / double(2 * nb);
    const ad::Var bc_rho = tape.weighted_square_sum(tape.sub(fl.rho, fr.rho),
                                                    Vector::Constant(2 * nb, lw.lambda3 / (2.0 * nb)));
    const ad::Var bc_w = tape.weighted_square_sum(tape.sub(fl.w, fr.w), lw.lambda4 * quad_nb);
    const ad::Var bc_phi = tape.weighted_square_sum(tape.sub(fl.phi, fr.phi), lw.lambda4 * quad_nb);
    const ad::Var bc_jp = tape.weighted_square_sum(
        tape.sub(tape.add(fl.j1, fl.j2), tape.add(fr.j1, fr.j2)), lw.lambda4 * quad_nb);
    const ad::Var bc_jm = tape.weighted_square_sum(
        tape.sub(tape.sub(fl.j2, fl.j1), tape.sub(fr.j2, fr.j1)), lw.lambda4 * quad_nb);
    g.boundary = sum_scalars(tape, {bc_rho, bc_w, bc_phi, bc_jp, bc_jm});
    g.terms.insert(g.terms.end(), {{"bc_rho", bc_rho}, {"bc_w", bc_w}, {"bc_phi", bc_phi},
                                   {"bc_jp", bc_jp}, {"bc_jm", bc_jm}});
  }

  g.total = g.boundary.valid() ? sum_scalars(tape, {g.residual, g.initial, g.boundary})
                               : tape.add(g.residual, g.initial);
  return g;
}

LossBreakdown read_breakdown(const ad::Tape& tape, const LossGraph& g, const LossWeights& w) {
  LossBreakdown out;
  out.residual = tape.scalar(g.residual);
  out.initial = tape.scalar(g.initial);
  out.boundary = g.boundary.valid() ? tape.scalar(g.boundary) : 0.0;
  out.lambdas = w;
  for (const auto& [name, v] : g.terms) out.terms.emplace_back(name, tape.scalar(v));
  return out;
}

LossBreakdown loss_total(const SurrogateSet1D& set, const CollocationBatch& batch,
                         const LossOptions& opts) {
  ad::Tape tape;
  const LossGraph g = build_loss_1d(tape, set, batch, opts);
  return read_breakdown(tape, g, opts.weights);
}

LossBreakdown loss_total(const SurrogateSet2D& set, const CollocationBatch& batch,
                         const LossOptions& opts) {
  ad::Tape tape;
  const LossGraph g = build_loss_2d(tape, set, batch, opts);
  return read_breakdown(tape, g, opts.weights);
}

}  // namespace apnn
