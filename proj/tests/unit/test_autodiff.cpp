#include <doctest.h>

#include <cmath>

#include "apnn/autodiff.hpp"
#include "apnn/random.hpp"

using namespace apnn;
using namespace apnn::ad;

namespace {

Matrix random_matrix(Index r, Index c, Xoshiro256& rng, double s = 1.0) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = s * (2.0 * rng.uniform() - 1.0);
  return m;
}

// Small composite mixing primal and tangent blocks:
// h = tanh(W x + b), m = h * softplus(h), loss = sum_c w_c (m + dm)_{0c}^2.
struct Toy {
  Matrix W, b, x;
  Vector wts;

  double loss(Matrix* gW = nullptr, Matrix* gb = nullptr) const {
    Tape tape;
    ParamRef pw{W.data(), gW ? gW->data() : nullptr, W.rows(), W.cols()};
    ParamRef pb{b.data(), gb ? gb->data() : nullptr, b.rows(), 1};
    Var in = tape.constant(x, 2);
    Var h = tape.tanh(tape.affine(pw, pb, in));
    Var m = tape.mul(h, tape.softplus(h));
    Var r0 = tape.add(tape.block(m, 0), tape.block(m, 1));
    // Reduce row 0 only.
    Matrix sel = Matrix::Zero(1, W.rows());
    sel(0, 0) = 1.0;
    Matrix zero = Matrix::Zero(1, 1);
    ParamRef ps{sel.data(), nullptr, 1, W.rows()};
    ParamRef pz{zero.data(), nullptr, 1, 1};
    Var picked = tape.affine(ps, pz, r0);
    Var l = tape.weighted_square_sum(picked, wts);
    if (gW) tape.backward(l);
    return tape.scalar(l);
  }
};

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("clamp and its derivative") {
    CHECK(ad::clamp(2.0, 0.05, 1.0) == 1.0);
    CHECK(ad::clamp(0.01, 0.05, 1.0) == 0.05);
    CHECK(ad::clamp(0.3, 0.05, 1.0) == 0.3);
    CHECK(clamp_derivative(0.3, 0.05, 1.0) == 1.0);
    CHECK(clamp_derivative(1.0, 0.05, 1.0) == 0.0);
    CHECK(clamp_derivative(0.05, 0.05, 1.0) == 0.0);
    CHECK(clamp_derivative(7.0, 0.05, 1.0) == 0.0);
    CHECK_THROWS_AS(ad::clamp(0.0, 1.0, 0.0), InvalidArgument);
  }

  TEST_CASE("elementwise kernels") {
    Matrix a(1, 5);
    a << -800.0, -1.0, 0.0, 2.5, 800.0;
    const Matrix t = tanh_values(a), s = softplus_values(a), g = sigmoid_values(a);
    for (Index c = 0; c < a.cols(); ++c) {
      CHECK(t(0, c) == doctest::Approx(std::tanh(a(0, c))).epsilon(1e-14));
      CHECK(std::isfinite(s(0, c)));
      CHECK(s(0, c) >= 0.0);
    }
    CHECK(s(0, 4) == doctest::Approx(800.0));
    CHECK(s(0, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(g(0, 2) == 0.5);
  }

  TEST_CASE("tangent blocks match derivatives of tanh(a z + c)") {
    // d/dz tanh(a z + c) = a (1 - tanh^2)
    Matrix w(1, 2), b(1, 1);
    w << 0.7, -1.3;
    b << 0.2;
    auto f = [&](Tape& tape, Var z) {
      return tape.tanh(tape.affine({w.data(), nullptr, 1, 2}, {b.data(), nullptr, 1, 1}, z));
    };
    Vector in(2);
    in << 0.4, -0.9;
    DerivativeRequest req{{1, 0}};
    const TangentResult r = forward_with_tangents(f, 2, in, req);
    const double u = std::tanh(0.7 * 0.4 - 1.3 * -0.9 + 0.2);
    CHECK(r.outputs[0] == doctest::Approx(u).epsilon(1e-14));
    CHECK(r.partials(0, 0) == doctest::Approx(-1.3 * (1 - u * u)).epsilon(1e-14));
    CHECK(r.partials(1, 0) == doctest::Approx(0.7 * (1 - u * u)).epsilon(1e-14));
  }

  TEST_CASE("derivative requests are validated") {
    auto f = [](Tape& tape, Var z) { return z; };
    Vector in = Vector::Zero(3);
    CHECK_THROWS_AS(forward_with_tangents(f, 3, in, DerivativeRequest{{0, 0}}), InvalidRequest);
    CHECK_THROWS_AS(forward_with_tangents(f, 3, in, DerivativeRequest{{3}}), InvalidRequest);
    CHECK_THROWS_AS(forward_with_tangents(f, 2, in, DerivativeRequest{{0}}), InvalidRequest);
    CHECK_NOTHROW(forward_with_tangents(f, 3, in, DerivativeRequest{{2, 0}}));
  }

  TEST_CASE("parameter gradients through tangents match central differences") {
    Xoshiro256 rng(7, 0);
    Toy toy;
    toy.W = random_matrix(3, 2, rng);
    toy.b = random_matrix(3, 1, rng);
    // Two blocks: primal columns then tangent columns (d/d input 0).
    toy.x = Matrix::Zero(2, 8);
    toy.x.leftCols(4) = random_matrix(2, 4, rng);
    toy.x.row(0).rightCols(4).setOnes();
    toy.wts = Vector::LinSpaced(4, 0.5, 2.0);

    Matrix gW = Matrix::Zero(3, 2), gb = Matrix::Zero(3, 1);
    toy.loss(&gW, &gb);
    const double h = 1e-6;
    for (Index i = 0; i < toy.W.size(); ++i) {
      Toy p = toy, m = toy;
      p.W.data()[i] += h;
      m.W.data()[i] -= h;
      const double fd = (p.loss() - m.loss()) / (2 * h);
      CHECK(gW.data()[i] == doctest::Approx(fd).epsilon(1e-7).scale(1e-3));
    }
    for (Index i = 0; i < toy.b.size(); ++i) {
      Toy p = toy, m = toy;
      p.b(i) += h;
      m.b(i) -= h;
      const double fd = (p.loss() - m.loss()) / (2 * h);
      CHECK(gb(i) == doctest::Approx(fd).epsilon(1e-7).scale(1e-3));
    }
  }

  TEST_CASE("blend gradient vanishes once beta is clamped") {
    Matrix keep = Matrix::Constant(1, 2, 1.0), branch = Matrix::Constant(1, 2, 3.0);
    for (double beta : {0.5, 1.5, 0.01}) {
      double g = 0.0;
      Tape tape;
      ParamRef pb{&beta, &g, 1, 1};
      Var out = tape.blend(pb, 0.05, 1.0, tape.constant(keep), tape.constant(branch));
      const double c = ad::clamp(beta, 0.05, 1.0);
      CHECK(tape.value(out)(0, 0) == doctest::Approx(c * 1.0 + (1 - c) * 3.0));
      tape.backward(tape.weighted_square_sum(out, Vector::Ones(2)));
      // d/dbeta sum (3 - 2 beta)^2 = -4 (3 - 2 beta) per column
      const double expect = beta > 0.05 && beta < 1.0 ? 2 * -4.0 * (3 - 2 * beta) : 0.0;
      CHECK(g == doctest::Approx(expect));
    }
  }

  TEST_CASE("group_sum, tile and scale_cols agree with direct arithmetic") {
    Matrix x(1, 6);
    x << 1, 2, 3, 4, 5, 6;
    const double w[3] = {0.5, -1.0, 2.0};
    Tape tape;
    Var v = tape.constant(x);
    Var g = tape.group_sum(v, 3, w);
    CHECK(tape.width(g) == 2);
    CHECK(tape.value(g)(0, 0) == doctest::Approx(0.5 * 1 - 3 + 2 * 5));
    CHECK(tape.value(g)(0, 1) == doctest::Approx(0.5 * 2 - 4 + 2 * 6));
    Var t = tape.tile(g, 3);
    CHECK(tape.width(t) == 6);
    CHECK(tape.value(t)(0, 4) == tape.value(g)(0, 0));
    Vector s = Vector::LinSpaced(6, 1, 6);
    Var sc = tape.scale_cols(v, s);
    CHECK(tape.value(sc)(0, 5) == 36.0);
    Var l = tape.weighted_square_sum(sc, Vector::Ones(6));
    CHECK(tape.scalar(l) == doctest::Approx(1 + 16 + 81 + 256 + 625 + 1296));
  }

  TEST_CASE("layout and ownership errors") {
    Tape a, b;
    Var x = a.constant(Matrix::Ones(1, 4), 2);
    Var y = a.constant(Matrix::Ones(1, 4), 1);
    CHECK_THROWS_AS(a.add(x, y), InvalidArgument);
    CHECK_THROWS_AS(a.constant(Matrix::Ones(1, 3), 2), InvalidArgument);
    CHECK_THROWS_AS(b.value(x), ContractViolation);
    CHECK_THROWS_AS(a.backward(x), ContractViolation);
    CHECK_THROWS_AS(a.block(x, 2), InvalidArgument);
    CHECK_THROWS_AS(a.scalar(x), ContractViolation);
  }

  TEST_CASE("replay recomputes from current parameter memory") {
    Matrix W = Matrix::Constant(1, 1, 2.0), bias = Matrix::Zero(1, 1);
    Tape tape;
    Var out = tape.weighted_square_sum(
        tape.affine({W.data(), nullptr, 1, 1}, {bias.data(), nullptr, 1, 1}, tape.constant(Matrix::Ones(1, 1))),
        Vector::Ones(1));
    CHECK(tape.scalar(out) == 4.0);
    W(0, 0) = 3.0;
    tape.replay();
    CHECK(tape.scalar(out) == 9.0);
  }

  TEST_CASE("gradients are bitwise reproducible") {
    Xoshiro256 rng(11, 0);
    Toy toy;
    toy.W = random_matrix(4, 2, rng);
    toy.b = random_matrix(4, 1, rng);
    toy.x = Matrix::Zero(2, 16);
    toy.x.leftCols(8) = random_matrix(2, 8, rng);
    toy.x.row(1).rightCols(8).setOnes();
    toy.wts = Vector::Ones(8);
    Matrix g1 = Matrix::Zero(4, 2), g2 = Matrix::Zero(4, 2), b1 = Matrix::Zero(4, 1), b2 = Matrix::Zero(4, 1);
    const double l1 = toy.loss(&g1, &b1), l2 = toy.loss(&g2, &b2);
    CHECK(l1 == l2);
    CHECK((g1.array() == g2.array()).all());
    CHECK((b1.array() == b2.array()).all());
  }
}
