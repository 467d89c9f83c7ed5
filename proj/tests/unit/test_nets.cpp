#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "apnn/errors.hpp"
#include "apnn/nets.hpp"

using namespace apnn;

namespace {

SurrogateOptions tiny(int width = 8, int blocks = 2) {
  SurrogateOptions o;
  o.width = width;
  o.blocks = blocks;
  o.harmonics = 2;
  o.quadrature_nodes = 8;
  return o;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("apnn_unit_" + name);
}

}  // namespace

TEST_SUITE("nets") {
  TEST_CASE("fourier features") {
    const double zero[] = {0.0};
    const Vector a = fourier_embed(zero, 1);
    CHECK(a.size() == 2);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 1.0);
    const double quarter[] = {0.25};
    const Vector b = fourier_embed(quarter, 2);
    REQUIRE(b.size() == 4);
    CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(b[1]) < 1e-15);
    CHECK(std::abs(b[2]) < 1e-15);
    CHECK(b[3] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(fourier_embed(quarter, 0), InvalidArgument);
  }

  TEST_CASE("zero network outputs zero for any beta") {
    NetworkParams p({3, 5, 2, 1});
    p.view(p.block_beta(0))(0, 0) = 0.3;
    const Matrix z = Matrix::Random(3, 4);
    CHECK(resnet_forward(p, z).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("beta one bypasses every block") {
    Xoshiro256 rng(3, 0);
    NetworkParams p({3, 6, 3, 2});
    p.initialize(rng);
    for (int l = 0; l < 3; ++l) p.view(p.block_beta(l))(0, 0) = 1.0;
    const Matrix z = Matrix::Random(3, 5);
    Matrix hidden = p.view(p.input_weight()) * z;
    hidden.colwise() += p.view(p.input_bias()).col(0);
    Matrix expect = p.view(p.output_weight()) * hidden;
    expect.colwise() += p.view(p.output_bias()).col(0);
    CHECK((resnet_forward(p, z) - expect).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("hand-evaluated single block") {
    NetworkParams p({2, 2, 1, 1});
    p.view(p.input_weight()) << 1.0, 0.5, -0.25, 2.0;
    p.view(p.input_bias()) << 0.1, -0.2;
    p.view(p.block_w1(0)) << 0.3, -0.7, 0.9, 0.4;
    p.view(p.block_b1(0)) << 0.05, 0.0;
    p.view(p.block_w2(0)) << -1.1, 0.6, 0.2, 0.8;
    p.view(p.block_b2(0)) << 0.0, 0.3;
    p.view(p.block_beta(0))(0, 0) = 0.4;
    p.view(p.output_weight()) << 1.5, -0.5;
    p.view(p.output_bias()) << 0.25;
    Matrix z(2, 1);
    z << 0.6, -0.3;

    const double g0 = 1.0 * 0.6 + 0.5 * -0.3 + 0.1, g1 = -0.25 * 0.6 + 2.0 * -0.3 - 0.2;
    const double h0 = std::tanh(0.3 * g0 - 0.7 * g1 + 0.05), h1 = std::tanh(0.9 * g0 + 0.4 * g1);
    const double k0 = std::tanh(-1.1 * h0 + 0.6 * h1), k1 = std::tanh(0.2 * h0 + 0.8 * h1 + 0.3);
    const double o0 = 0.4 * g0 + 0.6 * k0, o1 = 0.4 * g1 + 0.6 * k1;
    CHECK(std::abs(resnet_forward(p, z)(0, 0) - (1.5 * o0 - 0.5 * o1 + 0.25)) <= 1e-12);
  }

  TEST_CASE("beta is read through the clamp") {
    NetworkParams p({1, 1, 1, 1});
    p.view(p.input_weight())(0, 0) = 1.0;
    p.view(p.output_weight())(0, 0) = 1.0;
    p.view(p.block_b2(0))(0, 0) = 0.5;  // branch = tanh(0.5)
    Matrix z = Matrix::Constant(1, 1, 2.0);
    p.view(p.block_beta(0))(0, 0) = 1.7;
    CHECK(resnet_forward(p, z)(0, 0) == doctest::Approx(2.0));
    p.view(p.block_beta(0))(0, 0) = -3.0;
    CHECK(resnet_forward(p, z)(0, 0) == doctest::Approx(0.05 * 2.0 + 0.95 * std::tanh(0.5)));
    p.clamp_betas();
    CHECK(p.beta(0) == 0.05);
  }

  TEST_CASE("xavier bounds, determinism and variance") {
    Xoshiro256 a(42, 0), b(42, 0);
    const Matrix one = xavier_init(1, 1, a);
    CHECK(std::abs(one(0, 0)) <= std::sqrt(3.0));
    CHECK(xavier_init(1, 1, b)(0, 0) == one(0, 0));
    const Matrix w1 = xavier_init(128, 128, a), w2 = xavier_init(128, 128, b);
    CHECK((w1.array() == w2.array()).all());
    const double var = w1.array().square().mean() - std::pow(w1.mean(), 2);
    CHECK(std::abs(var - 1.0 / 128) <= 0.2 / 128);
  }

  TEST_CASE("initialization sets beta and zero biases") {
    Xoshiro256 rng(5, 0);
    NetworkParams p({4, 6, 3, 1});
    p.initialize(rng);
    for (int l = 0; l < 3; ++l) {
      CHECK(p.beta(l) == kBetaInit);
      CHECK(p.view(p.block_b1(l)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(p.view(p.input_weight()).cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("1D wrappers: parity, zero mean, positivity, periodicity") {
    Xoshiro256 rng(9, 0);
    const SurrogateSet1D s = SurrogateSet1D::create(tiny(), 0.5, rng);
    Xoshiro256 pts(10, 0);
    for (int n = 0; n < 20; ++n) {
      const double t = pts.uniform(0, 0.1), x = pts.uniform(), v = pts.uniform();
      const WrappedPoint1D p = wrap_structures_1d(s, t, x, v), m = wrap_structures_1d(s, t, x, -v);
      CHECK(p.j + m.j == 0.0);
      CHECK(p.w == m.w);
      CHECK(p.rho > 0.0);
      const WrappedPoint1D shifted = wrap_structures_1d(s, t, x + 1.0, v);
      CHECK(std::abs(shifted.rho - p.rho) < 1e-12);
      // Mean of w over the rule nodes.
      double avg = 0.0;
      for (Index i = 0; i < s.rule.size(); ++i)
        avg += s.rule.weights[i] * wrap_structures_1d(s, t, x, s.rule.nodes[i]).w;
      CHECK(std::abs(avg) <= 1e-12);
    }
  }

  TEST_CASE("zero rho network gives ln 2") {
    Xoshiro256 rng(1, 0);
    SurrogateSet1D s = SurrogateSet1D::create(tiny(), 1.0, rng);
    s.rho_net.values().setZero();
    CHECK(wrap_structures_1d(s, 0.0, 0.3, 0.5).rho == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("tape partials agree with finite differences of the wrappers") {
    Xoshiro256 rng(4, 0);
    SurrogateOptions o = tiny();
    o.time_scale = 3.0;
    const SurrogateSet1D s = SurrogateSet1D::create(o, 1.0, rng);
    const double t = 0.04, x = 0.37, v = 0.61, h = 1e-5;
    const WrappedPoint1D p = wrap_structures_1d(s, t, x, v);
    auto fd_t = [&](auto field) {
      return (field(wrap_structures_1d(s, t + h, x, v)) - field(wrap_structures_1d(s, t - h, x, v))) / (2 * h);
    };
    auto fd_x = [&](auto field) {
      return (field(wrap_structures_1d(s, t, x + h, v)) - field(wrap_structures_1d(s, t, x - h, v))) / (2 * h);
    };
    auto rho = [](const WrappedPoint1D& q) { return q.rho; };
    auto j = [](const WrappedPoint1D& q) { return q.j; };
    auto w = [](const WrappedPoint1D& q) { return q.w; };
    CHECK(p.rho_t == doctest::Approx(fd_t(rho)).epsilon(1e-6));
    CHECK(p.rho_x == doctest::Approx(fd_x(rho)).epsilon(1e-6));
    CHECK(p.j_t == doctest::Approx(fd_t(j)).epsilon(1e-6));
    CHECK(p.j_x == doctest::Approx(fd_x(j)).epsilon(1e-6));
    CHECK(p.w_t == doctest::Approx(fd_t(w)).epsilon(1e-6));
    CHECK(p.w_x == doctest::Approx(fd_x(w)).epsilon(1e-6));
  }

  TEST_CASE("2D wrappers: symmetry table") {
    Xoshiro256 rng(12, 0);
    const SurrogateSet2D s = SurrogateSet2D::create(tiny(), 0.3, rng);
    Xoshiro256 pts(13, 0);
    for (int n = 0; n < 10; ++n) {
      const double t = pts.uniform(0, 0.1), x = pts.uniform(), y = pts.uniform();
      const double th = pts.uniform(0, std::acos(-1.0) / 2), a = std::cos(th), b = std::sin(th);
      const WrappedPoint2D pp = wrap_structures_2d(s, t, x, y, a, b), mm = wrap_structures_2d(s, t, x, y, -a, -b);
      const WrappedPoint2D mp = wrap_structures_2d(s, t, x, y, -a, b), pm = wrap_structures_2d(s, t, x, y, a, -b);
      CHECK(pp.phi == mm.phi);
      CHECK(pp.phi == -mp.phi);
      CHECK(pm.phi == mp.phi);
      CHECK(pp.j2 == -mm.j2);
      CHECK(pm.j1 == -mp.j1);
      CHECK(pp.w == mm.w);
      CHECK(pp.w == mp.w);
      CHECK(pp.w == pm.w);
      CHECK(pp.rho > 0.0);
      double avg = 0.0;
      for (Index i = 0; i < s.rule.size(); ++i) {
        avg += s.rule.weights[i] *
               wrap_structures_2d(s, t, x, y, std::cos(s.rule.nodes[i]), std::sin(s.rule.nodes[i])).w;
      }
      CHECK(std::abs(avg) <= 1e-12);
      const WrappedPoint2D shifted = wrap_structures_2d(s, t, x - 1.0, y + 2.0, a, b);
      CHECK(std::abs(shifted.phi - pp.phi) < 1e-12);
    }
  }

  TEST_CASE("an odd j2 network passes through unchanged") {
    Xoshiro256 rng(2, 0);
    SurrogateSet2D s = SurrogateSet2D::create(tiny(), 1.0, rng);
    NetworkParams& n = s.j2_net;
    n.values().setZero();
    for (int l = 0; l < n.arch().blocks; ++l) n.view(n.block_beta(l))(0, 0) = 1.0;
    // Input rows: t, 4 x features, 4 y features, xi, eta. j2_net = 2 xi - 0.5 eta.
    n.view(n.input_weight())(0, 9) = 2.0;
    n.view(n.input_weight())(0, 10) = -0.5;
    n.view(n.output_weight())(0, 0) = 1.0;
    const double a = std::cos(0.4), b = std::sin(0.4);
    CHECK(wrap_structures_2d(s, 0.02, 0.1, 0.7, a, b).j2 == doctest::Approx(2 * a - 0.5 * b).epsilon(1e-15));
  }

  TEST_CASE("density matches the wrapper") {
    Xoshiro256 rng(6, 0);
    const SurrogateSet1D s = SurrogateSet1D::create(tiny(), 1.0, rng);
    const std::vector<double> t{0.0, 0.05}, x{0.2, 0.9};
    const Vector d = density_1d(s, t, x);
    CHECK(d[1] == doctest::Approx(wrap_structures_1d(s, 0.05, 0.9, 0.3).rho).epsilon(1e-14));
  }

  TEST_CASE("checkpoint round trip and mismatch") {
    Xoshiro256 rng(8, 0);
    const SurrogateSet1D a = SurrogateSet1D::create(tiny(), 1.0, rng);
    SurrogateSet1D b = SurrogateSet1D::create(tiny(), 1.0, rng);
    const auto path = temp_path("roundtrip.ckpt");
    save_checkpoint(path.string(), a.networks());
    load_checkpoint(path.string(), b.networks());
    CHECK((a.rho_net.values().array() == b.rho_net.values().array()).all());
    CHECK((a.w_net.values().array() == b.w_net.values().array()).all());

    SurrogateSet1D wide = SurrogateSet1D::create(tiny(12), 1.0, rng);
    CHECK_THROWS_AS(load_checkpoint(path.string(), wide.networks()), IoError);
    CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt").string(), b.networks()), IoError);
    std::filesystem::remove(path);
  }
}
