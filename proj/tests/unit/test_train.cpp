#include <doctest.h>

#include <cmath>
#include <limits>

#include "apnn/errors.hpp"
#include "apnn/train.hpp"

using namespace apnn;

namespace {

TrainConfig tiny_run(long iterations) {
  TrainConfig c;
  c.epsilon = 1.0;
  c.network.width = 16;
  c.network.blocks = 2;
  c.network.harmonics = 2;
  c.network.quadrature_nodes = 8;
  c.network.time_scale = 10.0;
  c.sampler.horizon = 0.1;
  c.sampler.interior = 64;
  c.sampler.initial = 16;
  c.iterations = iterations;
  c.seed = 5;
  c.log_every = 20;
  return c;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("learning-rate schedule") {
    const Schedule s;
    CHECK(lr_at(s, 0) == 1e-3);
    CHECK(lr_at(s, 2499) == 1e-3);
    CHECK(lr_at(s, 2500) == doctest::Approx(9.6e-4).epsilon(1e-15));
    CHECK(lr_at(s, 5000) == doctest::Approx(9.216e-4).epsilon(1e-15));
    for (long it = 1; it < 20000; ++it) {
      if (it % s.period != 0) CHECK(lr_at(s, it) == lr_at(s, it - 1));
    }
    CHECK_THROWS_AS(lr_at(s, -1), InvalidArgument);
    Schedule bad;
    bad.gamma = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("one Adam step on a scalar") {
    Eigen::VectorXd p(1), g(1);
    p << 2.0;
    g << 1.0;
    AdamState s;
    adam_step(p, g, s, 0.1);
    CHECK(p[0] == doctest::Approx(2.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(2.0 - p[0] == doctest::Approx(0.09999999).epsilon(1e-8));
    CHECK(s.it == 1);
  }

  TEST_CASE("zero gradients leave parameters alone") {
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(5, -1, 1), q = p;
    AdamState s;
    for (int k = 0; k < 3; ++k) adam_step(p, Eigen::VectorXd::Zero(5), s, 0.1);
    CHECK((p.array() == q.array()).all());
    CHECK(s.it == 3);
  }

  TEST_CASE("Adam matches an independent re-implementation") {
    Xoshiro256 rng(31, 0);
    const int n = 50;
    Eigen::VectorXd p(n), ref(n), m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) p[i] = ref[i] = rng.uniform(-1, 1);
    AdamState s;
    for (int it = 1; it <= 25; ++it) {
      Eigen::VectorXd g(n);
      for (int i = 0; i < n; ++i) g[i] = rng.uniform(-3, 3);
      const double lr = 0.01 * (1 + it % 3);
      adam_step(p, g, s, lr);
      for (int i = 0; i < n; ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        const double mh = m[i] / (1 - std::pow(0.9, it)), vh = v[i] / (1 - std::pow(0.999, it));
        ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
      }
    }
    CHECK((p - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("beta stays inside its interval") {
    NetworkParams net({2, 3, 1, 1});
    const Index b = net.block_beta(0).offset;
    net.values()[b] = 0.99;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(net.size());
    g[b] = -1.0;  // raw update pushes beta up to 1.3
    AdamState s;
    adam_step(net, g, s, 0.31);
    CHECK(net.beta(0) == 1.0);
    g[b] = 1.0;
    AdamState s2;
    net.values()[b] = 0.06;
    adam_step(net, g, s2, 0.5);
    CHECK(net.beta(0) == kBetaMin);
  }

  TEST_CASE("non-finite gradients are reported before any update") {
    NetworkParams net({2, 3, 1, 1});
    Eigen::VectorXd g = Eigen::VectorXd::Zero(net.size());
    g[net.output_bias().offset] = std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd before = net.values();
    AdamState s;
    try {
      adam_step(net, g, s, 0.1, 17, "w_net");
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(std::string(e.what()).find("w_net.output.b") != std::string::npos);
      CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
    CHECK((net.values().array() == before.array()).all());
    CHECK(s.it == 0);
  }

  TEST_CASE("zero iterations keep the initialization") {
    const TrainConfig c = tiny_run(0);
    SurrogateSet1D set = initial_surrogates_1d(c);
    const SurrogateSet1D init = initial_surrogates_1d(c);
    const TrainingHistory h = train(set, c);
    CHECK(h.rows.empty());
    CHECK((set.rho_net.values().array() == init.rho_net.values().array()).all());
  }

  TEST_CASE("short run lowers the loss and is reproducible") {
    const TrainConfig c = tiny_run(200);
    SurrogateSet1D a = initial_surrogates_1d(c), b = initial_surrogates_1d(c);
    const TrainingHistory ha = train(a, c), hb = train(b, c);
    REQUIRE(ha.rows.size() == 11);
    CHECK(ha.rows.front().iter == 0);
    CHECK(ha.rows.back().iter == 200);
    double best = ha.rows.front().total;
    for (const HistoryRow& r : ha.rows) best = std::min(best, r.total);
    CHECK(best < ha.rows.front().total);
    CHECK(ha.rows.back().total < ha.rows.front().total);
    for (std::size_t k = 0; k < ha.rows.size(); ++k) {
      CHECK(ha.rows[k].total == hb.rows[k].total);
      CHECK(ha.rows[k].lr == hb.rows[k].lr);
    }
    CHECK((a.j_net.values().array() == b.j_net.values().array()).all());
  }

  TEST_CASE("error callback and 2D smoke") {
    TrainConfig c = tiny_run(3);
    c.sampler.dimension = 2;
    c.network.width = 6;
    c.sampler.interior = 8;
    c.sampler.initial = 4;
    c.log_every = 1;
    SurrogateSet2D set = initial_surrogates_2d(c);
    int calls = 0;
    const TrainingHistory h = train(set, c, [&](const SurrogateSet2D&) { return 0.5 + calls++; });
    REQUIRE(h.rows.size() == 4);
    CHECK(h.rows[0].rel_l2 == 0.5);
    for (const HistoryRow& r : h.rows) CHECK(std::isfinite(r.total));
  }

  TEST_CASE("configuration checks") {
    TrainConfig c = tiny_run(1);
    SurrogateSet1D set = initial_surrogates_1d(c);
    c.sampler.dimension = 2;
    CHECK_THROWS_AS(train(set, c), ConfigError);
    c.sampler.dimension = 1;
    c.log_every = 0;
    CHECK_THROWS_AS(train(set, c), ConfigError);
  }
}
