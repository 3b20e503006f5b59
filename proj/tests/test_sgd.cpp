#include <catch2/catch_amalgamated.hpp>

#include "smsvm/rng.hpp"
#include "smsvm/sgd.hpp"

#include <cmath>

using namespace smsvm;
using Catch::Matchers::WithinAbs;

namespace {

Dataset random_dataset(Xoshiro256pp& rng, Index n, Index m) {
  Dataset d;
  d.X = Matrix(n, m);
  d.y = Vector(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) d.X(i, j) = 4.0 * rng.uniform() - 2.0;
    d.y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return d;
}

double exact_f(const Vector& w, const Dataset& d, const Hyperparams& h) {
  double loss = 0;
  for (Index i = 0; i < d.rows(); ++i) loss += std::max(0.0, 1.0 - d.y[i] * d.X.row(i).dot(w));
  return 0.5 * h.lambda * w.squaredNorm() + loss / static_cast<double>(d.rows()) + h.mu * w.lpNorm<1>();
}

}  // namespace

TEST_CASE("subgradient hand values") {
  Hyperparams h;
  h.lambda = 0;
  h.mu = 0;

  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 1;
  d.y = Vector(1);
  d.y << 1;
  REQUIRE(subgradient(Vector::Zero(1), d, h)[0] == -1.0);  // u = 1 > 0

  // margins all negative: hinge inactive
  Dataset sure;
  sure.X = Matrix(2, 3);
  sure.X << 1, 0, -1,
            2, 0, -2;
  sure.y = Vector(2);
  sure.y << 1, 1;
  Vector w(3);
  w << 1, 0, -1;  // y x.w = 2 and 4, margins negative
  REQUIRE(subgradient(w, sure, h) == Vector::Zero(3));

  h.mu = 2.0;
  Vector g = subgradient(w, sure, h);
  REQUIRE(g[0] == 2.0);
  REQUIRE(g[1] == 0.0);  // sign(0) = 0
  REQUIRE(g[2] == -2.0);

  // the exact kink u = 0 contributes nothing
  h.mu = 0;
  Dataset kink;
  kink.X = Matrix(1, 1);
  kink.X << 1;
  kink.y = Vector(1);
  kink.y << 1;
  REQUIRE(subgradient(Vector::Ones(1), kink, h) == Vector::Zero(1));
}

TEST_CASE("subgradient satisfies the convexity inequality") {
  Xoshiro256pp rng(41);
  const Dataset d = random_dataset(rng, 25, 6);
  Hyperparams h;
  h.lambda = 0.3;
  h.mu = 0.15;
  for (int t = 0; t < 1000; ++t) {
    Vector w(6), wp(6);
    for (Index j = 0; j < 6; ++j) {
      w[j] = 4.0 * rng.uniform() - 2.0;
      wp[j] = 4.0 * rng.uniform() - 2.0;
    }
    const Vector g = subgradient(w, d, h);
    const double fw = exact_f(w, d, h);
    const double fwp = exact_f(wp, d, h);
    REQUIRE(fwp >= fw + g.dot(wp - w) - 1e-9 * (1.0 + std::abs(fw)));
  }
}

TEST_CASE("one nesterov update with zero velocity uses the plain gradient") {
  // subgradient at w = 0 is the constant [-1]; with v = 0 the lookahead
  // point is w itself, so w_1 = w_0 - eta * g = 0.001
  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 1;
  d.y = Vector(1);
  d.y << 1;
  Hyperparams h;
  h.lambda = 0;
  h.mu = 0;
  SgdConfig cfg;
  cfg.optimizer = SgdOptimizer::nesterov;
  cfg.learning_rate = 0.001;
  cfg.rho = 0.9;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  const Vector w1 = sgd_train(d, h, cfg);
  REQUIRE(w1[0] == 0.001);

  // second update accumulates momentum: v2 = rho*v1 + eta = 0.0019
  cfg.epochs = 2;
  const Vector w2 = sgd_train(d, h, cfg);
  REQUIRE_THAT(w2[0], WithinAbs(0.001 + 0.0019, 1e-15));
}

TEST_CASE("zero subgradient is a fixed point for every optimizer") {
  Dataset sym;
  sym.X = Matrix(2, 2);
  sym.X << 1, -2, 1, -2;
  sym.y = Vector(2);
  sym.y << 1, -1;  // subgradient at w = 0 vanishes
  Hyperparams h;
  h.lambda = 0;
  h.mu = 0;
  for (auto opt : {SgdOptimizer::nesterov, SgdOptimizer::adadelta, SgdOptimizer::adam}) {
    SgdConfig cfg;
    cfg.optimizer = opt;
    cfg.epochs = 5;
    cfg.batch_size = 2;
    REQUIRE(sgd_train(sym, h, cfg) == Vector::Zero(2));
  }
}

TEST_CASE("identical seed and config give bitwise identical weights") {
  Xoshiro256pp rng(43);
  const Dataset d = random_dataset(rng, 64, 5);
  Hyperparams h;
  h.lambda = 1e-3;
  h.mu = 1e-3;
  for (auto opt : {SgdOptimizer::nesterov, SgdOptimizer::adadelta, SgdOptimizer::adam}) {
    SgdConfig cfg;
    cfg.optimizer = opt;
    cfg.epochs = 3;
    cfg.seed = 2024;
    const Vector a = sgd_train(d, h, cfg);
    const Vector b = sgd_train(d, h, cfg);
    REQUIRE(a == b);

    cfg.seed = 2025;
    const Vector c = sgd_train(d, h, cfg);
    REQUIRE(a != c);
  }
}

TEST_CASE("all three optimizers separate an easy synthetic problem") {
  SyntheticSpec spec;
  spec.m = 5;
  spec.n = 400;
  spec.seed = 8;
  const Dataset raw = generate_synthetic(spec);
  const Standardizer s = standardize_fit(raw);
  const Dataset d = augment_bias(standardize_apply(s, raw));
  Hyperparams h;
  h.lambda = 1e-3;
  h.mu = 1e-3;
  for (auto opt : {SgdOptimizer::nesterov, SgdOptimizer::adadelta, SgdOptimizer::adam}) {
    SgdConfig cfg;
    cfg.optimizer = opt;
    cfg.epochs = 200;
    cfg.seed = 3;
    const Vector w = sgd_train(d, h, cfg);
    Index correct = 0;
    for (Index i = 0; i < d.rows(); ++i) {
      if ((d.X.row(i).dot(w) >= 0 ? 1.0 : -1.0) == d.y[i]) ++correct;
    }
    REQUIRE(static_cast<double>(correct) / static_cast<double>(d.rows()) >= 0.97);
  }
}

TEST_CASE("sgd config validation") {
  SgdConfig cfg;
  cfg.learning_rate = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SgdConfig{};
  cfg.rho = 1.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SgdConfig{};
  cfg.epochs = 0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  REQUIRE_NOTHROW(SgdConfig{}.validate());
}
