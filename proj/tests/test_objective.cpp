#include <catch2/catch_amalgamated.hpp>

#include "smsvm/objective.hpp"
#include "smsvm/rng.hpp"

#include <cmath>
#include <numbers>

using namespace smsvm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

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

Vector random_vector(Xoshiro256pp& rng, Index m, double scale = 2.0) {
  Vector v(m);
  for (Index j = 0; j < m; ++j) v[j] = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

}  // namespace

TEST_CASE("psi at reference points") {
  const auto p0 = psi(0.0);
  REQUIRE(p0.value == 0.5);
  REQUIRE(p0.first == 0.5);
  REQUIRE(p0.second == 0.5);

  // 1 + 0.75^2 = 1.5625 = 1.25^2, so psi(0.75) = (0.75 + 1.25)/2 = 1 exactly
  REQUIRE(psi(0.75).value == 1.0);

  for (double u : {1.0, -1.0, 10.0, -10.0}) {
    REQUIRE_THAT(psi(u).value - psi(-u).value, WithinAbs(u, 1e-15 * std::abs(u)));
  }
}

TEST_CASE("psi derivative ranges and monotonicity") {
  double prev_first = -1.0;
  for (double u = -50.0; u <= 50.0; u += 0.37) {
    const auto p = psi(u);
    REQUIRE(p.first > 0.0);
    REQUIRE(p.first < 1.0);
    REQUIRE(p.second > 0.0);
    REQUIRE(p.second <= 0.5);
    REQUIRE(p.first > prev_first);  // psi' strictly increasing
    prev_first = p.first;
  }
}

TEST_CASE("psi tail guard stays finite and consistent") {
  const auto big = psi(1e12);
  REQUIRE(std::isfinite(big.value));
  REQUIRE(big.first == 1.0);
  REQUIRE(big.second == 0.0);
  const auto neg = psi(-1e12);
  REQUIRE(neg.value > 0.0);
  REQUIRE(neg.first == 0.0);
  REQUIRE(std::isfinite(smoothed_hinge(1e300, 1.0)));
  REQUIRE(std::isfinite(smoothed_hinge(-1e300, 1.0)));
}

TEST_CASE("smoothed hinge closed forms") {
  REQUIRE(smoothed_hinge(0.0, 0.5) == 0.25);          // alpha/2 at u = 0
  REQUIRE(smoothed_hinge(3.0, 4.0) == 4.0);           // (3 + 5)/2
  REQUIRE(smoothed_hinge(-3.0, 4.0) == 1.0);          // (-3 + 5)/2
}

TEST_CASE("sandwich property: 0 <= phi - max(0,u) <= alpha/2") {
  Xoshiro256pp rng(17);
  for (int t = 0; t < 20000; ++t) {
    const double u = 200.0 * rng.uniform() - 100.0;
    const double alpha = 10.0 * rng.uniform() + 1e-12;
    const double diff = smoothed_hinge(u, alpha) - std::max(0.0, u);
    REQUIRE(diff >= -1e-18);
    REQUIRE(diff <= 0.5 * alpha * (1.0 + 4e-16) + 1e-18);
  }
}

TEST_CASE("smoothed hinge is monotone in alpha") {
  Xoshiro256pp rng(18);
  for (int t = 0; t < 5000; ++t) {
    const double u = 20.0 * rng.uniform() - 10.0;
    const double a1 = 5.0 * rng.uniform() + 1e-9;
    const double a2 = a1 + 5.0 * rng.uniform() + 1e-12;
    REQUIRE(smoothed_hinge(u, a1) <= smoothed_hinge(u, a2));
  }
}

TEST_CASE("margins examples") {
  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 2;
  d.y = Vector(1);

  d.y << 1;
  REQUIRE(margins(Vector::Constant(1, 0.5), d)[0] == 0.0);
  d.y << -1;
  REQUIRE(margins(Vector::Constant(1, 0.5), d)[0] == 2.0);

  Dataset many;
  many.X = Matrix(3, 2);
  many.X << 1, 2, 3, 4, 5, 6;
  many.y = Vector(3);
  many.y << 1, -1, 1;
  REQUIRE(margins(Vector::Zero(2), many) == Vector::Ones(3));

  REQUIRE_THROWS_AS(margins(Vector::Zero(3), many), std::invalid_argument);
}

TEST_CASE("objective single-point value and invariances") {
  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 1;
  d.y = Vector(1);
  d.y << 1;
  Hyperparams h;
  h.lambda = 0;
  h.mu = 0;
  const auto v = objective(Vector::Zero(1), d, h, 1.0);
  REQUIRE_THAT(v.fhat, WithinRel(0.5 * (1.0 + std::numbers::sqrt2), 1e-15));
  REQUIRE(v.f == v.fhat);

  // l1 term vanishes at w = 0 even with mu > 0
  h.mu = 3.5;
  const auto v2 = objective(Vector::Zero(1), d, h, 1.0);
  REQUIRE(v2.f == v2.fhat);

  // duplicating all rows leaves the mean untouched
  Xoshiro256pp rng(4);
  Dataset base = random_dataset(rng, 13, 4);
  Dataset doubled;
  doubled.X = Matrix(26, 4);
  doubled.X << base.X, base.X;
  doubled.y = Vector(26);
  doubled.y << base.y, base.y;
  h.lambda = 0.3;
  h.mu = 0.2;
  const Vector w = random_vector(rng, 4);
  const auto single = objective(w, base, h, 0.7);
  const auto twice = objective(w, doubled, h, 0.7);
  REQUIRE_THAT(twice.f, WithinRel(single.f, 1e-14));
  REQUIRE_THAT(twice.fhat, WithinRel(single.fhat, 1e-14));
}

TEST_CASE("gradient single-point value and symmetry") {
  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 1;
  d.y = Vector(1);
  d.y << 1;
  Hyperparams h;
  h.lambda = 0;
  const Vector g = gradient_smooth(Vector::Zero(1), d, h, 1.0);
  REQUIRE_THAT(g[0], WithinRel(-psi(1.0).first, 1e-15));
  REQUIRE_THAT(g[0], WithinAbs(-0.85355339, 1e-8));

  // symmetric rows (x, +1), (x, -1): loss gradient cancels at w = 0
  Dataset sym;
  sym.X = Matrix(2, 3);
  sym.X << 1, -2, 0.5, 1, -2, 0.5;
  sym.y = Vector(2);
  sym.y << 1, -1;
  const Vector g0 = gradient_smooth(Vector::Zero(3), sym, h, 0.3);
  REQUIRE(g0.norm() == 0.0);

  // lambda adds w itself
  h.lambda = 1.0;
  const Vector g2 = gradient_smooth(Vector::Constant(1, 2.0), d, h, 1.0);
  const Vector gl = gradient_smooth(Vector::Constant(1, 2.0), d, Hyperparams{.lambda = 0}, 1.0);
  REQUIRE_THAT(g2[0], WithinRel(2.0 + gl[0], 1e-14));
}

TEST_CASE("gradient matches central finite differences") {
  Xoshiro256pp rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.bounded(49));
    const Index m = 1 + static_cast<Index>(rng.bounded(10));
    const Dataset d = random_dataset(rng, n, m);
    Hyperparams h;
    h.lambda = rng.uniform();
    const double alpha = 1e-2 * std::pow(10.0, 3.0 * rng.uniform());
    const Vector w = random_vector(rng, m);

    const Vector g = gradient_smooth(w, d, h, alpha);
    Vector fd(m);
    const double step = 1e-6;
    for (Index j = 0; j < m; ++j) {
      Vector wp = w, wm = w;
      wp[j] += step;
      wm[j] -= step;
      fd[j] = (objective(wp, d, h, alpha).fhat - objective(wm, d, h, alpha).fhat) / (2 * step);
    }
    REQUIRE((fd - g).norm() <= 1e-6 * std::max(1e-12, g.norm()));
  }
}

TEST_CASE("active hessian block: single point, tails, and submatrix oracle") {
  Dataset d;
  d.X = Matrix(1, 1);
  d.X << 1;
  d.y = Vector(1);
  d.y << 1;
  Hyperparams h;
  h.lambda = 0;
  const auto H1 = hessian_active(Vector::Zero(1), d, h, 1.0, {0});
  REQUIRE_THAT(H1(0, 0), WithinRel(psi(1.0).second, 1e-14));
  REQUIRE_THAT(H1(0, 0), WithinAbs(0.17677670, 1e-8));

  // in the tails psi'' underflows to zero and only lambda I remains
  h.lambda = 3.0;
  Vector w_huge = Vector::Constant(1, 1e12);
  const auto Ht = hessian_active(w_huge, d, h, 1e-3, {0});
  REQUIRE(Ht(0, 0) == 3.0);

  // restricted block equals the corresponding submatrix of the naive full hessian
  Xoshiro256pp rng(31);
  const Dataset rd = random_dataset(rng, 20, 6);
  h.lambda = 0.4;
  const Vector w = random_vector(rng, 6);
  const double alpha = 0.35;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(6, 6);
  const Vector u = margins(w, rd);
  for (Index i = 0; i < rd.rows(); ++i) {
    const double c = psi(u[i] / alpha).second / (alpha * 20.0);
    full += c * rd.X.row(i).transpose() * rd.X.row(i);
  }
  full += 0.4 * Eigen::MatrixXd::Identity(6, 6);
  const std::vector<Index> active{1, 3, 4};
  const auto H = hessian_active(w, rd, h, alpha, active);
  for (std::size_t r = 0; r < active.size(); ++r) {
    for (std::size_t c = 0; c < active.size(); ++c) {
      REQUIRE_THAT(H(static_cast<Index>(r), static_cast<Index>(c)),
                   WithinAbs(full(active[r], active[c]), 1e-12));
    }
  }

  REQUIRE_THROWS_AS(hessian_active(w, rd, h, alpha, {0, 7}), std::invalid_argument);
}

TEST_CASE("active hessian matches finite differences of the gradient") {
  Xoshiro256pp rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.bounded(49));
    const Index m = 1 + static_cast<Index>(rng.bounded(10));
    const Dataset d = random_dataset(rng, n, m);
    Hyperparams h;
    h.lambda = rng.uniform();
    const double alpha = 1e-2 * std::pow(10.0, 3.0 * rng.uniform());
    const Vector w = random_vector(rng, m);

    std::vector<Index> active;
    for (Index j = 0; j < m; ++j) active.push_back(j);
    const auto H = hessian_active(w, d, h, alpha, active);

    Eigen::MatrixXd fd(m, m);
    const double step = 1e-6;
    for (Index j = 0; j < m; ++j) {
      Vector wp = w, wm = w;
      wp[j] += step;
      wm[j] -= step;
      fd.col(j) = (gradient_smooth(wp, d, h, alpha) - gradient_smooth(wm, d, h, alpha)) / (2 * step);
    }
    REQUIRE((fd - H).norm() <= 1e-5 * std::max(1e-12, H.norm()));

    // symmetry and positive definiteness with lambda > 0
    REQUIRE((H - H.transpose()).norm() == 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (h.lambda > 1e-6) REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("directional curvature agrees with the assembled block") {
  Xoshiro256pp rng(23);
  const Dataset d = random_dataset(rng, 25, 5);
  Hyperparams h;
  h.lambda = 0.7;
  const Vector w = random_vector(rng, 5);
  const Vector dir = random_vector(rng, 5);
  const double alpha = 0.2;
  const Vector u = margins(w, d);
  std::vector<Index> all{0, 1, 2, 3, 4};
  const auto H = hessian_active(w, d, h, alpha, all);
  REQUIRE_THAT(directional_curvature(u, dir, d, h, alpha),
               WithinRel(dir.dot(H * dir), 1e-12));
}

TEST_CASE("f_alpha is convex") {
  Xoshiro256pp rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = random_dataset(rng, 15, 4);
    Hyperparams h;
    h.lambda = rng.uniform();
    h.mu = rng.uniform();
    const double alpha = 0.05 + rng.uniform();
    const Vector w1 = random_vector(rng, 4);
    const Vector w2 = random_vector(rng, 4);
    const double t = rng.uniform();
    const double lhs = objective(t * w1 + (1 - t) * w2, d, h, alpha).f;
    const double rhs = t * objective(w1, d, h, alpha).f + (1 - t) * objective(w2, d, h, alpha).f;
    REQUIRE(lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("hyperparameter validation messages") {
  Hyperparams h;
  h.beta = 1.5;
  REQUIRE_THROWS_WITH(h.validate(), Catch::Matchers::ContainsSubstring("beta must be in (0,1)"));
  h = Hyperparams{};
  h.eta = 0;
  REQUIRE_THROWS_AS(h.validate(), std::invalid_argument);
  h = Hyperparams{};
  h.alpha_min = 2 * h.alpha0;
  REQUIRE_THROWS_AS(h.validate(), std::invalid_argument);
  REQUIRE_NOTHROW(Hyperparams{}.validate());
}
