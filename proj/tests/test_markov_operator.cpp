#include "doctest.h"

#include "cocylab/examples.hpp"
#include "cocylab/markov_operator.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace cocylab;

namespace {

MarkovBase chain_p() {
  MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.2, 0.8;
  return MarkovBase::chain(p);
}

MatrixXd dense(const DiscretizedOperator& op) { return MatrixXd(op.matrix); }

}  // namespace

TEST_CASE("base operator") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto op = build_base_operator(coin, 1);
  CHECK(dense(op) == MatrixXd::Constant(2, 2, 0.5));
  const VectorXd one = VectorXd::Ones(2);
  CHECK(apply(op, one) == one);

  const auto big = build_base_operator(chain_p(), 4);
  const VectorXd ones = VectorXd::Ones(16);
  CHECK(apply(big, ones) == ones);
  CHECK_THROWS_AS(build_base_operator(chain_p(), 0), ValidationError);
  CHECK_THROWS_AS(build_base_operator(coin, 21), BudgetError);
}

TEST_CASE("stationary measure and mixing rate of the base chain") {
  for (int len : {1, 3}) {
    const auto op = build_base_operator(chain_p(), len);
    const auto st = stationary_measure(op);
    CHECK(st.residual < 1e-10);
    double first = 0;
    for (std::size_t w = 0; w < op.classes; ++w)
      if (w % 2 == 0) first += st.measure(static_cast<Eigen::Index>(w));
    CHECK(std::abs(first - 2.0 / 3.0) < 1e-10);

    const auto mix = mixing_rate(op, st.measure, default_probes(op, nullptr), 60);
    CHECK(std::abs(mix.sigma0 - 0.7) < 1e-6);
    CHECK(mix.fit.r2 > 0.999999);
  }
  const auto op = build_base_operator(chain_p(), 2);
  const auto st = stationary_measure(op);
  const auto flat = mixing_rate(op, st.measure, {VectorXd::Ones(4)}, 10);
  CHECK(flat.degenerate);
  for (double d : flat.deviations) CHECK(d == 0.0);
  const auto three = mixing_rate(op, st.measure, {VectorXd::Constant(4, 3.0)}, 10);
  for (double d : three.deviations) CHECK(d < 1e-15);
}

TEST_CASE("fiber operator structure") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto grid = ProjectiveGrid::make(2, 36);
  const auto id = build_fiber_operator(Cocycle::constant(2, MatrixXd::Identity(2, 2)), coin, 2, grid);
  const auto base = build_base_operator(coin, 2);
  // Identity fiber: base operator tensored with the identity on cells.
  const MatrixXd expected = Eigen::kroneckerProduct(dense(base), MatrixXd::Identity(36, 36));
  CHECK(dense(id) == expected);

  const auto typ = examples::typical();
  const auto op = build_fiber_operator(typ.cocycle, typ.base, default_class_length(typ.cocycle, typ.base), grid);
  const VectorXd rows = op.matrix * VectorXd::Ones(static_cast<Eigen::Index>(op.states()));
  CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(op.matrix.coeffs().minCoeff() >= 0.0);
  // Every edge goes to the nearest cell of the image of the representative.
  for (Eigen::Index s = 0; s < op.matrix.outerSize(); ++s) {
    const auto w = static_cast<std::size_t>(s) / op.cells;
    const auto c = static_cast<std::size_t>(s) % op.cells;
    const auto target = grid.nearest(typ.cocycle.generator(w % 2) * grid.rep(c));
    for (SparseRowMatrix::InnerIterator it(op.matrix, s); it; ++it)
      CHECK(static_cast<std::size_t>(it.col()) % op.cells == target);
  }
  CHECK_THROWS_AS(build_fiber_operator(examples::future().cocycle, examples::future().base, 4,
                                       ProjectiveGrid::make(2, 8)),
                  ValidationError);
}

TEST_CASE("fiber operator is independent of the thread count") {
  const auto ex = examples::bunched();
  const auto grid = ProjectiveGrid::make(2, 90);
  const auto a = build_fiber_operator(ex.cocycle, ex.base, 4, grid, 0.3, 0.1, 1);
  const auto b = build_fiber_operator(ex.cocycle, ex.base, 4, grid, 0.3, 0.1, 3);
  CHECK(dense(a) == dense(b));
  CHECK(kappa_alpha(ex.cocycle, ex.base, 0.5, 3, grid, 1).value ==
        kappa_alpha(ex.cocycle, ex.base, 0.5, 3, grid, 3).value);
}

TEST_CASE("tilted operator in dimension one") {
  const auto sc = examples::scalar();
  const auto grid = ProjectiveGrid::make(1, 1);
  const auto op = build_fiber_operator(sc.cocycle, sc.base, 3, grid, 1.0);
  const double lambda = top_eigenvalue(op, 1e-14, 10'000, 1);
  CHECK(std::abs(lambda - 1.25) < 1e-12);
  // Retilting from zero reproduces the direct build.
  const auto flat = build_fiber_operator(sc.cocycle, sc.base, 3, grid);
  CHECK(dense(retilted(flat, 1.0, 0.0)) == dense(op));
}

TEST_CASE("stationary fiber law") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto grid = ProjectiveGrid::make(2, 360);
  const auto hyp = Cocycle::constant(2, diag2(2.0, 0.5));
  const auto op = build_fiber_operator(hyp, coin, 3, grid);
  const auto st = stationary_measure(op, &grid);
  CHECK(st.residual < 1e-10);
  // Cells 0 and G - 1 touch angle 0.
  CHECK(st.fiber_marginal(0) + st.fiber_marginal(359) >= 0.99);
  CHECK(st.concentrated);

  const auto rot = examples::rotations();
  const auto rop = build_fiber_operator(rot.cocycle, rot.base, 3, grid);
  const auto rst = stationary_measure(rop, &grid);
  CHECK_FALSE(rst.concentrated);
  const VectorXd fixed = apply_adjoint(rop, rst.measure);
  CHECK((fixed - rst.measure).lpNorm<1>() < 1e-10);
}

TEST_CASE("kappa: isometries, dimension one, scaling") {
  const auto grid = ProjectiveGrid::make(2, 720);
  const auto rot = examples::rotations();
  for (double alpha : {0.25, 0.5, 1.0})
    for (int n = 1; n <= 3; ++n) CHECK(kappa_alpha(rot.cocycle, rot.base, alpha, n, grid).value == 1.0);

  const auto sc = examples::scalar();
  const auto one = kappa_alpha(sc.cocycle, sc.base, 0.5, 2, ProjectiveGrid::make(1, 1));
  CHECK(one.value == 1.0);
  CHECK(one.convention);

  const auto typ = examples::typical();
  const auto ref = kappa_alpha(typ.cocycle, typ.base, 0.5, 3, grid);
  for (double c : {2.0, -0.5, 8.0}) CHECK(kappa_alpha(typ.cocycle.scaled(c), typ.base, 0.5, 3, grid).value == ref.value);
  CHECK(std::abs(kappa_alpha(typ.cocycle.scaled(3.0), typ.base, 0.5, 3, grid).value - ref.value) < 1e-12 * ref.value);
}

TEST_CASE("kappa of a constant hyperbolic matrix against a finer grid") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto hyp = Cocycle::constant(2, diag2(2.0, 0.5));
  const double alpha = 0.5;
  const std::size_t g = 720;
  const auto rep = kappa_alpha(hyp, coin, alpha, 3, ProjectiveGrid::make(2, g));

  // Brute force over 10 G angles with the same admissible separation;
  // diag(8, 1/8) has unit determinant.
  const std::size_t fine = 10 * g;
  const double pi = std::numbers::pi;
  const double sep = 2.0 * std::sin(pi / static_cast<double>(g));
  std::vector<double> norm(fine);
  std::vector<double> angle(fine);
  for (std::size_t c = 0; c < fine; ++c) {
    angle[c] = (static_cast<double>(c) + 0.5) * pi / static_cast<double>(fine);
    norm[c] = std::hypot(8.0 * std::cos(angle[c]), std::sin(angle[c]) / 8.0);
  }
  double oracle = 0;
  for (std::size_t c = 0; c < fine; ++c)
    for (std::size_t e = c + 1; e < fine; ++e)
      if (std::abs(std::sin(angle[e] - angle[c])) >= sep)
        oracle = std::max(oracle, std::pow(1.0 / (norm[c] * norm[e]), alpha));
  CHECK(std::abs(rep.value - oracle) < 0.05 * oracle);
  // Expansion near the repelling axis: the supremum approaches 64^alpha.
  CHECK(rep.value > 1.0);
  CHECK(oracle < 8.0);
}

TEST_CASE("kappa: submultiplicativity and contraction for the typical example") {
  const auto typ = examples::typical();
  const auto grid = ProjectiveGrid::make(2, 720);
  for (double alpha : {0.25, 0.5, 1.0}) {
    std::vector<double> k(7);
    for (int n = 1; n <= 6; ++n) k[static_cast<std::size_t>(n)] = kappa_alpha(typ.cocycle, typ.base, alpha, n, grid).value;
    for (int n = 1; n <= 3; ++n)
      for (int m = 1; m <= 3; ++m)
        CHECK(k[static_cast<std::size_t>(n + m)] <= 1.05 * k[static_cast<std::size_t>(n)] * k[static_cast<std::size_t>(m)]);
  }
  bool contracts = false;
  for (double alpha : {0.25, 0.5, 1.0})
    for (int n = 1; n <= 8 && !contracts; ++n) contracts = kappa_alpha(typ.cocycle, typ.base, alpha, n, grid).value < 1.0;
  CHECK(contracts);
}

TEST_CASE("mixing of the typical fiber operator") {
  const auto typ = examples::typical();
  const auto grid = ProjectiveGrid::make(2, 720);
  const auto op = build_fiber_operator(typ.cocycle, typ.base, default_class_length(typ.cocycle, typ.base), grid);
  const auto st = stationary_measure(op, &grid);
  CHECK(st.residual < 1e-10);
  const auto mix = mixing_rate(op, st.measure, default_probes(op, &grid), 40);
  CHECK(mix.sigma0 < 1.0);
  CHECK(mix.fit.r2 > 0.95);
}

TEST_CASE("Lasota-Yorke certificates") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  for (double alpha : {0.5, 1.0}) {
    const auto op = build_base_operator(coin, 6);
    const auto ly = lasota_yorke_check(op, nullptr, alpha, 4);
    // Constant transition probabilities: pure contraction by 2^{-alpha}.
    CHECK(lasota_yorke_constant(ly, std::pow(2.0, -alpha)) <= 1e-12);
    CHECK(ly.sigma <= std::pow(2.0, -alpha) + 0.01);
    CHECK_FALSE(ly.weak);
  }
  const auto op = build_base_operator(chain_p(), 4);
  const auto ly = lasota_yorke_check(op, nullptr, 0.5, 4);
  // v(Q^n phi) <= 2^{-n alpha} v(phi) + v(p) / (1 - 2^{-alpha}) ||phi||, v(p) <= 0.7.
  CHECK(lasota_yorke_constant(ly, std::pow(2.0, -0.5)) <= 0.7 / (1 - std::pow(2.0, -0.5)));

  const VectorXd constant = VectorXd::Constant(static_cast<Eigen::Index>(op.states()), 2.0);
  CHECK(holder_seminorm(op, nullptr, constant, 0.5) == 0.0);
  CHECK(holder_seminorm(op, nullptr, apply(op, constant), 0.5) == 0.0);

  const auto typ = examples::typical();
  const auto grid = ProjectiveGrid::make(2, 48);
  const auto fop = build_fiber_operator(typ.cocycle, typ.base, 3, grid);
  const auto fly = lasota_yorke_check(fop, &grid, 0.25, 8);
  CHECK(fly.table.size() == 20 * 8);
  CHECK(fly.sigma < 1.0);
}

TEST_CASE("LDP rate function") {
  const auto sc = examples::scalar();
  LdpOptions opt;
  for (int k = -10; k <= 10; ++k) opt.t_grid.push_back(k / 10.0);
  opt.epsilon_grid = {0.1, 0.3, 0.6};
  const auto r = ldp_rate_function(sc.cocycle, sc.base, ProjectiveGrid::make(1, 1), opt);
  CHECK(r.centering_exact);
  CHECK(r.centering == 0.0);
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    CHECK(std::abs(std::exp(r.c[i]) - std::cosh(r.t[i] * std::log(2.0))) < 1e-8);
    if (r.t[i] == 0.0) CHECK(r.c[i] == 0.0);
  }
  for (std::size_t i = 1; i + 1 < r.c.size(); ++i) CHECK(r.c[i + 1] - 2 * r.c[i] + r.c[i - 1] >= -1e-9);
  for (double v : r.c_star) CHECK(v > 0.0);
  CHECK(std::abs(r.derivative_at_zero) < 1e-12);

  const auto typ = examples::typical();
  LdpOptions two;
  two.t_grid = {-0.5, -0.25, 0.0, 0.25, 0.5};
  two.monte_carlo.n = 20'000;
  two.monte_carlo.chains = 4;
  const auto q = ldp_rate_function(typ.cocycle, typ.base, ProjectiveGrid::make(2, 180), two);
  CHECK_FALSE(q.centering_exact);
  CHECK(q.c[2] == 0.0);
  for (std::size_t i = 1; i + 1 < q.c.size(); ++i) CHECK(q.c[i + 1] - 2 * q.c[i] + q.c[i - 1] >= -1e-9);
}

TEST_CASE("projective grids") {
  const auto g2 = ProjectiveGrid::make(2, 720);
  CHECK(g2.diameter() <= 2 * std::numbers::pi / 720);
  VectorXd v(2);
  v << -1.0, 1e-3;
  CHECK(g2.nearest(v) == 719);
  CHECK(g2.nearest(-v) == 719);

  const auto g3 = ProjectiveGrid::make(3, 2000);
  CounterRng rng(11);
  for (int k = 0; k < 200; ++k) {
    VectorXd u(3);
    for (int i = 0; i < 3; ++i) u(i) = rng.normal();
    const auto c = g3.nearest(u);
    std::size_t brute = 0;
    double best = 2;
    for (std::size_t j = 0; j < g3.size(); ++j) {
      const double d = sine_distance(u, g3.rep(j));
      if (d < best) {
        best = d;
        brute = j;
      }
    }
    CHECK(sine_distance(u, g3.rep(c)) == doctest::Approx(sine_distance(u, g3.rep(brute))).epsilon(1e-12));
    CHECK(g3.nearest(-u) == c);
  }
  CHECK(g3.diameter() > 0.0);
  CHECK(g3.diameter() < 0.2);
}

TEST_CASE("triplet dump") {
  const auto op = build_base_operator(chain_p(), 1);
  std::ostringstream out;
  write_triplets(out, op);
  CHECK(out.str() == "row,col,weight\n0,0,0.90000000000000002\n0,1,0.10000000000000001\n1,0,0.20000000000000001\n"
                     "1,1,0.80000000000000004\n");
}
