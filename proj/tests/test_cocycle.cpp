#include "doctest.h"

#include "cocylab/cocycle.hpp"
#include "cocylab/examples.hpp"

#include <cmath>
#include <numbers>

using namespace cocylab;

namespace {

LyapunovOptions quick(std::size_t n = 20'000, std::size_t chains = 20) {
  LyapunovOptions opt;
  opt.n = n;
  opt.chains = chains;
  opt.seed = 123;
  return opt;
}

}  // namespace

TEST_CASE("evaluate reads the last depth symbols") {
  const auto c = Cocycle::constant(2, diag2(2.0, 0.5));
  const std::vector<int> p1{0, 1, 1}, p2{1, 0};
  CHECK(c.evaluate(p1) == c.evaluate(p2));

  const auto ex = examples::diagonal().cocycle;
  const std::vector<int> ends0{1, 1, 0};
  CHECK(ex.evaluate(ends0) == diag2(3.0, 1.0 / 3.0));

  const auto two = examples::bunched().cocycle;
  const std::vector<int> w01{0, 1}, w11{1, 1};
  CHECK(two.evaluate(w01) != two.evaluate(w11));
  CHECK_THROWS_AS(two.evaluate(std::vector<int>{1}), ValidationError);
}

TEST_CASE("singular generators are rejected") {
  CHECK_THROWS_WITH_AS(Cocycle(2, 1, {MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)}),
                       doctest::Contains("singular"), ValidationError);
  CHECK_THROWS_AS(Cocycle(2, 2, {MatrixXd::Identity(2, 2)}), ValidationError);
}

TEST_CASE("stabilized products") {
  const std::vector<int> orbit(40, 0);
  const auto id = Cocycle::constant(2, MatrixXd::Identity(3, 3));
  const auto r = product(id, orbit, 0, 10);
  CHECK(r.log_factors.cwiseAbs().maxCoeff() == 0.0);

  const auto hyp = Cocycle::constant(2, diag2(2.0, 0.5));
  const auto h = product(hyp, orbit, 0, 10);
  CHECK(h.log_factors.col(0).sum() == doctest::Approx(10 * std::log(2.0)).epsilon(1e-14));
  CHECK(h.log_factors.col(1).sum() == doctest::Approx(-10 * std::log(2.0)).epsilon(1e-14));

  // Direct multiplication oracle.
  const auto typ = examples::typical();
  const auto sample = sample_orbit(typ.base, 30, 5, 0);
  const auto s = product(typ.cocycle, sample.symbols, 0, 20);
  MatrixXd direct = MatrixXd::Identity(2, 2);
  double log_det = 0;
  for (int j = 0; j < 20; ++j) {
    const auto code = static_cast<std::size_t>(sample.symbols[j]);
    direct = typ.cocycle.generator(code) * direct;
    log_det += std::log(std::abs(typ.cocycle.generator(code).determinant()));
  }
  REQUIRE(s.raw.has_value());
  CHECK((*s.raw - direct).norm() < 1e-12 * direct.norm());
  // The first log factor of the QR of A^n e_1 chain is log ||A^n e_1||;
  // the sum of all of them is log |det A^n|.
  CHECK(std::abs(s.log_factors.sum() - log_det) < 1e-10);
  CHECK(std::abs(s.log_factors.col(0).sum() - std::log(direct.col(0).norm())) < 1e-10);

  const auto big = sample_orbit(typ.base, 200, 5, 0);
  CHECK_FALSE(product(typ.cocycle, big.symbols, 0, 100).raw.has_value());
}

TEST_CASE("collapse of a QR factor is reported") {
  const auto tiny = Cocycle::constant(2, MatrixXd::Constant(1, 1, 1e-301));
  const std::vector<int> orbit(10, 0);
  CHECK_THROWS_WITH_AS(product(tiny, orbit, 0, 3), "numerical collapse", NumericalError);
}

TEST_CASE("Lyapunov closed forms") {
  const auto sc = examples::scalar();
  const auto s = lyapunov_spectrum(sc.cocycle, sc.base, quick());
  CHECK(std::abs(s.exponents[0]) < 3 * s.stderrs[0]);

  const auto dg = examples::diagonal();
  const auto d = lyapunov_spectrum(dg.cocycle, dg.base, quick());
  const double l1 = (std::log(3.0) + std::log(2.0)) / 2;
  CHECK(std::abs(d.exponents[0] - l1) < 3 * d.stderrs[0] + 1e-12);
  CHECK(std::abs(d.exponents[1] + l1) < 3 * d.stderrs[1] + 1e-12);

  const auto t3 = examples::trace3();
  const auto t = lyapunov_spectrum(t3.cocycle, t3.base, quick(5000, 4));
  CHECK(std::abs(t.exponents[0] - std::log((3 + std::sqrt(5.0)) / 2)) < 3 * t.stderrs[0] + 1e-3);
}

TEST_CASE("volume identity along the same orbits") {
  for (const auto& ex : examples::all()) {
    const auto est = lyapunov_spectrum(ex.cocycle, ex.base, quick(5000, 4));
    double sum = 0;
    for (double v : est.exponents) sum += v;
    CHECK(std::abs(sum - est.log_det_average) < 1e-8);
    CHECK(std::abs(sum - expected_log_det(ex.cocycle, ex.base)) < 0.05);
  }
}

TEST_CASE("scaling by a power of two shifts every exponent exactly") {
  const auto typ = examples::typical();
  const auto a = lyapunov_spectrum(typ.cocycle, typ.base, quick(5000, 4));
  const auto b = lyapunov_spectrum(typ.cocycle.scaled(2.0), typ.base, quick(5000, 4));
  const auto c = lyapunov_spectrum(typ.cocycle.scaled(3.0), typ.base, quick(5000, 4));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(b.exponents[k] - (a.exponents[k] + std::log(2.0))) < 1e-12);
    CHECK(std::abs(c.exponents[k] - (a.exponents[k] + std::log(3.0))) < 1e-12);
  }
}

TEST_CASE("exterior powers") {
  const auto typ = examples::typical().cocycle;
  const auto one = exterior_power(typ, 1);
  for (std::size_t w = 0; w < typ.size(); ++w) CHECK(one.generator(w) == typ.generator(w));

  MatrixXd g(2, 2);
  g << 2, 1, 1, 1;
  const auto top = exterior_power(Cocycle::constant(2, g), 2);
  CHECK(top.dim() == 1);
  CHECK(top.generator(0)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  MatrixXd m3 = MatrixXd::Random(3, 3) + 3 * MatrixXd::Identity(3, 3);
  const auto c3 = Cocycle::constant(2, m3);
  const auto w2 = exterior_power(c3, 2);
  CHECK(w2.dim() == 3);
  CHECK(exterior_power(exterior_power(c3, 1), 2).generator(0) == w2.generator(0));
  CHECK(std::abs(exterior_power(c3, 3).generator(0)(0, 0) - m3.determinant()) < 1e-12);

  // Cauchy-Binet: compound of a product is the product of compounds.
  MatrixXd n3 = MatrixXd::Random(3, 3);
  CHECK((compound_matrix(m3 * n3, 2) - compound_matrix(m3, 2) * compound_matrix(n3, 2)).norm() < 1e-12);

  const auto ex = examples::bunched();
  const auto spec = lyapunov_spectrum(ex.cocycle, ex.base, quick(10'000, 20));
  const auto wedge = lyapunov_spectrum(exterior_power(ex.cocycle, 2), ex.base, quick(10'000, 20));
  CHECK(std::abs(wedge.exponents[0] - (spec.exponents[0] + spec.exponents[1])) <
        3 * std::hypot(wedge.stderrs[0], std::hypot(spec.stderrs[0], spec.stderrs[1])));
}

TEST_CASE("fiber bunching") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto id = fiber_bunching_check(Cocycle::constant(2, MatrixXd::Identity(2, 2)), coin, 4);
  CHECK(id.satisfied);
  CHECK(id.witness == 1);
  CHECK(id.value == doctest::Approx(0.5));

  const auto hyp = fiber_bunching_check(Cocycle::constant(2, diag2(2.0, 0.5)), coin, 6);
  CHECK_FALSE(hyp.satisfied);
  CHECK(hyp.sup_by_n[0] == doctest::Approx(2.0));

  const auto conf = Cocycle(2, 1, {3.0 * rotation(0.4), 0.5 * rotation(2.0)}, 0.05);
  const auto c = fiber_bunching_check(conf, coin, 2);
  CHECK(c.satisfied);
  CHECK(c.witness == 1);

  CHECK_THROWS_WITH_AS(fiber_bunching_check(Cocycle::constant(2, diag2(2.0, 0.5)), coin, 30, 1000),
                       "enumeration budget", BudgetError);
}

TEST_CASE("fiber bunching is monotone in alpha") {
  const auto ex = examples::bunched();
  bool seen = false;
  for (double alpha = 0.05; alpha <= 1.0; alpha += 0.05) {
    const bool ok = fiber_bunching_check(ex.cocycle.with_alpha(alpha), ex.base, 6).satisfied;
    if (seen) CHECK(ok);
    seen = seen || ok;
  }
  CHECK(seen);
}

TEST_CASE("uniform distance") {
  const auto typ = examples::typical().cocycle;
  CHECK(uniform_distance(typ, typ) == 0.0);
  const auto other = examples::diagonal().cocycle;
  CHECK(uniform_distance(typ, other) == uniform_distance(other, typ));

  const double eps = 0.1;
  const auto a = Cocycle::constant(2, MatrixXd::Identity(2, 2));
  const auto b = Cocycle::constant(2, diag2(1 + eps, 1.0));
  CHECK(uniform_distance(a, b) == doctest::Approx(eps + (1 - 1 / (1 + eps))).epsilon(1e-14));

  CHECK_THROWS_AS(uniform_distance(a, Cocycle::constant(2, MatrixXd::Identity(3, 3))), ValidationError);
  // A depth-1 cocycle against its depth-2 padding.
  CHECK(uniform_distance(typ, typ.widened(2, 0)) == 0.0);
}

TEST_CASE("results do not depend on the thread count") {
  const auto ex = examples::bunched();
  auto opt = quick(5000, 8);
  opt.threads = 1;
  const auto a = lyapunov_spectrum(ex.cocycle, ex.base, opt);
  opt.threads = 4;
  const auto b = lyapunov_spectrum(ex.cocycle, ex.base, opt);
  CHECK(a.exponents == b.exponents);
  CHECK(a.stderrs == b.stderrs);
}
