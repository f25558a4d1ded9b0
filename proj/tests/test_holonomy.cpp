#include "doctest.h"

#include "cocylab/examples.hpp"
#include "cocylab/holonomy.hpp"

#include <cmath>

using namespace cocylab;

namespace {

TwoSidedWord sample_window(const MarkovBase& base, std::uint64_t seed, int half = 64) {
  const auto orbit = sample_orbit(base, static_cast<std::size_t>(2 * half + 1), seed, 200);
  const auto rec = orbit.recorded();
  return TwoSidedWord::from_range(std::vector<int>(rec.begin(), rec.end()), -half);
}

/// y agrees with x on coordinates > -j, differs at -j and follows another
/// orbit below.
TwoSidedWord stable_partner(const MarkovBase& base, const TwoSidedWord& x, int j, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const auto other = sample_window(base, seed * 1000 + attempt, -x.lo());
    auto s = x.symbols();
    for (int k = x.lo(); k <= -j; ++k) s[static_cast<std::size_t>(k - x.lo())] = other.at(k);
    if (other.at(-j) != x.at(-j) && base.allows(s)) return TwoSidedWord::from_range(std::move(s), x.lo());
  }
}

TwoSidedWord unstable_partner(const MarkovBase& base, const TwoSidedWord& x, int j, std::uint64_t seed) {
  return stable_partner(base, x.reflected(), j, seed).reflected();
}

double relation_residual(const Cocycle& a, const TwoSidedWord& x, const TwoSidedWord& y, const MatrixXd& h,
                         const MatrixXd& h_next) {
  return (a.at(y) * h - h_next * a.at(x)).norm();
}

}  // namespace

TEST_CASE("trivial holonomies") {
  const auto ex = examples::bunched();
  const HolonomySolver solver(ex.cocycle, ex.base);
  const auto x = sample_window(ex.base, 1);
  const auto r = solver.stable(x, x);
  CHECK(r.H == MatrixXd::Identity(2, 2));
  CHECK(r.iterations == 0);
  CHECK(solver.unstable(x, x).H == MatrixXd::Identity(2, 2));

  // A depth-1 past cocycle is the same along local stable sets.
  const auto typ = examples::typical();
  const auto y = stable_partner(typ.base, x, 1, 3);
  CHECK(stable_holonomy(typ.cocycle, typ.base, x, y).H == MatrixXd::Identity(2, 2));
  // A past-determined cocycle is the same along local unstable sets.
  const auto u = unstable_partner(ex.base, x, 1, 4);
  CHECK(solver.unstable(x, u).H == MatrixXd::Identity(2, 2));
}

TEST_CASE("preconditions") {
  const auto ex = examples::bunched();
  const auto x = sample_window(ex.base, 2);
  auto s = x.symbols();
  s[static_cast<std::size_t>(3 - x.lo())] ^= 1;
  const auto off = TwoSidedWord::from_range(s, x.lo());
  CHECK_THROWS_WITH_AS(stable_holonomy(ex.cocycle, ex.base, x, off), "not on the same stable set", ValidationError);
  const auto hyp = Cocycle::constant(2, diag2(2.0, 0.5));
  CHECK_THROWS_WITH_AS(stable_holonomy(hyp.widened(2, 0), ex.base, x, x), "not fiber bunched", ValidationError);
  // A one-step window has identity holonomies whether or not it is bunched.
  const auto one = stable_holonomy(hyp, ex.base, x, stable_partner(ex.base, x, 2, 9));
  CHECK(one.H == MatrixXd::Identity(2, 2));
  CHECK(one.error_bound == 0.0);
}

TEST_CASE("stable holonomy certificate and equivariance") {
  const auto ex = examples::bunched();
  const HolonomySolver solver(ex.cocycle, ex.base);
  const auto& k = solver.stable_constants();
  CHECK(k.tau < 1.0);
  CHECK(k.C1 >= 1.0);
  CHECK(k.beta > 0.0);
  CHECK(k.beta <= ex.cocycle.alpha());

  HolonomyOptions opt;
  opt.tol = 1e-10;
  const auto x = sample_window(ex.base, 5);
  const auto y = stable_partner(ex.base, x, 1, 6);
  const auto r = solver.stable(x, y, opt);
  CHECK(r.distance == 0.5);
  CHECK(r.error_bound < 1e-10);
  CHECK((r.H - MatrixXd::Identity(2, 2)).norm() > 1e-3);
  const auto next = solver.stable(x.shifted(1), y.shifted(1), opt);
  CHECK(relation_residual(ex.cocycle, x, y, r.H, next.H) < 1e-8);
}

TEST_CASE("composition, Holder bound and Cauchy rate over random stable pairs") {
  const auto ex = examples::bunched();
  const HolonomySolver solver(ex.cocycle, ex.base);
  const auto& k = solver.stable_constants();
  const double tol = 1e-8;
  HolonomyOptions opt;
  opt.tol = tol;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto x = sample_window(ex.base, 100 + t);
    const int j = 1 + static_cast<int>(t % 4);
    const auto y = stable_partner(ex.base, x, j, 3 * t + 1);
    const auto z = stable_partner(ex.base, x, 1 + static_cast<int>((t / 4) % 3), 3 * t + 2);
    const auto hxy = solver.stable(x, y, opt);
    const auto hyz = solver.stable(y, z, opt);
    const auto hxz = solver.stable(x, z, opt);
    CHECK(spectral_norm(MatrixXd(hyz.H * hxy.H - hxz.H)) <= 3 * tol);
    CHECK(spectral_norm(MatrixXd(hxy.H - MatrixXd::Identity(2, 2))) <=
          k.C_holder * std::pow(hxy.distance, k.beta) * (1 + 1e-12));
    for (std::size_t n = 0; n < hxy.cauchy.size(); ++n)
      CHECK(hxy.cauchy[n] <= k.C1 * std::pow(k.rate, static_cast<double>(n)) * std::pow(hxy.distance, k.alpha));
  }
}

TEST_CASE("unstable holonomy of a future-dependent cocycle") {
  const auto ex = examples::future();
  const HolonomySolver solver(ex.cocycle, ex.base);
  HolonomyOptions opt;
  opt.tol = 1e-10;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto x = sample_window(ex.base, 500 + t);
    const auto y = unstable_partner(ex.base, x, 1, 600 + t);
    const auto h = solver.unstable(x, y, opt);
    const auto prev = solver.unstable(x.shifted(-1), y.shifted(-1), opt);
    CHECK(relation_residual(ex.cocycle, x.shifted(-1), y.shifted(-1), prev.H, h.H) < 1e-8);
    if (x.at(1) != y.at(1)) CHECK((h.H - MatrixXd::Identity(2, 2)).norm() > 1e-6);
  }
}

TEST_CASE("unstable holonomy matches the defining limit") {
  const auto ex = examples::future();
  const HolonomySolver solver(ex.cocycle, ex.base);
  const auto x = sample_window(ex.base, 77);
  const auto y = unstable_partner(ex.base, x, 1, 78);
  const auto& a = ex.cocycle;
  // A^{-n}(x) = A(T^{-n}x)^{-1} ... A(T^{-1}x)^{-1}, n = 40.
  MatrixXd aminus_x = MatrixXd::Identity(2, 2);
  for (int j = 1; j <= 40; ++j) aminus_x = a.at(x, -j).inverse() * aminus_x;
  MatrixXd aminus_y = MatrixXd::Identity(2, 2);
  for (int j = 1; j <= 40; ++j) aminus_y = a.at(y, -j).inverse() * aminus_y;
  const MatrixXd limit = aminus_y.inverse() * aminus_x;
  CHECK((solver.unstable(x, y).H - limit).norm() < 1e-9 * limit.norm());
}

TEST_CASE("reduction to the past") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto c = Cocycle::constant(2, examples::typical().cocycle.generator(1));
  const auto rc = reduce_to_past(HolonomySolver(c, coin));
  for (const auto& g : rc.reduced.generators()) CHECK(g == c.generator(0));

  // Past-determined: A^s = A o T^{-1}, read on the window [-D, 0].
  const auto ex = examples::bunched();
  const auto r = reduce_to_past(HolonomySolver(ex.cocycle, ex.base));
  CHECK(r.reduced.depth() == 3);
  CHECK(r.reduced.lead() == 0);
  for (std::size_t code = 0; code < r.reduced.size(); ++code) {
    const auto w = decode_word(code, 3, 2);
    const std::vector<int> head{w[0], w[1]};
    CHECK((r.reduced.generator(code) - ex.cocycle.generator(word_code(head, 2))).norm() < 1e-10);
  }
}

TEST_CASE("reduced future-dependent cocycle") {
  const auto ex = examples::future();
  const HolonomySolver solver(ex.cocycle, ex.base);
  const auto red = reduce_to_past(solver);
  CHECK(red.reduced.lead() == 0);
  CHECK(red.reduced.depth() == 3);
  for (std::uint64_t t = 0; t < 40; ++t) {
    const auto x = sample_window(ex.base, 900 + t);
    // The reduced generator depends on the past only.
    const auto y = unstable_partner(ex.base, x, 1, 950 + t);
    const MatrixXd direct_x = reduction_conjugacy(solver, red.references, x) * ex.cocycle.at(x.shifted(-1)) *
                              reduction_conjugacy(solver, red.references, x.shifted(-1)).inverse();
    const MatrixXd direct_y = reduction_conjugacy(solver, red.references, y) * ex.cocycle.at(y.shifted(-1)) *
                              reduction_conjugacy(solver, red.references, y.shifted(-1)).inverse();
    CHECK((direct_x - direct_y).norm() < 1e-10);
    // Conjugacy relation A^s(x) H(T^{-1}x) = H(x) A(T^{-1}x).
    const MatrixXd lhs = red.reduced.at(x) * reduction_conjugacy(solver, red.references, x.shifted(-1));
    const MatrixXd rhs = reduction_conjugacy(solver, red.references, x) * ex.cocycle.at(x.shifted(-1));
    CHECK((lhs - rhs).norm() < 1e-10);
  }

  LyapunovOptions opt;
  opt.n = 20'000;
  opt.chains = 20;
  opt.seed = 31;
  const auto la = lyapunov_spectrum(ex.cocycle, ex.base, opt);
  const auto ls = lyapunov_spectrum(red.reduced, ex.base, opt);
  CHECK(std::abs(la.exponents[0] - ls.exponents[0]) < 3 * std::hypot(la.stderrs[0], ls.stderrs[0]));
}

TEST_CASE("transition maps") {
  const auto typ = examples::typical();
  const HolonomySolver solver(typ.cocycle, typ.base);
  const auto id = transition_map(solver, Word::parse("0"), Word{});
  CHECK(id.psi == MatrixXd::Identity(2, 2));

  const auto coin = typ.base;
  const MatrixXd a0 = typ.cocycle.generator(1);
  const auto constant = HolonomySolver(Cocycle::constant(2, a0), coin);
  const auto t = transition_map(constant, Word::parse("0"), Word::parse("110"));
  MatrixXd cube = MatrixXd::Identity(2, 2);
  for (int j = 0; j < 3; ++j) cube = a0 * cube;
  CHECK(t.psi == cube);

  // Brute-force limit of the holonomy iterates at n = 60.
  const auto m = transition_map(solver, Word::parse("0"), Word::parse("1"));
  const auto& a = typ.cocycle;
  const auto pa = periodic_word(coin, Word::parse("0"), 70);
  const auto& z = m.splice.z;
  const auto zp = z.shifted(m.splice.l);
  MatrixXd an_a = MatrixXd::Identity(2, 2), an_zp = MatrixXd::Identity(2, 2);
  for (int j = 0; j < 60; ++j) {
    an_a = a.at(pa, j) * an_a;
    an_zp = a.at(zp, j) * an_zp;
  }
  const MatrixXd hs = an_a.inverse() * an_zp;
  MatrixXd am_a = MatrixXd::Identity(2, 2), am_z = MatrixXd::Identity(2, 2);
  for (int j = 1; j <= 60; ++j) {
    am_a = a.at(pa, -j).inverse() * am_a;
    am_z = a.at(z, -j).inverse() * am_z;
  }
  const MatrixXd hu = am_z.inverse() * am_a;
  const MatrixXd brute = hs * a.at(z) * hu;
  CHECK((m.psi - brute).norm() < 1e-10);
  const MatrixXd closed = a.generator(0).inverse() * a.generator(1) * a.generator(0);
  CHECK((m.psi - closed).norm() < 1e-12);
}
