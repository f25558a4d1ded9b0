#include "doctest.h"

#include "cocylab/symbolic.hpp"

#include <cmath>
#include <sstream>

using namespace cocylab;

namespace {

MarkovBase sticky_chain() {
  MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.2, 0.8;
  return MarkovBase::chain(p);
}

TwoSidedWord random_word(CounterRng& rng, int lo, int hi) {
  std::vector<int> s;
  for (int k = lo; k <= hi; ++k) s.push_back(static_cast<int>(rng() % 2));
  return TwoSidedWord::from_range(std::move(s), lo);
}

}  // namespace

TEST_CASE("shift distance") {
  const auto x = TwoSidedWord(Word::parse("0101"), Word::parse("1100"));
  CHECK(shift_distance(x, x, true) == 0.0);

  auto y = x;
  auto s = x.symbols();
  s[static_cast<std::size_t>(0 - x.lo())] ^= 1;
  CHECK(shift_distance(x, TwoSidedWord::from_range(s, x.lo())) == 1.0);

  std::vector<int> a(9, 0), b(9, 0);
  b[0] = 1;  // coordinate -4
  const auto u = TwoSidedWord::from_range(a, -4);
  const auto v = TwoSidedWord::from_range(b, -4);
  CHECK(shift_distance(u, v) == 0.0625);

  CHECK_THROWS_WITH_AS(shift_distance(TwoSidedWord::from_range({0, 1}, -5), TwoSidedWord::from_range({0, 1}, 3)),
                       "incomparable words", ValidationError);
}

TEST_CASE("shift distance is a metric on random triples") {
  CounterRng rng(7);
  for (int t = 0; t < 10000; ++t) {
    const auto x = random_word(rng, -6, 6);
    const auto y = random_word(rng, -6, 6);
    const auto z = random_word(rng, -6, 6);
    CHECK(shift_distance(x, y, true) == shift_distance(y, x, true));
    CHECK(shift_distance(x, z, true) <= shift_distance(x, y, true) + shift_distance(y, z, true));
  }
}

TEST_CASE("transition probabilities") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const std::vector<int> past{1, 0, 1};
  CHECK(coin.transition_probs(past) == std::vector<double>{0.5, 0.5});

  const auto chain = sticky_chain();
  const std::vector<int> ends_in_zero{1, 1, 0};
  const auto p = chain.transition_probs(ends_in_zero);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(chain.transition_probs(std::span<const int>()), "insufficient memory", ValidationError);

  // pi_0 = p_10 / (p_01 + p_10) for a two-state chain.
  const double pi0 = 0.2 / (0.1 + 0.2);
  CHECK(std::abs(chain.stationary()[0] - pi0) < 1e-12);
  CHECK(std::abs(chain.stationary()[1] - (1 - pi0)) < 1e-12);
}

TEST_CASE("row sums are validated and the failing row is named") {
  CHECK_THROWS_WITH_AS(MarkovBase(2, 1, {0.5, 0.5, 0.6, 0.3}), doctest::Contains("row 1"), ValidationError);
  CHECK_THROWS_AS(MarkovBase(2, 1, {1.2, -0.2, 0.5, 0.5}), ValidationError);
}

TEST_CASE("orbit sampling") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto a = sample_orbit(coin, 1000, 42);
  const auto b = sample_orbit(coin, 1000, 42);
  CHECK(a.symbols == b.symbols);
  CHECK(a.length() == 1000);

  const std::size_t n = 1'000'000;
  const auto big = sample_orbit(coin, n, 3);
  double zeros = 0;
  for (int s : big.recorded()) zeros += s == 0;
  CHECK(std::abs(zeros / n - 0.5) < 0.003);

  const auto chain = sticky_chain();
  const auto orbit = sample_orbit(chain, n, 5);
  zeros = 0;
  for (int s : orbit.recorded()) zeros += s == 0;
  CHECK(std::abs(zeros / n - 2.0 / 3.0) < 0.01);
}

TEST_CASE("length-2 cylinder frequencies match the measure") {
  const auto chain = sticky_chain();
  const std::size_t n = 200'000;
  const auto orbit = sample_orbit(chain, n, 11);
  const auto rec = orbit.recorded();
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) counts[rec[i]][rec[i + 1]] += 1;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const std::vector<int> w{i, j};
      CHECK(std::abs(counts[i][j] / (n - 1) - chain.cylinder_measure(w)) < 5.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("orbit sample transitions are legal") {
  MatrixXd p(2, 2);
  p << 0.5, 0.5, 1.0, 0.0;  // 1 -> 1 forbidden
  const auto golden = MarkovBase::chain(p);
  const auto orbit = sample_orbit(golden, 10000, 9);
  CHECK(golden.allows(orbit.symbols));
}

TEST_CASE("orbit dump") {
  const auto orbit = sample_orbit(MarkovBase::bernoulli({0.5, 0.5}), 40, 1, 0);
  std::ostringstream out;
  write_orbit(out, orbit);
  std::istringstream in(out.str());
  std::vector<int> back;
  int s = 0;
  while (in >> s) back.push_back(s);
  CHECK(back == orbit.symbols);
}

TEST_CASE("periodic words") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto fixed = periodic_word(coin, Word::parse("0"), 4);
  for (int k = fixed.lo(); k <= fixed.hi(); ++k) CHECK(fixed.at(k) == 0);

  const auto two = periodic_word(coin, Word::parse("01"), 4);
  for (int k = two.lo(); k <= two.hi(); ++k) CHECK(two.at(k) == ((k % 2) + 2) % 2);

  MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 1.0;  // 1 -> 0 forbidden
  const auto no_return = MarkovBase::chain(p);
  CHECK_THROWS_WITH_AS(periodic_word(no_return, Word::parse("01"), 4), "not a periodic point", ValidationError);
}

TEST_CASE("homoclinic splice") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto a = periodic_word(coin, Word::parse("0"), 8);

  const auto same = splice_homoclinic(coin, Word::parse("0"), Word{}, 8);
  CHECK(same.l == 0);
  CHECK(same.z == a);

  const auto one = splice_homoclinic(coin, Word::parse("0"), Word::parse("1"), 8);
  CHECK(one.l == 1);
  CHECK(one.z.at(1) == 1);
  CHECK(one.z.at(0) == 0);
  CHECK(one.z.at(2) == 0);

  const auto three = splice_homoclinic(coin, Word::parse("0"), Word::parse("110"), 8);
  CHECK(three.l == 3);

  const auto block = Word::parse("01");
  const auto pa = periodic_word(coin, block, 8);
  const auto h = splice_homoclinic(coin, block, Word::parse("111"), 8);
  for (int k = h.z.lo(); k <= 0; ++k) CHECK(h.z.at(k) == pa.at(k));
  for (int k = 1; k + h.l <= h.z.hi(); ++k) CHECK(h.z.at(k + h.l) == pa.at(k));

  MatrixXd p(2, 2);
  p << 1.0, 0.0, 0.5, 0.5;  // 0 -> 1 forbidden
  CHECK_THROWS_AS(splice_homoclinic(MarkovBase::chain(p), Word::parse("0"), Word::parse("1"), 8), ValidationError);
}

TEST_CASE("birkhoff averages") {
  const auto coin = MarkovBase::bernoulli({0.5, 0.5});
  const auto orbit = sample_orbit(coin, 1'000'000, 17);
  const std::vector<double> constant{3.5, 3.5};
  CHECK(birkhoff_average(orbit, 2, 1, constant) == doctest::Approx(3.5));
  const std::vector<double> indicator{1.0, 0.0};
  CHECK(std::abs(birkhoff_average(orbit, 2, 1, indicator) - 0.5) < 0.003);
  const std::vector<double> value{0.0, 1.0};
  CHECK(periodic_average(Word::parse("01"), 2, 1, value) == 0.5);
}

TEST_CASE("primitivity and reference blocks") {
  CHECK(sticky_chain().is_primitive());
  MatrixXd swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  CHECK_FALSE(MarkovBase::chain(swap).is_primitive());

  MatrixXd p(2, 2);
  p << 0.5, 0.5, 1.0, 0.0;
  const auto golden = MarkovBase::chain(p);
  CHECK(reference_block(golden, 0).symbols == std::vector<int>{0});
  CHECK(reference_block(golden, 1).symbols == std::vector<int>{1, 0});
}

TEST_CASE("word codes round trip") {
  for (std::size_t code = 0; code < 27; ++code) CHECK(word_code(decode_word(code, 3, 3), 3) == code);
  const std::vector<int> w{1, 0, 2};
  CHECK(word_code(w, 3) == 11);
}
