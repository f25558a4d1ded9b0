#ifndef COCYLAB_SYMBOLIC_HPP
#define COCYLAB_SYMBOLIC_HPP

#include "cocylab/common.hpp"
#include "cocylab/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace cocylab {

enum class Orientation { past, future };

/// Finite block of symbols. A past word is read left to right toward
/// coordinate 0, so its last symbol sits at coordinate 0.
struct Word {
  std::vector<int> symbols;
  Orientation orientation = Orientation::future;

  /// Parses a digit string such as "0110" (symbols 0..9 only).
  static Word parse(std::string_view digits, Orientation o = Orientation::future);

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
};

/// A window [lo, hi] of a bi-infinite sequence. Coordinate 0 is the last
/// symbol of the past part; the future part starts at coordinate 1.
class TwoSidedWord {
 public:
  TwoSidedWord() = default;
  TwoSidedWord(const Word& past, const Word& future);

  /// symbols[i] sits at coordinate lo + i.
  static TwoSidedWord from_range(std::vector<int> symbols, int lo);

  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(symbols_.size()) - 1; }
  bool contains(int k) const { return k >= lo() && k <= hi(); }
  int at(int k) const;

  /// Symbols at coordinates from..to inclusive.
  std::span<const int> range(int from, int to) const;
  const std::vector<int>& symbols() const { return symbols_; }

  Word past() const;
  Word future() const;

  /// The window of T^s x, where (T x)_k = x_{k+1}.
  TwoSidedWord shifted(int s) const;
  /// x'_k = x_{-k}; exchanges stable and unstable sets.
  TwoSidedWord reflected() const;

  bool operator==(const TwoSidedWord&) const = default;

 private:
  std::vector<int> symbols_;
  int lo_ = 0;
};

/// 2^{-k}, k the smallest |i| with x_i != y_i or x_{-i} != y_{-i}, scanned
/// over the symmetric part of the common window. If no disagreement is found
/// the result is 0 when `exhaustive` (the windows represent the whole
/// points), otherwise the truncation bound 2^{-(K+1)}.
double shift_distance(const TwoSidedWord& x, const TwoSidedWord& y, bool exhaustive = false);

/// Finite-memory Markov measure on a subshift of finite type: the next symbol
/// depends on the last `memory` symbols. Forbidden transitions are those with
/// zero probability.
class MarkovBase {
 public:
  /// table has symbols^memory rows of `symbols` entries; rows are indexed by
  /// the past word read in base `symbols`, oldest symbol most significant.
  MarkovBase(int symbols, int memory, std::vector<double> table);

  static MarkovBase bernoulli(std::vector<double> p);
  static MarkovBase chain(const MatrixXd& transition);

  int symbols() const { return symbols_; }
  int memory() const { return memory_; }
  std::size_t classes() const { return rows_; }

  double prob(std::size_t past_class, int next) const {
    return table_[past_class * static_cast<std::size_t>(symbols_) + static_cast<std::size_t>(next)];
  }
  std::span<const double> row(std::size_t past_class) const {
    return {table_.data() + past_class * static_cast<std::size_t>(symbols_),
            static_cast<std::size_t>(symbols_)};
  }

  /// (p_1(x^-), ..., p_l(x^-)); reads only the last `memory` symbols.
  std::vector<double> transition_probs(std::span<const int> past) const;

  /// Stationary law of the induced chain on words of length `memory`.
  const std::vector<double>& stationary() const { return stationary_; }

  /// Class index of the last `memory` symbols of word.
  std::size_t class_of(std::span<const int> word) const;

  /// Every transition inside the block is allowed (and its first `memory`
  /// symbols carry positive stationary mass).
  bool allows(std::span<const int> word) const;
  /// The periodic repetition of block is legal.
  bool allows_cyclic(std::span<const int> block) const;

  /// mu of the cylinder fixed by word at consecutive coordinates.
  double cylinder_measure(std::span<const int> word) const;

  /// Primitivity of the support matrix (topological mixing).
  bool is_primitive() const;

  /// Smallest symbol s such that s followed by word is legal, or -1.
  int smallest_predecessor(std::span<const int> word) const;
  /// Smallest symbol s such that word followed by s is legal, or -1.
  int smallest_successor(std::span<const int> word) const;

 private:
  void compute_stationary();

  int symbols_;
  int memory_;
  std::size_t rows_;
  std::vector<double> table_;
  std::vector<double> stationary_;
};

/// Encodes word in base `symbols`, first symbol most significant.
std::size_t word_code(std::span<const int> word, int symbols);
std::vector<int> decode_word(std::size_t code, int length, int symbols);

/// Calls visit(word) for every legal word of the given length in
/// lexicographic order. Throws BudgetError past `budget` words.
void for_each_legal_word(const MarkovBase& base, int length,
                         const std::function<void(std::span<const int>)>& visit,
                         std::size_t budget = 10'000'000);

/// Draws symbols from the stationary chain; deterministic in the rng stream.
class SymbolSampler {
 public:
  SymbolSampler(const MarkovBase& base, CounterRng rng);
  int next();
  /// Code of the last `memory` symbols emitted.
  std::size_t state() const { return state_; }

 private:
  int draw(std::span<const double> probs);

  const MarkovBase* base_;
  CounterRng rng_;
  std::vector<int> pending_;
  std::size_t state_ = 0;
};

struct OrbitSample {
  std::vector<int> symbols;  // burn_in + n symbols
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;

  std::size_t length() const { return symbols.size() - burn_in; }
  std::span<const int> recorded() const {
    return std::span<const int>(symbols).subspan(burn_in);
  }
};

inline constexpr std::size_t kDefaultBurnIn = 1000;

OrbitSample sample_orbit(const MarkovBase& base, std::size_t n, std::uint64_t seed,
                         std::size_t burn_in = kDefaultBurnIn);

/// One symbol per whitespace-separated token, 32 per line.
void write_orbit(std::ostream& out, const OrbitSample& orbit);

/// Periodic point with x_k = block[k mod q], on the window
/// [-(reps*q) + 1, reps*q].
TwoSidedWord periodic_word(const MarkovBase& base, const Word& block, int repetitions);

struct Homoclinic {
  TwoSidedWord z;
  int l = 0;  // T^l z agrees with the periodic point on coordinates >= 1
};

/// z_k = a_k for k <= 0, z_{1..l} = bridge, z_{l+k} = a_k for k >= 1.
Homoclinic splice_homoclinic(const MarkovBase& base, const Word& block, const Word& bridge,
                             int repetitions = 64);

/// (1/n) sum of f over the windows of length `depth` ending at each recorded
/// position; f is indexed by word_code.
double birkhoff_average(const OrbitSample& orbit, int symbols, int depth, std::span<const double> f);
/// Exact average of f over one period of the periodic point generated by block.
double periodic_average(const Word& block, int symbols, int depth, std::span<const double> f);

/// Extends word to the left (greedy smallest legal predecessor).
std::vector<int> extend_left(const MarkovBase& base, std::vector<int> word, std::size_t count);
/// Extends word to the right (greedy smallest legal successor).
std::vector<int> extend_right(const MarkovBase& base, std::vector<int> word, std::size_t count);

/// Shortest, then lexicographically smallest, cyclically legal block
/// starting with `symbol`.
Word reference_block(const MarkovBase& base, int symbol, int max_length = 12);

}  // namespace cocylab

#endif  // COCYLAB_SYMBOLIC_HPP
