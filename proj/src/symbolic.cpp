#include "cocylab/symbolic.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace cocylab {

Word Word::parse(std::string_view digits, Orientation o) {
  Word w;
  w.orientation = o;
  for (char c : digits) {
    require(c >= '0' && c <= '9', "word: expected digits, got '" + std::string(1, c) + "'");
    w.symbols.push_back(c - '0');
  }
  return w;
}

TwoSidedWord::TwoSidedWord(const Word& past, const Word& future) {
  symbols_ = past.symbols;
  symbols_.insert(symbols_.end(), future.symbols.begin(), future.symbols.end());
  lo_ = 1 - static_cast<int>(past.size());
}

TwoSidedWord TwoSidedWord::from_range(std::vector<int> symbols, int lo) {
  TwoSidedWord w;
  w.symbols_ = std::move(symbols);
  w.lo_ = lo;
  return w;
}

int TwoSidedWord::at(int k) const {
  require(contains(k), "coordinate " + std::to_string(k) + " outside window [" +
                           std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
  return symbols_[static_cast<std::size_t>(k - lo_)];
}

std::span<const int> TwoSidedWord::range(int from, int to) const {
  require(from <= to + 1 && (from > to || (contains(from) && contains(to))),
          "coordinate range [" + std::to_string(from) + ", " + std::to_string(to) +
              "] outside window");
  return std::span<const int>(symbols_).subspan(static_cast<std::size_t>(from - lo_),
                                                static_cast<std::size_t>(to - from + 1));
}

Word TwoSidedWord::past() const {
  Word w;
  w.orientation = Orientation::past;
  for (int k = lo(); k <= std::min(0, hi()); ++k) w.symbols.push_back(at(k));
  return w;
}

Word TwoSidedWord::future() const {
  Word w;
  for (int k = std::max(1, lo()); k <= hi(); ++k) w.symbols.push_back(at(k));
  return w;
}

TwoSidedWord TwoSidedWord::shifted(int s) const { return from_range(symbols_, lo_ - s); }

TwoSidedWord TwoSidedWord::reflected() const {
  std::vector<int> rev(symbols_.rbegin(), symbols_.rend());
  return from_range(std::move(rev), -hi());
}

double shift_distance(const TwoSidedWord& x, const TwoSidedWord& y, bool exhaustive) {
  const int lo = std::max(x.lo(), y.lo());
  const int hi = std::min(x.hi(), y.hi());
  if (lo > hi) throw ValidationError("incomparable words");
  // Scan |i| = 0, 1, ... while both i and -i are inside the common window;
  // one-sided coordinates are checked as long as the other side is known.
  const int reach = std::max(-lo, hi);
  for (int i = 0; i <= reach; ++i) {
    const bool plus = i >= lo && i <= hi;
    const bool minus = -i >= lo && -i <= hi;
    if (plus && x.at(i) != y.at(i)) return std::ldexp(1.0, -i);
    if (minus && x.at(-i) != y.at(-i)) return std::ldexp(1.0, -i);
    if (!plus || !minus) {
      // The opposite coordinate is unknown: the first disagreement is at
      // |index| >= i, so 2^{-i} bounds the distance.
      return exhaustive ? 0.0 : std::ldexp(1.0, -i);
    }
  }
  return exhaustive ? 0.0 : std::ldexp(1.0, -(reach + 1));
}

std::size_t word_code(std::span<const int> word, int symbols) {
  std::size_t code = 0;
  for (int s : word) code = code * static_cast<std::size_t>(symbols) + static_cast<std::size_t>(s);
  return code;
}

std::vector<int> decode_word(std::size_t code, int length, int symbols) {
  std::vector<int> w(static_cast<std::size_t>(length));
  for (int i = length - 1; i >= 0; --i) {
    w[static_cast<std::size_t>(i)] = static_cast<int>(code % static_cast<std::size_t>(symbols));
    code /= static_cast<std::size_t>(symbols);
  }
  return w;
}

MarkovBase::MarkovBase(int symbols, int memory, std::vector<double> table)
    : symbols_(symbols), memory_(memory), table_(std::move(table)) {
  require(symbols >= 1, "symbol count must be positive");
  require(memory >= 0, "memory must be nonnegative");
  rows_ = ipow(static_cast<std::size_t>(symbols), memory);
  require(table_.size() == rows_ * static_cast<std::size_t>(symbols),
          "transition table has " + std::to_string(table_.size()) + " entries, expected " +
              std::to_string(rows_ * static_cast<std::size_t>(symbols)));
  for (std::size_t r = 0; r < rows_; ++r) {
    double sum = 0;
    for (double p : row(r)) {
      require(std::isfinite(p) && p >= 0.0,
              "transition row " + std::to_string(r) + " has a negative or non-finite entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "transition row " << r << " sums to " << sum << ", expected 1";
      throw ValidationError(msg.str());
    }
  }
  compute_stationary();
}

MarkovBase MarkovBase::bernoulli(std::vector<double> p) {
  const int l = static_cast<int>(p.size());
  return MarkovBase(l, 0, std::move(p));
}

MarkovBase MarkovBase::chain(const MatrixXd& transition) {
  require(transition.rows() == transition.cols(), "transition matrix must be square");
  std::vector<double> table;
  for (Eigen::Index i = 0; i < transition.rows(); ++i)
    for (Eigen::Index j = 0; j < transition.cols(); ++j) table.push_back(transition(i, j));
  return MarkovBase(static_cast<int>(transition.rows()), 1, std::move(table));
}

void MarkovBase::compute_stationary() {
  if (memory_ == 0) {
    stationary_ = {1.0};
    return;
  }
  const auto n = static_cast<Eigen::Index>(rows_);
  MatrixXd P = MatrixXd::Zero(n, n);
  for (std::size_t w = 0; w < rows_; ++w)
    for (int i = 0; i < symbols_; ++i) {
      const std::size_t next = (w * static_cast<std::size_t>(symbols_) + static_cast<std::size_t>(i)) % rows_;
      P(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(next)) += prob(w, i);
    }
  // pi (P - I) = 0 with sum(pi) = 1: replace the last equation by the norm.
  MatrixXd M = P.transpose() - MatrixXd::Identity(n, n);
  M.row(n - 1).setOnes();
  VectorXd rhs = VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  VectorXd pi = M.colPivHouseholderQr().solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
  pi /= pi.sum();
  const double residual = (pi.transpose() * P - pi.transpose()).cwiseAbs().maxCoeff();
  if (!(residual < 1e-10))
    throw ValidationError("stationary distribution not unique or not found (residual " +
                          std::to_string(residual) + ")");
  stationary_.assign(pi.data(), pi.data() + n);
}

std::vector<double> MarkovBase::transition_probs(std::span<const int> past) const {
  if (past.size() < static_cast<std::size_t>(memory_)) throw ValidationError("insufficient memory");
  auto r = row(class_of(past));
  return {r.begin(), r.end()};
}

std::size_t MarkovBase::class_of(std::span<const int> word) const {
  const auto m = static_cast<std::size_t>(memory_);
  require(word.size() >= m, "insufficient memory");
  return word_code(word.subspan(word.size() - m), symbols_);
}

bool MarkovBase::allows(std::span<const int> word) const {
  const auto m = static_cast<std::size_t>(memory_);
  for (int s : word)
    if (s < 0 || s >= symbols_) return false;
  if (word.size() >= m && m > 0 && stationary_[word_code(word.first(m), symbols_)] <= 0.0)
    return false;
  for (std::size_t j = m; j < word.size(); ++j) {
    const std::size_t cls = word_code(word.subspan(j - m, m), symbols_);
    if (prob(cls, word[j]) <= 0.0) return false;
  }
  return true;
}

bool MarkovBase::allows_cyclic(std::span<const int> block) const {
  if (block.empty()) return false;
  const std::size_t copies = (static_cast<std::size_t>(memory_) + block.size()) / block.size() + 2;
  std::vector<int> rep;
  for (std::size_t c = 0; c < copies; ++c) rep.insert(rep.end(), block.begin(), block.end());
  return allows(rep);
}

double MarkovBase::cylinder_measure(std::span<const int> word) const {
  const auto m = static_cast<std::size_t>(memory_);
  if (word.size() < m) {
    double total = 0;
    const std::size_t free = m - word.size();
    const std::size_t count = ipow(static_cast<std::size_t>(symbols_), static_cast<int>(free));
    const std::size_t prefix = word_code(word, symbols_);
    for (std::size_t tail = 0; tail < count; ++tail) total += stationary_[prefix * count + tail];
    return total;
  }
  double mass = m == 0 ? 1.0 : stationary_[word_code(word.first(m), symbols_)];
  for (std::size_t j = m; j < word.size() && mass > 0.0; ++j)
    mass *= prob(word_code(word.subspan(j - m, m), symbols_), word[j]);
  return mass;
}

bool MarkovBase::is_primitive() const {
  // Support graph on words of length max(memory, 1).
  const int len = std::max(memory_, 1);
  const std::size_t n = ipow(static_cast<std::size_t>(symbols_), len);
  Eigen::MatrixXi S = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t w = 0; w < n; ++w) {
    const auto word = decode_word(w, len, symbols_);
    for (int i = 0; i < symbols_; ++i) {
      std::vector<int> ext = word;
      ext.push_back(i);
      if (!allows(ext)) continue;
      const std::size_t next = (w * static_cast<std::size_t>(symbols_) + static_cast<std::size_t>(i)) % n;
      S(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(next)) = 1;
    }
  }
  // Wielandt: primitive iff S^k > 0 for k = (n-1)^2 + 1.
  const std::size_t bound = (n - 1) * (n - 1) + 1;
  Eigen::MatrixXi R = S;
  for (std::size_t k = 1; k < bound; ++k) {
    R = (R * S).unaryExpr([](int v) { return v > 0 ? 1 : 0; });
  }
  return (R.array() > 0).all();
}

int MarkovBase::smallest_predecessor(std::span<const int> word) const {
  std::vector<int> ext(word.size() + 1);
  std::copy(word.begin(), word.end(), ext.begin() + 1);
  const std::size_t check = std::min(ext.size(), static_cast<std::size_t>(memory_) + 1);
  for (int s = 0; s < symbols_; ++s) {
    ext[0] = s;
    if (allows(std::span<const int>(ext).first(check))) return s;
  }
  return -1;
}

int MarkovBase::smallest_successor(std::span<const int> word) const {
  std::vector<int> tail(word.end() - static_cast<std::ptrdiff_t>(std::min(word.size(), static_cast<std::size_t>(memory_))),
                        word.end());
  tail.push_back(0);
  for (int s = 0; s < symbols_; ++s) {
    tail.back() = s;
    if (allows(tail)) return s;
  }
  return -1;
}

void for_each_legal_word(const MarkovBase& base, int length,
                         const std::function<void(std::span<const int>)>& visit, std::size_t budget) {
  require(length >= 0, "word length must be nonnegative");
  std::vector<int> word;
  word.reserve(static_cast<std::size_t>(length));
  std::size_t count = 0;
  const auto m = static_cast<std::size_t>(base.memory());
  std::function<void()> rec = [&] {
    if (word.size() == static_cast<std::size_t>(length)) {
      if (++count > budget) throw BudgetError("enumeration budget");
      visit(word);
      return;
    }
    for (int s = 0; s < base.symbols(); ++s) {
      word.push_back(s);
      bool ok;
      if (word.size() < m) {
        ok = true;
      } else if (word.size() == m) {
        ok = base.allows(word);
      } else {
        ok = base.prob(base.class_of(std::span<const int>(word).first(word.size() - 1)), s) > 0.0;
      }
      if (ok) rec();
      word.pop_back();
    }
  };
  rec();
}

SymbolSampler::SymbolSampler(const MarkovBase& base, CounterRng rng) : base_(&base), rng_(rng) {
  const int m = base.memory();
  if (m > 0) {
    const auto code = static_cast<std::size_t>(draw(base.stationary()));
    auto block = decode_word(code, m, base.symbols());
    pending_.assign(block.rbegin(), block.rend());
    state_ = code;
  }
}

int SymbolSampler::draw(std::span<const double> probs) {
  const double u = rng_.uniform();
  double acc = 0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

int SymbolSampler::next() {
  if (!pending_.empty()) {
    const int s = pending_.back();
    pending_.pop_back();
    return s;
  }
  const int s = draw(base_->row(state_));
  if (base_->memory() > 0)
    state_ = (state_ * static_cast<std::size_t>(base_->symbols()) + static_cast<std::size_t>(s)) %
             base_->classes();
  return s;
}

OrbitSample sample_orbit(const MarkovBase& base, std::size_t n, std::uint64_t seed, std::size_t burn_in) {
  require(n >= 1, "orbit length must be positive");
  OrbitSample orbit;
  orbit.seed = seed;
  orbit.burn_in = burn_in;
  orbit.symbols.resize(burn_in + n);
  SymbolSampler sampler(base, CounterRng(seed));
  for (auto& s : orbit.symbols) s = sampler.next();
  return orbit;
}

void write_orbit(std::ostream& out, const OrbitSample& orbit) {
  std::size_t k = 0;
  for (int s : orbit.recorded()) {
    out << s << (++k % 32 == 0 ? '\n' : ' ');
  }
  if (k % 32 != 0) out << '\n';
}

TwoSidedWord periodic_word(const MarkovBase& base, const Word& block, int repetitions) {
  require(!block.empty(), "periodic block must be nonempty");
  require(repetitions >= 1, "repetitions must be positive");
  if (!base.allows_cyclic(block.symbols)) throw ValidationError("not a periodic point");
  const int q = static_cast<int>(block.size());
  const int lo = -repetitions * q + 1;
  const int hi = repetitions * q;
  std::vector<int> symbols;
  for (int k = lo; k <= hi; ++k) symbols.push_back(block.symbols[static_cast<std::size_t>(((k % q) + q) % q)]);
  return TwoSidedWord::from_range(std::move(symbols), lo);
}

Homoclinic splice_homoclinic(const MarkovBase& base, const Word& block, const Word& bridge, int repetitions) {
  const TwoSidedWord a = periodic_word(base, block, repetitions);
  const int q = static_cast<int>(block.size());
  const int l = static_cast<int>(bridge.size());
  std::vector<int> symbols;
  const int lo = a.lo();
  for (int k = lo; k <= 0; ++k) symbols.push_back(a.at(k));
  symbols.insert(symbols.end(), bridge.symbols.begin(), bridge.symbols.end());
  for (int k = 1; k <= repetitions * q; ++k) symbols.push_back(block.symbols[static_cast<std::size_t>(k % q)]);
  if (!base.allows(symbols)) throw ValidationError("illegal junction between periodic block and bridge");
  return {TwoSidedWord::from_range(std::move(symbols), lo), l};
}

double birkhoff_average(const OrbitSample& orbit, int symbols, int depth, std::span<const double> f) {
  require(depth >= 0 && orbit.burn_in + 1 >= static_cast<std::size_t>(depth),
          "observable depth exceeds the burn-in prefix");
  require(f.size() == ipow(static_cast<std::size_t>(symbols), depth), "observable table size mismatch");
  const std::span<const int> all(orbit.symbols);
  double sum = 0;
  for (std::size_t j = orbit.burn_in; j < all.size(); ++j) {
    const auto window = all.subspan(j + 1 - static_cast<std::size_t>(depth), static_cast<std::size_t>(depth));
    sum += f[word_code(window, symbols)];
  }
  return sum / static_cast<double>(orbit.length());
}

double periodic_average(const Word& block, int symbols, int depth, std::span<const double> f) {
  require(!block.empty(), "periodic block must be nonempty");
  require(f.size() == ipow(static_cast<std::size_t>(symbols), depth), "observable table size mismatch");
  const int q = static_cast<int>(block.size());
  double sum = 0;
  std::vector<int> window(static_cast<std::size_t>(depth));
  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < depth; ++i) {
      const int k = j - depth + 1 + i;
      window[static_cast<std::size_t>(i)] = block.symbols[static_cast<std::size_t>(((k % q) + q) % q)];
    }
    sum += f[word_code(window, symbols)];
  }
  return sum / q;
}

std::vector<int> extend_left(const MarkovBase& base, std::vector<int> word, std::size_t count) {
  for (std::size_t c = 0; c < count; ++c) {
    const int s = base.smallest_predecessor(word);
    if (s < 0) throw ValidationError("word has no legal left extension");
    word.insert(word.begin(), s);
  }
  return word;
}

std::vector<int> extend_right(const MarkovBase& base, std::vector<int> word, std::size_t count) {
  for (std::size_t c = 0; c < count; ++c) {
    const int s = base.smallest_successor(word);
    if (s < 0) throw ValidationError("word has no legal right extension");
    word.push_back(s);
  }
  return word;
}

Word reference_block(const MarkovBase& base, int symbol, int max_length) {
  for (int q = 1; q <= max_length; ++q) {
    const std::size_t count = ipow(static_cast<std::size_t>(base.symbols()), q - 1);
    for (std::size_t code = 0; code < count; ++code) {
      std::vector<int> block = decode_word(code, q - 1, base.symbols());
      block.insert(block.begin(), symbol);
      if (base.allows_cyclic(block)) return Word{block, Orientation::future};
    }
  }
  throw ValidationError("no periodic point in cylinder [" + std::to_string(symbol) + "]");
}

}  // namespace cocylab
