#include "cocylab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cocylab {

std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

namespace {

/// Gram-Schmidt with one reorthogonalization pass. q holds A Q on entry and
/// the new orthonormal frame on exit; logs receives log R_ii.
template <typename MatT, typename VecT>
bool orthonormalize(MatT& q, VecT& logs) {
  const auto d = q.cols();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < i; ++j) q.col(i) -= q.col(j).dot(q.col(i)) * q.col(j);
    const double nrm = q.col(i).norm();
    if (!(nrm > 1e-300)) return false;
    q.col(i) /= nrm;
    logs(i) = std::log(nrm);
  }
  return true;
}

template <int D>
std::vector<Eigen::Matrix<double, D, D>> fixed_generators(const Cocycle& a) {
  std::vector<Eigen::Matrix<double, D, D>> out;
  out.reserve(a.size());
  for (const auto& g : a.generators()) out.emplace_back(g);
  return out;
}

struct ChainResult {
  MatrixXd batch_sums;  // batches x k
  std::vector<std::size_t> batch_lengths;
  double log_det_sum = 0.0;
};

template <int D>
ChainResult run_chain(const Cocycle& a, const MarkovBase& base, const LyapunovOptions& opt, std::size_t chain) {
  using M = Eigen::Matrix<double, D, D>;
  using V = Eigen::Matrix<double, D, 1>;
  const int d = a.dim();
  const auto gens = fixed_generators<D>(a);
  const CounterRng root = CounterRng(opt.seed).split(chain);
  SymbolSampler sampler(base, root.split(0));
  CounterRng frame_rng = root.split(1);

  const auto ell = static_cast<std::size_t>(a.symbols());
  const std::size_t modulus = a.size();
  std::size_t code = 0;
  for (std::size_t i = 0; i < opt.burn_in; ++i)
    code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;

  const std::size_t k = opt.top_only ? 1 : static_cast<std::size_t>(d);
  const std::size_t batches = std::max<std::size_t>(1, std::min(opt.batches, opt.n));
  ChainResult out;
  out.batch_sums = MatrixXd::Zero(static_cast<Eigen::Index>(batches), static_cast<Eigen::Index>(k));
  out.batch_lengths.assign(batches, 0);

  if (opt.top_only) {
    V v(d);
    for (int i = 0; i < d; ++i) v(i) = frame_rng.normal();
    v.normalize();
    for (std::size_t j = 0; j < opt.n; ++j) {
      code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
      v = gens[code] * v;
      const double nrm = v.norm();
      if (!(nrm > 1e-300)) throw NumericalError("numerical collapse");
      v /= nrm;
      const std::size_t b = j * batches / opt.n;
      out.batch_sums(static_cast<Eigen::Index>(b), 0) += std::log(nrm);
      ++out.batch_lengths[b];
      out.log_det_sum += a.log_abs_det(code);
    }
    return out;
  }

  M q(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) q(i, j) = frame_rng.normal();
  V logs(d);
  if (!orthonormalize(q, logs)) throw NumericalError("numerical collapse");
  for (std::size_t j = 0; j < opt.n; ++j) {
    code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
    q = gens[code] * q;
    if (!orthonormalize(q, logs)) throw NumericalError("numerical collapse");
    const std::size_t b = j * batches / opt.n;
    out.batch_sums.row(static_cast<Eigen::Index>(b)) += logs.transpose();
    ++out.batch_lengths[b];
    out.log_det_sum += a.log_abs_det(code);
  }
  return out;
}

}  // namespace

ProductResult product(const Cocycle& a, std::span<const int> symbols, std::size_t origin, std::size_t n,
                      const MatrixXd* initial_frame) {
  const auto lo = static_cast<std::ptrdiff_t>(origin) + a.window_lo();
  const auto hi = static_cast<std::ptrdiff_t>(origin) + static_cast<std::ptrdiff_t>(n) - 1 + a.lead();
  require(lo >= 0 && (n == 0 || hi < static_cast<std::ptrdiff_t>(symbols.size())),
          "product: orbit must supply n + depth symbols around the origin");
  const int d = a.dim();
  ProductResult out;
  out.log_factors = MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
  MatrixXd q = initial_frame ? *initial_frame : MatrixXd::Identity(d, d);
  VectorXd logs(d);
  const bool keep_raw = n <= kRawProductLimit;
  MatrixXd raw = MatrixXd::Identity(d, d);
  for (std::size_t j = 0; j < n; ++j) {
    const auto start = static_cast<std::size_t>(lo) + j;
    const auto code = word_code(symbols.subspan(start, static_cast<std::size_t>(a.depth())), a.symbols());
    q = a.generator(code) * q;
    if (!orthonormalize(q, logs)) throw NumericalError("numerical collapse");
    out.log_factors.row(static_cast<Eigen::Index>(j)) = logs.transpose();
    if (keep_raw) raw = a.generator(code) * raw;
  }
  out.frame = q;
  if (keep_raw) out.raw = raw;
  return out;
}

LyapunovEstimate lyapunov_spectrum(const Cocycle& a, const MarkovBase& base, const LyapunovOptions& opt) {
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  require(opt.n >= 1 && opt.chains >= 1, "lyapunov: n and chains must be positive");
  require(opt.burn_in >= static_cast<std::size_t>(a.depth()), "lyapunov: burn-in shorter than depth");
  std::vector<ChainResult> chains(opt.chains);
  parallel_for(opt.chains, opt.threads, [&](std::size_t c) {
    chains[c] = dispatch_dim(a.dim(), [&](auto dim) { return run_chain<decltype(dim)::value>(a, base, opt, c); });
  });

  const auto k = static_cast<std::size_t>(chains.front().batch_sums.cols());
  LyapunovEstimate est;
  est.n = opt.n;
  est.chains = opt.chains;
  est.seed = opt.seed;
  std::vector<double> values(k), errors(k);
  std::vector<std::vector<double>> batches(k);
  const double total = static_cast<double>(opt.n) * static_cast<double>(opt.chains);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> means;
    double sum = 0;
    for (const auto& ch : chains)
      for (std::size_t b = 0; b < ch.batch_lengths.size(); ++b) {
        const double s = ch.batch_sums(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i));
        sum += s;
        means.push_back(s / static_cast<double>(ch.batch_lengths[b]));
      }
    values[i] = sum / total;
    errors[i] = mean_stderr(means).se;
    batches[i] = std::move(means);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  for (std::size_t i : order) {
    est.exponents.push_back(values[i]);
    est.stderrs.push_back(errors[i]);
    est.batch_means.push_back(std::move(batches[i]));
  }
  double det_sum = 0;
  for (const auto& ch : chains) det_sum += ch.log_det_sum;
  est.log_det_average = det_sum / total;
  return est;
}

double expected_log_det(const Cocycle& a, const MarkovBase& base) {
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  double e = 0;
  for_each_legal_word(base, a.depth(), [&](std::span<const int> w) {
    e += base.cylinder_measure(w) * a.log_abs_det(word_code(w, a.symbols()));
  });
  return e;
}

FiberBunching fiber_bunching_check(const Cocycle& a, const MarkovBase& base, int max_n, std::size_t budget) {
  require(max_n >= 1, "fiber bunching: Nmax must be at least 1");
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  FiberBunching out;
  for (int n = 1; n <= max_n; ++n) {
    double sup = 0;
    const double scale = std::pow(2.0, -n * a.alpha());
    for_each_legal_word(
        base, n + a.depth() - 1,
        [&](std::span<const int> w) { sup = std::max(sup, condition_number(a.word_product(w)) * scale); },
        budget);
    out.sup_by_n.push_back(sup);
    if (sup < 1.0) {
      out.satisfied = true;
      out.witness = n;
      out.value = sup;
      out.margin = 1.0 - sup;
      return out;
    }
  }
  return out;
}

double uniform_distance(const Cocycle& a, const Cocycle& b, const MarkovBase& base) {
  require(a.dim() == b.dim(), "uniform distance: dimension mismatch");
  require(a.symbols() == b.symbols() && a.symbols() == base.symbols(),
          "uniform distance: symbol count mismatch");
  const int lo = std::min(a.window_lo(), b.window_lo());
  const int hi = std::max(a.lead(), b.lead());
  double sup = 0;
  for_each_legal_word(base, hi - lo + 1, [&](std::span<const int> w) {
    const auto ca = word_code(w.subspan(static_cast<std::size_t>(a.window_lo() - lo), static_cast<std::size_t>(a.depth())),
                              a.symbols());
    const auto cb = word_code(w.subspan(static_cast<std::size_t>(b.window_lo() - lo), static_cast<std::size_t>(b.depth())),
                              b.symbols());
    const double v = spectral_norm(MatrixXd(a.generator(ca) - b.generator(cb))) +
                     spectral_norm(MatrixXd(a.inverse(ca) - b.inverse(cb)));
    sup = std::max(sup, v);
  });
  return sup;
}

double uniform_distance(const Cocycle& a, const Cocycle& b) {
  const auto l = static_cast<std::size_t>(a.symbols());
  return uniform_distance(a, b, MarkovBase::bernoulli(std::vector<double>(l, 1.0 / static_cast<double>(l))));
}

}  // namespace cocylab
