#include "cocylab/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cocylab {

namespace {

constexpr int kPadding = 64;

struct Iterates {
  std::vector<MatrixXd> H;  // H^0 .. H^{j0}
  int kstar = 0;            // last disagreement below agree_from
  bool differ = false;
};

/// H^n for n up to the step where the windows of T^n x and T^n y coincide.
/// From there on H^n is constant, the cocycle being locally constant.
Iterates iterate_stable(const Cocycle& a, const TwoSidedWord& x, const TwoSidedWord& y, int agree_from) {
  const int lo = std::max(x.lo(), y.lo());
  const int hi = std::min(x.hi(), y.hi());
  if (lo > hi) throw ValidationError("incomparable words");
  for (int k = std::max(agree_from, lo); k <= hi; ++k)
    if (x.at(k) != y.at(k)) throw ValidationError("not on the same stable set");

  const int d = a.dim();
  Iterates it;
  it.H.push_back(MatrixXd::Identity(d, d));
  for (int k = std::min(agree_from - 1, hi); k >= lo; --k)
    if (x.at(k) != y.at(k)) {
      it.kstar = k;
      it.differ = true;
      break;
    }
  if (!it.differ) return it;
  const int j0 = it.kstar - a.window_lo() + 1;
  if (j0 <= 0) return it;
  require(lo <= a.window_lo() && hi >= j0 - 1 + a.lead(), "window too short for the holonomy iteration");

  MatrixXd px = MatrixXd::Identity(d, d);
  MatrixXd qy = MatrixXd::Identity(d, d);
  bool trivial = true;
  for (int n = 0; n < j0; ++n) {
    const auto cx = a.code_at(x, n);
    const auto cy = a.code_at(y, n);
    const bool same = cx == cy || a.generator(cx) == a.generator(cy);
    px = a.generator(cx) * px;
    qy = qy * a.inverse(cy);
    if (same && trivial) {
      it.H.push_back(it.H.back());
      continue;
    }
    trivial = false;
    it.H.push_back(qy * px);
  }
  return it;
}

MatrixXd forward_product(const Cocycle& a, const TwoSidedWord& x, int n) {
  MatrixXd p = MatrixXd::Identity(a.dim(), a.dim());
  for (int j = 0; j < n; ++j) p = a.at(x, j) * p;
  return p;
}

MatrixXd inverse_forward_product(const Cocycle& a, const TwoSidedWord& x, int n) {
  MatrixXd p = MatrixXd::Identity(a.dim(), a.dim());
  for (int j = 0; j < n; ++j) p = p * a.inverse(a.code_at(x, j));
  return p;
}

HolonomyResult solve_stable(const Cocycle& a, const BunchingConstants& k, const TwoSidedWord& x,
                            const TwoSidedWord& y, const HolonomyOptions& opt) {
  require(opt.agree_from >= 0, "holonomy: agree_from must be nonnegative");
  HolonomyResult r;
  if (x == y) {
    r.H = MatrixXd::Identity(a.dim(), a.dim());
    r.exact = true;
    return r;
  }
  const int s = opt.agree_from;
  const Iterates it = iterate_stable(a, x, y, s);
  r.H = it.H.back();
  for (std::size_t n = 0; n + 1 < it.H.size(); ++n) r.cauchy.push_back(spectral_norm(it.H[n + 1] - it.H[n]));
  r.exact = true;

  double transport = 1.0;
  double dist = 0.0;
  if (s == 0) {
    dist = shift_distance(x, y);
  } else {
    transport = spectral_norm(inverse_forward_product(a, y, s)) * spectral_norm(forward_product(a, x, s));
    dist = shift_distance(x.shifted(s), y.shifted(s));
  }
  r.distance = s == 0 ? dist : shift_distance(x, y);
  if (!it.differ) {
    r.error_bound = 0.0;
    return r;
  }
  const double scale = transport * k.C1 * std::pow(dist, k.alpha) / (1.0 - k.rate);
  const int start = std::max(static_cast<int>(it.H.size()) - 1, s);
  int n = start;
  auto bound = [&](int m) { return scale * std::pow(k.rate, m - s); };
  while (bound(n) >= opt.tol && n < opt.max_iterations) ++n;
  r.iterations = n;
  r.error_bound = bound(n);
  return r;
}

}  // namespace

Cocycle reflected_inverse(const Cocycle& a) {
  const int depth = a.depth();
  std::vector<MatrixXd> gens;
  gens.reserve(a.size());
  for (std::size_t code = 0; code < a.size(); ++code) {
    auto w = decode_word(code, depth, a.symbols());
    std::reverse(w.begin(), w.end());
    gens.push_back(a.inverse(word_code(w, a.symbols())));
  }
  return Cocycle(a.symbols(), depth, std::move(gens), a.alpha(), depth - a.lead());
}

MarkovBase reversed_base(const MarkovBase& base) {
  const int l = base.symbols();
  const int m = base.memory();
  if (m == 0) {
    std::vector<double> p(base.row(0).begin(), base.row(0).end());
    return MarkovBase(l, 0, p);
  }
  std::vector<double> table;
  table.reserve(base.classes() * static_cast<std::size_t>(l));
  for (std::size_t cls = 0; cls < base.classes(); ++cls) {
    auto u = decode_word(cls, m, l);
    std::reverse(u.begin(), u.end());
    const double mass = base.cylinder_measure(u);
    std::vector<int> w(u.size() + 1);
    std::copy(u.begin(), u.end(), w.begin() + 1);
    std::vector<double> row(static_cast<std::size_t>(l), 1.0 / l);
    if (mass > 0) {
      double total = 0;
      for (int s = 0; s < l; ++s) {
        w[0] = s;
        row[static_cast<std::size_t>(s)] = base.cylinder_measure(w) / mass;
        total += row[static_cast<std::size_t>(s)];
      }
      for (double& v : row) v /= total;
    }
    table.insert(table.end(), row.begin(), row.end());
  }
  return MarkovBase(l, m, std::move(table));
}

BunchingConstants bunching_constants(const Cocycle& a, const MarkovBase& base, int max_n, std::size_t budget) {
  const FiberBunching fb = fiber_bunching_check(a, base, max_n);
  const int wlo = a.window_lo();
  // A window inside [0, lead] makes H = I on every local stable set, so the
  // limits exist without bunching.
  if (!fb.satisfied && wlo < 0) throw ValidationError("not fiber bunched");
  BunchingConstants k;
  k.alpha = a.alpha();
  k.tau = fb.value;
  k.witness = fb.satisfied ? fb.witness : 0;
  k.rate = fb.satisfied ? std::pow(fb.value, 1.0 / fb.witness) : 0.0;
  k.beta = a.alpha();
  k.C1 = 1.0;
  k.C_holder = 0.0;
  if (wlo >= 0) return k;

  // x occupies [wlo, lead - wlo - 1]; y replaces the coordinates [wlo, -1].
  const int len = a.lead() - 2 * wlo;
  const int head = -wlo;
  double max_ratio = 0.0;
  std::vector<double> level_max(static_cast<std::size_t>(head) + 1, 0.0);
  std::size_t pairs = 0;
  std::vector<int> ysym(static_cast<std::size_t>(len));
  for_each_legal_word(base, len, [&](std::span<const int> xs) {
    std::copy(xs.begin(), xs.end(), ysym.begin());
    const TwoSidedWord x = TwoSidedWord::from_range(std::vector<int>(xs.begin(), xs.end()), wlo);
    const std::size_t alternatives = ipow(static_cast<std::size_t>(a.symbols()), head);
    for (std::size_t code = 0; code < alternatives; ++code) {
      const auto v = decode_word(code, head, a.symbols());
      if (std::equal(v.begin(), v.end(), xs.begin())) continue;
      std::copy(v.begin(), v.end(), ysym.begin());
      if (!base.allows(ysym)) continue;
      if (++pairs > budget) throw BudgetError("enumeration budget");
      const TwoSidedWord y = TwoSidedWord::from_range(ysym, wlo);
      const Iterates it = iterate_stable(a, x, y, 0);
      const double d = std::ldexp(1.0, it.kstar);
      for (std::size_t n = 0; n + 1 < it.H.size(); ++n) {
        const double diff = spectral_norm(it.H[n + 1] - it.H[n]);
        max_ratio = std::max(max_ratio, diff / (std::pow(k.rate, static_cast<double>(n)) * std::pow(d, k.alpha)));
      }
      const double dev = spectral_norm(it.H.back() - MatrixXd::Identity(a.dim(), a.dim()));
      auto& slot = level_max[static_cast<std::size_t>(-it.kstar)];
      slot = std::max(slot, dev);
    }
  });
  k.C1 = std::max(2.0 * max_ratio, 1.0);

  std::vector<double> lx, ly;
  for (std::size_t j = 1; j < level_max.size(); ++j)
    if (level_max[j] > 1e-14) {
      lx.push_back(-static_cast<double>(j) * std::log(2.0));
      ly.push_back(std::log(level_max[j]));
    }
  if (lx.size() >= 2) {
    const LinearFit fit = fit_line(lx, ly);
    if (fit.slope > 0) k.beta = std::min(fit.slope, a.alpha());
  }
  for (std::size_t j = 1; j < level_max.size(); ++j)
    k.C_holder = std::max(k.C_holder, level_max[j] / std::pow(std::ldexp(1.0, -static_cast<int>(j)), k.beta));
  return k;
}

HolonomySolver::HolonomySolver(const Cocycle& a, const MarkovBase& base, int max_n)
    : a_(a), b_(reflected_inverse(a)), base_(base) {
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  stable_ = bunching_constants(a_, base_, max_n);
  unstable_ = bunching_constants(b_, reversed_base(base_), max_n);
}

HolonomyResult HolonomySolver::stable(const TwoSidedWord& x, const TwoSidedWord& y,
                                      const HolonomyOptions& opt) const {
  return solve_stable(a_, stable_, x, y, opt);
}

HolonomyResult HolonomySolver::unstable(const TwoSidedWord& x, const TwoSidedWord& y,
                                        const HolonomyOptions& opt) const {
  return solve_stable(b_, unstable_, x.reflected(), y.reflected(), opt);
}

HolonomyResult stable_holonomy(const Cocycle& a, const MarkovBase& base, const TwoSidedWord& x,
                               const TwoSidedWord& y, double tol) {
  HolonomyOptions opt;
  opt.tol = tol;
  return HolonomySolver(a, base).stable(x, y, opt);
}

HolonomyResult unstable_holonomy(const Cocycle& a, const MarkovBase& base, const TwoSidedWord& x,
                                 const TwoSidedWord& y, double tol) {
  HolonomyOptions opt;
  opt.tol = tol;
  return HolonomySolver(a, base).unstable(x, y, opt);
}

std::vector<Word> reference_blocks(const MarkovBase& base) {
  std::vector<Word> refs;
  for (int i = 0; i < base.symbols(); ++i) refs.push_back(reference_block(base, i));
  return refs;
}

TwoSidedWord theta(const MarkovBase& base, const std::vector<Word>& refs, const TwoSidedWord& x) {
  require(x.contains(0), "theta: word must contain coordinate 0");
  const auto& block = refs.at(static_cast<std::size_t>(x.at(0))).symbols;
  const int q = static_cast<int>(block.size());
  std::vector<int> symbols(x.symbols());
  for (int k = 1; k <= x.hi(); ++k) symbols[static_cast<std::size_t>(k - x.lo())] = block[static_cast<std::size_t>(k % q)];
  if (!base.allows(symbols)) throw ValidationError("theta: reference future is not compatible with the past");
  return TwoSidedWord::from_range(std::move(symbols), x.lo());
}

MatrixXd reduction_conjugacy(const HolonomySolver& solver, const std::vector<Word>& refs, const TwoSidedWord& x,
                             double tol) {
  HolonomyOptions opt;
  opt.tol = tol;
  return solver.unstable(x, theta(solver.base(), refs, x), opt).H;
}

Reduction reduce_to_past(const HolonomySolver& solver, double tol) {
  const Cocycle& a = solver.cocycle();
  const MarkovBase& base = solver.base();
  require(base.memory() <= 1, "reduce: reference points need a memory-1 base");
  const int depth = a.depth() + 1;
  const int l = a.symbols();
  Reduction out{a, reference_blocks(base)};
  HolonomyOptions opt;
  opt.tol = tol;

  const std::size_t count = ipow(static_cast<std::size_t>(l), depth);
  std::vector<MatrixXd> gens;
  gens.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    const auto w = decode_word(code, depth, l);
    const auto fallback = a.generator(word_code(std::span<const int>(w).first(static_cast<std::size_t>(a.depth())), l));
    if (!base.allows(w)) {
      gens.push_back(fallback);
      continue;
    }
    auto past = extend_left(base, w, kPadding);
    const auto past_len = static_cast<int>(past.size());
    auto full = extend_right(base, std::move(past), kPadding);
    const TwoSidedWord x = TwoSidedWord::from_range(std::move(full), 1 - past_len);
    const TwoSidedWord xm = x.shifted(-1);
    const MatrixXd left = solver.unstable(x, theta(base, out.references, x), opt).H;
    const MatrixXd right = solver.unstable(theta(base, out.references, xm), xm, opt).H;
    gens.push_back(left * a.at(xm) * right);
  }
  out.reduced = Cocycle(l, depth, std::move(gens), a.alpha(), 0);
  return out;
}

TransitionMap transition_map(const HolonomySolver& solver, const Word& block, const Word& bridge, double tol) {
  const Cocycle& a = solver.cocycle();
  const MarkovBase& base = solver.base();
  require(!block.empty(), "transition map: periodic block must be nonempty");
  const int q = static_cast<int>(block.size());
  const int reps = std::max(2, (kPadding + static_cast<int>(bridge.size()) + a.depth()) / q + 2);
  TransitionMap out;
  out.splice = splice_homoclinic(base, block, bridge, reps);
  const TwoSidedWord pa = periodic_word(base, block, reps);
  const TwoSidedWord& z = out.splice.z;
  const int l = out.splice.l;

  HolonomyOptions opt;
  opt.tol = tol;
  const HolonomyResult hu = solver.unstable(pa, z, opt);
  const MatrixXd al = forward_product(a, z, l);
  opt.agree_from = 1;
  const HolonomyResult hs = solver.stable(z.shifted(l), pa, opt);
  out.psi = hs.H * al * hu.H;
  const double nal = spectral_norm(al);
  out.error_bound = spectral_norm(hs.H) * nal * hu.error_bound + hs.error_bound * nal * spectral_norm(hu.H) +
                    hs.error_bound * nal * hu.error_bound;
  return out;
}

}  // namespace cocylab
