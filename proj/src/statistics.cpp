#include "cocylab/statistics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cocylab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_ldt_options(const LdtOptions& opt) {
  require(!opt.epsilons.empty(), "ldt: epsilon list is empty");
  require(!opt.ns.empty(), "ldt: n list is empty");
  require(opt.samples >= 1, "ldt: need at least one sample");
  for (double e : opt.epsilons) require(e > 0.0 && std::isfinite(e), "ldt: epsilon must be positive");
  for (std::size_t n : opt.ns) require(n >= 1, "ldt: n must be positive");
}

void check_epsilon_floor(const LdtReport& r, const LdtOptions& opt) {
  for (double e : opt.epsilons)
    if (e < 5.0 * r.truth_stderr)
      throw ValidationError("ldt: epsilon " + std::to_string(e) + " is below 5 stderr of the reference L1 (" +
                            std::to_string(5.0 * r.truth_stderr) + ")");
}

// Rate fit of -log P against epsilon^2 n on the points above the floor.
void fit_curve(LdtCurve& c, const std::vector<std::size_t>& ns, std::size_t min_hits) {
  std::vector<double> x, y;
  c.used.assign(ns.size(), false);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (c.hits[i] < min_hits || !(c.frequency[i] > 0.0)) continue;
    c.used[i] = true;
    x.push_back(c.epsilon * c.epsilon * static_cast<double>(ns[i]));
    y.push_back(-std::log(c.frequency[i]));
  }
  c.unobservable = x.empty();
  c.fit = fit_line(x, y);
  c.k_hat = c.fit.slope;
  c.rate_per_n = c.fit.slope * c.epsilon * c.epsilon;
  c.log_C = -c.fit.intercept;
}

void finish(LdtReport& r, const LdtOptions& opt) {
  bool all = true;
  for (auto& c : r.curves) {
    fit_curve(c, r.n, opt.min_hits);
    all = all && c.unobservable;
  }
  if (all) r.note = "deviations unobservable; increase epsilon or decrease n";
}

// Chain on classes of length L = max(memory, depth, 1) carrying psi.
struct ClassChain {
  std::size_t ell = 0;
  std::size_t states = 0;
  std::vector<double> pi;
  std::vector<double> cdf;  // of pi
  std::vector<double> xi;
  std::vector<double> p;  // states x ell, zero off the support

  std::size_t succ(std::size_t w, std::size_t i) const { return (w * ell + i) % states; }
};

ClassChain class_chain(const MarkovBase& base, int depth, std::span<const double> psi) {
  const int ell = base.symbols();
  require(depth >= 1, "observable: depth must be at least 1");
  require(psi.size() == ipow(static_cast<std::size_t>(ell), depth),
          "observable: expected " + std::to_string(ipow(static_cast<std::size_t>(ell), depth)) + " values");
  const int len = std::max({base.memory(), depth, 1});
  ClassChain ch;
  ch.ell = static_cast<std::size_t>(ell);
  ch.states = ipow(ch.ell, len);
  if (ch.states > kStateBudget) throw BudgetError("observable chain exceeds the state budget");
  const std::size_t mod_m = ipow(ch.ell, base.memory());
  const std::size_t mod_d = ipow(ch.ell, depth);
  ch.pi.resize(ch.states);
  ch.cdf.resize(ch.states);
  ch.xi.resize(ch.states);
  ch.p.assign(ch.states * ch.ell, 0.0);
  double acc = 0;
  for (std::size_t w = 0; w < ch.states; ++w) {
    const auto word = decode_word(w, len, ell);
    ch.pi[w] = base.allows(word) ? base.cylinder_measure(word) : 0.0;
    acc += ch.pi[w];
    ch.cdf[w] = acc;
    ch.xi[w] = psi[w % mod_d];
    if (ch.pi[w] > 0.0)
      for (std::size_t i = 0; i < ch.ell; ++i) ch.p[w * ch.ell + i] = base.prob(w % mod_m, static_cast<int>(i));
  }
  for (double& c : ch.cdf) c /= acc;
  return ch;
}

struct Perron {
  double log_root = 0.0;
  std::vector<double> h;
};

// Right Perron vector of p e^{t xi} by power iteration on Q + I.
Perron perron(const ClassChain& ch, double t) {
  const auto [lo, hi] = std::minmax_element(ch.xi.begin(), ch.xi.end());
  const double shift = t >= 0.0 ? *hi : *lo;
  std::vector<double> scale(ch.states), h(ch.states), next(ch.states);
  for (std::size_t w = 0; w < ch.states; ++w) {
    scale[w] = ch.pi[w] > 0.0 ? std::exp(t * (ch.xi[w] - shift)) : 0.0;
    h[w] = ch.pi[w] > 0.0 ? 1.0 : 0.0;
  }
  double growth = 1.0;
  for (std::size_t it = 0; it < 1'000'000; ++it) {
    double top = 0;
    for (std::size_t w = 0; w < ch.states; ++w) {
      double s = 0;
      if (scale[w] > 0.0)
        for (std::size_t i = 0; i < ch.ell; ++i) s += ch.p[w * ch.ell + i] * h[ch.succ(w, i)];
      next[w] = scale[w] * s + h[w];
      top = std::max(top, next[w]);
    }
    double change = 0;
    for (std::size_t w = 0; w < ch.states; ++w) {
      next[w] /= top;
      change = std::max(change, std::abs(next[w] - h[w]));
    }
    h.swap(next);
    growth = top;
    if (change < 1e-14) break;
  }
  Perron out;
  out.log_root = std::log(std::max(growth - 1.0, std::numeric_limits<double>::min())) + t * shift;
  out.h = std::move(h);
  return out;
}

double chain_cumulant(const ClassChain& ch, double t) { return perron(ch, t).log_root; }

// t with c'(t) = target; c is convex so c' is monotone.
double solve_tilt(const ClassChain& ch, double target) {
  const double step = 1e-5;
  auto slope = [&](double t) { return (chain_cumulant(ch, t + step) - chain_cumulant(ch, t - step)) / (2 * step); };
  double lo = -64.0, hi = 64.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Row-normalized Doob proposal p_i h(w i) / sum_j p_j h(w j) and its log
// likelihood ratio against p.
struct Proposal {
  std::vector<double> q;
  std::vector<double> log_ratio;
};

Proposal doob_proposal(const ClassChain& ch, const std::vector<double>& h) {
  Proposal pr;
  pr.q.assign(ch.p.size(), 0.0);
  pr.log_ratio.assign(ch.p.size(), 0.0);
  for (std::size_t w = 0; w < ch.states; ++w) {
    if (!(ch.pi[w] > 0.0)) continue;
    double norm = 0;
    for (std::size_t i = 0; i < ch.ell; ++i) norm += ch.p[w * ch.ell + i] * h[ch.succ(w, i)];
    for (std::size_t i = 0; i < ch.ell; ++i) {
      const std::size_t k = w * ch.ell + i;
      if (!(ch.p[k] > 0.0)) continue;
      pr.q[k] = ch.p[k] * h[ch.succ(w, i)] / norm;
      pr.log_ratio[k] = pr.q[k] > 0.0 ? std::log(h[ch.succ(w, i)] / norm) : -std::numeric_limits<double>::infinity();
    }
  }
  return pr;
}

Proposal plain_proposal(const ClassChain& ch) { return {ch.p, std::vector<double>(ch.p.size(), 0.0)}; }

double exact_mean(const ClassChain& ch) {
  double m = 0, z = 0;
  for (std::size_t w = 0; w < ch.states; ++w) {
    m += ch.pi[w] * ch.xi[w];
    z += ch.pi[w];
  }
  return m / z;
}

// One (epsilon, n) cell: defensive mixture over the proposals, sample k from
// proposal k mod size.
void sample_cell(const ClassChain& ch, const std::vector<Proposal>& props, double mean, double eps, std::size_t n,
                 std::size_t samples, CounterRng root, int threads, double& estimate, std::size_t& hits) {
  std::vector<double> weight(samples, 0.0);
  std::vector<unsigned char> inside(samples, 0);
  const std::size_t comps = props.size();
  const double log_comps = std::log(static_cast<double>(comps));
  parallel_for(samples, threads, [&](std::size_t k) {
    CounterRng rng = root.split(k);
    const Proposal& use = props[k % comps];
    std::size_t w = static_cast<std::size_t>(std::upper_bound(ch.cdf.begin(), ch.cdf.end(), rng.uniform()) - ch.cdf.begin());
    w = std::min(w, ch.states - 1);
    while (!(ch.pi[w] > 0.0)) --w;
    std::vector<double> lr(comps, 0.0);
    double s = ch.xi[w];
    for (std::size_t j = 1; j < n; ++j) {
      const double u = rng.uniform();
      double acc = 0;
      std::size_t pick = ch.ell;
      std::size_t last = 0;
      for (std::size_t i = 0; i < ch.ell; ++i) {
        const double qi = use.q[w * ch.ell + i];
        if (!(qi > 0.0)) continue;
        acc += qi;
        last = i;
        if (u < acc) {
          pick = i;
          break;
        }
      }
      if (pick == ch.ell) pick = last;
      for (std::size_t c = 0; c < comps; ++c) lr[c] += props[c].log_ratio[w * ch.ell + pick];
      w = ch.succ(w, pick);
      s += ch.xi[w];
    }
    if (!(std::abs(s / static_cast<double>(n) - mean) > eps)) return;
    inside[k] = 1;
    // 1 / mean_c exp(lr_c), in log space.
    const double top = *std::max_element(lr.begin(), lr.end());
    double z = 0;
    for (double v : lr) z += std::exp(v - top);
    weight[k] = std::exp(-(top + std::log(z) - log_comps));
  });
  double total = 0;
  hits = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    total += weight[k];
    hits += inside[k];
  }
  estimate = std::min(1.0, total / static_cast<double>(samples));
}

template <int D>
std::vector<double> matrix_log_norms(const Cocycle& a, const MarkovBase& base, std::size_t n, std::size_t samples,
                                     CounterRng root, int threads) {
  using M = Eigen::Matrix<double, D, D>;
  std::vector<M> gens;
  for (const auto& g : a.generators()) gens.emplace_back(g);
  const auto ell = static_cast<std::size_t>(a.symbols());
  const std::size_t modulus = a.size();
  const int d = a.dim();
  std::vector<double> out(samples);
  parallel_for(samples, threads, [&](std::size_t k) {
    SymbolSampler sampler(base, root.split(k).split(0));
    std::size_t code = 0;
    for (int i = 1; i < a.depth(); ++i) code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
    M p = M::Identity(d, d);
    double log_scale = 0;
    for (std::size_t j = 0; j < n; ++j) {
      code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
      p = gens[code] * p;
      if ((j & 7) == 7) {
        const double s = p.cwiseAbs().maxCoeff();
        if (!(s > 1e-300) || !std::isfinite(s)) throw NumericalError("numerical collapse");
        p /= s;
        log_scale += std::log(s);
      }
    }
    out[k] = std::log(spectral_norm(p)) + log_scale;
  });
  return out;
}

template <int D>
std::vector<double> vector_log_norms(const Cocycle& a, const MarkovBase& base, std::size_t n, std::size_t samples,
                                     const VectorXd& v0, CounterRng root, int threads) {
  using M = Eigen::Matrix<double, D, D>;
  using V = Eigen::Matrix<double, D, 1>;
  std::vector<M> gens;
  for (const auto& g : a.generators()) gens.emplace_back(g);
  const auto ell = static_cast<std::size_t>(a.symbols());
  const std::size_t modulus = a.size();
  const V start = v0.normalized();
  std::vector<double> out(samples);
  parallel_for(samples, threads, [&](std::size_t k) {
    SymbolSampler sampler(base, root.split(k).split(0));
    std::size_t code = 0;
    for (int i = 1; i < a.depth(); ++i) code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
    V v = start;
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      code = (code * ell + static_cast<std::size_t>(sampler.next())) % modulus;
      v = gens[code] * v;
      if ((j & 7) == 7 || j + 1 == n) {
        const double s = v.norm();
        if (!(s > 1e-300) || !std::isfinite(s)) throw NumericalError("numerical collapse");
        v /= s;
        total += std::log(s);
      }
    }
    out[k] = total;
  });
  return out;
}

// Monte Carlo L1 with at least `steps` steps per chain.
MeanStderr reference_l1(const Cocycle& a, const MarkovBase& base, std::size_t steps, std::size_t chains,
                        std::uint64_t seed, int threads) {
  LyapunovOptions lo;
  lo.n = steps;
  lo.chains = std::max<std::size_t>(chains, 2);
  lo.batches = 5;
  lo.seed = seed ^ 0x5eed0f7e11ULL;
  lo.threads = threads;
  lo.top_only = true;
  lo.burn_in = std::max<std::size_t>(kDefaultBurnIn, static_cast<std::size_t>(a.depth()));
  const auto est = lyapunov_spectrum(a, base, lo);
  return {est.exponents.front(), est.stderrs.front()};
}

std::vector<double> log_abs_scalar(const Cocycle& a) {
  std::vector<double> psi(a.size());
  for (std::size_t w = 0; w < a.size(); ++w) psi[w] = a.log_abs_det(w);
  return psi;
}

}  // namespace

double observable_cumulant(const MarkovBase& base, int depth, std::span<const double> psi, double t) {
  return chain_cumulant(class_chain(base, depth, psi), t);
}

LdtReport ldt_observable(const MarkovBase& base, int depth, std::span<const double> psi, const LdtOptions& opt) {
  check_ldt_options(opt);
  const ClassChain ch = class_chain(base, depth, psi);
  LdtReport r;
  r.n = opt.ns;
  r.samples = opt.samples;
  r.seed = opt.seed;
  r.truth_exact = !opt.truth.has_value();
  r.truth = opt.truth.value_or(exact_mean(ch));
  check_epsilon_floor(r, opt);
  const double mean = exact_mean(ch);
  r.importance_sampling = opt.importance_sampling;
  const CounterRng root(opt.seed);
  for (std::size_t e = 0; e < opt.epsilons.size(); ++e) {
    const double eps = opt.epsilons[e];
    std::vector<Proposal> props;
    if (opt.importance_sampling) {
      // Tilts aim at the two edges of the event around the exact mean.
      for (double target : {mean + eps, mean - eps}) {
        const Perron pf = perron(ch, solve_tilt(ch, target));
        bool positive = true;
        for (std::size_t w = 0; w < ch.states; ++w) positive = positive && (!(ch.pi[w] > 0.0) || pf.h[w] > 0.0);
        if (!positive) {
          props.clear();
          break;
        }
        props.push_back(doob_proposal(ch, pf.h));
      }
    }
    if (props.empty()) {
      props.push_back(plain_proposal(ch));
      if (opt.importance_sampling) {
        r.importance_sampling = false;
        r.note = "tilted chain not irreducible; plain sampling used";
      }
    }
    LdtCurve c;
    c.epsilon = eps;
    for (std::size_t i = 0; i < opt.ns.size(); ++i) {
      double p = 0;
      std::size_t hits = 0;
      sample_cell(ch, props, r.truth, eps, opt.ns[i], opt.samples, root.split(e).split(i), opt.threads, p, hits);
      c.frequency.push_back(p);
      c.hits.push_back(hits);
    }
    r.curves.push_back(std::move(c));
  }
  finish(r, opt);
  return r;
}

LdtReport ldt_experiment(const Cocycle& a, const MarkovBase& base, const LdtOptions& opt) {
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  check_ldt_options(opt);
  if (a.dim() == 1) {
    const auto psi = log_abs_scalar(a);
    return ldt_observable(base, a.depth(), psi, opt);
  }
  LdtReport r;
  r.n = opt.ns;
  r.samples = opt.samples;
  r.seed = opt.seed;
  const std::size_t nmax = *std::max_element(opt.ns.begin(), opt.ns.end());
  if (opt.truth) {
    r.truth = *opt.truth;
  } else {
    const auto ref = reference_l1(a, base, std::max<std::size_t>(10 * nmax, 100'000), opt.truth_chains, opt.seed,
                                  opt.threads);
    r.truth = ref.mean;
    r.truth_stderr = ref.se;
  }
  check_epsilon_floor(r, opt);
  const CounterRng root(opt.seed);
  // Same orbits for every epsilon: the events are nested.
  std::vector<std::vector<double>> logs(opt.ns.size());
  for (std::size_t i = 0; i < opt.ns.size(); ++i)
    logs[i] = dispatch_dim(a.dim(), [&](auto dim) {
      return matrix_log_norms<decltype(dim)::value>(a, base, opt.ns[i], opt.samples, root.split(i), opt.threads);
    });
  for (double eps : opt.epsilons) {
    LdtCurve c;
    c.epsilon = eps;
    for (std::size_t i = 0; i < opt.ns.size(); ++i) {
      std::size_t hits = 0;
      const double n = static_cast<double>(opt.ns[i]);
      for (double l : logs[i])
        if (std::abs(l / n - r.truth) > eps) ++hits;
      c.hits.push_back(hits);
      c.frequency.push_back(static_cast<double>(hits) / static_cast<double>(opt.samples));
    }
    r.curves.push_back(std::move(c));
  }
  finish(r, opt);
  return r;
}

Cocycle perturbed_cocycle(const Cocycle& a, const MarkovBase& base, double radius, std::uint64_t seed) {
  require(radius >= 0.0 && std::isfinite(radius), "perturbation radius must be nonnegative");
  if (radius == 0.0) return a;
  const int d = a.dim();
  CounterRng rng(seed);
  std::vector<MatrixXd> dirs;
  for (std::size_t w = 0; w < a.size(); ++w) {
    MatrixXd e(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) e(i, j) = rng.normal();
    dirs.push_back(e / e.norm());
  }
  auto build = [&](double s) {
    return a.transformed([&](const MatrixXd& g, std::size_t w) -> MatrixXd { return g * (s * dirs[w]).exp(); });
  };
  double lo = 0.0, hi = radius;
  while (uniform_distance(a, build(hi), base) <= radius) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("perturbation scale search diverged");
  }
  for (int k = 0; k < 50; ++k) {
    const double mid = 0.5 * (lo + hi);
    (uniform_distance(a, build(mid), base) <= radius ? lo : hi) = mid;
  }
  return build(lo);
}

UniformityReport ldt_uniformity(const Cocycle& a, const MarkovBase& base, const UniformityOptions& opt) {
  require(opt.perturbations >= 1, "uniformity: need at least one perturbation");
  UniformityReport u;
  u.center = ldt_experiment(a, base, opt.ldt);
  const std::size_t ne = opt.ldt.epsilons.size();
  u.center_rate.resize(ne);
  u.min_rate.assign(ne, std::numeric_limits<double>::infinity());
  u.max_log_C.assign(ne, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < ne; ++e) {
    u.center_rate[e] = u.center.curves[e].rate_per_n;
    if (!u.center.curves[e].unobservable) u.max_log_C[e] = u.center.curves[e].log_C;
  }
  for (std::size_t j = 0; j < opt.perturbations; ++j) {
    const Cocycle b = perturbed_cocycle(a, base, opt.radius, CounterRng(opt.perturbation_seed).split(j)());
    u.distances.push_back(uniform_distance(a, b, base));
    const bool skip = b.window_lo() < 0 && !fiber_bunching_check(b, base, 8).satisfied;
    u.skipped.push_back(skip);
    if (skip) {
      u.members.emplace_back();
      continue;
    }
    u.members.push_back(ldt_experiment(b, base, opt.ldt));
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& c = u.members.back().curves[e];
      if (c.unobservable) continue;
      u.min_rate[e] = std::min(u.min_rate[e], c.rate_per_n);
      u.max_log_C[e] = std::max(u.max_log_C[e], c.log_C);
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    if (!std::isfinite(u.min_rate[e])) u.min_rate[e] = kNaN;
    if (!std::isfinite(u.max_log_C[e])) u.max_log_C[e] = kNaN;
  }
  return u;
}

double gordin_lifsic_variance(const DiscretizedOperator& op, const VectorXd& mu, const VectorXd& psi,
                              std::size_t max_terms, double tol, std::size_t* terms, int threads) {
  require(mu.size() == psi.size() && static_cast<std::size_t>(psi.size()) == op.states(),
          "variance: vector sizes do not match the operator");
  VectorXd term = psi.array() - mu.dot(psi);
  VectorXd phi = VectorXd::Zero(psi.size());
  std::size_t j = 0;
  while (term.cwiseAbs().maxCoeff() >= tol) {
    if (j >= max_terms) throw NumericalError("mixing too slow or non-typical input");
    phi += term;
    term = apply(op, term, threads);
    ++j;
  }
  if (terms) *terms = j;
  const VectorXd qphi = apply(op, phi, threads);
  const double v = mu.dot(phi.cwiseAbs2()) - mu.dot(qphi.cwiseAbs2());
  return std::max(v, 0.0);
}

double ks_statistic(std::vector<double> samples, double sigma) {
  require(!samples.empty(), "ks: no samples");
  require(sigma > 0.0, "ks: sigma must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = 0.5 * std::erfc(-samples[i] / (sigma * std::sqrt(2.0)));
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::min(d, 1.0);
}

CltReport clt_experiment(const Cocycle& a, const MarkovBase& base, const ProjectiveGrid& grid, const CltOptions& opt) {
  require(a.symbols() == base.symbols(), "cocycle and base disagree on the symbol count");
  require(grid.dim() == a.dim(), "clt: grid dimension differs from the cocycle");
  require(opt.n >= 1 && opt.samples >= 2, "clt: need n >= 1 and at least 2 samples");
  CltReport r;
  r.n = opt.n;
  r.N = opt.samples;
  r.seed = opt.seed;

  const int len = opt.class_length > 0 ? opt.class_length : default_class_length(a, base);
  const auto op = build_fiber_operator(a, base, len, grid, 0.0, 0.0, opt.threads);
  const auto st = stationary_measure(op, &grid);
  r.stationary_mean = st.measure.dot(op.xi);
  r.sigma_gl2 = gordin_lifsic_variance(op, st.measure, op.xi, opt.max_terms, opt.series_tol, &r.series_terms,
                                       opt.threads);
  r.sigma_gl = std::sqrt(r.sigma_gl2);

  if (opt.truth) {
    r.truth = *opt.truth;
  } else if (a.dim() == 1) {
    r.truth = expected_log_det(a, base);
  } else {
    // The centering error is amplified by sqrt(n); aim for 1e8 reference steps.
    const std::size_t steps = 10 * opt.n;
    const std::size_t chains = std::max(opt.truth_chains, (100'000'000 + steps - 1) / steps);
    const auto ref = reference_l1(a, base, steps, chains, opt.seed, opt.threads);
    r.truth = ref.mean;
    r.truth_stderr = ref.se;
  }

  VectorXd v = opt.direction.size() ? opt.direction : VectorXd::Unit(a.dim(), 0);
  require(v.size() == a.dim() && v.norm() > 0.0, "clt: direction must be a nonzero vector of the fiber dimension");
  const auto logs = dispatch_dim(a.dim(), [&](auto dim) {
    return vector_log_norms<decltype(dim)::value>(a, base, opt.n, opt.samples, v, CounterRng(opt.seed), opt.threads);
  });
  const double rn = std::sqrt(static_cast<double>(opt.n));
  r.samples.reserve(logs.size());
  for (double l : logs) r.samples.push_back((l - static_cast<double>(opt.n) * r.truth) / rn);
  const auto ms = mean_stderr(r.samples);
  r.sample_mean = ms.mean;
  r.sigma_hat = ms.se * std::sqrt(static_cast<double>(r.samples.size()));

  r.ks_critical = 1.36 / std::sqrt(static_cast<double>(r.samples.size()));
  r.degenerate = !(r.sigma_gl2 > 1e-20);
  if (r.degenerate) {
    const bool all_zero =
        std::all_of(r.samples.begin(), r.samples.end(), [](double x) { return std::abs(x) < 1e-9; });
    r.ks = all_zero ? 0.0 : 1.0;
  } else {
    r.ks = ks_statistic(r.samples, r.sigma_gl);
  }
  r.ks_pass = !r.degenerate && r.ks < r.ks_critical;
  return r;
}

HolderFitResult holder_fit(const Cocycle& a, const MarkovBase& base, const std::vector<MatrixXd>& direction,
                           const HolderOptions& opt) {
  return holder_modulus_fit(a, base, {direction}, opt);
}

std::vector<std::vector<MatrixXd>> random_directions(const Cocycle& a, std::size_t count, std::uint64_t seed) {
  const CounterRng root(seed);
  std::vector<std::vector<MatrixXd>> out;
  for (std::size_t k = 0; k < count; ++k) {
    CounterRng rng = root.split(k);
    std::vector<MatrixXd> dir;
    for (std::size_t w = 0; w < a.size(); ++w) {
      MatrixXd e(a.dim(), a.dim());
      for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = rng.normal();
      dir.push_back(e / e.norm());
    }
    out.push_back(std::move(dir));
  }
  return out;
}

HolderFitResult holder_modulus_fit(const Cocycle& a, const MarkovBase& base,
                                   const std::vector<std::vector<MatrixXd>>& directions, const HolderOptions& opt) {
  require(!directions.empty(), "holder: no directions");
  for (const auto& direction : directions) {
    require(direction.size() == a.size(), "holder: direction needs one matrix per generator");
    for (const auto& m : direction)
      require(m.rows() == a.dim() && m.cols() == a.dim(), "holder: direction matrices must be d x d");
  }
  require(!opt.scales.empty(), "holder: no scales");
  for (double s : opt.scales) require(s > 0.0 && std::isfinite(s), "holder: scales must be positive");

  HolderFitResult out;
  out.scales = opt.scales;
  std::sort(out.scales.begin(), out.scales.end(), std::greater<>());
  out.scales.erase(std::unique(out.scales.begin(), out.scales.end()), out.scales.end());

  const auto ref = lyapunov_spectrum(a, base, opt.lyapunov);
  bool all_zero = true;
  for (double s : out.scales) {
    double best = -1.0, best_se = 0.0, best_dist = 0.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < directions.size(); ++k) {
      const auto& direction = directions[k];
      const Cocycle b =
          a.transformed([&](const MatrixXd& g, std::size_t w) -> MatrixXd { return g * (s * direction[w]).exp(); });
      if (b.window_lo() < 0 && !fiber_bunching_check(b, base, 8).satisfied)
        throw ValidationError("holder: perturbed cocycle at scale " + std::to_string(s) + " is not fiber bunched");
      const auto est = lyapunov_spectrum(b, base, opt.lyapunov);
      std::vector<double> diffs(est.batch_means.front().size());
      for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = ref.batch_means.front()[i] - est.batch_means.front()[i];
      const double diff = std::abs(ref.exponents.front() - est.exponents.front());
      if (diff > best) {
        best = diff;
        best_se = mean_stderr(diffs).se;
        best_dist = uniform_distance(a, b, base);
        arg = k;
      }
    }
    out.differences.push_back(best);
    out.stderrs.push_back(best_se);
    out.distances.push_back(best_dist);
    out.maximizers.push_back(arg);
    all_zero = all_zero && best == 0.0;
  }
  if (all_zero) {
    out.identically_zero = true;
    out.used.assign(out.scales.size(), false);
    out.theta = out.theta_low = out.theta_high = kNaN;
    return out;
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < out.scales.size(); ++i) {
    const bool use = out.differences[i] > 0.0 && out.distances[i] > 0.0 && out.differences[i] >= 3.0 * out.stderrs[i];
    out.used.push_back(use);
    if (!use) {
      out.excluded_scales = true;
      continue;
    }
    x.push_back(std::log(out.distances[i]));
    y.push_back(std::log(out.differences[i]));
  }
  out.fit = fit_line(x, y);
  if (x.size() < 2) {
    out.theta = out.theta_low = out.theta_high = kNaN;
    return out;
  }
  out.theta = out.fit.slope;
  if (x.size() > 2 && out.fit.r2 > 0.0) {
    const double se = std::abs(out.theta) * std::sqrt(std::max(0.0, 1.0 / out.fit.r2 - 1.0) /
                                                      static_cast<double>(x.size() - 2));
    out.theta_low = out.theta - 2.0 * se;
    out.theta_high = out.theta + 2.0 * se;
  } else {
    out.theta_low = out.theta_high = out.theta;
  }
  return out;
}

}  // namespace cocylab
