#include "cocylab/markov_operator.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace cocylab {

namespace {

struct Edge {
  std::size_t target;
  double weight;
};

void check_states(std::size_t states) {
  if (states > kStateBudget)
    throw BudgetError("operator state budget: " + std::to_string(states) + " states exceed " +
                      std::to_string(kStateBudget));
}

std::size_t class_count(int symbols, int length) {
  const double count = std::pow(static_cast<double>(symbols), length);
  if (count > static_cast<double>(kStateBudget))
    throw BudgetError("operator state budget: " + std::to_string(symbols) + "^" + std::to_string(length) +
                      " past classes");
  return ipow(static_cast<std::size_t>(symbols), length);
}

/// Reads the cocycle on a window ending at coordinate 0.
Cocycle past_cocycle(const Cocycle& a) {
  if (a.lead() > 0)
    throw ValidationError("operator needs a cocycle that reads only the past (lead 0); reduce it first");
  if (a.lead() == 0) return a;
  return a.widened(a.depth() - a.lead(), 0);
}

// Sorted, duplicate-merged rows into a compressed row-major matrix.
SparseRowMatrix assemble(std::size_t states, std::size_t per_row, std::vector<std::vector<Edge>>& rows) {
  SparseRowMatrix m(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  m.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(states), static_cast<int>(per_row)));
  for (std::size_t s = 0; s < states; ++s) {
    auto& row = rows[s];
    std::sort(row.begin(), row.end(), [](const Edge& x, const Edge& y) { return x.target < y.target; });
    for (std::size_t k = 0; k < row.size();) {
      double w = row[k].weight;
      std::size_t j = k + 1;
      while (j < row.size() && row[j].target == row[k].target) w += row[j++].weight;
      m.insert(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(row[k].target)) = w;
      k = j;
    }
  }
  m.makeCompressed();
  return m;
}

std::size_t base_class(const MarkovBase& base, std::size_t cls) {
  return cls % ipow(static_cast<std::size_t>(base.symbols()), base.memory());
}

}  // namespace

int default_class_length(const Cocycle& a, const MarkovBase& base) {
  return std::max(base.memory(), a.depth() - std::min(a.lead(), 0)) + 2;
}

DiscretizedOperator build_base_operator(const MarkovBase& base, int class_length, int threads) {
  require(class_length >= base.memory(), "operator: class length must be at least the base memory");
  DiscretizedOperator op;
  op.symbols = base.symbols();
  op.class_length = class_length;
  op.classes = class_count(base.symbols(), class_length);
  check_states(op.classes);
  const auto l = static_cast<std::size_t>(base.symbols());
  std::vector<std::vector<Edge>> rows(op.classes);
  parallel_for(op.classes, threads, [&](std::size_t w) {
    const std::size_t b = base_class(base, w);
    for (std::size_t i = 0; i < l; ++i) {
      const double p = base.prob(b, static_cast<int>(i));
      if (p > 0) rows[w].push_back({(w * l + i) % op.classes, p});
    }
  });
  op.matrix = assemble(op.classes, l, rows);
  op.xi = VectorXd::Zero(static_cast<Eigen::Index>(op.classes));
  return op;
}

DiscretizedOperator build_fiber_operator(const Cocycle& cocycle, const MarkovBase& base, int class_length,
                                         const ProjectiveGrid& grid, double tilt, double centering, int threads) {
  require(cocycle.symbols() == base.symbols(), "operator: cocycle and base disagree on the alphabet");
  require(grid.dim() == cocycle.dim(), "operator: grid dimension differs from the cocycle dimension");
  const Cocycle a = past_cocycle(cocycle);
  require(class_length >= base.memory(), "operator: class length must be at least the base memory");
  require(class_length >= a.depth(), "operator: class length must be at least the cocycle depth");
  DiscretizedOperator op;
  op.symbols = base.symbols();
  op.class_length = class_length;
  op.classes = class_count(base.symbols(), class_length);
  op.cells = grid.size();
  op.dim = grid.dim();
  op.tilt = tilt;
  op.centering = centering;
  op.cell_diameter = grid.diameter();
  check_states(op.classes * op.cells);
  const auto l = static_cast<std::size_t>(base.symbols());
  const std::size_t gen_mod = ipow(l, a.depth());
  const std::size_t states = op.states();
  std::vector<std::vector<Edge>> rows(states);
  op.xi.resize(static_cast<Eigen::Index>(states));
  parallel_for(op.classes, threads, [&](std::size_t w) {
    const MatrixXd& g = a.generator(w % gen_mod);
    const std::size_t b = base_class(base, w);
    for (std::size_t c = 0; c < op.cells; ++c) {
      const VectorXd u = g * grid.rep(c);
      const double xi = std::log(u.norm());
      const std::size_t cell = grid.nearest(u);
      const std::size_t s = op.state(w, c);
      op.xi(static_cast<Eigen::Index>(s)) = xi;
      const double factor = tilt == 0.0 ? 1.0 : std::exp(tilt * (xi - centering));
      for (std::size_t i = 0; i < l; ++i) {
        const double p = base.prob(b, static_cast<int>(i));
        if (p > 0) rows[s].push_back({op.state((w * l + i) % op.classes, cell), p * factor});
      }
    }
  });
  op.matrix = assemble(states, l, rows);
  return op;
}

DiscretizedOperator retilted(const DiscretizedOperator& op, double tilt, double centering) {
  DiscretizedOperator out = op;
  out.tilt = tilt;
  out.centering = centering;
  for (Eigen::Index s = 0; s < out.matrix.outerSize(); ++s) {
    const double xi = op.xi(s);
    const double old = op.tilt == 0.0 ? 1.0 : std::exp(op.tilt * (xi - op.centering));
    const double now = tilt == 0.0 ? 1.0 : std::exp(tilt * (xi - centering));
    for (SparseRowMatrix::InnerIterator it(out.matrix, s); it; ++it) it.valueRef() = it.value() / old * now;
  }
  return out;
}

VectorXd apply(const DiscretizedOperator& op, const VectorXd& v, int threads) {
  const auto n = static_cast<std::size_t>(op.matrix.rows());
  VectorXd out(op.matrix.rows());
  const std::size_t chunk = 4096;
  parallel_for((n + chunk - 1) / chunk, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * chunk);
    for (std::size_t s = b * chunk; s < end; ++s) {
      double acc = 0;
      for (SparseRowMatrix::InnerIterator it(op.matrix, static_cast<Eigen::Index>(s)); it; ++it)
        acc += it.value() * v(it.col());
      out(static_cast<Eigen::Index>(s)) = acc;
    }
  });
  return out;
}

VectorXd apply_adjoint(const DiscretizedOperator& op, const VectorXd& mu) {
  VectorXd out = VectorXd::Zero(op.matrix.cols());
  for (Eigen::Index s = 0; s < op.matrix.outerSize(); ++s) {
    const double m = mu(s);
    if (m == 0.0) continue;
    for (SparseRowMatrix::InnerIterator it(op.matrix, s); it; ++it) out(it.col()) += it.value() * m;
  }
  return out;
}

namespace {

void add_concentration(StationaryResult& r, const DiscretizedOperator& op, const ProjectiveGrid& grid) {
  r.concentration = 0;
  for (std::size_t w = 0; w < op.classes; ++w) {
    const auto block = r.measure.segment(static_cast<Eigen::Index>(op.state(w, 0)),
                                         static_cast<Eigen::Index>(op.cells));
    Eigen::Index top = 0;
    block.maxCoeff(&top);
    const VectorXd& center = grid.rep(static_cast<std::size_t>(top));
    for (std::size_t c = 0; c < op.cells; ++c)
      if (sine_distance(center, grid.rep(c)) <= 2.0 * grid.diameter() + 1e-15)
        r.concentration += block(static_cast<Eigen::Index>(c));
  }
  r.concentrated = r.concentration >= 0.5;
}

}  // namespace

StationaryResult stationary_measure(const DiscretizedOperator& op, const ProjectiveGrid* grid, double tol,
                                    std::size_t max_iterations) {
  require(op.tilt == 0.0, "stationary measure needs the untilted operator");
  const auto n = static_cast<Eigen::Index>(op.states());
  StationaryResult r;
  VectorXd mu = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  // Past tol, keep going while the residual still improves.
  const double target = tol * 1e-4;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    const VectorXd next = apply_adjoint(op, mu);
    r.residual = (next - mu).lpNorm<1>();
    if (r.residual < best) {
      best = r.residual;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (r.residual <= target || (r.residual < tol && since_best > 50)) break;
    mu = 0.5 * (mu + next);
    mu /= mu.sum();
  }
  if (!(r.residual < tol))
    throw NumericalError("stationary measure did not converge: residual " + std::to_string(r.residual) + " after " +
                         std::to_string(r.iterations) + " iterations");
  r.measure = mu;

  r.fiber_marginal = VectorXd::Zero(static_cast<Eigen::Index>(op.cells));
  for (std::size_t w = 0; w < op.classes; ++w)
    for (std::size_t c = 0; c < op.cells; ++c)
      r.fiber_marginal(static_cast<Eigen::Index>(c)) += mu(static_cast<Eigen::Index>(op.state(w, c)));
  if (grid && op.dim >= 2) add_concentration(r, op, *grid);
  return r;
}


KappaReport kappa_alpha(const Cocycle& cocycle, const MarkovBase& base, double alpha, int n,
                        const ProjectiveGrid& grid, int threads, double budget) {
  require(alpha > 0.0 && alpha <= 1.0, "kappa: alpha must lie in (0, 1]");
  require(n >= 1, "kappa: n must be positive");
  require(cocycle.symbols() == base.symbols(), "kappa: cocycle and base disagree on the alphabet");
  require(grid.dim() == cocycle.dim(), "kappa: grid dimension differs from the cocycle dimension");
  KappaReport rep;
  rep.alpha = alpha;
  rep.n = n;
  rep.grid_size = grid.size();
  rep.cell_diameter = grid.diameter();
  if (cocycle.dim() == 1) {
    rep.value = 1.0;
    rep.convention = true;
    return rep;
  }
  const Cocycle a = past_cocycle(cocycle);
  const int d = a.dim();
  const auto l = static_cast<std::size_t>(base.symbols());
  const int past_len = std::max(base.memory(), a.depth());
  const std::size_t classes = class_count(base.symbols(), past_len);
  const std::size_t gen_mod = ipow(l, a.depth());
  const std::size_t mem_mod = ipow(l, base.memory());
  const std::size_t g = grid.size();

  // Admissible pairs, in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t c = 0; c < g; ++c)
    for (std::size_t e = c + 1; e < g; ++e)
      if (sine_distance(grid.rep(c), grid.rep(e)) >= 2.0 * grid.diameter()) pairs.emplace_back(c, e);
  require(!pairs.empty(), "kappa: grid too coarse for separated pairs");

  const double words = std::pow(static_cast<double>(l), n);
  const double work = static_cast<double>(classes) * words * (d == 2 ? static_cast<double>(g * g) : static_cast<double>(pairs.size()));
  if (work > budget) throw BudgetError("kappa enumeration budget: " + std::to_string(work) + " operations");

  struct Best {
    double value = -1;
    std::size_t cls = 0, a = 0, b = 0;
  };
  std::vector<Best> best(classes);

  parallel_for(classes, threads, [&](std::size_t u) {
    if (!base.allows(decode_word(u, past_len, base.symbols()))) return;
    // Every continuation of length n with its probability and normalized product.
    std::vector<double> probs;
    std::vector<MatrixXd> mats;
    struct Frame {
      std::size_t suffix;
      double p;
      MatrixXd m;
      int depth;
    };
    std::vector<Frame> stack{{u, 1.0, MatrixXd::Identity(d, d), 0}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (f.depth == n) {
        int e = 0;
        std::frexp(f.m.cwiseAbs().maxCoeff(), &e);
        probs.push_back(f.p);
        mats.push_back(std::ldexp(1.0, 1 - e) * f.m);
        continue;
      }
      const MatrixXd next = a.generator(f.suffix % gen_mod) * f.m;
      for (std::size_t i = l; i-- > 0;) {
        const double p = base.prob(f.suffix % mem_mod, static_cast<int>(i));
        if (p > 0) stack.push_back({(f.suffix * l + i) % classes, f.p * p, next, f.depth + 1});
      }
    }
    Best& b = best[u];
    b.cls = u;
    if (d == 2) {
      const auto w = static_cast<Eigen::Index>(probs.size());
      MatrixXd factor(w, static_cast<Eigen::Index>(g));
      VectorXd q(w);
      for (Eigen::Index k = 0; k < w; ++k) {
        const MatrixXd& m = mats[static_cast<std::size_t>(k)];
        q(k) = probs[static_cast<std::size_t>(k)] * std::pow(std::abs(m.determinant()), alpha);
        for (std::size_t c = 0; c < g; ++c) {
          const VectorXd& v = grid.rep(c);
          factor(k, static_cast<Eigen::Index>(c)) = std::pow(v.norm() / (m * v).norm(), alpha);
        }
      }
      const MatrixXd kernel = factor.transpose() * (q.asDiagonal() * factor);
      for (const auto& [c, e] : pairs) {
        const double v = kernel(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(e));
        if (v > b.value) b = {v, u, c, e};
      }
    } else {
      std::vector<std::vector<VectorXd>> images(mats.size());
      for (std::size_t k = 0; k < mats.size(); ++k)
        for (std::size_t c = 0; c < g; ++c) images[k].push_back(mats[k] * grid.rep(c));
      for (const auto& [c, e] : pairs) {
        const double base_dist = sine_distance(grid.rep(c), grid.rep(e));
        double sum = 0;
        for (std::size_t k = 0; k < mats.size(); ++k)
          sum += probs[k] * std::pow(sine_distance(images[k][c], images[k][e]) / base_dist, alpha);
        if (sum > b.value) b = {sum, u, c, e};
      }
    }
  });
  Best top;
  for (const auto& b : best)
    if (b.value > top.value) top = b;
  rep.value = top.value;
  rep.past_class = top.cls;
  rep.cell_a = top.a;
  rep.cell_b = top.b;
  return rep;
}

MixingResult mixing_rate(const DiscretizedOperator& op, const VectorXd& stationary, const std::vector<VectorXd>& probes,
                         int nmax, int threads) {
  require(nmax >= 2, "mixing: nmax must be at least 2");
  constexpr double floor = 1e-14;
  MixingResult r;
  r.deviations.assign(static_cast<std::size_t>(nmax) + 1, 0.0);
  for (const VectorXd& probe : probes) {
    require(probe.size() == static_cast<Eigen::Index>(op.states()), "mixing: probe size differs from the state count");
    // Offsets from probe(0) keep constant probes exactly constant.
    const double ref = probe(0);
    const double offset = stationary.dot((probe.array() - ref).matrix());
    VectorXd phi = probe;
    for (int k = 0; k <= nmax; ++k) {
      if (k > 0) phi = apply(op, phi, threads);
      auto& dev = r.deviations[static_cast<std::size_t>(k)];
      dev = std::max(dev, ((phi.array() - ref) - offset).abs().maxCoeff());
    }
  }
  if (r.deviations[0] < floor) {
    r.degenerate = true;
    return r;
  }
  std::size_t usable = 0;
  while (usable < static_cast<std::size_t>(nmax) && r.deviations[usable + 1] >= floor) ++usable;
  r.usable = usable;
  r.resolution_floor = usable < static_cast<std::size_t>(nmax);
  if (usable < 2) {
    r.sigma0 = 0.0;
    return r;
  }
  std::vector<double> xs, ys;
  for (std::size_t k = std::max<std::size_t>(1, usable / 2); k <= usable; ++k) {
    xs.push_back(static_cast<double>(k));
    ys.push_back(std::log(r.deviations[k]));
  }
  r.fit = fit_line(xs, ys);
  r.sigma0 = std::exp(r.fit.slope);
  return r;
}

std::vector<VectorXd> default_probes(const DiscretizedOperator& op, const ProjectiveGrid* grid) {
  const auto n = static_cast<Eigen::Index>(op.states());
  std::vector<VectorXd> out;
  VectorXd last = VectorXd::Zero(n);
  VectorXd fiber = VectorXd::Zero(n);
  const auto l = static_cast<std::size_t>(op.symbols);
  for (std::size_t w = 0; w < op.classes; ++w)
    for (std::size_t c = 0; c < op.cells; ++c) {
      const auto s = static_cast<Eigen::Index>(op.state(w, c));
      last(s) = (op.class_length > 0 && w % l == 0) ? 1.0 : 0.0;
      if (grid && op.dim >= 2) fiber(s) = grid->rep(c)(0) * grid->rep(c)(0);
    }
  if (op.class_length > 0 && op.symbols > 1) out.push_back(last);
  if (grid && op.dim >= 2) {
    out.push_back(fiber);
    if (!out.empty()) out.push_back(last + fiber);
  }
  return out;
}

double state_distance(const DiscretizedOperator& op, const ProjectiveGrid* grid, std::size_t s, std::size_t t) {
  std::size_t a = s / op.cells, b = t / op.cells;
  const auto l = static_cast<std::size_t>(op.symbols);
  double dc = 0;
  for (int i = 0; i < op.class_length; ++i, a /= l, b /= l)
    if (a % l != b % l) {
      dc = std::ldexp(1.0, -i);
      break;
    }
  double df = 0;
  if (grid && op.dim >= 2) df = sine_distance(grid->rep(s % op.cells), grid->rep(t % op.cells));
  return std::max(dc, df);
}

namespace {

/// Pairwise distance^alpha table (upper triangle, row-major).
struct DistanceTable {
  std::size_t n = 0;
  std::vector<double> powd;
  double at(std::size_t s, std::size_t t) const {
    if (s > t) std::swap(s, t);
    return powd[s * n - s * (s + 1) / 2 + (t - s - 1)];
  }
};

DistanceTable distance_table(const DiscretizedOperator& op, const ProjectiveGrid* grid, double alpha, int threads) {
  DistanceTable tab;
  tab.n = op.states();
  const double pairs = static_cast<double>(tab.n) * static_cast<double>(tab.n - 1) / 2;
  if (pairs > 3e7) throw BudgetError("Holder seminorm budget: " + std::to_string(pairs) + " state pairs");
  tab.powd.resize(static_cast<std::size_t>(pairs));
  parallel_for(tab.n, threads, [&](std::size_t s) {
    for (std::size_t t = s + 1; t < tab.n; ++t)
      tab.powd[s * tab.n - s * (s + 1) / 2 + (t - s - 1)] = std::pow(state_distance(op, grid, s, t), alpha);
  });
  return tab;
}

double seminorm(const DistanceTable& tab, const VectorXd& phi, int threads) {
  std::vector<double> row_max(tab.n, 0.0);
  parallel_for(tab.n, threads, [&](std::size_t s) {
    double m = 0;
    for (std::size_t t = s + 1; t < tab.n; ++t) {
      const double dist = tab.powd[s * tab.n - s * (s + 1) / 2 + (t - s - 1)];
      if (dist > 0)
        m = std::max(m, std::abs(phi(static_cast<Eigen::Index>(s)) - phi(static_cast<Eigen::Index>(t))) / dist);
    }
    row_max[s] = m;
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

}  // namespace

double holder_seminorm(const DiscretizedOperator& op, const ProjectiveGrid* grid, const VectorXd& phi, double alpha) {
  return seminorm(distance_table(op, grid, alpha, 1), phi, 1);
}

double lasota_yorke_constant(const LasotaYorkeResult& r, double sigma) {
  double c = 0;
  for (const auto& row : r.table)
    if (row.sup > 0) c = std::max(c, (row.seminorm - std::pow(sigma, row.n) * row.initial) / row.sup);
  return c;
}

LasotaYorkeResult lasota_yorke_check(const DiscretizedOperator& op, const ProjectiveGrid* grid, double alpha, int nmax,
                                     std::size_t probes, int threads) {
  require(alpha > 0.0 && alpha <= 1.0, "Lasota-Yorke: alpha must lie in (0, 1]");
  require(nmax >= 1, "Lasota-Yorke: nmax must be positive");
  require(op.tilt == 0.0, "Lasota-Yorke: operator must be untilted");
  LasotaYorkeResult r;
  r.alpha = alpha;
  const std::size_t n = op.states();
  const DistanceTable tab = distance_table(op, grid, alpha, threads);
  probes = std::min(probes, n);
  for (std::size_t j = 0; j < probes; ++j) {
    const std::size_t anchor = ((2 * j + 1) * n) / (2 * probes);
    VectorXd phi(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) phi(static_cast<Eigen::Index>(s)) = s == anchor ? 0.0 : tab.at(s, anchor);
    const double v0 = seminorm(tab, phi, threads);
    const double sup = phi.cwiseAbs().maxCoeff();
    for (int k = 1; k <= nmax; ++k) {
      phi = apply(op, phi, threads);
      r.table.push_back({k, j, seminorm(tab, phi, threads), v0, sup});
    }
  }
  const double reference = lasota_yorke_constant(r, 0.999);
  std::vector<double> grid_sigma;
  for (int k = 1; k <= 99; ++k) grid_sigma.push_back(k / 100.0);
  grid_sigma.push_back(0.999);
  for (double s : grid_sigma) {
    const double c = lasota_yorke_constant(r, s);
    if (c <= 2.0 * reference) {
      r.sigma = s;
      r.C = c;
      break;
    }
  }
  r.weak = r.sigma >= 0.999;
  return r;
}

double top_eigenvalue(const DiscretizedOperator& op, double tol, std::size_t max_iterations, int threads,
                      std::size_t* iterations) {
  const auto n = static_cast<Eigen::Index>(op.states());
  VectorXd v = VectorXd::Ones(n);
  double peak = 0;
  std::size_t k = 0;
  double diff = std::numeric_limits<double>::infinity();
  for (; k < max_iterations; ++k) {
    VectorXd w = apply(op, v, threads) + v;
    peak = w.maxCoeff();
    w /= peak;
    diff = (w - v).cwiseAbs().maxCoeff();
    v = std::move(w);
    if (diff < tol) break;
  }
  if (iterations) *iterations = k;
  if (!(diff < tol))
    throw NumericalError("power iteration did not converge: change " + std::to_string(diff) + " after " +
                         std::to_string(k) + " iterations");
  return peak - 1.0;
}

LdpResult ldp_rate_function(const Cocycle& a, const MarkovBase& base, const ProjectiveGrid& grid,
                            const LdpOptions& opt) {
  require(!opt.t_grid.empty(), "ldp: empty t grid");
  require(std::is_sorted(opt.t_grid.begin(), opt.t_grid.end()), "ldp: t grid must be increasing");
  for (double t : opt.t_grid) require(std::abs(t) <= 1.0, "ldp: |t| must be at most 1");
  LdpResult r;
  r.t = opt.t_grid;
  if (opt.centering) {
    r.centering = *opt.centering;
  } else if (a.dim() == 1) {
    r.centering = expected_log_det(a, base);
    r.centering_exact = true;
  } else {
    LyapunovOptions mc = opt.monte_carlo;
    mc.top_only = true;
    mc.threads = opt.threads;
    r.centering = lyapunov_spectrum(a, base, mc).exponents[0];
  }
  const int len = opt.class_length >= 0 ? opt.class_length : default_class_length(a, base);
  const DiscretizedOperator op0 = build_fiber_operator(a, base, len, grid, 0.0, r.centering, opt.threads);
  r.cell_diameter = op0.cell_diameter;
  for (double t : r.t) {
    if (t == 0.0) {
      r.c.push_back(0.0);
      r.iterations.push_back(0);
      continue;
    }
    std::size_t its = 0;
    const double lambda = top_eigenvalue(retilted(op0, t, r.centering), opt.tol, opt.max_iterations, opt.threads, &its);
    r.c.push_back(std::log(lambda));
    r.iterations.push_back(its);
  }
  const std::size_t m = r.t.size();
  if (!opt.epsilon_grid.empty()) {
    r.epsilon = opt.epsilon_grid;
  } else if (m >= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == m ? i : i + 1;
      r.epsilon.push_back((r.c[hi] - r.c[lo]) / (r.t[hi] - r.t[lo]));
    }
  }
  for (double eps : r.epsilon) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) best = std::max(best, r.t[i] * eps - r.c[i]);
    r.c_star.push_back(best);
  }
  r.derivative_at_zero = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i + 1 < m; ++i)
    if (r.t[i] == 0.0) r.derivative_at_zero = (r.c[i + 1] - r.c[i - 1]) / (r.t[i + 1] - r.t[i - 1]);
  return r;
}

void write_triplets(std::ostream& out, const DiscretizedOperator& op) {
  out << "row,col,weight\n";
  const auto precision = out.precision(17);
  for (Eigen::Index s = 0; s < op.matrix.outerSize(); ++s)
    for (SparseRowMatrix::InnerIterator it(op.matrix, s); it; ++it)
      out << s << ',' << it.col() << ',' << it.value() << '\n';
  out.precision(precision);
}

}  // namespace cocylab
