#include "cocylab/schrodinger.hpp"

#include "cocylab/typicality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cocylab {

namespace {

void check_spec(const SchrodingerSpec& s) {
  require(s.symbols >= 1 && s.depth >= 1, "schrodinger: symbols and depth must be positive");
  require(s.potential.size() == ipow(static_cast<std::size_t>(s.symbols), s.depth),
          "schrodinger: potential needs symbols^depth values");
  for (double v : s.potential) require(std::isfinite(v), "schrodinger: potential must be finite");
  require(std::isfinite(s.lambda) && std::isfinite(s.energy), "schrodinger: lambda and E must be finite");
}

bool is_primitive_block(const std::vector<int>& b) {
  const std::size_t q = b.size();
  for (std::size_t p = 1; p < q; ++p) {
    if (q % p) continue;
    bool periodic = true;
    for (std::size_t i = p; i < q && periodic; ++i) periodic = b[i] == b[i - p];
    if (periodic) return false;
  }
  return true;
}

bool is_min_rotation(const std::vector<int>& b) {
  const std::size_t q = b.size();
  for (std::size_t r = 1; r < q; ++r)
    for (std::size_t i = 0; i < q; ++i) {
      const int x = b[(i + r) % q];
      if (x < b[i]) return false;
      if (x > b[i]) break;
    }
  return true;
}

}  // namespace

double SchrodingerSpec::kappa() const {
  if (!(std::abs(energy) < 2.0)) throw ValidationError("elliptic frame undefined");
  return std::acos(energy / 2.0);
}

MatrixXd rotation_frame(double t) {
  MatrixXd r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

MatrixXd nilpotent_frame(double t) {
  MatrixXd n(2, 2);
  n << std::sin(t), std::cos(t), 0.0, 0.0;
  return n;
}

MatrixXd conjugator(double k) {
  MatrixXd m(2, 2);
  m << 1.0, -std::cos(k), 0.0, std::sin(k);
  return m;
}

MatrixXd conjugator_inverse(double k) {
  MatrixXd m(2, 2);
  m << 1.0, std::cos(k) / std::sin(k), 0.0, 1.0 / std::sin(k);
  return m;
}

Cocycle build_schrodinger(const SchrodingerSpec& s) {
  check_spec(s);
  std::vector<MatrixXd> gens;
  for (double v : s.potential) {
    MatrixXd g(2, 2);
    g << s.energy - s.lambda * v, -1.0, 1.0, 0.0;
    gens.push_back(g);
  }
  return Cocycle(s.symbols, s.depth, std::move(gens));
}

Cocycle conjugated_cocycle(const SchrodingerSpec& s) {
  check_spec(s);
  const double k = s.kappa();
  const MatrixXd r = rotation_frame(k);
  const MatrixXd n = nilpotent_frame(k);
  std::vector<MatrixXd> gens;
  for (double v : s.potential) gens.push_back(r - (s.lambda * v / std::sin(k)) * n);
  return Cocycle(s.symbols, s.depth, std::move(gens));
}

double conjugation_defect(const SchrodingerSpec& s) {
  const double k = s.kappa();
  const Cocycle plain = build_schrodinger(s);
  const Cocycle tilde = conjugated_cocycle(s);
  const MatrixXd m = conjugator(k), mi = conjugator_inverse(k);
  double worst = 0;
  for (std::size_t w = 0; w < plain.size(); ++w)
    worst = std::max(worst, (m * plain.generator(w) * mi - tilde.generator(w)).cwiseAbs().maxCoeff());
  return worst;
}

TraceCheck trace_formula_check(const SchrodingerSpec& spec, const std::vector<int>& word,
                               const std::vector<double>& lambdas) {
  check_spec(spec);
  const int n = static_cast<int>(word.size()) - spec.depth + 1;
  require(n >= 1, "trace check: word shorter than depth");
  require(!lambdas.empty(), "trace check: no lambda values");
  for (int x : word) require(x >= 0 && x < spec.symbols, "trace check: symbol out of range");
  TraceCheck out;
  out.n = n;
  out.kappa = spec.kappa();
  const double sk = std::sin(out.kappa);
  for (int j = 0; j < n; ++j) {
    const auto code = word_code(std::span<const int>(word).subspan(static_cast<std::size_t>(j),
                                                                  static_cast<std::size_t>(spec.depth)),
                                spec.symbols);
    out.sum_v += -spec.potential[code] / sk;
  }
  const double nk = static_cast<double>(n) * out.kappa;
  out.predicted = std::sin(nk) * out.sum_v;
  out.degenerate = std::abs(std::sin(nk)) < 1e-8;
  std::vector<double> x, y;
  for (double lam : lambdas) {
    SchrodingerSpec s = spec;
    s.lambda = lam;
    const MatrixXd p = conjugated_cocycle(s).word_product(word);
    TraceRow row;
    row.lambda = lam;
    row.trace = p.trace();
    row.residual = std::abs(row.trace - 2.0 * std::cos(nk) - lam * out.predicted);
    row.first_order = lam != 0.0 ? (row.trace - 2.0 * std::cos(nk)) / lam : out.predicted;
    out.rows.push_back(row);
    if (lam != 0.0 && row.residual > 0.0) {
      x.push_back(std::log(std::abs(lam)));
      y.push_back(std::log(row.residual));
    }
  }
  out.fit = fit_line(x, y);
  out.slope = out.fit.slope;
  return out;
}

double mean_potential(const SchrodingerSpec& s, const MarkovBase& base) {
  check_spec(s);
  require(base.symbols() == s.symbols, "schrodinger: base and potential disagree on the symbol count");
  double m = 0;
  for_each_legal_word(base, s.depth, [&](std::span<const int> w) {
    m += base.cylinder_measure(w) * s.potential[word_code(w, s.symbols)];
  });
  return m;
}

ScanReport positivity_scan(const SchrodingerSpec& spec, const MarkovBase& base, const ScanOptions& opt) {
  ScanReport r;
  r.mean_potential = mean_potential(spec, base);
  double vmax = 0;
  for (double v : spec.potential) vmax = std::max(vmax, std::abs(v));
  if (std::abs(r.mean_potential) <= 1e-12 * vmax)
    throw ValidationError("mean of the potential is 0: the positivity criterion does not apply");
  require(opt.delta > 0.0 && opt.delta < 2.0, "scan: delta must lie in (0, 2)");
  require(opt.energy_step > 0.0, "scan: energy step must be positive");
  r.lambdas = opt.lambdas;
  if (r.lambdas.empty())
    for (int i = 0; i < 5; ++i) r.lambdas.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  r.energies = opt.energies;
  if (r.energies.empty()) {
    const double top = 2.0 - opt.delta;
    const auto steps = static_cast<int>(std::floor(2.0 * top / opt.energy_step + 1e-9));
    for (int i = 0; i <= steps; ++i) r.energies.push_back(std::round((-top + i * opt.energy_step) * 1e9) / 1e9);
  }
  for (double e : r.energies) require(std::abs(e) <= 2.0 - opt.delta + 1e-12, "scan: |E| must be at most 2 - delta");

  r.all_positive = true;
  for (double lam : r.lambdas) {
    std::vector<double> row_l1;
    for (double e : r.energies) {
      SchrodingerSpec s = spec;
      s.lambda = lam;
      s.energy = e;
      // Same exponent as S (constant conjugation), with O(lambda) increments.
      const auto est = lyapunov_spectrum(conjugated_cocycle(s), base, opt.lyapunov);
      ScanCell c;
      c.energy = e;
      c.lambda = lam;
      c.l1 = est.exponents.front();
      c.stderr_ = est.stderrs.front();
      // The floor absorbs rounding in orthogonal products, where L1 = 0.
      c.positive = c.l1 > 3.0 * c.stderr_ && c.l1 > 1e-10;
      r.all_positive = r.all_positive && c.positive;
      r.cells.push_back(c);
      row_l1.push_back(c.l1);
    }
    if (!opt.holder_rows) continue;
    ScanRowFit rf;
    rf.lambda = lam;
    rf.center = r.energies[r.energies.size() / 2];
    for (std::size_t i = 1; i < row_l1.size(); ++i)
      rf.max_adjacent_jump = std::max(rf.max_adjacent_jump, std::abs(row_l1[i] - row_l1[i - 1]));
    SchrodingerSpec s = spec;
    s.lambda = lam;
    s.energy = rf.center;
    const Cocycle a = build_schrodinger(s);
    // S(E + h) = S(E) exp(h S^{-1} e1 e1^T); the exponent is nilpotent.
    std::vector<MatrixXd> dir;
    for (std::size_t w = 0; w < a.size(); ++w) {
      MatrixXd e11 = MatrixXd::Zero(2, 2);
      e11(0, 0) = 1.0;
      dir.push_back(a.inverse(w) * e11);
    }
    HolderOptions ho;
    ho.scales = opt.holder_scales;
    ho.lyapunov = opt.lyapunov;
    try {
      rf.fit = holder_fit(a, base, dir, ho);
      rf.available = !rf.fit.identically_zero && std::isfinite(rf.fit.theta);
      if (rf.available) {
        const double step = r.energies.size() > 1 ? std::abs(r.energies[1] - r.energies[0]) : opt.energy_step;
        SchrodingerSpec t = s;
        t.energy = s.energy + step;
        const double dist = uniform_distance(a, build_schrodinger(t), base);
        rf.envelope = std::exp(rf.fit.fit.intercept) * std::pow(dist, rf.fit.theta);
      } else {
        rf.note = rf.fit.identically_zero ? "identically zero" : "too few resolved scales";
      }
    } catch (const ValidationError& e) {
      rf.note = e.what();
    }
    r.rows.push_back(std::move(rf));
  }
  return r;
}

const char* to_string(MonodromyClass c) {
  switch (c) {
    case MonodromyClass::hyperbolic: return "hyperbolic";
    case MonodromyClass::elliptic: return "elliptic";
    case MonodromyClass::parabolic: return "parabolic";
  }
  return "?";
}

PeriodicReport periodic_classification(const SchrodingerSpec& spec, const MarkovBase& base, int max_period) {
  check_spec(spec);
  require(max_period >= 1 && max_period <= 12, "periodic classification: max period must lie in [1, 12]");
  require(base.symbols() == spec.symbols, "schrodinger: base and potential disagree on the symbol count");
  const Cocycle a = build_schrodinger(spec);
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
  const double excluded[] = {-2.0, -r3, -r2, -1.0, 0.0, 1.0, r2, r3, 2.0};
  PeriodicReport out;
  for (int q = 1; q <= max_period; ++q) {
    const std::size_t count = ipow(static_cast<std::size_t>(spec.symbols), q);
    for (std::size_t code = 0; code < count; ++code) {
      const auto b = decode_word(code, q, spec.symbols);
      if (!is_primitive_block(b) || !is_min_rotation(b) || !base.allows_cyclic(b)) continue;
      PeriodicEntry e;
      e.block.symbols = b;
      e.trace = periodic_product(a, base, e.block).trace();
      const double gap = std::abs(e.trace) - 2.0;
      if (std::abs(gap) < kParabolicTolerance) {
        e.kind = MonodromyClass::parabolic;
      } else if (gap > 0) {
        e.kind = MonodromyClass::hyperbolic;
        out.has_hyperbolic = true;
      } else {
        e.kind = MonodromyClass::elliptic;
        e.angle = std::acos(e.trace / 2.0);
        for (double x : excluded) e.excluded_order = e.excluded_order || std::abs(e.trace - x) < kParabolicTolerance;
        out.has_usable_elliptic = out.has_usable_elliptic || !e.excluded_order;
      }
      out.entries.push_back(std::move(e));
    }
  }
  out.criterion = out.has_hyperbolic && out.has_usable_elliptic;
  return out;
}

}  // namespace cocylab
