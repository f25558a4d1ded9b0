#include "cocylab/runner.hpp"

#include "cocylab/examples.hpp"
#include "cocylab/holonomy.hpp"
#include "cocylab/markov_operator.hpp"
#include "cocylab/schrodinger.hpp"
#include "cocylab/statistics.hpp"
#include "cocylab/typicality.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace cocylab {

namespace {

std::string type_name(const Json& j) { return j.type_name(); }

/// Typed access to one JSON object; records the resolved value of every key
/// read and rejects keys that were never read.
class Params {
 public:
  Params(const Json& j, std::string where) : where_(std::move(where)) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ValidationError(where_ + " must be an object");
    src_ = j;
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!src_.contains(key)) {
      resolved_[key] = fallback;
      used_.insert(key);
      return fallback;
    }
    return req<T>(key);
  }

  template <typename T>
  T req(const std::string& key) {
    used_.insert(key);
    if (!src_.contains(key)) throw ValidationError(where_ + ": missing required key '" + key + "'");
    const Json& v = src_.at(key);
    T out{};
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ValidationError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ValidationError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ValidationError("");
        }
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("");
        out = v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
        out = v.get<std::string>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      throw ValidationError(where_ + ": key '" + key + "' has the wrong type (" + type_name(v) + ")");
    }
    resolved_[key] = v;
    return out;
  }

  bool has(const std::string& key) const { return src_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    resolved_[key] = src_.at(key);
    return src_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : src_.items())
      if (!used_.count(k)) throw ValidationError(where_ + ": unknown key '" + k + "'");
  }

  const Json& resolved() const { return resolved_; }

 private:
  std::string where_;
  Json src_ = Json::object();
  Json resolved_ = Json::object();
  std::set<std::string> used_;
};

std::vector<double> number_list(Params& p, const std::string& key, std::vector<double> fallback) {
  return p.get<std::vector<double>>(key, std::move(fallback));
}

MatrixXd parse_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ValidationError(where + " must be a number or a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  if (cols == 0) throw ValidationError(where + " rows must be nonempty arrays");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError(where + " row " + std::to_string(r) + " has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw ValidationError(where + " entry (" + std::to_string(r) + ", " + std::to_string(c) + ") is not a number");
      m(r, c) = x.get<double>();
    }
  }
  return m;
}

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json word_json(const Word& w) { return Json(w.symbols); }

Json base_json(const MarkovBase& b) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < b.classes(); ++r) {
    Json row = Json::array();
    for (int i = 0; i < b.symbols(); ++i) row.push_back(b.prob(r, i));
    rows.push_back(row);
  }
  Json j;
  j["symbols"] = b.symbols();
  j["memory"] = b.memory();
  j["transitions"] = rows;
  return j;
}

Json cocycle_json(const Cocycle& a) {
  Json j;
  j["symbols"] = a.symbols();
  j["depth"] = a.depth();
  j["lead"] = a.lead();
  j["alpha"] = a.alpha();
  Json gens = Json::array();
  for (const auto& g : a.generators()) gens.push_back(matrix_json(g));
  j["generators"] = gens;
  return j;
}

std::optional<Example> find_example(const std::string& name) {
  for (auto& ex : examples::all())
    if (ex.name == name) return ex;
  if (name == "rotations") return examples::rotations();
  return std::nullopt;
}

Example require_example(const std::string& name) {
  auto ex = find_example(name);
  if (!ex) throw ValidationError("unknown example '" + name + "'");
  return *ex;
}

struct Setup {
  std::optional<MarkovBase> base;
  std::optional<Cocycle> cocycle;
};

Setup resolve_setup(const Json& config) {
  Setup s;
  if (config.contains("example")) {
    if (!config["example"].is_string()) throw ValidationError("config: 'example' must be a string");
    auto ex = require_example(config["example"].get<std::string>());
    s.base = ex.base;
    s.cocycle = ex.cocycle;
  }
  if (config.contains("base")) s.base = parse_base(config["base"]);
  if (config.contains("cocycle")) s.cocycle = parse_cocycle(config["cocycle"]);
  if (s.base && s.cocycle && s.base->symbols() != s.cocycle->symbols())
    throw ValidationError("config: base and cocycle disagree on the symbol count");
  return s;
}

const MarkovBase& need_base(const Setup& s) {
  if (!s.base) throw ValidationError("config: missing 'base' (or 'example')");
  return *s.base;
}

const Cocycle& need_cocycle(const Setup& s) {
  if (!s.cocycle) throw ValidationError("config: missing 'cocycle' (or 'example')");
  return *s.cocycle;
}

LyapunovOptions lyapunov_options(Params& p, std::uint64_t seed, int threads, std::size_t n = 100'000,
                                 std::size_t chains = 20) {
  LyapunovOptions o;
  o.n = p.get<std::size_t>("n", n);
  o.chains = p.get<std::size_t>("chains", chains);
  o.batches = p.get<std::size_t>("batches", 5);
  o.top_only = p.get<bool>("top_only", false);
  o.burn_in = p.get<std::size_t>("burn_in", kDefaultBurnIn);
  o.seed = seed;
  o.threads = threads;
  require(o.n >= 1 && o.chains >= 1 && o.batches >= 1, "lyapunov: n, chains and batches must be positive");
  return o;
}

ProjectiveGrid grid_for(Params& p, int d) {
  const auto std_cells = ProjectiveGrid::standard(d).size();
  const auto cells = p.get<std::size_t>("cells", std_cells);
  return ProjectiveGrid::make(d, d == 1 ? 1 : cells);
}

std::string csv_header(std::initializer_list<const char*> cols) {
  std::string s;
  for (const char* c : cols) {
    if (!s.empty()) s += ',';
    s += c;
  }
  return s + '\n';
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

// ---------------------------------------------------------------- commands

struct Context {
  const Setup& setup;
  Params& params;
  std::uint64_t seed;
  int threads;
  std::string csv;
};

Json run_lyapunov(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  const auto opt = lyapunov_options(c.params, c.seed, c.threads);
  const auto est = lyapunov_spectrum(a, base, opt);
  Json r;
  r["exponents"] = est.exponents;
  r["stderrs"] = est.stderrs;
  r["n"] = est.n;
  r["chains"] = est.chains;
  r["log_det_average"] = est.log_det_average;
  if (!opt.top_only) {
    double sum = 0, var = 0;
    for (std::size_t i = 0; i < est.exponents.size(); ++i) {
      sum += est.exponents[i];
      var += est.stderrs[i] * est.stderrs[i];
    }
    const double exact = expected_log_det(a, base);
    r["exponent_sum"] = sum;
    r["expected_log_det"] = exact;
    r["volume_identity_within_3se"] = std::abs(sum - exact) <= 3.0 * std::sqrt(var) + 1e-12;
  }
  c.csv = csv_header({"index", "exponent", "stderr"});
  for (std::size_t i = 0; i < est.exponents.size(); ++i)
    c.csv += std::to_string(i + 1) + ',' + fmt(est.exponents[i]) + ',' + fmt(est.stderrs[i]) + '\n';
  return r;
}

Json ldt_json(const LdtReport& rep) {
  Json r;
  r["n"] = rep.n;
  r["N"] = rep.samples;
  r["seed"] = rep.seed;
  r["truth"] = rep.truth;
  r["truth_stderr"] = rep.truth_stderr;
  r["truth_exact"] = rep.truth_exact;
  r["importance_sampling"] = rep.importance_sampling;
  Json curves = Json::array();
  for (const auto& c : rep.curves) {
    Json j;
    j["epsilon"] = c.epsilon;
    j["frequencies"] = c.frequency;
    j["hits"] = c.hits;
    j["used"] = c.used;
    j["k_hat"] = c.k_hat;
    j["rate_per_n"] = c.rate_per_n;
    j["log_C"] = c.log_C;
    j["r2"] = c.fit.r2;
    j["fit_points"] = c.fit.points;
    j["unobservable"] = c.unobservable;
    curves.push_back(j);
  }
  r["curves"] = curves;
  if (!rep.note.empty()) r["note"] = rep.note;
  return r;
}

void ldt_csv(std::string& csv, const std::string& label, const LdtReport& rep) {
  if (csv.empty()) csv = csv_header({"series", "epsilon", "n", "frequency", "hits", "used"});
  for (const auto& c : rep.curves)
    for (std::size_t i = 0; i < rep.n.size(); ++i)
      csv += label + ',' + fmt(c.epsilon) + ',' + std::to_string(rep.n[i]) + ',' + fmt(c.frequency[i]) + ',' +
             std::to_string(c.hits[i]) + ',' + (c.used[i] ? "1" : "0") + '\n';
}

Json run_ldt(Context& c) {
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  LdtOptions o;
  o.epsilons = number_list(p, "epsilons", {0.2});
  o.ns = p.get<std::vector<std::size_t>>("ns", {200, 400, 600, 800, 1000});
  o.samples = p.get<std::size_t>("samples", 10'000);
  o.importance_sampling = p.get<bool>("importance_sampling", true);
  o.truth_chains = p.get<std::size_t>("truth_chains", 20);
  o.min_hits = p.get<std::size_t>("min_hits", 10);
  if (p.has("truth")) o.truth = p.req<double>("truth");
  o.seed = c.seed;
  o.threads = c.threads;
  Json r;
  if (c.setup.cocycle) {
    const auto rep = ldt_experiment(*c.setup.cocycle, base, o);
    r["cocycle"] = ldt_json(rep);
    ldt_csv(c.csv, "cocycle", rep);
  }
  if (p.has("observable")) {
    Params obs(p.raw("observable"), "params.observable");
    const int depth = obs.get<int>("depth", 1);
    const auto values = obs.req<std::vector<double>>("values");
    obs.finish();
    const auto rep = ldt_observable(base, depth, values, o);
    r["observable"] = ldt_json(rep);
    ldt_csv(c.csv, "observable", rep);
  }
  if (p.has("uniformity")) {
    const auto& a = need_cocycle(c.setup);
    Params up(p.raw("uniformity"), "params.uniformity");
    UniformityOptions u;
    u.radius = up.get<double>("radius", 0.01);
    u.perturbations = up.get<std::size_t>("perturbations", 5);
    u.perturbation_seed = up.get<std::uint64_t>("perturbation_seed", 7);
    up.finish();
    u.ldt = o;
    const auto rep = ldt_uniformity(a, base, u);
    Json j;
    j["radius"] = u.radius;
    j["distances"] = rep.distances;
    j["skipped"] = rep.skipped;
    j["center_rate"] = rep.center_rate;
    j["min_rate"] = rep.min_rate;
    j["max_log_C"] = rep.max_log_C;
    Json rates = Json::array();
    for (std::size_t k = 0; k < rep.members.size(); ++k) {
      Json row = Json::array();
      for (const auto& cv : rep.members[k].curves) row.push_back(cv.rate_per_n);
      rates.push_back(row);
    }
    j["member_rates"] = rates;
    r["uniformity"] = j;
  }
  if (r.empty()) throw ValidationError("ldt: need a cocycle or params.observable");
  return r;
}

Json run_clt(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  CltOptions o;
  o.n = p.get<std::size_t>("n", 10'000);
  o.samples = p.get<std::size_t>("samples", 10'000);
  o.truth_chains = p.get<std::size_t>("truth_chains", 20);
  o.max_terms = p.get<std::size_t>("max_terms", 10'000);
  o.class_length = p.get<int>("class_length", -1);
  if (p.has("truth")) o.truth = p.req<double>("truth");
  if (p.has("direction")) {
    const auto v = p.req<std::vector<double>>("direction");
    o.direction = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  const auto grid = grid_for(p, a.dim());
  o.seed = c.seed;
  o.threads = c.threads;
  const auto rep = clt_experiment(a, base, grid, o);
  Json r;
  r["n"] = rep.n;
  r["N"] = rep.N;
  r["truth"] = rep.truth;
  r["truth_stderr"] = rep.truth_stderr;
  r["sample_mean"] = rep.sample_mean;
  r["sigma_hat"] = rep.sigma_hat;
  r["sigma_gl"] = rep.sigma_gl;
  r["sigma_gl2"] = rep.sigma_gl2;
  r["series_terms"] = rep.series_terms;
  r["stationary_mean"] = rep.stationary_mean;
  r["ks"] = rep.ks;
  r["ks_critical"] = rep.ks_critical;
  r["ks_pass"] = rep.ks_pass;
  r["degenerate"] = rep.degenerate;
  c.csv = csv_header({"sample"});
  for (double s : rep.samples) c.csv += fmt(s) + '\n';
  return r;
}

Json holder_json(const HolderFitResult& f) {
  Json r;
  r["scales"] = f.scales;
  r["differences"] = f.differences;
  r["stderrs"] = f.stderrs;
  r["distances"] = f.distances;
  r["maximizers"] = f.maximizers;
  r["used"] = f.used;
  r["theta"] = f.theta;
  r["theta_low"] = f.theta_low;
  r["theta_high"] = f.theta_high;
  r["r2"] = f.fit.r2;
  r["excluded_scales"] = f.excluded_scales;
  if (f.identically_zero) r["note"] = "identically zero";
  return r;
}

Json run_holder(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  HolderOptions o;
  o.scales = number_list(p, "scales", {1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
  o.lyapunov = lyapunov_options(p, c.seed, c.threads, 100'000, 20);
  std::vector<std::vector<MatrixXd>> dirs;
  const Json& d = p.has("direction") ? p.raw("direction") : Json("scalar");
  if (d.is_string()) {
    const auto kind = d.get<std::string>();
    if (kind == "scalar") {
      dirs.emplace_back(a.size(), MatrixXd::Identity(a.dim(), a.dim()));
    } else if (kind == "zero") {
      dirs.emplace_back(a.size(), MatrixXd::Zero(a.dim(), a.dim()));
    } else if (kind == "random") {
      const auto count = p.get<std::size_t>("directions", 8);
      require(count >= 1, "holder: directions must be positive");
      dirs = random_directions(a, count, p.get<std::uint64_t>("direction_seed", c.seed));
    } else {
      throw ValidationError("holder: direction must be 'scalar', 'zero', 'random' or a list of matrices");
    }
  } else {
    if (!d.is_array()) throw ValidationError("holder: direction must be a string or a list of matrices");
    std::vector<MatrixXd> dir;
    for (std::size_t w = 0; w < d.size(); ++w) dir.push_back(parse_matrix(d[w], "holder direction " + std::to_string(w)));
    dirs.push_back(std::move(dir));
  }
  const auto f = holder_modulus_fit(a, base, dirs, o);
  c.csv = csv_header({"scale", "difference", "stderr", "distance", "used"});
  for (std::size_t i = 0; i < f.scales.size(); ++i)
    c.csv += fmt(f.scales[i]) + ',' + fmt(f.differences[i]) + ',' + fmt(f.stderrs[i]) + ',' + fmt(f.distances[i]) +
             ',' + (f.used[i] ? "1" : "0") + '\n';
  return holder_json(f);
}

TwoSidedWord sample_window(const MarkovBase& base, std::uint64_t seed, int half) {
  const auto orbit = sample_orbit(base, static_cast<std::size_t>(2 * half + 1), seed, 200);
  const auto rec = orbit.recorded();
  return TwoSidedWord::from_range(std::vector<int>(rec.begin(), rec.end()), -half);
}

// Agrees with x above -j, differs at -j, another orbit below.
TwoSidedWord stable_partner(const MarkovBase& base, const TwoSidedWord& x, int j, std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 10'000; ++attempt) {
    const auto other = sample_window(base, CounterRng(seed).split(attempt)(), -x.lo());
    auto s = x.symbols();
    for (int k = x.lo(); k <= -j; ++k) s[static_cast<std::size_t>(k - x.lo())] = other.at(k);
    if (other.at(-j) != x.at(-j) && base.allows(s)) return TwoSidedWord::from_range(std::move(s), x.lo());
  }
  throw ValidationError("holonomy: no stable partner found; the base may be too constrained");
}

Json run_holonomy(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  const auto pairs = p.get<std::size_t>("pairs", 1000);
  const double tol = p.get<double>("tol", 1e-8);
  const int max_n = p.get<int>("max_n", 8);
  const int max_j = p.get<int>("max_split", 4);
  const int half = p.get<int>("half_window", 64);
  require(max_j >= 1 && half > max_j + a.depth(), "holonomy: need 1 <= max_split < half_window - depth");
  const HolonomySolver solver(a, base, max_n);
  const auto& k = solver.stable_constants();
  HolonomyOptions opt;
  opt.tol = tol;
  double norm_a = 0;
  for (const auto& g : a.generators()) norm_a = std::max(norm_a, spectral_norm(g));
  std::vector<double> residual(pairs, 0.0);
  std::vector<unsigned char> cauchy_ok(pairs, 1);
  std::vector<double> bound(pairs, 0.0);
  const CounterRng root(c.seed);
  parallel_for(pairs, c.threads, [&](std::size_t t) {
    const CounterRng r = root.split(t);
    const auto x = sample_window(base, r.split(0)(), half);
    const int j = 1 + static_cast<int>(t % static_cast<std::size_t>(max_j));
    const auto y = stable_partner(base, x, j, r.split(1)());
    const auto h = solver.stable(x, y, opt);
    const auto h1 = solver.stable(x.shifted(1), y.shifted(1), opt);
    residual[t] = spectral_norm(MatrixXd(a.at(y) * h.H - h1.H * a.at(x)));
    bound[t] = h.error_bound;
    for (std::size_t n = 0; n < h.cauchy.size(); ++n)
      if (h.cauchy[n] > k.C1 * std::pow(k.rate, static_cast<double>(n)) * std::pow(h.distance, k.alpha))
        cauchy_ok[t] = 0;
  });
  Json r;
  Json kj;
  kj["tau"] = k.tau;
  kj["witness"] = k.witness;
  kj["rate"] = k.rate;
  kj["C1"] = k.C1;
  kj["beta"] = k.beta;
  kj["C_holder"] = k.C_holder;
  r["constants"] = kj;
  r["pairs"] = pairs;
  r["tol"] = tol;
  r["max_residual"] = pairs ? *std::max_element(residual.begin(), residual.end()) : 0.0;
  r["residual_bound"] = 2.0 * norm_a * tol;
  r["equivariance_pass"] = r["max_residual"].get<double>() <= 2.0 * norm_a * tol;
  r["max_error_bound"] = pairs ? *std::max_element(bound.begin(), bound.end()) : 0.0;
  r["cauchy_within_fit"] = std::all_of(cauchy_ok.begin(), cauchy_ok.end(), [](unsigned char b) { return b != 0; });
  c.csv = csv_header({"pair", "residual", "error_bound"});
  for (std::size_t t = 0; t < pairs; ++t) c.csv += std::to_string(t) + ',' + fmt(residual[t]) + ',' + fmt(bound[t]) + '\n';
  return r;
}

Json run_reduce(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  const double tol = p.get<double>("tol", 1e-10);
  const HolonomySolver solver(a, base, p.get<int>("max_n", 8));
  const auto red = reduce_to_past(solver, tol);
  Json r;
  r["depth"] = red.reduced.depth();
  r["lead"] = red.reduced.lead();
  Json gens = Json::array();
  for (const auto& g : red.reduced.generators()) gens.push_back(matrix_json(g));
  r["generators"] = gens;
  Json refs = Json::array();
  for (const auto& w : red.references) refs.push_back(word_json(w));
  r["references"] = refs;
  if (p.has("lyapunov")) {
    Params lp(p.raw("lyapunov"), "params.lyapunov");
    auto o = lyapunov_options(lp, c.seed, c.threads);
    lp.finish();
    o.top_only = true;
    const auto la = lyapunov_spectrum(a, base, o);
    const auto ls = lyapunov_spectrum(red.reduced, base, o);
    const double se = std::hypot(la.stderrs[0], ls.stderrs[0]);
    Json l;
    l["L1"] = la.exponents[0];
    l["L1_stderr"] = la.stderrs[0];
    l["L1_reduced"] = ls.exponents[0];
    l["L1_reduced_stderr"] = ls.stderrs[0];
    l["difference"] = ls.exponents[0] - la.exponents[0];
    l["combined_stderr"] = se;
    l["within_3se"] = std::abs(ls.exponents[0] - la.exponents[0]) <= 3.0 * se;
    r["invariance"] = l;
  }
  c.csv = csv_header({"window", "row", "col", "value"});
  for (std::size_t w = 0; w < red.reduced.size(); ++w) {
    const auto& g = red.reduced.generator(w);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        c.csv += std::to_string(w) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' + fmt(g(i, j)) + '\n';
  }
  return r;
}

Json run_typicality(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  WitnessSearch s;
  s.max_block = p.get<int>("max_block", 4);
  s.max_bridge = p.get<int>("max_bridge", 4);
  s.budget = p.get<std::size_t>("budget", 10'000);
  s.threads = c.threads;
  TypicalityTolerances tol;
  tol.pinch = p.get<double>("pinch_tol", tol.pinch);
  tol.twist = p.get<double>("twist_tol", tol.twist);
  const HolonomySolver solver(a, base, p.get<int>("max_n", 8));
  const auto cert = find_typical_witness(solver, s, tol);
  Json r;
  r["typical"] = cert.has_value();
  if (!cert) {
    r["note"] = "no witness within the search limits";
    return r;
  }
  r["block"] = word_json(cert->block);
  r["bridge"] = word_json(cert->bridge);
  r["q"] = cert->q;
  r["l"] = cert->l;
  Json ev = Json::array();
  for (const auto& e : cert->eigenvalues) ev.push_back({e.real(), e.imag()});
  r["eigenvalues"] = ev;
  r["moduli"] = cert->moduli;
  r["eigenbasis"] = matrix_json(cert->eigenbasis);
  r["transition_in_eigenbasis"] = matrix_json(cert->g);
  r["min_relative_gap"] = cert->min_gap;
  r["min_normalized_minor"] = cert->min_minor;
  r["pinching"] = cert->pinching;
  r["twisting"] = cert->twisting;
  return r;
}

Json run_kappa(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  const auto alphas = number_list(p, "alphas", {0.25, 0.5, 1.0});
  const auto ns = p.get<std::vector<int>>("ns", {1, 2, 3, 4, 5, 6, 7, 8});
  const auto grid = grid_for(p, a.dim());
  const double budget = p.get<double>("budget", 2e9);
  Json rows = Json::array();
  double best = std::numeric_limits<double>::infinity();
  c.csv = csv_header({"alpha", "n", "kappa"});
  for (double al : alphas)
    for (int n : ns) {
      const auto k = kappa_alpha(a, base, al, n, grid, c.threads, budget);
      Json j;
      j["alpha"] = al;
      j["n"] = n;
      j["kappa"] = k.value;
      j["past_class"] = k.past_class;
      j["cell_a"] = k.cell_a;
      j["cell_b"] = k.cell_b;
      if (k.convention) j["note"] = "d = 1: empty supremum taken as 1";
      rows.push_back(j);
      best = std::min(best, k.value);
      c.csv += fmt(al) + ',' + std::to_string(n) + ',' + fmt(k.value) + '\n';
    }
  Json r;
  r["grid_size"] = grid.size();
  r["cell_diameter"] = grid.diameter();
  r["table"] = rows;
  r["min_kappa"] = best;
  r["contracting"] = best < 1.0;
  return r;
}

Json run_operator(Context& c) {
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  const bool fiber = c.setup.cocycle.has_value();
  const int d = fiber ? c.setup.cocycle->dim() : 1;
  const int len = p.get<int>("class_length",
                             fiber ? default_class_length(*c.setup.cocycle, base) : std::max(base.memory(), 1));
  const auto grid = grid_for(p, d);
  const double tilt = p.get<double>("tilt", 0.0);
  const double centering = p.get<double>("centering", 0.0);
  const int nmax = p.get<int>("mixing_steps", 200);
  const bool dump = p.get<bool>("dump", false);
  const auto op = fiber ? build_fiber_operator(*c.setup.cocycle, base, len, grid, tilt, centering, c.threads)
                        : build_base_operator(base, len, c.threads);
  Json r;
  r["states"] = op.states();
  r["classes"] = op.classes;
  r["cells"] = op.cells;
  r["class_length"] = op.class_length;
  r["nonzeros"] = static_cast<std::size_t>(op.matrix.nonZeros());
  r["cell_diameter"] = op.cell_diameter;
  if (tilt == 0.0) {
    const auto st = stationary_measure(op, fiber ? &grid : nullptr);
    r["stationary_residual"] = st.residual;
    r["stationary_iterations"] = st.iterations;
    if (op.states() <= 64) r["stationary"] = std::vector<double>(st.measure.data(), st.measure.data() + st.measure.size());
    if (fiber) {
      r["concentration"] = st.concentration;
      r["concentrated"] = st.concentrated;
    }
    const auto mix = mixing_rate(op, st.measure, default_probes(op, fiber ? &grid : nullptr), nmax, c.threads);
    Json m;
    m["sigma0"] = mix.sigma0;
    m["r2"] = mix.fit.r2;
    m["usable"] = mix.usable;
    m["resolution_floor"] = mix.resolution_floor;
    m["degenerate"] = mix.degenerate;
    r["mixing"] = m;
    if (p.has("lasota_yorke")) {
      Params lp(p.raw("lasota_yorke"), "params.lasota_yorke");
      const double alpha = lp.get<double>("alpha", 0.5);
      const int steps = lp.get<int>("steps", 8);
      const auto probes = lp.get<std::size_t>("probes", 20);
      lp.finish();
      const auto ly = lasota_yorke_check(op, fiber ? &grid : nullptr, alpha, steps, probes, c.threads);
      Json l;
      l["alpha"] = ly.alpha;
      l["sigma"] = ly.sigma;
      l["C"] = ly.C;
      l["weak"] = ly.weak;
      r["lasota_yorke"] = l;
    }
  } else {
    r["top_eigenvalue"] = top_eigenvalue(op, 1e-13, 100'000, c.threads);
  }
  if (dump) {
    std::ostringstream out;
    write_triplets(out, op);
    c.csv = out.str();
  }
  return r;
}

Json run_ldp(Context& c) {
  const auto& a = need_cocycle(c.setup);
  const auto& base = need_base(c.setup);
  auto& p = c.params;
  LdpOptions o;
  o.t_grid = number_list(p, "t_grid", {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0});
  o.epsilon_grid = number_list(p, "epsilon_grid", {});
  if (p.has("centering")) o.centering = p.req<double>("centering");
  o.class_length = p.get<int>("class_length", -1);
  o.monte_carlo.n = p.get<std::size_t>("n", 100'000);
  o.monte_carlo.chains = p.get<std::size_t>("chains", 20);
  o.monte_carlo.seed = c.seed;
  o.monte_carlo.threads = c.threads;
  o.monte_carlo.top_only = true;
  o.threads = c.threads;
  const auto grid = grid_for(p, a.dim());
  const auto res = ldp_rate_function(a, base, grid, o);
  Json r;
  r["t"] = res.t;
  r["c"] = res.c;
  r["epsilon"] = res.epsilon;
  r["c_star"] = res.c_star;
  r["centering"] = res.centering;
  r["centering_exact"] = res.centering_exact;
  r["derivative_at_zero"] = res.derivative_at_zero;
  r["cell_diameter"] = res.cell_diameter;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < res.c.size(); ++i) worst = std::min(worst, res.c[i + 1] - 2 * res.c[i] + res.c[i - 1]);
  r["min_second_difference"] = res.c.size() >= 3 ? worst : 0.0;
  c.csv = csv_header({"t", "c"});
  for (std::size_t i = 0; i < res.t.size(); ++i) c.csv += fmt(res.t[i]) + ',' + fmt(res.c[i]) + '\n';
  return r;
}

SchrodingerSpec schrodinger_spec(const Json& config) {
  SchrodingerSpec s;
  s.potential = examples::schrodinger_potential();
  if (config.contains("schrodinger")) {
    Params sp(config["schrodinger"], "schrodinger");
    s.symbols = sp.get<int>("symbols", 2);
    s.depth = sp.get<int>("depth", 1);
    s.potential = sp.get<std::vector<double>>("potential", s.potential);
    s.energy = sp.get<double>("energy", 0.0);
    s.lambda = sp.get<double>("lambda", 0.0);
    sp.finish();
  }
  return s;
}

Json run_schrodinger(Context& c, const std::string& mode, const Json& config) {
  auto& p = c.params;
  SchrodingerSpec s = schrodinger_spec(config);
  const MarkovBase base = c.setup.base ? *c.setup.base : examples::schrodinger_base();
  Json r;
  r["mode"] = mode;
  if (mode == "scan") {
    ScanOptions o;
    o.delta = p.get<double>("delta", 0.5);
    o.energy_step = p.get<double>("energy_step", 0.05);
    o.lambdas = number_list(p, "lambdas", {});
    o.energies = number_list(p, "energies", {});
    o.lyapunov = lyapunov_options(p, c.seed, c.threads, 1'000'000, 4);
    o.lyapunov.top_only = true;
    o.holder_rows = p.get<bool>("holder_rows", false);
    o.holder_scales = number_list(p, "holder_scales", o.holder_scales);
    const auto rep = positivity_scan(s, base, o);
    r["mean_potential"] = rep.mean_potential;
    r["energies"] = rep.energies;
    r["lambdas"] = rep.lambdas;
    r["all_positive"] = rep.all_positive;
    std::size_t indeterminate = 0;
    Json cells = Json::array();
    c.csv = csv_header({"E", "lambda", "L1", "stderr", "positive_flag"});
    for (const auto& cell : rep.cells) {
      Json j;
      j["E"] = cell.energy;
      j["lambda"] = cell.lambda;
      j["L1"] = cell.l1;
      j["stderr"] = cell.stderr_;
      j["positive"] = cell.positive;
      cells.push_back(j);
      indeterminate += !cell.positive;
      c.csv += fmt(cell.energy) + ',' + fmt(cell.lambda) + ',' + fmt(cell.l1) + ',' + fmt(cell.stderr_) + ',' +
               (cell.positive ? "1" : "0") + '\n';
    }
    r["indeterminate_cells"] = indeterminate;
    r["cells"] = cells;
    Json rows = Json::array();
    for (const auto& row : rep.rows) {
      Json j;
      j["lambda"] = row.lambda;
      j["center"] = row.center;
      j["available"] = row.available;
      j["fit"] = holder_json(row.fit);
      j["max_adjacent_jump"] = row.max_adjacent_jump;
      j["envelope"] = row.envelope;
      if (!row.note.empty()) j["note"] = row.note;
      rows.push_back(j);
    }
    r["holder_rows"] = rows;
  } else if (mode == "trace") {
    const auto word = p.get<std::vector<int>>("word", {0, 1, 1, 0, 1, 0, 0, 1, 1, 1});
    const auto lambdas = number_list(p, "lambdas", {0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2});
    if (!config.contains("schrodinger") || !config["schrodinger"].contains("energy")) s.energy = 0.6;
    const auto t = trace_formula_check(s, word, lambdas);
    r["n"] = t.n;
    r["kappa"] = t.kappa;
    r["sum_V"] = t.sum_v;
    r["predicted_first_order"] = t.predicted;
    r["slope"] = t.slope;
    r["r2"] = t.fit.r2;
    r["degenerate"] = t.degenerate;
    if (t.degenerate) r["note"] = "sin(n kappa) is near zero; the first-order term degenerates";
    Json rows = Json::array();
    c.csv = csv_header({"lambda", "residual", "fitted_slope"});
    for (const auto& row : t.rows) {
      Json j;
      j["lambda"] = row.lambda;
      j["trace"] = row.trace;
      j["residual"] = row.residual;
      j["first_order"] = row.first_order;
      rows.push_back(j);
      c.csv += fmt(row.lambda) + ',' + fmt(row.residual) + ',' + fmt(t.slope) + '\n';
    }
    r["rows"] = rows;
  } else if (mode == "periodic") {
    const int max_period = p.get<int>("max_period", 6);
    const auto rep = periodic_classification(s, base, max_period);
    r["has_hyperbolic"] = rep.has_hyperbolic;
    r["has_usable_elliptic"] = rep.has_usable_elliptic;
    r["criterion"] = rep.criterion;
    Json rows = Json::array();
    c.csv = csv_header({"block", "trace", "class", "angle", "excluded_order"});
    for (const auto& e : rep.entries) {
      Json j;
      std::string b;
      for (int x : e.block.symbols) b += std::to_string(x);
      j["block"] = b;
      j["trace"] = e.trace;
      j["class"] = to_string(e.kind);
      if (e.kind == MonodromyClass::elliptic) {
        j["angle"] = e.angle;
        j["excluded_order"] = e.excluded_order;
      }
      rows.push_back(j);
      c.csv += b + ',' + fmt(e.trace) + ',' + to_string(e.kind) + ',' + fmt(e.angle) + ',' +
               (e.excluded_order ? "1" : "0") + '\n';
    }
    r["entries"] = rows;
  } else {
    throw ValidationError("schrodinger: unknown mode '" + mode + "' (scan, trace, periodic)");
  }
  return r;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"lyapunov", "ldt",     "clt",      "holder", "holonomy",
                                                 "reduce",   "typicality", "kappa", "operator", "ldp",
                                                 "schrodinger"};
  return names;
}

MarkovBase parse_base(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "schrodinger") return examples::schrodinger_base();
    return require_example(j.get<std::string>()).base;
  }
  Params p(j, "base");
  if (p.has("bernoulli")) {
    const auto probs = p.req<std::vector<double>>("bernoulli");
    p.finish();
    return MarkovBase::bernoulli(probs);
  }
  const int memory = p.get<int>("memory", 1);
  const Json& rows = p.raw("transitions");
  if (!rows.is_array() || rows.empty()) throw ValidationError("base: 'transitions' must be a nonempty array of rows");
  const int symbols = p.get<int>("symbols", static_cast<int>(rows[0].is_array() ? rows[0].size() : 0));
  p.finish();
  require(symbols >= 1, "base: symbol count must be positive");
  const std::size_t expected = ipow(static_cast<std::size_t>(symbols), memory);
  if (rows.size() != expected)
    throw ValidationError("base: expected " + std::to_string(expected) + " transition rows, got " +
                          std::to_string(rows.size()));
  std::vector<double> table;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != static_cast<std::size_t>(symbols))
      throw ValidationError("transition row " + std::to_string(r) + " must have " + std::to_string(symbols) +
                            " entries");
    for (const auto& x : rows[r]) {
      if (!x.is_number()) throw ValidationError("transition row " + std::to_string(r) + " has a non-numeric entry");
      table.push_back(x.get<double>());
    }
  }
  return MarkovBase(symbols, memory, std::move(table));
}

Cocycle parse_cocycle(const Json& j) {
  if (j.is_string()) return require_example(j.get<std::string>()).cocycle;
  Params p(j, "cocycle");
  const int symbols = p.req<int>("symbols");
  const int depth = p.get<int>("depth", 1);
  const int lead = p.get<int>("lead", 0);
  const double alpha = p.get<double>("alpha", 1.0);
  const Json& g = p.raw("generators");
  p.finish();
  if (!g.is_array()) throw ValidationError("cocycle: 'generators' must be an array of matrices");
  std::vector<MatrixXd> gens;
  for (std::size_t w = 0; w < g.size(); ++w) gens.push_back(parse_matrix(g[w], "generator " + std::to_string(w)));
  return Cocycle(symbols, depth, std::move(gens), alpha, lead);
}

RunOutput run_experiment(const std::string& command, const Json& config, const RunOverrides& overrides) {
  const auto start = std::chrono::steady_clock::now();
  std::string cmd = command, mode;
  if (const auto sp = command.find(' '); sp != std::string::npos) {
    cmd = command.substr(0, sp);
    mode = command.substr(sp + 1);
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cmd) == names.end())
    throw ValidationError("unknown subcommand '" + cmd + "'");
  if (cmd == "schrodinger" && mode.empty()) {
    if (config.contains("mode") && config["mode"].is_string()) mode = config["mode"].get<std::string>();
    else throw ValidationError("schrodinger: missing mode (scan, trace, periodic)");
  }
  if (!config.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> top = {"example", "base", "cocycle", "seed", "threads", "params",
                                            "schrodinger", "mode", "output"};
  for (const auto& [k, v] : config.items())
    if (!top.count(k)) throw ValidationError("config: unknown key '" + k + "'");
  if (config.contains("output")) {
    Params out(config["output"], "output");
    out.get<std::string>("report", "");
    out.get<std::string>("csv", "");
    out.finish();
  }

  std::uint64_t seed;
  if (overrides.seed) {
    seed = *overrides.seed;
  } else if (config.contains("seed")) {
    if (!config["seed"].is_number_unsigned()) throw ValidationError("config: 'seed' must be a nonnegative integer");
    seed = config["seed"].get<std::uint64_t>();
  } else {
    seed = fresh_seed();
  }
  int threads = 1;
  if (overrides.threads) {
    threads = *overrides.threads;
  } else if (config.contains("threads")) {
    if (!config["threads"].is_number_integer()) throw ValidationError("config: 'threads' must be an integer");
    threads = config["threads"].get<int>();
  }
  require(threads >= 1, "threads must be at least 1");

  const Setup setup = resolve_setup(config);
  Params params(config.contains("params") ? config["params"] : Json(), "params");
  Context ctx{setup, params, seed, threads, {}};
  Json result;
  if (cmd == "lyapunov") result = run_lyapunov(ctx);
  else if (cmd == "ldt") result = run_ldt(ctx);
  else if (cmd == "clt") result = run_clt(ctx);
  else if (cmd == "holder") result = run_holder(ctx);
  else if (cmd == "holonomy") result = run_holonomy(ctx);
  else if (cmd == "reduce") result = run_reduce(ctx);
  else if (cmd == "typicality") result = run_typicality(ctx);
  else if (cmd == "kappa") result = run_kappa(ctx);
  else if (cmd == "operator") result = run_operator(ctx);
  else if (cmd == "ldp") result = run_ldp(ctx);
  else result = run_schrodinger(ctx, mode, config);
  params.finish();

  Json echo = config;
  echo["seed"] = seed;
  echo["threads"] = threads;
  echo["params"] = params.resolved();
  if (cmd == "schrodinger") echo["mode"] = mode;
  if (config.contains("example")) {
    Json resolved;
    if (setup.base) resolved["base"] = base_json(*setup.base);
    if (setup.cocycle) resolved["cocycle"] = cocycle_json(*setup.cocycle);
    echo["resolved"] = resolved;
  }

  RunOutput out;
  out.report["version"] = kVersion;
  out.report["command"] = cmd == "schrodinger" ? cmd + " " + mode : cmd;
  out.report["seed"] = seed;
  out.report["threads"] = threads;
  out.report["config"] = echo;
  out.report["result"] = result;
  out.report["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.csv = std::move(ctx.csv);
  return out;
}

Json numerical_content(const Json& report) {
  Json j = report;
  j.erase("wall_time");
  j.erase("threads");
  if (j.contains("config")) j["config"].erase("threads");
  return j;
}

}  // namespace cocylab
