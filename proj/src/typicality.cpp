#include "cocylab/typicality.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cocylab {

namespace {

struct Eigen2 {
  std::vector<std::complex<double>> values;  // by decreasing modulus
  MatrixXd basis;                            // real, valid when all values are real
  bool real = false;
};

Eigen2 sorted_eigen(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  const auto n = m.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
  Eigen2 out;
  out.real = true;
  out.basis.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = order[static_cast<std::size_t>(i)];
    out.values.push_back(ev(j));
    if (ev(j).imag() != 0.0) out.real = false;
    out.basis.col(i) = es.eigenvectors().col(j).real().normalized();
  }
  return out;
}

double binomial(int n, int r) {
  double c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

std::size_t minor_count(int n) {
  double total = 0;
  for (int r = 1; r <= n; ++r) total += binomial(n, r) * binomial(n, r);
  return static_cast<std::size_t>(std::llround(total));
}

PinchingResult pinching_of_matrix(const MatrixXd& m, int k, const TypicalityTolerances& tol) {
  require(m.rows() == m.cols(), "pinching needs a square matrix");
  const int d = static_cast<int>(m.rows());
  require(k >= 1 && k <= d, "exterior power k must lie in [1, d]");
  PinchingResult r;
  const Eigen2 e = sorted_eigen(m);
  r.eigenvalues = e.values;
  for (const auto& subset : k_subsets(d, k)) {
    double p = 1;
    for (int i : subset) p *= std::abs(e.values[static_cast<std::size_t>(i)]);
    r.moduli.push_back(p);
  }
  std::sort(r.moduli.begin(), r.moduli.end(), std::greater<>());
  if (r.moduli.size() == 1) {
    r.pass = true;
    return r;
  }
  r.gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < r.moduli.size(); ++i) r.gap = std::min(r.gap, r.moduli[i] - r.moduli[i + 1]);
  r.relative_gap = r.moduli.front() > 0 ? r.gap / r.moduli.front() : 0.0;
  r.pass = r.relative_gap > tol.pinch;
  return r;
}

TwistingResult twisting_of_matrix(const MatrixXd& g, const TypicalityTolerances& tol) {
  require(g.rows() == g.cols(), "twisting needs a square matrix");
  const int n = static_cast<int>(g.rows());
  if (minor_count(n) > tol.minor_budget) throw BudgetError("minor budget: " + std::to_string(minor_count(n)) + " minors");
  TwistingResult r;
  r.min_minor = std::numeric_limits<double>::infinity();
  for (int size = 1; size <= n; ++size) {
    const auto subsets = k_subsets(n, size);
    for (const auto& rows : subsets)
      for (const auto& cols : subsets) {
        const MatrixXd sub = g(rows, cols);
        const double norms = sub.rowwise().norm().prod();
        const double v = norms > 0 ? std::abs(sub.determinant()) / norms : 0.0;
        r.min_minor = std::min(r.min_minor, v);
        ++r.minors;
      }
  }
  r.pass = r.min_minor > tol.twist;
  return r;
}

MatrixXd periodic_product(const Cocycle& a, const MarkovBase& base, const Word& block) {
  const int q = static_cast<int>(block.size());
  const int reps = (a.depth() + 1) / q + 3;
  const TwoSidedWord pa = periodic_word(base, block, reps);
  MatrixXd p = MatrixXd::Identity(a.dim(), a.dim());
  for (int j = 0; j < q; ++j) p = a.at(pa, j) * p;
  return p;
}

PinchingResult pinching_check(const Cocycle& a, const MarkovBase& base, const Word& block, int k,
                              const TypicalityTolerances& tol) {
  return pinching_of_matrix(periodic_product(a, base, block), k, tol);
}

namespace {

struct Frame {
  MatrixXd basis;
  Eigen2 eigen;
};

Frame pinched_frame(const MatrixXd& m, const TypicalityTolerances& tol) {
  Frame f;
  f.eigen = sorted_eigen(m);
  if (!f.eigen.real) throw ValidationError("twisting needs a pinched periodic point (real eigenvalues)");
  f.basis = f.eigen.basis;
  if (condition_number(f.basis) > tol.max_condition) throw NumericalError("ill-conditioned eigenbasis");
  return f;
}

}  // namespace

TwistingResult twisting_check(const HolonomySolver& solver, const Word& block, const Word& bridge, int k,
                              const TypicalityTolerances& tol) {
  const Cocycle& a = solver.cocycle();
  require(k >= 1 && k <= a.dim(), "exterior power k must lie in [1, d]");
  const Frame f = pinched_frame(periodic_product(a, solver.base(), block), tol);
  const MatrixXd psi = transition_map(solver, block, bridge).psi;
  const MatrixXd g = f.basis.inverse() * psi * f.basis;
  return twisting_of_matrix(k == 1 ? g : compound_matrix(g, k), tol);
}

TypicalityCertificate certify(const HolonomySolver& solver, const Word& block, const Word& bridge,
                              const TypicalityTolerances& tol) {
  const Cocycle& a = solver.cocycle();
  const int d = a.dim();
  TypicalityCertificate c;
  c.block = block;
  c.bridge = bridge;
  c.q = static_cast<int>(block.size());
  c.l = static_cast<int>(bridge.size());
  const MatrixXd m = periodic_product(a, solver.base(), block);
  if (d == 1) {
    c.eigenvalues = {m(0, 0)};
    c.moduli = {std::abs(m(0, 0))};
    c.eigenbasis = MatrixXd::Identity(1, 1);
    c.g = transition_map(solver, block, bridge).psi;
    c.pass = true;
    return c;
  }
  c.min_gap = std::numeric_limits<double>::infinity();
  c.min_minor = std::numeric_limits<double>::infinity();
  bool pinched = true;
  for (int k = 1; k < d; ++k) {
    const auto p = pinching_of_matrix(m, k, tol);
    if (k == 1) {
      c.eigenvalues = p.eigenvalues;
      for (const auto& v : p.eigenvalues) c.moduli.push_back(std::abs(v));
    }
    c.pinching.push_back(p.pass);
    c.min_gap = std::min(c.min_gap, p.relative_gap);
    pinched = pinched && p.pass;
  }
  if (!pinched) {
    c.twisting.assign(static_cast<std::size_t>(d - 1), false);
    c.min_minor = 0.0;
    return c;
  }
  const Frame f = pinched_frame(m, tol);
  c.eigenbasis = f.basis;
  const MatrixXd psi = transition_map(solver, block, bridge).psi;
  c.g = f.basis.inverse() * psi * f.basis;
  bool twisted = true;
  for (int k = 1; k < d; ++k) {
    const auto t = twisting_of_matrix(k == 1 ? c.g : compound_matrix(c.g, k), tol);
    c.twisting.push_back(t.pass);
    c.min_minor = std::min(c.min_minor, t.min_minor);
    twisted = twisted && t.pass;
  }
  c.pass = twisted;
  return c;
}

std::optional<TypicalityCertificate> find_typical_witness(const HolonomySolver& solver, const WitnessSearch& search,
                                                          const TypicalityTolerances& tol) {
  const Cocycle& a = solver.cocycle();
  const MarkovBase& base = solver.base();
  const int l = a.symbols();
  if (a.dim() == 1) return certify(solver, reference_block(base, 0), Word{}, tol);

  std::size_t used = 0;
  for (int q = 1; q <= search.max_block; ++q) {
    for (std::size_t code = 0; code < ipow(static_cast<std::size_t>(l), q); ++code) {
      const Word block{decode_word(code, q, l), Orientation::future};
      if (!base.allows_cyclic(block.symbols)) continue;
      const MatrixXd m = periodic_product(a, base, block);
      bool pinched = true;
      for (int k = 1; k < a.dim() && pinched; ++k) pinched = pinching_of_matrix(m, k, tol).pass;
      if (!pinched) continue;
      try {
        pinched_frame(m, tol);
      } catch (const NumericalError&) {
        continue;
      }
      for (int len = 1; len <= search.max_bridge; ++len) {
        std::vector<Word> bridges;
        for (std::size_t bc = 0; bc < ipow(static_cast<std::size_t>(l), len); ++bc)
          bridges.push_back(Word{decode_word(bc, len, l), Orientation::future});
        if (used + bridges.size() > search.budget) bridges.resize(search.budget - used);
        used += bridges.size();
        std::vector<std::optional<TypicalityCertificate>> found(bridges.size());
        parallel_for(bridges.size(), search.threads, [&](std::size_t i) {
          try {
            auto c = certify(solver, block, bridges[i], tol);
            if (c.pass) found[i] = std::move(c);
          } catch (const ValidationError&) {
          } catch (const NumericalError&) {
          }
        });
        for (auto& f : found)
          if (f) return f;
        if (used >= search.budget) return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

}  // namespace cocylab
