#ifndef COCYLAB_TYPICALITY_HPP
#define COCYLAB_TYPICALITY_HPP

#include "cocylab/holonomy.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace cocylab {

struct TypicalityTolerances {
  double pinch = 1e-6;           // relative gap between distinct moduli
  double twist = 1e-8;           // |minor| over the product of its row norms
  double max_condition = 1e8;    // eigenbasis condition number
  std::size_t minor_budget = 10'000'000;
};

struct PinchingResult {
  bool pass = false;
  double gap = 0.0;           // min difference between k-fold products of moduli
  double relative_gap = 0.0;  // gap / largest product
  std::vector<std::complex<double>> eigenvalues;  // of the matrix itself, by decreasing modulus
  std::vector<double> moduli;                     // k-fold products, decreasing
};

struct TwistingResult {
  bool pass = false;
  double min_minor = 0.0;   // normalized
  std::size_t minors = 0;   // number of square minors checked
};

/// Pinching of the k-th exterior power of m.
PinchingResult pinching_of_matrix(const MatrixXd& m, int k = 1, const TypicalityTolerances& tol = {});
/// Every square minor of g, each divided by the product of the row norms of
/// its submatrix. Throws BudgetError past tol.minor_budget minors.
TwistingResult twisting_of_matrix(const MatrixXd& g, const TypicalityTolerances& tol = {});
/// Number of square minors of an n x n matrix, sum_r C(n, r)^2.
std::size_t minor_count(int n);

/// A^q(a) along the periodic point of block.
MatrixXd periodic_product(const Cocycle& a, const MarkovBase& base, const Word& block);

PinchingResult pinching_check(const Cocycle& a, const MarkovBase& base, const Word& block, int k = 1,
                              const TypicalityTolerances& tol = {});

/// g = E^{-1} psi E in the real eigenbasis E of A^q(a), lifted to the k-th
/// exterior power. Throws NumericalError "ill-conditioned eigenbasis".
TwistingResult twisting_check(const HolonomySolver& solver, const Word& block, const Word& bridge, int k = 1,
                              const TypicalityTolerances& tol = {});

struct TypicalityCertificate {
  Word block;
  Word bridge;
  int q = 0;
  int l = 0;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> moduli;
  MatrixXd eigenbasis;
  MatrixXd g;
  double min_gap = 0.0;    // relative, over all k
  double min_minor = 0.0;  // normalized, over all k
  std::vector<bool> pinching;  // per k = 1..d-1
  std::vector<bool> twisting;
  bool pass = false;
};

/// Full check of one (block, bridge) pair for k = 1..d-1.
TypicalityCertificate certify(const HolonomySolver& solver, const Word& block, const Word& bridge,
                              const TypicalityTolerances& tol = {});

struct WitnessSearch {
  int max_block = 4;
  int max_bridge = 4;
  std::size_t budget = 10'000;  // candidate (block, bridge) pairs
  int threads = 1;
};

/// Blocks by increasing length then lexicographically, bridges likewise;
/// returns the first passing certificate in that order.
std::optional<TypicalityCertificate> find_typical_witness(const HolonomySolver& solver, const WitnessSearch& search = {},
                                                          const TypicalityTolerances& tol = {});

}  // namespace cocylab

#endif  // COCYLAB_TYPICALITY_HPP
