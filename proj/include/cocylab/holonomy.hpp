#ifndef COCYLAB_HOLONOMY_HPP
#define COCYLAB_HOLONOMY_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/symbolic.hpp"

#include <vector>

namespace cocylab {

/// Constants of the geometric convergence H^n -> H^s.
struct BunchingConstants {
  double tau = 0.0;       // sup ||A^N|| ||A^-N|| 2^{-N alpha} at the witness
  int witness = 0;        // N
  double rate = 0.0;      // tau^{1/N}, the per-step factor
  double C1 = 1.0;        // ||H^{n+1} - H^n|| <= C1 rate^n d^alpha
  double beta = 0.0;      // empirical Holder exponent of x -> H_{x,y}
  double C_holder = 1.0;  // ||H - I|| <= C_holder d^beta
  double alpha = 1.0;
};

/// Fiber bunching check followed by an exhaustive probe of all local stable
/// pairs differing inside the generator window. C1 is twice the largest
/// observed Cauchy ratio (at least 1). Throws ValidationError
/// "not fiber bunched" unless the window lies in [0, lead], where every
/// stable holonomy is the identity.
BunchingConstants bunching_constants(const Cocycle& a, const MarkovBase& base, int max_n = 8,
                                     std::size_t budget = 1'000'000);

/// B(x') = A(T^{-1} x)^{-1} with x'_k = x_{-k}. B^n(x') = A^{-n}(x), so the
/// unstable holonomies of A are the stable holonomies of B.
Cocycle reflected_inverse(const Cocycle& a);

/// Time reversal of the stationary chain; same memory, same measure on
/// reversed words.
MarkovBase reversed_base(const MarkovBase& base);

struct HolonomyOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  /// x and y must agree on coordinates >= agree_from; 0 is the local
  /// stable set, larger values give the global holonomy through T^agree_from.
  int agree_from = 0;
};

struct HolonomyResult {
  MatrixXd H;
  int iterations = 0;          // n with error_bound < tol (or the cap)
  double error_bound = 0.0;    // C1 rate^n d^alpha / (1 - rate), times the transport factor
  double distance = 0.0;       // d(x, y)
  bool exact = false;          // the iterates stabilized inside the window
  std::vector<double> cauchy;  // ||H^{n+1} - H^n|| until stabilization
};

/// Holonomies of one cocycle; caches the constants for A and its reflected
/// inverse.
class HolonomySolver {
 public:
  HolonomySolver(const Cocycle& a, const MarkovBase& base, int max_n = 8);

  const Cocycle& cocycle() const { return a_; }
  const MarkovBase& base() const { return base_; }
  const BunchingConstants& stable_constants() const { return stable_; }
  const BunchingConstants& unstable_constants() const { return unstable_; }

  /// H^s_{x,y} = lim A^n(y)^{-1} A^n(x).
  HolonomyResult stable(const TwoSidedWord& x, const TwoSidedWord& y, const HolonomyOptions& opt = {}) const;
  /// H^u_{x,y} = lim A^{-n}(y)^{-1} A^{-n}(x); x and y agree on coordinates <= 0.
  HolonomyResult unstable(const TwoSidedWord& x, const TwoSidedWord& y, const HolonomyOptions& opt = {}) const;

 private:
  Cocycle a_;
  Cocycle b_;
  MarkovBase base_;
  BunchingConstants stable_;
  BunchingConstants unstable_;
};

HolonomyResult stable_holonomy(const Cocycle& a, const MarkovBase& base, const TwoSidedWord& x,
                               const TwoSidedWord& y, double tol = 1e-8);
HolonomyResult unstable_holonomy(const Cocycle& a, const MarkovBase& base, const TwoSidedWord& x,
                                 const TwoSidedWord& y, double tol = 1e-8);

/// Reference points p_i: the periodic points of reference_block(base, i).
std::vector<Word> reference_blocks(const MarkovBase& base);

/// theta(x): the past of x followed by the future of p_{x_0}.
TwoSidedWord theta(const MarkovBase& base, const std::vector<Word>& refs, const TwoSidedWord& x);

struct Reduction {
  Cocycle reduced;          // depth D + 1, lead 0
  std::vector<Word> references;
};

/// A^s(x) = H^u_{x,theta x} A(T^{-1}x) H^u_{theta(T^{-1}x),T^{-1}x}, tabulated
/// on the past window [-D, 0]. Windows that are not legal keep A(T^{-1}x).
/// Requires memory <= 1 so that theta(x) is legal.
Reduction reduce_to_past(const HolonomySolver& solver, double tol = 1e-10);

/// The conjugacy field H(x) = H^u_{x,theta x}, which satisfies
/// A^s(x) H(T^{-1}x) = H(x) A(T^{-1}x).
MatrixXd reduction_conjugacy(const HolonomySolver& solver, const std::vector<Word>& refs, const TwoSidedWord& x,
                             double tol = 1e-10);

struct TransitionMap {
  MatrixXd psi;
  Homoclinic splice;
  double error_bound = 0.0;
};

/// psi = H^s_{z',a} A^l(z) H^u_{a,z} with z the homoclinic splice of the
/// periodic point a and z' = T^l z.
TransitionMap transition_map(const HolonomySolver& solver, const Word& block, const Word& bridge,
                             double tol = 1e-10);

}  // namespace cocylab

#endif  // COCYLAB_HOLONOMY_HPP
