#ifndef COCYLAB_MARKOV_OPERATOR_HPP
#define COCYLAB_MARKOV_OPERATOR_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/projective.hpp"
#include "cocylab/symbolic.hpp"

#include <Eigen/SparseCore>

#include <iosfwd>
#include <optional>
#include <vector>

namespace cocylab {

inline constexpr std::size_t kStateBudget = 1'000'000;

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Markov operator on (past class, projective cell) states. A past class is
/// the last `class_length` symbols, coded with the oldest most significant;
/// state index = class * cells + cell. Row s holds the kernel of s:
/// (Q phi)(s) = sum_t matrix(s, t) phi(t).
struct DiscretizedOperator {
  int symbols = 0;
  int class_length = 0;
  std::size_t classes = 0;
  std::size_t cells = 1;
  int dim = 1;
  double tilt = 0.0;
  double centering = 0.0;
  double cell_diameter = 0.0;
  SparseRowMatrix matrix;
  VectorXd xi;  // log ||A(w) rep(c)|| per state, uncentered; zero without a fiber

  std::size_t states() const { return classes * cells; }
  std::size_t state(std::size_t cls, std::size_t cell) const { return cls * cells + cell; }
};

/// max(memory, depth) + 2.
int default_class_length(const Cocycle& a, const MarkovBase& base);

/// Exact operator of the base chain on past classes of length m' >= memory.
DiscretizedOperator build_base_operator(const MarkovBase& base, int class_length, int threads = 1);

/// Fiber operator: state (w, c) moves to (w i, nearest(A(w) rep(c))) with
/// weight p_i(w) exp(t (xi(w, c) - centering)). A must read only the past
/// (lead 0) with depth <= class_length.
DiscretizedOperator build_fiber_operator(const Cocycle& a, const MarkovBase& base, int class_length,
                                         const ProjectiveGrid& grid, double tilt = 0.0, double centering = 0.0,
                                         int threads = 1);

/// Same states and targets with the tilt changed (rows rescaled).
DiscretizedOperator retilted(const DiscretizedOperator& op, double tilt, double centering);

/// Q v and Q* mu; rows are independent so the result is thread-count free.
VectorXd apply(const DiscretizedOperator& op, const VectorXd& v, int threads = 1);
VectorXd apply_adjoint(const DiscretizedOperator& op, const VectorXd& mu);

struct StationaryResult {
  VectorXd measure;
  double residual = 0.0;  // ||Q* mu - mu||_1
  std::size_t iterations = 0;
  VectorXd fiber_marginal;  // mass per cell
  /// Sum over classes of the largest mass in a 2-diameter neighbourhood of
  /// one cell; near 1 when the fiber law is a graph over the past.
  double concentration = 0.0;
  bool concentrated = false;
};

/// Lazy power iteration mu <- (mu + Q* mu) / 2 from the uniform vector.
/// Throws NumericalError when the residual stays above tol.
StationaryResult stationary_measure(const DiscretizedOperator& op, const ProjectiveGrid* grid = nullptr,
                                    double tol = 1e-10, std::size_t max_iterations = 100'000);

struct KappaReport {
  double alpha = 0.0;
  int n = 0;
  double value = 1.0;
  std::size_t past_class = 0;  // word of length max(memory, depth)
  std::size_t cell_a = 0;
  std::size_t cell_b = 0;
  std::size_t grid_size = 1;
  double cell_diameter = 0.0;
  bool convention = false;  // d = 1: empty supremum taken as 1
};

/// kappa_alpha(A^n): sup over past classes and grid pairs at sine distance
/// >= 2 cell diameters of sum_w p(w | past) (delta(A^n v, A^n v') /
/// delta(v, v'))^alpha, the sum running over every length-n word.
KappaReport kappa_alpha(const Cocycle& a, const MarkovBase& base, double alpha, int n, const ProjectiveGrid& grid,
                        int threads = 1, double budget = 2e9);

struct MixingResult {
  double sigma0 = 0.0;
  LinearFit fit;                    // log deviation against n
  std::vector<double> deviations;   // n = 0..nmax, max over probes
  std::size_t usable = 0;           // prefix above the floor
  bool resolution_floor = false;
  bool degenerate = false;          // every probe already constant
};

/// Sup-norm distance of Q^n phi to its stationary mean for each probe; the
/// rate is the exponential of the slope over the second half of the usable
/// prefix (deviations above 1e-14).
MixingResult mixing_rate(const DiscretizedOperator& op, const VectorXd& stationary,
                         const std::vector<VectorXd>& probes, int nmax, int threads = 1);

/// Class indicators of the last symbol, plus squared first coordinate of the
/// cell representative when there is a fiber.
std::vector<VectorXd> default_probes(const DiscretizedOperator& op, const ProjectiveGrid* grid);

/// max(class distance, sine distance of representatives); the class
/// distance is 2^{-i}, i the first position from the newest symbol where the
/// classes differ.
double state_distance(const DiscretizedOperator& op, const ProjectiveGrid* grid, std::size_t s, std::size_t t);

/// Discrete alpha-Holder seminorm: max difference quotient over state pairs.
double holder_seminorm(const DiscretizedOperator& op, const ProjectiveGrid* grid, const VectorXd& phi, double alpha);

struct LasotaYorkeRow {
  int n = 0;
  std::size_t probe = 0;
  double seminorm = 0.0;  // v(Q^n phi)
  double initial = 0.0;   // v(phi)
  double sup = 0.0;       // ||phi||_inf
};

struct LasotaYorkeResult {
  double alpha = 0.0;
  double sigma = 1.0;
  double C = 0.0;
  bool weak = false;  // sigma >= 0.999
  std::vector<LasotaYorkeRow> table;
};

/// Smallest C with v(Q^n phi) <= sigma^n v(phi) + C ||phi|| over the table.
double lasota_yorke_constant(const LasotaYorkeResult& r, double sigma);

/// Probes are distance^alpha to `probes` fixed states spread over the index
/// range. sigma is the smallest value on the grid 0.01, 0.02, ..., 0.99,
/// 0.999 whose constant is at most twice the constant at 0.999.
LasotaYorkeResult lasota_yorke_check(const DiscretizedOperator& op, const ProjectiveGrid* grid, double alpha,
                                     int nmax, std::size_t probes = 20, int threads = 1);

struct LdpOptions {
  std::vector<double> t_grid;            // symmetric around 0, |t| <= 1
  std::vector<double> epsilon_grid;      // empty: the slopes of c along t_grid
  std::optional<double> centering;       // default: exact for d = 1, Monte Carlo L1 otherwise
  LyapunovOptions monte_carlo;
  int class_length = -1;
  double tol = 1e-13;
  std::size_t max_iterations = 100'000;
  int threads = 1;
};

struct LdpResult {
  std::vector<double> t;
  std::vector<double> c;
  std::vector<double> epsilon;
  std::vector<double> c_star;
  double centering = 0.0;
  bool centering_exact = false;
  double derivative_at_zero = 0.0;  // central difference, NaN if 0 is not interior
  double cell_diameter = 0.0;
  std::vector<std::size_t> iterations;
};

/// Perron root of a nonnegative operator by power iteration on Q + I.
double top_eigenvalue(const DiscretizedOperator& op, double tol, std::size_t max_iterations, int threads,
                      std::size_t* iterations = nullptr);

LdpResult ldp_rate_function(const Cocycle& a, const MarkovBase& base, const ProjectiveGrid& grid,
                            const LdpOptions& opt);

/// One "row,col,weight" line per stored entry, row-major order.
void write_triplets(std::ostream& out, const DiscretizedOperator& op);

}  // namespace cocylab

#endif  // COCYLAB_MARKOV_OPERATOR_HPP
