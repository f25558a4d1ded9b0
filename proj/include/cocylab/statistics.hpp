#ifndef COCYLAB_STATISTICS_HPP
#define COCYLAB_STATISTICS_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/markov_operator.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cocylab {

struct LdtOptions {
  std::vector<double> epsilons;
  std::vector<std::size_t> ns;
  std::size_t samples = 10'000;  // N per (epsilon, n)
  std::uint64_t seed = 1;
  int threads = 1;
  /// Reference value of L1; default exact for d = 1 (finite sum) and a
  /// Monte Carlo run of 10 max(n) steps per chain otherwise.
  std::optional<double> truth;
  std::size_t truth_chains = 20;
  /// Exponential tilting of the base chain for scalar observables.
  bool importance_sampling = true;
  std::size_t min_hits = 10;  // resolution floor, in samples inside the event
};

struct LdtCurve {
  double epsilon = 0.0;
  std::vector<double> frequency;  // P_n estimates, one per n
  std::vector<std::size_t> hits;  // samples inside the event
  std::vector<bool> used;         // above the resolution floor
  LinearFit fit;                  // -log P_n against epsilon^2 n
  double k_hat = 0.0;             // slope of that fit
  double rate_per_n = 0.0;        // k_hat epsilon^2, slope of -log P_n against n
  double log_C = 0.0;             // -intercept
  bool unobservable = false;
};

struct LdtReport {
  std::vector<std::size_t> n;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  double truth_stderr = 0.0;
  bool truth_exact = false;
  bool importance_sampling = false;
  std::vector<LdtCurve> curves;  // one per epsilon
  std::string note;
};

/// Deviation frequencies of n^{-1} log ||A^n|| from L1. Scalar cocycles run
/// through ldt_observable with psi = log |a|.
LdtReport ldt_experiment(const Cocycle& a, const MarkovBase& base, const LdtOptions& opt);

/// Same experiment for Birkhoff averages of psi, indexed by word_code of the
/// last `depth` symbols, against its exact mean.
LdtReport ldt_observable(const MarkovBase& base, int depth, std::span<const double> psi, const LdtOptions& opt);

/// Log of the Perron root of p_i(w) exp(t psi(w)) on classes of length
/// max(memory, depth); the cumulant generating function per step.
double observable_cumulant(const MarkovBase& base, int depth, std::span<const double> psi, double t);

/// Generator-wise B = gen exp(s E) with E a seeded Gaussian direction and s
/// the largest scale found with uniform_distance(A, B) <= radius.
Cocycle perturbed_cocycle(const Cocycle& a, const MarkovBase& base, double radius, std::uint64_t seed);

struct UniformityOptions {
  double radius = 0.01;
  std::size_t perturbations = 5;
  std::uint64_t perturbation_seed = 7;
  LdtOptions ldt;
};

struct UniformityReport {
  LdtReport center;
  std::vector<LdtReport> members;
  std::vector<double> distances;
  std::vector<bool> skipped;         // failed the bunching check
  std::vector<double> center_rate;   // per epsilon
  std::vector<double> min_rate;      // per epsilon, over members
  std::vector<double> max_log_C;     // per epsilon, over members and center
};

UniformityReport ldt_uniformity(const Cocycle& a, const MarkovBase& base, const UniformityOptions& opt);

struct CltOptions {
  std::size_t n = 10'000;
  std::size_t samples = 10'000;
  std::uint64_t seed = 1;
  int threads = 1;
  VectorXd direction;  // empty: e_1
  std::optional<double> truth;  // L1; default exact (d = 1) or Monte Carlo with 10 n steps per chain
  std::size_t truth_chains = 20;
  std::size_t max_terms = 10'000;
  double series_tol = 1e-10;
  int class_length = -1;
};

struct CltReport {
  std::size_t n = 0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  double truth_stderr = 0.0;
  std::vector<double> samples;  // (log ||A^n v|| - n L1) / sqrt(n)
  double sample_mean = 0.0;
  double sigma_hat = 0.0;
  double sigma_gl = 0.0;
  double sigma_gl2 = 0.0;
  std::size_t series_terms = 0;
  double stationary_mean = 0.0;  // of xi under the operator's stationary law
  double ks = 0.0;
  double ks_critical = 0.0;  // 1.36 / sqrt(N)
  bool ks_pass = false;
  bool degenerate = false;  // sigma_gl = 0
};

/// sigma^2 = ||phi||^2 - ||Q phi||^2 in L2(mu) with phi = sum_j Q^j psi.
/// psi is centered under mu first. Throws NumericalError when the series
/// does not fall below tol within max_terms.
double gordin_lifsic_variance(const DiscretizedOperator& op, const VectorXd& mu, const VectorXd& psi,
                              std::size_t max_terms, double tol, std::size_t* terms = nullptr, int threads = 1);

CltReport clt_experiment(const Cocycle& a, const MarkovBase& base, const ProjectiveGrid& grid, const CltOptions& opt);

struct HolderOptions {
  std::vector<double> scales;
  LyapunovOptions lyapunov;  // shared seed: common random numbers
};

struct HolderFitResult {
  std::vector<double> scales;       // decreasing
  std::vector<double> differences;  // |L1(A) - L1(B_s)|
  std::vector<double> stderrs;      // paired batch-means stderr
  std::vector<double> distances;    // uniform distance d(A, B_s)
  std::vector<std::size_t> maximizers;  // direction attaining the difference
  std::vector<bool> used;
  LinearFit fit;  // log difference against log distance
  double theta = 0.0;
  double theta_low = 0.0;
  double theta_high = 0.0;
  bool identically_zero = false;
  bool excluded_scales = false;
};

/// B_s = gen exp(s Delta_w) generator-wise; direction[w] is Delta_w.
HolderFitResult holder_fit(const Cocycle& a, const MarkovBase& base, const std::vector<MatrixXd>& direction,
                           const HolderOptions& opt);

/// Modulus of continuity: at each scale the largest difference over the
/// directions, with that direction's stderr and distance.
HolderFitResult holder_modulus_fit(const Cocycle& a, const MarkovBase& base,
                                   const std::vector<std::vector<MatrixXd>>& directions, const HolderOptions& opt);

/// Gaussian directions of unit Frobenius norm, one matrix per generator.
std::vector<std::vector<MatrixXd>> random_directions(const Cocycle& a, std::size_t count, std::uint64_t seed);

/// Two-sided Kolmogorov-Smirnov distance of samples to N(0, sigma^2).
double ks_statistic(std::vector<double> samples, double sigma);

}  // namespace cocylab

#endif  // COCYLAB_STATISTICS_HPP
