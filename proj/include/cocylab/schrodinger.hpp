#ifndef COCYLAB_SCHRODINGER_HPP
#define COCYLAB_SCHRODINGER_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/statistics.hpp"

#include <string>
#include <vector>

namespace cocylab {

/// v is indexed by word_code of the last `depth` symbols.
struct SchrodingerSpec {
  int symbols = 2;
  int depth = 1;
  std::vector<double> potential;
  double lambda = 0.0;
  double energy = 0.0;

  /// arccos(E / 2); throws ValidationError("elliptic frame undefined") when |E| >= 2.
  double kappa() const;
};

MatrixXd rotation_frame(double theta);   // R_theta
MatrixXd nilpotent_frame(double theta);  // N_theta = [[sin, cos], [0, 0]]
MatrixXd conjugator(double kappa);       // M = [[1, -cos], [0, sin]]
MatrixXd conjugator_inverse(double kappa);

/// gen(w) = [[E - lambda v(w), -1], [1, 0]].
Cocycle build_schrodinger(const SchrodingerSpec& s);

/// gen(w) = R_kappa - (lambda v(w) / sin kappa) N_kappa = M S(w) M^{-1}.
Cocycle conjugated_cocycle(const SchrodingerSpec& s);

/// Largest entrywise gap between the closed form and M S M^{-1}.
double conjugation_defect(const SchrodingerSpec& s);

struct TraceRow {
  double lambda = 0.0;
  double trace = 0.0;
  double residual = 0.0;     // |tr - 2 cos(n kappa) - lambda sin(n kappa) sum V_j|
  double first_order = 0.0;  // (tr - 2 cos(n kappa)) / lambda
};

struct TraceCheck {
  int n = 0;
  double kappa = 0.0;
  double sum_v = 0.0;       // sum of V_j = -v_j / sin kappa
  double predicted = 0.0;   // sin(n kappa) sum V_j
  std::vector<TraceRow> rows;
  LinearFit fit;            // log residual against log lambda, nonzero lambda only
  double slope = 0.0;
  bool degenerate = false;  // |sin(n kappa)| below 1e-8
};

/// The word carries n + depth - 1 symbols; step j reads word[j .. j + depth - 1].
TraceCheck trace_formula_check(const SchrodingerSpec& s, const std::vector<int>& word,
                               const std::vector<double>& lambdas);

struct ScanCell {
  double energy = 0.0;
  double lambda = 0.0;
  double l1 = 0.0;
  double stderr_ = 0.0;
  bool positive = false;  // l1 > 3 stderr and l1 > 1e-10; otherwise indeterminate
};

struct ScanRowFit {
  double lambda = 0.0;
  double center = 0.0;  // energy at which the fit is taken
  HolderFitResult fit;
  bool available = false;
  std::string note;
  double max_adjacent_jump = 0.0;  // max |L1(E_i+1) - L1(E_i)| along the row
  double envelope = 0.0;           // C (grid step)^theta from the fit
};

struct ScanReport {
  double mean_potential = 0.0;  // exact integral of v
  std::vector<double> energies;
  std::vector<double> lambdas;
  std::vector<ScanCell> cells;  // lambda-major
  std::vector<ScanRowFit> rows;
  bool all_positive = false;
};

struct ScanOptions {
  double delta = 0.5;
  double energy_step = 0.05;
  std::vector<double> lambdas;  // default: log-spaced 1e-3 .. 1e-1, 5 values
  std::vector<double> energies;  // default: -(2 - delta) .. 2 - delta by energy_step
  LyapunovOptions lyapunov;      // shared by every cell
  bool holder_rows = true;
  std::vector<double> holder_scales = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
};

/// Throws ValidationError when the integral of v vanishes (relative to max |v|).
ScanReport positivity_scan(const SchrodingerSpec& s, const MarkovBase& base, const ScanOptions& opt);

/// Exact integral of v under the base measure.
double mean_potential(const SchrodingerSpec& s, const MarkovBase& base);

enum class MonodromyClass { hyperbolic, elliptic, parabolic };
const char* to_string(MonodromyClass c);

struct PeriodicEntry {
  Word block;
  double trace = 0.0;
  MonodromyClass kind = MonodromyClass::elliptic;
  double angle = 0.0;             // rotation angle of an elliptic monodromy
  bool excluded_order = false;    // 2 cos(angle) hits the excluded set
};

struct PeriodicReport {
  std::vector<PeriodicEntry> entries;
  bool has_hyperbolic = false;
  bool has_usable_elliptic = false;
  bool criterion = false;  // both of the above
};

inline constexpr double kParabolicTolerance = 1e-9;

/// Every cyclically legal primitive block up to rotation with period
/// <= max_period (at most 12), shortest first then lexicographic.
PeriodicReport periodic_classification(const SchrodingerSpec& s, const MarkovBase& base, int max_period);

}  // namespace cocylab

#endif  // COCYLAB_SCHRODINGER_HPP
