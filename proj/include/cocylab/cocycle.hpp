#ifndef COCYLAB_COCYCLE_HPP
#define COCYLAB_COCYCLE_HPP

#include "cocylab/common.hpp"
#include "cocylab/symbolic.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cocylab {

/// All k-element subsets of {0, ..., n-1} in lexicographic order.
std::vector<std::vector<int>> k_subsets(int n, int k);

/// k-th compound matrix: the entry (I, J) is the minor det M[I, J], with the
/// k-subsets I, J in lexicographic order. It is the matrix of the induced map
/// on the k-th exterior power in the basis e_I.
template <typename Derived>
Mat<typename Derived::Scalar> compound_matrix(const Eigen::MatrixBase<Derived>& m, int k) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() == m.cols(), "compound matrix needs a square matrix");
  const int n = static_cast<int>(m.rows());
  require(k >= 1 && k <= n, "exterior power k must lie in [1, d]");
  const auto subsets = k_subsets(n, k);
  const auto size = static_cast<Eigen::Index>(subsets.size());
  Mat<Scalar> out(size, size);
  Mat<Scalar> sub(k, k);
  for (Eigen::Index r = 0; r < size; ++r) {
    for (Eigen::Index c = 0; c < size; ++c) {
      const auto& rows = subsets[static_cast<std::size_t>(r)];
      const auto& cols = subsets[static_cast<std::size_t>(c)];
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sub(i, j) = m(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      out(r, c) = k == 1 ? sub(0, 0) : sub.determinant();
    }
  }
  return out;
}

/// Operator 2-norm through the largest eigenvalue of X^T X; even in X, so
/// ||X|| and ||-X|| agree bit for bit.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() == 0) return Scalar(0);
  const Mat<Scalar> gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(gram, Eigen::EigenvaluesOnly);
  using std::sqrt;
  return sqrt(std::max(es.eigenvalues().maxCoeff(), Scalar(0)));
}

/// ||M|| ||M^{-1}|| = sigma_max / sigma_min.
template <typename Derived>
typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& m) {
  Eigen::JacobiSVD<Mat<typename Derived::Scalar>> svd(m);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

/// Locally constant linear cocycle over the shift. A(x) depends on the
/// coordinates x_{lead-depth+1}, ..., x_{lead}; lead = 0 means A reads the
/// last `depth` symbols of the past, lead > 0 lets it look into the future.
/// Generators are indexed by word_code of that window.
template <typename Scalar>
class MatrixCocycle {
 public:
  using Matrix = Mat<Scalar>;

  MatrixCocycle(int symbols, int depth, std::vector<Matrix> generators, double alpha = 1.0, int lead = 0)
      : symbols_(symbols), depth_(depth), lead_(lead), alpha_(alpha), gens_(std::move(generators)) {
    require(symbols >= 1, "cocycle: symbol count must be positive");
    require(depth >= 1, "cocycle: depth must be at least 1");
    require(alpha > 0.0 && alpha <= 1.0, "cocycle: Holder exponent must lie in (0, 1]");
    require(gens_.size() == ipow(static_cast<std::size_t>(symbols), depth),
            "cocycle: expected " + std::to_string(ipow(static_cast<std::size_t>(symbols), depth)) +
                " generator matrices, got " + std::to_string(gens_.size()));
    dim_ = static_cast<int>(gens_.front().rows());
    require(dim_ >= 1, "cocycle: empty matrices");
    inverses_.reserve(gens_.size());
    log_abs_det_.reserve(gens_.size());
    for (std::size_t w = 0; w < gens_.size(); ++w) {
      const Matrix& g = gens_[w];
      require(g.rows() == dim_ && g.cols() == dim_,
              "cocycle: generator " + std::to_string(w) + " is not " + std::to_string(dim_) + "x" +
                  std::to_string(dim_));
      require(g.allFinite(), "cocycle: generator " + std::to_string(w) + " is not finite");
      Eigen::FullPivLU<Matrix> lu(g);
      using std::abs;
      const Scalar det = lu.determinant();
      require(abs(det) > Scalar(0) && lu.isInvertible(),
              "cocycle: generator " + std::to_string(w) + " is singular");
      inverses_.push_back(lu.inverse());
      using std::log;
      log_abs_det_.push_back(log(abs(det)));
    }
  }

  static MatrixCocycle constant(int symbols, const Matrix& m, double alpha = 1.0) {
    return MatrixCocycle(symbols, 1, std::vector<Matrix>(static_cast<std::size_t>(symbols), m), alpha);
  }

  int symbols() const { return symbols_; }
  int dim() const { return dim_; }
  int depth() const { return depth_; }
  int lead() const { return lead_; }
  double alpha() const { return alpha_; }
  /// First coordinate read; the window is [window_lo(), lead()].
  int window_lo() const { return lead_ - depth_ + 1; }
  bool past_determined() const { return lead_ <= 0; }

  std::size_t size() const { return gens_.size(); }
  const std::vector<Matrix>& generators() const { return gens_; }
  const Matrix& generator(std::size_t code) const { return gens_[code]; }
  const Matrix& inverse(std::size_t code) const { return inverses_[code]; }
  Scalar log_abs_det(std::size_t code) const { return log_abs_det_[code]; }

  /// gen(last `depth` symbols of word); the word is taken to end at
  /// coordinate lead().
  const Matrix& evaluate(std::span<const int> word) const {
    if (word.size() < static_cast<std::size_t>(depth_))
      throw ValidationError("cocycle: word shorter than depth " + std::to_string(depth_));
    return gens_[word_code(word.subspan(word.size() - static_cast<std::size_t>(depth_)), symbols_)];
  }

  /// Code of the window of T^step x.
  std::size_t code_at(const TwoSidedWord& x, int step = 0) const {
    return word_code(x.range(step + window_lo(), step + lead_), symbols_);
  }
  /// A(T^step x).
  const Matrix& at(const TwoSidedWord& x, int step = 0) const { return gens_[code_at(x, step)]; }

  /// A^n over a finite block: word has n + depth - 1 symbols and step j reads
  /// word[j .. j + depth - 1]. Returns A(step n-1) ... A(step 0).
  Matrix word_product(std::span<const int> word) const {
    const auto n = static_cast<int>(word.size()) - depth_ + 1;
    require(n >= 0, "cocycle: block shorter than depth");
    Matrix p = Matrix::Identity(dim_, dim_);
    for (int j = 0; j < n; ++j)
      p = gens_[word_code(word.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(depth_)), symbols_)] * p;
    return p;
  }

  /// Same cocycle read on the larger window [lead - depth + 1, lead].
  MatrixCocycle widened(int depth, int lead) const {
    require(lead >= lead_ && lead - depth + 1 <= window_lo(), "cocycle: window must contain the original");
    const std::size_t count = ipow(static_cast<std::size_t>(symbols_), depth);
    std::vector<Matrix> gens;
    gens.reserve(count);
    const int offset = window_lo() - (lead - depth + 1);
    for (std::size_t code = 0; code < count; ++code) {
      const auto w = decode_word(code, depth, symbols_);
      gens.push_back(gens_[word_code(std::span<const int>(w).subspan(static_cast<std::size_t>(offset),
                                                                   static_cast<std::size_t>(depth_)),
                                     symbols_)]);
    }
    return MatrixCocycle(symbols_, depth, std::move(gens), alpha_, lead);
  }

  /// Generator-wise image f(gen) on the same window.
  template <typename F>
  MatrixCocycle transformed(F&& f) const {
    std::vector<Matrix> gens;
    gens.reserve(gens_.size());
    for (std::size_t w = 0; w < gens_.size(); ++w) gens.push_back(f(gens_[w], w));
    return MatrixCocycle(symbols_, depth_, std::move(gens), alpha_, lead_);
  }

  MatrixCocycle scaled(Scalar c) const {
    return transformed([c](const Matrix& g, std::size_t) -> Matrix { return c * g; });
  }

  MatrixCocycle with_alpha(double alpha) const {
    return MatrixCocycle(symbols_, depth_, gens_, alpha, lead_);
  }

 private:
  int symbols_;
  int depth_;
  int lead_;
  double alpha_;
  int dim_ = 0;
  std::vector<Matrix> gens_;
  std::vector<Matrix> inverses_;
  std::vector<Scalar> log_abs_det_;
};

using Cocycle = MatrixCocycle<double>;

/// Cocycle of k-th compound matrices, dimension C(d, k).
template <typename Scalar>
MatrixCocycle<Scalar> exterior_power(const MatrixCocycle<Scalar>& a, int k) {
  require(k >= 1 && k <= a.dim(), "exterior power k must lie in [1, d]");
  return a.transformed([k](const Mat<Scalar>& g, std::size_t) { return compound_matrix(g, k); });
}

struct ProductResult {
  MatrixXd log_factors;         // n x d, log R_ii of the QR step j
  MatrixXd frame;               // final orthonormal frame
  std::optional<MatrixXd> raw;  // A^n itself, n <= 50 only
};

inline constexpr std::size_t kRawProductLimit = 50;

/// QR-stabilized A^n along an explicit orbit: symbols[origin + j] is
/// coordinate 0 of T^j x. Cumulative sums of the log factors give the log
/// growth of the successive volumes of A^n.
ProductResult product(const Cocycle& a, std::span<const int> symbols, std::size_t origin, std::size_t n,
                      const MatrixXd* initial_frame = nullptr);

struct LyapunovOptions {
  std::size_t n = 100'000;     // steps per chain
  std::size_t chains = 20;     // independent orbits
  std::size_t batches = 5;     // batch means per chain
  std::uint64_t seed = 1;
  int threads = 1;
  bool top_only = false;       // vector iteration for L_1 alone
  std::size_t burn_in = kDefaultBurnIn;
};

struct LyapunovEstimate {
  std::vector<double> exponents;  // nonincreasing
  std::vector<double> stderrs;
  std::size_t n = 0;
  std::size_t chains = 0;
  std::uint64_t seed = 0;
  double log_det_average = 0.0;  // orbit average of log|det A|, same orbits
  std::vector<std::vector<double>> batch_means;  // per exponent, chain-major
};

LyapunovEstimate lyapunov_spectrum(const Cocycle& a, const MarkovBase& base, const LyapunovOptions& opt);

/// Sum over legal windows of mu[window] log|det gen(window)|.
double expected_log_det(const Cocycle& a, const MarkovBase& base);

struct FiberBunching {
  bool satisfied = false;
  int witness = 0;              // first N with sup < 1, 0 if none
  double value = 0.0;           // sup_x ||A^N|| ||A^N^{-1}|| 2^{-N alpha} at the witness
  double margin = 0.0;          // 1 - value
  std::vector<double> sup_by_n; // the sup for N = 1..(witness or Nmax)
};

/// Exact sup over legal words of length N + depth - 1 for N = 1..max_n.
FiberBunching fiber_bunching_check(const Cocycle& a, const MarkovBase& base, int max_n,
                                   std::size_t budget = 10'000'000);

/// max over legal windows of ||A - B|| + ||A^{-1} - B^{-1}||, operator norms.
double uniform_distance(const Cocycle& a, const Cocycle& b, const MarkovBase& base);
/// Same over all words (full shift).
double uniform_distance(const Cocycle& a, const Cocycle& b);

}  // namespace cocylab

#endif  // COCYLAB_COCYCLE_HPP
