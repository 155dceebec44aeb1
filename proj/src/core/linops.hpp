// Matrix and operator substrate: dense symmetric matrices, sparse matrices,
// abstract linear operators, and the eigenvalue utilities built on them.
#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <memory>
#include <utility>

#include "core/common.hpp"

namespace nucsel {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------- DenseSym

// Dense symmetric matrix with full storage. The constructor mirrors the
// lower triangle into the upper one so that entries (i,j) and (j,i) are
// bit-identical, which keeps downstream diagonal updates exactly symmetric.
class DenseSym {
 public:
  DenseSym() : m_(std::make_shared<Mat>()) {}
  explicit DenseSym(Mat m);

  Index dim() const { return m_->rows(); }
  const Mat& mat() const { return *m_; }
  std::shared_ptr<const Mat> shared() const { return m_; }
  double operator()(Index i, Index j) const { return (*m_)(i, j); }

  // Smallest eigenvalue >= -tol * ||A||_2. Dense check, guarded by size.
  bool is_spsd(double tol = 1e-10, Index guard = 4096) const;

 private:
  std::shared_ptr<const Mat> m_;
};

// ---------------------------------------------------------------- SparseMat

// Compressed sparse matrix. Triplet assembly sums duplicate entries.
class SparseMat {
 public:
  SparseMat() : m_(std::make_shared<SpMat>()) {}
  SparseMat(Index rows, Index cols, const std::vector<Triplet>& triplets);
  explicit SparseMat(SpMat m);

  Index rows() const { return m_->rows(); }
  Index cols() const { return m_->cols(); }
  Index nnz() const { return m_->nonZeros(); }
  const SpMat& mat() const { return *m_; }
  std::shared_ptr<const SpMat> shared() const { return m_; }

  Mat dense() const { return Mat(*m_); }

 private:
  std::shared_ptr<const SpMat> m_;
};

// ----------------------------------------------------------- LinearOperator

class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  // y = A x. Implementations must be deterministic: identical input bits
  // yield identical output bits within one build.
  virtual void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const = 0;

  // y = A' x. Only some operators support it; symmetric ones get it free.
  virtual void apply_transpose(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>) const {
    fail("apply_transpose: unsupported for this operator");
  }

  // Y = A X, processed in column chunks of block_width(). The default
  // forwards to apply per column; subclasses may batch, and must agree with
  // the per-column path to 1e-12 relative.
  virtual void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const;

  virtual Index block_width() const { return 32; }
};

using OpPtr = std::shared_ptr<const LinearOperator>;

// Checked conveniences.
Vec matvec(const LinearOperator& op, const Eigen::Ref<const Vec>& x);
Mat matmat(const LinearOperator& op, const Eigen::Ref<const Mat>& X);

// Concrete operators -------------------------------------------------------

OpPtr identity_op(Index n);
OpPtr dense_op(DenseSym m);                       // symmetric; has transpose
OpPtr dense_general_op(std::shared_ptr<const Mat> m);
OpPtr diag_op(Vec d);
OpPtr sparse_op(SparseMat m, bool transpose = false);
// Lower-triangular dense factor (used for explicit C with K = C C').
OpPtr lower_triangular_op(std::shared_ptr<const Mat> m, bool transpose = false);
// Composition: ops[0] * ops[1] * ... * ops.back() (applied right to left).
OpPtr chain_op(std::vector<OpPtr> ops);
// Arbitrary callable, for tests and adapters.
OpPtr func_op(Index rows, Index cols,
              std::function<void(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)> fn);

// --------------------------------------------------------- FactoredOperator

// K together with a factor C such that K = C C'.
struct FactoredOperator {
  OpPtr K;
  OpPtr C;
  bool exact = true;

  Index dim() const { return K ? K->rows() : 0; }
};

// Spot-check ||K x - C(C' x)|| <= tol * ||K||_F * ||x|| on random probes.
// Requires C to support apply_transpose. norm_k is an estimate of ||K||_F.
bool verify_factored(const FactoredOperator& fo, double norm_k, int probes,
                     uint64_t seed, double tol = 1e-10);

// ----------------------------------------------------------------- spectra

// (Diag(K), Diag(K^2)); the second entry is the vector of squared column
// norms, valid because K is symmetric.
std::pair<Vec, Vec> diag_and_diag_sq(const DenseSym& K);
std::pair<Vec, Vec> diag_and_diag_sq(const SparseMat& K);

struct EigOptions {
  double tol = 1e-8;      // |change between iterations| per eigenvalue
  int max_iter = 2000;
  int block_extra = 4;    // block size r + block_extra
  uint64_t seed = 0x5eed;
};

// Raised when subspace iteration or the condition estimator fails to settle;
// carries the best iterate so callers can inspect how close it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Vec best)
      : Error(what), best_iterate(std::move(best)) {}
  Vec best_iterate;
};

// Top-r eigenvalues of a symmetric operator by block subspace iteration,
// sorted descending.
Vec top_eigenvalues(const LinearOperator& op, Index r, const EigOptions& opts = {});

// Full spectrum of a dense symmetric matrix, descending (guarded by size).
Vec dense_eigenvalues(const DenseSym& K, Index guard = 4096);

// {lambda_max, lambda_min} on the image of an SPSD operator, via power and
// inverse-power iteration; null_vec (if any) is deflated throughout.
std::pair<double, double> extreme_eigenvalues(const LinearOperator& op,
                                              const Vec* null_vec = nullptr, double tol = 1e-6,
                                              int max_iter = 10000);

// lambda_max / lambda_min on the image of an SPSD operator.
double condition_estimate(const LinearOperator& op, const Vec* null_vec = nullptr,
                          double tol = 1e-6, int max_iter = 10000);

}  // namespace nucsel
