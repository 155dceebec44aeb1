#include "core/linops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "core/rng.hpp"

namespace nucsel {

namespace detail {
unsigned thread_cap_impl() {
  if (const char* env = std::getenv("NUCSEL_THREADS")) {
    const long v = std::atol(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}
}  // namespace detail

// ---------------------------------------------------------------- DenseSym

DenseSym::DenseSym(Mat m) {
  require(m.rows() == m.cols(), "DenseSym: matrix must be square");
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  m_ = std::make_shared<Mat>(std::move(m));
}

bool DenseSym::is_spsd(double tol, Index guard) const {
  require(dim() <= guard, "DenseSym::is_spsd: dimension exceeds dense guard");
  if (dim() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(*m_, Eigen::EigenvaluesOnly);
  const double lam_min = es.eigenvalues().minCoeff();
  const double norm2 = es.eigenvalues().cwiseAbs().maxCoeff();
  return lam_min >= -tol * std::max(norm2, 1e-300);
}

// ---------------------------------------------------------------- SparseMat

SparseMat::SparseMat(Index rows, Index cols, const std::vector<Triplet>& triplets) {
  for (const auto& t : triplets)
    require(t.row() >= 0 && t.row() < rows && t.col() >= 0 && t.col() < cols,
            "SparseMat: triplet index out of range");
  auto m = std::make_shared<SpMat>(rows, cols);
  m->setFromTriplets(triplets.begin(), triplets.end());  // sums duplicates
  m->makeCompressed();
  m_ = std::move(m);
}

SparseMat::SparseMat(SpMat m) {
  m.makeCompressed();
  m_ = std::make_shared<SpMat>(std::move(m));
}

// ----------------------------------------------------------- LinearOperator

void LinearOperator::apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const {
  Vec y(rows());
  for (Index j = 0; j < X.cols(); ++j) {
    apply(X.col(j), y);
    Y.col(j) = y;
  }
}

Vec matvec(const LinearOperator& op, const Eigen::Ref<const Vec>& x) {
  require(x.size() == op.cols(), "matvec: dimension mismatch");
  Vec y(op.rows());
  op.apply(x, y);
  return y;
}

Mat matmat(const LinearOperator& op, const Eigen::Ref<const Mat>& X) {
  require(X.rows() == op.cols(), "matmat: dimension mismatch");
  Mat Y(op.rows(), X.cols());
  const Index bw = std::max<Index>(1, op.block_width());
  for (Index j0 = 0; j0 < X.cols(); j0 += bw) {
    const Index w = std::min(bw, X.cols() - j0);
    op.apply_block(X.middleCols(j0, w), Y.middleCols(j0, w));
  }
  return Y;
}

namespace {

class IdentityOp final : public LinearOperator {
 public:
  explicit IdentityOp(Index n) : n_(n) {}
  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override { y = x; }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y = x;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    Y = X;
  }

 private:
  Index n_;
};

class DenseSymOp final : public LinearOperator {
 public:
  explicit DenseSymOp(DenseSym m) : m_(std::move(m)) {}
  Index rows() const override { return m_.dim(); }
  Index cols() const override { return m_.dim(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y.noalias() = m_.mat() * x;
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y.noalias() = m_.mat() * x;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    Y.noalias() = m_.mat() * X;
  }
  Index block_width() const override { return 256; }

 private:
  DenseSym m_;
};

class DenseGeneralOp final : public LinearOperator {
 public:
  explicit DenseGeneralOp(std::shared_ptr<const Mat> m) : m_(std::move(m)) {}
  Index rows() const override { return m_->rows(); }
  Index cols() const override { return m_->cols(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y.noalias() = (*m_) * x;
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y.noalias() = m_->transpose() * x;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    Y.noalias() = (*m_) * X;
  }
  Index block_width() const override { return 256; }

 private:
  std::shared_ptr<const Mat> m_;
};

class DiagOp final : public LinearOperator {
 public:
  explicit DiagOp(Vec d) : d_(std::move(d)) {}
  Index rows() const override { return d_.size(); }
  Index cols() const override { return d_.size(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y = d_.cwiseProduct(x);
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    y = d_.cwiseProduct(x);
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    Y = d_.asDiagonal() * X;
  }

 private:
  Vec d_;
};

class SparseOp final : public LinearOperator {
 public:
  SparseOp(SparseMat m, bool transpose) : m_(std::move(m)), t_(transpose) {}
  Index rows() const override { return t_ ? m_.cols() : m_.rows(); }
  Index cols() const override { return t_ ? m_.rows() : m_.cols(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    if (t_)
      y.noalias() = m_.mat().transpose() * x;
    else
      y.noalias() = m_.mat() * x;
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    if (t_)
      y.noalias() = m_.mat() * x;
    else
      y.noalias() = m_.mat().transpose() * x;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    if (t_)
      Y.noalias() = m_.mat().transpose() * X;
    else
      Y.noalias() = m_.mat() * X;
  }

 private:
  SparseMat m_;
  bool t_;
};

class LowerTriOp final : public LinearOperator {
 public:
  LowerTriOp(std::shared_ptr<const Mat> m, bool transpose) : m_(std::move(m)), t_(transpose) {}
  Index rows() const override { return m_->rows(); }
  Index cols() const override { return m_->cols(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    if (t_)
      y.noalias() = m_->transpose().triangularView<Eigen::Upper>() * x;
    else
      y.noalias() = m_->triangularView<Eigen::Lower>() * x;
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    if (t_)
      y.noalias() = m_->triangularView<Eigen::Lower>() * x;
    else
      y.noalias() = m_->transpose().triangularView<Eigen::Upper>() * x;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    if (t_)
      Y.noalias() = m_->transpose().triangularView<Eigen::Upper>() * X;
    else
      Y.noalias() = m_->triangularView<Eigen::Lower>() * X;
  }
  Index block_width() const override { return 256; }

 private:
  std::shared_ptr<const Mat> m_;
  bool t_;
};

class ChainOp final : public LinearOperator {
 public:
  explicit ChainOp(std::vector<OpPtr> ops) : ops_(std::move(ops)) {
    require(!ops_.empty(), "chain_op: empty chain");
    for (size_t i = 0; i + 1 < ops_.size(); ++i)
      require(ops_[i]->cols() == ops_[i + 1]->rows(), "chain_op: dimension mismatch");
  }
  Index rows() const override { return ops_.front()->rows(); }
  Index cols() const override { return ops_.back()->cols(); }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    Vec cur = x;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      Vec next((*it)->rows());
      (*it)->apply(cur, next);
      cur = std::move(next);
    }
    y = cur;
  }
  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    Vec cur = x;
    for (const auto& op : ops_) {
      Vec next(op->cols());
      op->apply_transpose(cur, next);
      cur = std::move(next);
    }
    y = cur;
  }
  void apply_block(const Eigen::Ref<const Mat>& X, Eigen::Ref<Mat> Y) const override {
    Mat cur = X;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      Mat next((*it)->rows(), cur.cols());
      (*it)->apply_block(cur, next);
      cur = std::move(next);
    }
    Y = cur;
  }

 private:
  std::vector<OpPtr> ops_;
};

class FuncOp final : public LinearOperator {
 public:
  FuncOp(Index rows, Index cols,
         std::function<void(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)> fn)
      : rows_(rows), cols_(cols), fn_(std::move(fn)) {}
  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override { fn_(x, y); }

 private:
  Index rows_, cols_;
  std::function<void(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)> fn_;
};

}  // namespace

OpPtr identity_op(Index n) { return std::make_shared<IdentityOp>(n); }
OpPtr dense_op(DenseSym m) { return std::make_shared<DenseSymOp>(std::move(m)); }
OpPtr dense_general_op(std::shared_ptr<const Mat> m) {
  return std::make_shared<DenseGeneralOp>(std::move(m));
}
OpPtr diag_op(Vec d) { return std::make_shared<DiagOp>(std::move(d)); }
OpPtr sparse_op(SparseMat m, bool transpose) {
  return std::make_shared<SparseOp>(std::move(m), transpose);
}
OpPtr lower_triangular_op(std::shared_ptr<const Mat> m, bool transpose) {
  require(m->rows() == m->cols(), "lower_triangular_op: factor must be square");
  return std::make_shared<LowerTriOp>(std::move(m), transpose);
}
OpPtr chain_op(std::vector<OpPtr> ops) { return std::make_shared<ChainOp>(std::move(ops)); }
OpPtr func_op(Index rows, Index cols,
              std::function<void(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)> fn) {
  return std::make_shared<FuncOp>(rows, cols, std::move(fn));
}

bool verify_factored(const FactoredOperator& fo, double norm_k, int probes, uint64_t seed,
                     double tol) {
  require(fo.K && fo.C, "verify_factored: missing operator");
  Rng rng(seed, /*stream=*/0xFAC);
  const Index n = fo.K->rows();
  Vec x(n), kx(n), ctx(fo.C->cols()), cctx(n);
  for (int p = 0; p < probes; ++p) {
    rng.fill_normal(x.data(), n);
    fo.K->apply(x, kx);
    fo.C->apply_transpose(x, ctx);
    fo.C->apply(ctx, cctx);
    if ((kx - cctx).norm() > tol * norm_k * x.norm()) return false;
  }
  return true;
}

// ----------------------------------------------------------------- spectra

std::pair<Vec, Vec> diag_and_diag_sq(const DenseSym& K) {
  const Mat& m = K.mat();
  Vec d = m.diagonal();
  Vec w = m.array().square().matrix().colwise().sum().transpose();
  return {std::move(d), std::move(w)};
}

std::pair<Vec, Vec> diag_and_diag_sq(const SparseMat& K) {
  require(K.rows() == K.cols(), "diag_and_diag_sq: matrix must be square");
  const SpMat& m = K.mat();
  Vec d = Vec::Zero(K.cols());
  Vec w = Vec::Zero(K.cols());
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SpMat::InnerIterator it(m, j); it; ++it) {
      w[j] += it.value() * it.value();
      if (it.row() == j) d[j] = it.value();
    }
  }
  return {std::move(d), std::move(w)};
}

Vec top_eigenvalues(const LinearOperator& op, Index r, const EigOptions& opts) {
  require(op.rows() == op.cols(), "top_eigenvalues: operator must be square");
  const Index n = op.rows();
  require(r >= 1 && r <= n, "top_eigenvalues: rank out of range");
  const Index b = std::min<Index>(n, r + opts.block_extra);

  Rng rng(opts.seed, /*stream=*/0xE16);
  Mat X = rng.gaussian_matrix(n, b);
  {
    Eigen::HouseholderQR<Mat> qr(X);
    X = qr.householderQ() * Mat::Identity(n, b);
  }
  Vec ritz_prev = Vec::Constant(r, std::numeric_limits<double>::infinity());
  Vec ritz(r);
  Mat Y(n, b), T(b, b);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Y = matmat(op, X);
    T.noalias() = X.transpose() * Y;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (T + T.transpose()));
    for (Index i = 0; i < r; ++i) ritz[i] = es.eigenvalues()[b - 1 - i];  // descending
    if ((ritz - ritz_prev).cwiseAbs().maxCoeff() < opts.tol) return ritz;
    ritz_prev = ritz;
    Eigen::HouseholderQR<Mat> qr(Y);
    X = qr.householderQ() * Mat::Identity(n, b);
  }
  throw ConvergenceError("top_eigenvalues: subspace iteration did not converge", ritz);
}

Vec dense_eigenvalues(const DenseSym& K, Index guard) {
  require(K.dim() <= guard, "dense_eigenvalues: dimension exceeds dense guard");
  Eigen::SelfAdjointEigenSolver<Mat> es(K.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

namespace {

void deflate(Vec& x, const Vec* null_vec) {
  if (null_vec) x -= (*null_vec) * (null_vec->dot(x) / null_vec->squaredNorm());
}

// Unpreconditioned CG for SPSD op restricted to the complement of null_vec.
Vec cg_solve(const LinearOperator& op, const Vec& b, const Vec* null_vec, double tol,
             int max_iter) {
  const Index n = op.rows();
  Vec x = Vec::Zero(n);
  Vec r = b;
  deflate(r, null_vec);
  const double b_norm = r.norm();
  if (b_norm == 0.0) return x;
  Vec p = r, ap(n);
  double rs = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    op.apply(p, ap);
    deflate(ap, null_vec);
    const double p_ap = p.dot(ap);
    require(p_ap > 0, "extreme_eigenvalues: operator is singular beyond the declared null space");
    const double alpha = rs / p_ap;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    if (std::sqrt(rs_new) <= tol * b_norm) return x;
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  fail("extreme_eigenvalues: inner CG failed to converge");
}

}  // namespace

std::pair<double, double> extreme_eigenvalues(const LinearOperator& op, const Vec* null_vec,
                                              double tol, int max_iter) {
  require(op.rows() == op.cols(), "extreme_eigenvalues: operator must be square");
  const Index n = op.rows();
  Rng rng(0xC0ED, 0);

  // Power iteration for lambda_max.
  Vec v = rng.gaussian_matrix(n, 1);
  deflate(v, null_vec);
  v.normalize();
  double lam_max = 0.0;
  Vec av(n);
  for (int it = 0; it < max_iter; ++it) {
    op.apply(v, av);
    deflate(av, null_vec);
    const double lam = v.dot(av);
    const double change = std::abs(lam - lam_max);
    lam_max = lam;
    const double nrm = av.norm();
    require(nrm > 0, "extreme_eigenvalues: operator vanishes on the probe space");
    v = av / nrm;
    if (it > 2 && change <= tol * std::abs(lam_max)) break;
  }

  // Inverse power iteration for lambda_min on the image.
  Vec u = rng.gaussian_matrix(n, 1);
  deflate(u, null_vec);
  u.normalize();
  double lam_min_inv = 0.0;
  const int cg_cap = static_cast<int>(20 * n + 200);
  for (int it = 0; it < max_iter; ++it) {
    Vec w = cg_solve(op, u, null_vec, 1e-12, cg_cap);
    deflate(w, null_vec);
    const double rho = u.dot(w);  // ~ 1 / lambda_min
    const double change = std::abs(rho - lam_min_inv);
    lam_min_inv = rho;
    const double nrm = w.norm();
    require(nrm > 0, "extreme_eigenvalues: inverse iteration vanished");
    u = w / nrm;
    if (it > 2 && change <= tol * std::abs(lam_min_inv)) break;
  }
  require(lam_min_inv > 0, "extreme_eigenvalues: nonpositive inverse-power estimate");
  return {lam_max, 1.0 / lam_min_inv};
}

double condition_estimate(const LinearOperator& op, const Vec* null_vec, double tol,
                          int max_iter) {
  const auto [lam_max, lam_min] = extreme_eigenvalues(op, null_vec, tol, max_iter);
  return lam_max / lam_min;
}

}  // namespace nucsel
