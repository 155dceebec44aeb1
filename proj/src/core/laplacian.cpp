#include "core/laplacian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "core/rng.hpp"

namespace nucsel::laplacian {

namespace {

constexpr std::uint64_t kLaplacianStream = 0x1a91ace;

double frobenius(const SpMat& m) {
  double acc = 0.0;
  for (Index j = 0; j < m.outerSize(); ++j)
    for (SpMat::InnerIterator it(m, j); it; ++it) acc += it.value() * it.value();
  return std::sqrt(acc);
}

void check_connected(const SpMat& m) {
  const Index n = m.rows();
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::deque<Index> queue{0};
  seen[0] = 1;
  Index visited = 1;
  while (!queue.empty()) {
    const Index v = queue.front();
    queue.pop_front();
    for (SpMat::InnerIterator it(m, v); it; ++it) {
      const Index r = it.row();
      if (r == v || it.value() == 0.0 || seen[static_cast<size_t>(r)]) continue;
      seen[static_cast<size_t>(r)] = 1;
      ++visited;
      queue.push_back(r);
    }
  }
  require(visited == n, "RescaledLaplacian: graph is disconnected");
}

}  // namespace

RescaledLaplacian::RescaledLaplacian(SparseMat L, Vec h) : L_(std::move(L)), h_(std::move(h)) {
  const Index n = L_.rows();
  require(L_.cols() == n, "RescaledLaplacian: L must be square");
  require(h_.size() == n, "RescaledLaplacian: h dimension mismatch");
  require(n >= 2, "RescaledLaplacian: need at least two nodes");
  require((h_.array() > 0.0).all(), "RescaledLaplacian: h must be elementwise positive");
  require(std::abs(h_.norm() - 1.0) <= 1e-12, "RescaledLaplacian: h must have unit norm");

  const SpMat& A = L_.mat();
  double max_abs = 0.0;
  double max_asym = 0.0;
  for (Index j = 0; j < A.outerSize(); ++j)
    for (SpMat::InnerIterator it(A, j); it; ++it) {
      max_abs = std::max(max_abs, std::abs(it.value()));
      max_asym = std::max(max_asym, std::abs(it.value() - A.coeff(j, it.row())));
    }
  require(max_asym <= 1e-10 * std::max(max_abs, 1e-300), "RescaledLaplacian: L is not symmetric");
  require((A.diagonal().array() >= 0.0).all(), "RescaledLaplacian: diagonal must be nonnegative");
  require((A * h_).norm() <= 1e-10 * std::max(frobenius(A), 1e-300),
          "RescaledLaplacian: h is not a null vector of L");
  check_connected(A);
}

RescaledLaplacian from_rate_matrix(const SparseMat& rates, const Vec& pi) {
  const Index n = rates.rows();
  require(rates.cols() == n, "from_rate_matrix: rate matrix must be square");
  require(pi.size() == n, "from_rate_matrix: pi dimension mismatch");
  require((pi.array() > 0.0).all(), "from_rate_matrix: pi must be elementwise positive");
  require(std::abs(pi.sum() - 1.0) <= 1e-12, "from_rate_matrix: pi must sum to one");

  const SpMat& R = rates.mat();
  Vec row_sum = Vec::Zero(n);
  Vec row_abs = Vec::Zero(n);
  for (Index j = 0; j < R.outerSize(); ++j)
    for (SpMat::InnerIterator it(R, j); it; ++it) {
      const Index i = it.row();
      const double v = it.value();
      if (i != j) {
        require(v >= 0.0, "from_rate_matrix: off-diagonal rates must be nonnegative");
        const double lhs = pi[i] * v;
        const double rhs = pi[j] * R.coeff(j, i);
        require(std::abs(lhs - rhs) <= 1e-10 * std::max({std::abs(lhs), std::abs(rhs), 1.0}),
                "from_rate_matrix: detailed balance violated");
      }
      row_sum[i] += v;
      row_abs[i] += std::abs(v);
    }
  for (Index i = 0; i < n; ++i)
    require(std::abs(row_sum[i]) <= 1e-10 * std::max(row_abs[i], 1.0),
            "from_rate_matrix: generator rows must sum to zero");

  const Vec h = pi.cwiseSqrt() / pi.cwiseSqrt().norm();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(R.nonZeros()));
  for (Index j = 0; j < R.outerSize(); ++j)
    for (SpMat::InnerIterator it(R, j); it; ++it) {
      const Index i = it.row();
      // L = -Diag(h) R Diag(1/h), averaged with its transpose so that the
      // residual asymmetry of the input rates does not survive.
      const double v = -0.5 * (h[i] * it.value() / h[j] + h[j] * R.coeff(j, i) / h[i]);
      if (v != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  return RescaledLaplacian(SparseMat(n, n, trips), h);
}

// ------------------------------------------------------- triangular solves

Vec lower_pinv_solve(const SpMat& R, const Eigen::Ref<const Vec>& b) {
  const Index n = R.rows();
  require(R.cols() == n && b.size() == n, "lower_pinv_solve: dimension mismatch");
  Vec y = b;
  for (Index j = 0; j < n; ++j) {
    SpMat::InnerIterator it(R, j);
    if (!it) {
      y[j] = 0.0;
      continue;
    }
    require(it.row() == j, "lower_pinv_solve: column is missing its pivot");
    y[j] /= it.value();
    const double yj = y[j];
    for (++it; it; ++it) y[it.row()] -= it.value() * yj;
  }
  return y;
}

Vec lower_pinv_solve_transpose(const SpMat& R, const Eigen::Ref<const Vec>& b) {
  const Index n = R.rows();
  require(R.cols() == n && b.size() == n, "lower_pinv_solve_transpose: dimension mismatch");
  Vec y = b;
  for (Index j = n - 1; j >= 0; --j) {
    SpMat::InnerIterator it(R, j);
    if (!it) {
      y[j] = 0.0;
      continue;
    }
    require(it.row() == j, "lower_pinv_solve_transpose: column is missing its pivot");
    const double pivot = it.value();
    double acc = y[j];
    for (++it; it; ++it) acc -= it.value() * y[it.row()];
    y[j] = acc / pivot;
  }
  return y;
}

// ----------------------------------------------------------- preconditioner

namespace {

SpMat pruned(SpMat m) {
  m.prune([](Index, Index, double v) { return v != 0.0; });
  m.makeCompressed();
  return m;
}

// Shared pattern validation: lower triangular, nonnegative pivots, zero-pivot
// columns entirely empty. Returns the zero-pivot column indices.
std::vector<Index> validate_triangular(const SpMat& R, const char* who) {
  const Index n = R.rows();
  std::vector<Index> null_cols;
  for (Index j = 0; j < n; ++j) {
    SpMat::InnerIterator it(R, j);
    if (!it) {
      null_cols.push_back(j);
      continue;
    }
    require(it.row() >= j, std::string(who) + ": factor is not lower triangular");
    require(it.row() == j,
            std::string(who) + ": zero-pivot column " + std::to_string(j) +
                " must be entirely zero");
    require(it.value() > 0.0, std::string(who) + ": pivots must be positive");
    for (++it; it; ++it)
      require(it.row() > j, std::string(who) + ": factor is not lower triangular");
  }
  return null_cols;
}

}  // namespace

PreconFactor default_precon(const RescaledLaplacian& lap, PreconMode mode) {
  const Index n = lap.dim();
  PreconFactor pf;

  if (mode == PreconMode::identity) {
    SpMat eye(n, n);
    eye.setIdentity();
    pf.R = std::move(eye);
    const OpPtr lop = sparse_op(lap.matrix());
    const Vec h = lap.h();
    const auto [lam_max, lam_min] = extreme_eigenvalues(*lop, &h);
    pf.a = 1.0 / lam_max;
    pf.b = 1.0 / lam_min;
    pf.kappa = lam_max / lam_min;
    return pf;
  }

  require(n <= 5000, "default_precon: exact mode is guarded to n <= 5000");
  const SpMat& L = lap.matrix().mat();
  SpMat L11 = L.topLeftCorner(n - 1, n - 1);
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> llt(L11);
  require(llt.info() == Eigen::Success,
          "default_precon: grounded Laplacian block is not positive definite");
  const SpMat R11 = llt.matrixL();
  // Last row of the factor: with the grounded block solved exactly, the
  // trailing Schur complement of a rank-deficient Laplacian vanishes, so the
  // last pivot is structurally zero and R R' = L exactly.
  const Vec l12 = Vec(L.col(n - 1)).head(n - 1);
  const Vec r21 = R11.triangularView<Eigen::Lower>().solve(l12);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(R11.nonZeros()) + static_cast<size_t>(n));
  for (Index j = 0; j < R11.outerSize(); ++j)
    for (SpMat::InnerIterator it(R11, j); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
  for (Index j = 0; j < n - 1; ++j)
    if (r21[j] != 0.0) trips.emplace_back(static_cast<int>(n - 1), static_cast<int>(j), r21[j]);

  SpMat R(n, n);
  R.setFromTriplets(trips.begin(), trips.end());
  pf.R = pruned(std::move(R));
  pf.a = 1.0;
  pf.b = 1.0;
  pf.kappa = 1.0;
  pf.null_cols = {n - 1};
  return pf;
}

PreconFactor external_precon(const RescaledLaplacian& lap, SpMat R, double a, double b) {
  const Index n = lap.dim();
  require(R.rows() == n && R.cols() == n, "external_precon: factor dimension mismatch");
  require(a > 0.0, "external_precon: lower spectral bound must be positive");
  require(b >= a, "external_precon: spectral bounds must satisfy a <= b");

  PreconFactor pf;
  pf.R = pruned(std::move(R));
  pf.null_cols = validate_triangular(pf.R, "external_precon");
  require(pf.null_cols.size() == 1,
          "external_precon: factor must ground exactly one node (one zero-pivot column)");
  const double leak = (pf.R.transpose() * lap.h()).norm();
  require(leak <= 1e-6 * std::max(frobenius(pf.R), 1e-300),
          "external_precon: R' h does not vanish; factor is incompatible with L");
  pf.a = a;
  pf.b = b;
  pf.kappa = b / a;
  return pf;
}

// ------------------------------------------------------------ pinv via PCG

Vec pinv_matvec(const RescaledLaplacian& lap, const PreconFactor& precon,
                const Eigen::Ref<const Vec>& x, double tol) {
  const Index n = lap.dim();
  require(x.size() == n, "pinv_matvec: dimension mismatch");
  require(tol > 0.0 && tol < 1.0, "pinv_matvec: tolerance must lie in (0, 1)");
  const Vec& h = lap.h();
  const SpMat& L = lap.matrix().mat();

  Vec b = x - h * h.dot(x);
  const double bn = b.norm();
  if (bn == 0.0 || bn <= 1e-14 * x.norm()) return Vec::Zero(n);

  const auto precon_apply = [&](const Vec& r) {
    Vec zv = lower_pinv_solve_transpose(precon.R, lower_pinv_solve(precon.R, r));
    zv -= h * h.dot(zv);
    return zv;
  };

  const int cap =
      static_cast<int>(std::ceil(10.0 * std::sqrt(precon.kappa) * std::log(1.0 / tol))) + 20;
  Vec xv = Vec::Zero(n);
  Vec r = b;
  Vec z = precon_apply(r);
  Vec p = z;
  double rz = r.dot(z);
  require(rz > 0.0, "pinv_matvec: preconditioner is not positive definite on the residual");
  Vec ap(n);
  double rel = 1.0;
  for (int it = 0; it < cap; ++it) {
    ap.noalias() = L * p;
    ap -= h * h.dot(ap);
    const double p_ap = p.dot(ap);
    require(p_ap > 0.0, "pinv_matvec: Laplacian curvature vanished during PCG");
    const double alpha = rz / p_ap;
    xv += alpha * p;
    r -= alpha * ap;
    r -= h * h.dot(r);
    rel = r.norm() / bn;
    if (rel <= tol) {
      xv -= h * h.dot(xv);
      return xv;
    }
    z = precon_apply(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    p = z + beta * p;
  }
  std::ostringstream msg;
  msg << "pinv_matvec: PCG hit the iteration cap (" << cap << ") at relative residual " << rel;
  fail(msg.str());
}

DenseSym dense_pinv(const RescaledLaplacian& lap, Index guard) {
  const Index n = lap.dim();
  require(n <= guard, "dense_pinv: dimension exceeds the dense guard");
  const Vec& h = lap.h();
  Mat A = lap.matrix().dense();
  A.noalias() += h * h.transpose();
  const Eigen::LDLT<Mat> ldlt(A);
  require(ldlt.info() == Eigen::Success, "dense_pinv: shifted Laplacian factorization failed");
  Mat K = ldlt.solve(Mat::Identity(n, n));
  K.noalias() -= h * h.transpose();
  return DenseSym(0.5 * (K + K.transpose()));
}

// ----------------------------------------------------------- Chebyshev

namespace {

// log of the relative sup-norm bound; +inf where the expression is invalid.
double cheb_log_bound(Index degree, double kappa) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (kappa <= 1.0) return -kInf;
  if (degree < 1) return kInf;
  const double nd = static_cast<double>(degree);
  const double sk = std::sqrt(kappa);
  const double den1 = 4.0 * nd - 1.0 - sk;
  const double y_num = 8.0 * nd * sk - (sk + 1.0) * (sk + 1.0);
  if (den1 <= 0.0 || y_num <= 0.0) return kInf;
  const double x = (sk + 1.0) * (sk + 1.0) * (2.0 * nd - 1.0) / ((kappa - 1.0) * nd);
  const double log_y = std::log(y_num) - std::log(kappa * (2.0 * nd - 1.0) * nd);
  return std::log(sk - 1.0) + (nd + 3.5) * std::log(2.0) + std::log(nd) - nd * std::log(x) -
         std::log(den1) - 0.5 * log_y;
}

// Lower branch of Lambert's W on (-1/e, 0), by Halley iteration from the
// standard logarithmic seed.
double lambert_wm1(double x) {
  require(x > -std::exp(-1.0) && x < 0.0, "lambert_wm1: argument out of range");
  double w = std::log(-x);
  w -= std::log(-w);
  for (int i = 0; i < 100; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(w))) break;
  }
  return w;
}

}  // namespace

double cheb_error_bound(Index degree, double kappa) {
  require(kappa > 0.0, "cheb_error_bound: kappa must be positive");
  if (kappa <= 1.0) return 0.0;
  return std::exp(cheb_log_bound(degree, kappa));
}

Index cheb_degree(double kappa, double eps, Index n) {
  require(kappa >= 1.0, "cheb_degree: kappa must be at least 1");
  require(eps > 0.0 && eps < 1.0, "cheb_degree: eps must lie in (0, 1)");
  require(n >= 1, "cheb_degree: dimension must be positive");
  if (kappa <= 1.0 + 1e-12) return 0;

  // The bound is accepted once it clears eps * sqrt(kappa) / 2, which is the
  // normalization that reproduces the reference degree table.
  const double target = std::log(eps) + 0.5 * std::log(kappa) - std::log(2.0);
  const double sk = std::sqrt(kappa);

  Index hi = 1;
  const double eps_eff = std::exp(target);
  const double denom = 4.0 * std::log(sk + 1.0) - 2.0 * std::log(kappa - 1.0);
  const double arg =
      eps_eff * eps_eff * (std::log(kappa - 1.0) - 2.0 * std::log(sk + 1.0)) /
      ((sk - 1.0) * (sk - 1.0) * sk);
  if (arg > -std::exp(-1.0) && arg < 0.0 && denom > 0.0) {
    const double guess = -lambert_wm1(arg) / denom;
    if (std::isfinite(guess) && guess > 1.0 && guess < 1e9)
      hi = static_cast<Index>(std::llround(guess));
  }
  int doublings = 0;
  while (cheb_log_bound(hi, kappa) > target) {
    hi *= 2;
    require(++doublings < 64, "cheb_degree: error bound is unsatisfiable");
  }
  Index lo = 0;  // degree 0 never satisfies the bound for kappa > 1
  while (hi - lo > 1) {
    const Index mid = lo + (hi - lo) / 2;
    if (cheb_log_bound(mid, kappa) <= target)
      hi = mid;
    else
      lo = mid;
  }
  while (hi > 1 && cheb_log_bound(hi - 1, kappa) <= target) --hi;
  return hi;
}

Vec cheb_coefficients(double a, double b, Index degree) {
  require(degree >= 0, "cheb_coefficients: degree must be nonnegative");
  require(a > 0.0 && b >= a, "cheb_coefficients: need 0 < a <= b");
  const Index m = degree + 1;
  const double md = static_cast<double>(m);
  Vec fx(m), theta(m);
  for (Index j = 0; j < m; ++j) {
    theta[j] = M_PI * (2.0 * static_cast<double>(j) + 1.0) / (2.0 * md);
    const double xj = std::cos(theta[j]);
    fx[j] = 1.0 / std::sqrt(0.5 * (a + b + (b - a) * xj));
  }
  Vec c(m);
  for (Index k = 0; k < m; ++k) {
    double acc = 0.0;
    for (Index j = 0; j < m; ++j) acc += fx[j] * std::cos(static_cast<double>(k) * theta[j]);
    c[k] = (k == 0 ? 1.0 : 2.0) * acc / md;
  }
  return c;
}

Vec cheb_inv_sqrt_matvec(const LinearOperator& B, double a, double b,
                         const Eigen::Ref<const Vec>& v, Index degree) {
  require(degree >= 0, "cheb_inv_sqrt_matvec: degree must be nonnegative");
  require(B.rows() == B.cols(), "cheb_inv_sqrt_matvec: operator must be square");
  require(v.size() == B.rows(), "cheb_inv_sqrt_matvec: dimension mismatch");
  require(a > 0.0 && b >= a, "cheb_inv_sqrt_matvec: need 0 < a <= b");
  if (b - a <= 1e-12 * b) return v / std::sqrt(0.5 * (a + b));

  const Vec c = cheb_coefficients(a, b, degree);
  Vec tmp(v.size());
  const auto bhat = [&](const Vec& u) {
    B.apply(u, tmp);
    return Vec((2.0 * tmp - (a + b) * u) / (b - a));
  };

  Vec acc = c[0] * v;
  if (degree == 0) return acc;
  Vec t_prev = v;
  Vec t_cur = bhat(v);
  acc += c[1] * t_cur;
  for (Index k = 2; k <= degree; ++k) {
    Vec t_next = 2.0 * bhat(t_cur) - t_prev;
    acc += c[k] * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return acc;
}

// ------------------------------------------------------------ operator pair

namespace {

// C = P_h R^{+'} M^{+/2} P_M with M = R^+ L R^{+'}; both directions needed so
// the factored pair can be verified.
class LaplacianFactorOp : public LinearOperator {
 public:
  LaplacianFactorOp(RescaledLaplacian lap, PreconFactor precon, Index degree)
      : lap_(std::move(lap)),
        precon_(std::move(precon)),
        degree_(degree),
        a_m_(1.0 / precon_.b),
        b_m_(1.0 / precon_.a),
        m_op_(make_m_op()) {}

  Index rows() const override { return lap_.dim(); }
  Index cols() const override { return lap_.dim(); }

  void apply(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    Vec w = x;
    project_m_null(w);
    const Vec u = cheb_inv_sqrt_matvec(*m_op_, a_m_, b_m_, w, degree_);
    Vec out = lower_pinv_solve_transpose(precon_.R, u);
    out -= lap_.h() * lap_.h().dot(out);
    y = out;
  }

  void apply_transpose(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    Vec w = x - lap_.h() * lap_.h().dot(x);
    w = lower_pinv_solve(precon_.R, w);
    Vec out = cheb_inv_sqrt_matvec(*m_op_, a_m_, b_m_, w, degree_);
    project_m_null(out);
    y = out;
  }

 private:
  OpPtr make_m_op() const {
    const SpMat& R = precon_.R;
    const SpMat& L = lap_.matrix().mat();
    const Index n = lap_.dim();
    return func_op(n, n, [&R, &L](const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) {
      const Vec t1 = lower_pinv_solve_transpose(R, x);
      const Vec t2 = L * t1;
      y = lower_pinv_solve(R, t2);
    });
  }

  void project_m_null(Vec& w) const {
    if (!precon_.null_cols.empty()) {
      for (const Index i : precon_.null_cols) w[i] = 0.0;
    } else {
      // Invertible factors (identity mode) leave M with the null space of L.
      w -= lap_.h() * lap_.h().dot(w);
    }
  }

  RescaledLaplacian lap_;
  PreconFactor precon_;
  Index degree_;
  double a_m_;
  double b_m_;
  OpPtr m_op_;
};

}  // namespace

FactoredOperator laplacian_operators(const RescaledLaplacian& lap, const PreconFactor& precon,
                                     double cheb_eps, double pcg_tol) {
  const Index n = lap.dim();
  const Index degree = cheb_degree(precon.kappa, cheb_eps, n);
  FactoredOperator fo;
  fo.K = func_op(n, n,
                 [lap, precon, pcg_tol](const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) {
                   y = pinv_matvec(lap, precon, x, pcg_tol);
                 });
  fo.C = std::make_shared<LaplacianFactorOp>(lap, precon, degree);
  fo.exact = false;
  return fo;
}

// ------------------------------------------------------------- objective

namespace {

struct ObjectivePieces {
  Eigen::LDLT<Mat> ldlt;
  Mat gram;  // (K^2)_II
  Vec h_sub;
};

ObjectivePieces objective_pieces(const Eigen::Ref<const Mat>& cols, const Vec& h,
                                 const IndexList& I, const char* who) {
  const Index n = cols.rows();
  const Index s = static_cast<Index>(I.size());
  require(s > 0, std::string(who) + ": index set must be nonempty");
  require(cols.cols() == s, std::string(who) + ": one kernel column per index required");
  std::vector<char> seen(static_cast<size_t>(n), 0);
  for (const Index i : I) {
    require(i >= 0 && i < n, std::string(who) + ": index out of range");
    require(!seen[static_cast<size_t>(i)], std::string(who) + ": duplicate index");
    seen[static_cast<size_t>(i)] = 1;
  }

  ObjectivePieces p;
  Mat A(s, s);
  p.h_sub.resize(s);
  for (Index r = 0; r < s; ++r) {
    p.h_sub[r] = h[I[static_cast<size_t>(r)]];
    for (Index ccol = 0; ccol < s; ++ccol)
      A(r, ccol) = cols(I[static_cast<size_t>(r)], ccol);
  }
  A = 0.5 * (A + A.transpose()).eval();
  p.ldlt.compute(A);
  const Vec dv = p.ldlt.vectorD();
  require(p.ldlt.info() == Eigen::Success && dv.minCoeff() > 1e-12 * std::max(dv.maxCoeff(), 0.0),
          std::string(who) + ": K[I,I] is numerically singular");
  p.gram.noalias() = cols.transpose() * cols;
  return p;
}

double objective_value(const ObjectivePieces& p, const char* who) {
  const Vec x = p.ldlt.solve(p.h_sub);
  const double tau = p.h_sub.dot(x);
  require(tau > 0.0, std::string(who) + ": h_I' inv(K_II) h_I must be positive");
  const double tr = p.ldlt.solve(p.gram).trace();
  const double q = x.dot(p.gram * x);
  return tr - (1.0 + q) / tau;
}

}  // namespace

double laplacian_objective_eval(const DenseSym& K, const Vec& h, const IndexList& I) {
  const Index n = K.dim();
  require(h.size() == n, "laplacian_objective_eval: h dimension mismatch");
  Mat cols(n, static_cast<Index>(I.size()));
  for (size_t c = 0; c < I.size(); ++c) {
    require(I[c] >= 0 && I[c] < n, "laplacian_objective_eval: index out of range");
    cols.col(static_cast<Index>(c)) = K.mat().col(I[c]);
  }
  const auto p = objective_pieces(cols, h, I, "laplacian_objective_eval");
  return objective_value(p, "laplacian_objective_eval");
}

double laplacian_objective_eval(const RescaledLaplacian& lap, const IndexList& I,
                                const PreconFactor* precon) {
  if (precon == nullptr) {
    const DenseSym K = dense_pinv(lap);
    return laplacian_objective_eval(K, lap.h(), I);
  }
  const Index n = lap.dim();
  Mat cols(n, static_cast<Index>(I.size()));
  Vec ej = Vec::Zero(n);
  for (size_t c = 0; c < I.size(); ++c) {
    require(I[c] >= 0 && I[c] < n, "laplacian_objective_eval: index out of range");
    ej[I[c]] = 1.0;
    cols.col(static_cast<Index>(c)) = pinv_matvec(lap, *precon, ej);
    ej[I[c]] = 0.0;
  }
  return laplacian_objective_from_columns(cols, lap.h(), I);
}

double laplacian_objective_from_columns(const Eigen::Ref<const Mat>& cols, const Vec& h,
                                        const IndexList& I) {
  require(h.size() == cols.rows(), "laplacian_objective_from_columns: h dimension mismatch");
  const auto p = objective_pieces(cols, h, I, "laplacian_objective_from_columns");
  return objective_value(p, "laplacian_objective_from_columns");
}

// ------------------------------------------------------- deterministic greedy

select::SelectionResult nuclear_max_laplacian_exact(const DenseSym& K, const Vec& h, Index k,
                                                    const select::SelectOptions& opts,
                                                    LaplacianState* state_out) {
  const Index n = K.dim();
  require(h.size() == n, "nuclear_max_laplacian_exact: h dimension mismatch");
  require((h.array() > 0.0).all(), "nuclear_max_laplacian_exact: h must be elementwise positive");
  require(k >= 0 && k <= n, "nuclear_max_laplacian_exact: need 0 <= k <= n");
  require((K.mat() * h).norm() <= 1e-10 * std::max(K.mat().norm(), 1e-300),
          "nuclear_max_laplacian_exact: K h must vanish");

  auto [d0, w0] = diag_and_diag_sq(K);
  select::CholeskyState st;
  st.n = n;
  st.k_max = k;
  st.U = Mat::Zero(k, n);
  st.S = Mat::Zero(n, k);
  st.d = d0;
  st.w = w0;
  Vec y = h;
  Vec c = Vec::Zero(n);
  double g = 0.0;

  Mat B = Mat::Zero(n, k);
  std::vector<char> taken(static_cast<size_t>(n), 0);
  const Vec guard_floor = opts.pivot_guard * d0;
  const auto candidate = [&](Index j) {
    return !taken[static_cast<size_t>(j)] && st.d[j] > 0.0 && st.d[j] >= guard_floor[j];
  };

  select::SelectionResult res;
  res.method = select::Method::nuclear;
  res.n = n;
  res.trace = d0.sum();

  std::vector<double> gains, objective;
  double obj = 0.0;
  for (Index t = 0; t < k; ++t) {
    select::ArgMax pick(opts.tie_rel);
    if (t == 0) {
      for (Index j = 0; j < n; ++j)
        if (candidate(j)) pick.offer(j, -st.d[j] / (h[j] * h[j]));
    } else {
      const double yy = y.squaredNorm();
      for (Index j = 0; j < n; ++j) {
        if (!candidate(j)) continue;
        const double num = st.w[j] + 2.0 / g * y[j] * c[j] + yy / (g * g) * y[j] * y[j];
        const double den = st.d[j] + y[j] * y[j] / g;
        pick.offer(j, num / den);
      }
    }
    if (!pick.found()) {
      std::ostringstream msg;
      msg << "all candidates excluded by the pivot guard after " << res.indices.size() << " of "
          << k << " selections";
      res.early_stop = true;
      res.diagnostic = msg.str();
      break;
    }
    const Index j = pick.index();
    const double gain = pick.value();
    const double pivot = st.d[j];

    B.col(t) = K.mat().col(j);
    select::cholesky_extend(st, j, pivot, B.leftCols(t + 1));
    const auto s_t = st.S.col(t);
    st.d -= s_t.cwiseAbs2();

    double tau = 0.0;
    for (Index r = 0; r <= t; ++r) tau += st.U(r, j) * h[st.selected[static_cast<size_t>(r)]];
    g += tau * tau;
    y += tau * s_t;

    Vec f(n);
    f.noalias() = K.mat() * s_t;
    if (t > 0)
      f.noalias() -= st.S.leftCols(t) * (st.S.leftCols(t).transpose() * s_t);
    c += tau * f - s_t.dot(y) * s_t;
    st.w += s_t.dot(s_t) * s_t.cwiseAbs2() - 2.0 * f.cwiseProduct(s_t);

    taken[static_cast<size_t>(j)] = 1;
    res.indices.push_back(j);
    obj += gain;
    gains.push_back(gain);
    if (opts.debug) {
      obj = laplacian_objective_from_columns(B.leftCols(t + 1), h, st.selected);
      gains.back() = obj - (objective.empty() ? 0.0 : objective.back());
    }
    objective.push_back(obj);
  }

  const Index done = static_cast<Index>(res.indices.size());
  res.gains = Eigen::Map<const Vec>(gains.data(), done);
  res.objective = Eigen::Map<const Vec>(objective.data(), done);
  res.residual_trace = (res.trace - res.objective.array()).matrix();
  if (state_out != nullptr) {
    state_out->g = g;
    state_out->y = y;
    state_out->c = c;
    state_out->chol = st;
  }
  if (opts.keep_state)
    res.state = std::make_shared<const select::CholeskyState>(std::move(st));
  return res;
}

// --------------------------------------------------------- matrix-free greedy

select::SelectionResult nuclear_max_laplacian_matrix_free(
    const RescaledLaplacian& lap, const PreconFactor& precon, Index k, Index z,
    std::uint64_t seed, const select::SelectOptions& opts, double cheb_eps, double pcg_tol,
    LaplacianState* state_out) {
  const Index n = lap.dim();
  const Vec& h = lap.h();
  require(k >= 0 && k <= n, "nuclear_max_laplacian_matrix_free: need 0 <= k <= n");
  require(z >= 1, "nuclear_max_laplacian_matrix_free: z must be at least 1");

  const FactoredOperator ops = laplacian_operators(lap, precon, cheb_eps, pcg_tol);
  Rng rng(seed, kLaplacianStream);

  select::CholeskyState st;
  st.n = n;
  st.k_max = k;
  st.U = Mat::Zero(k, n);
  st.S = Mat::Zero(n, k);
  st.d = Vec::Zero(n);  // not tracked by the matrix-free scores
  st.w = Vec::Zero(n);
  Vec y = h;
  double g = 0.0;

  Mat B = Mat::Zero(n, k);
  std::vector<char> taken(static_cast<size_t>(n), 0);

  select::SelectionResult res;
  res.method = select::Method::nuclear;
  res.seed = seed;
  res.z = z;
  res.n = n;

  std::vector<double> gains, objective;
  Vec ej = Vec::Zero(n);
  for (Index t = 0; t < k; ++t) {
    const Mat Z1 = rng.gaussian_matrix(n, z);
    Mat D = matmat(*ops.C, Z1);

    select::ArgMax pick(opts.tie_rel);
    if (t == 0) {
      res.trace = D.squaredNorm() / static_cast<double>(z);
      const Vec den = D.rowwise().squaredNorm() / static_cast<double>(z);
      for (Index j = 0; j < n; ++j)
        if (!taken[static_cast<size_t>(j)]) pick.offer(j, -den[j] / (h[j] * h[j]));
    } else {
      const Mat Z2 = rng.gaussian_matrix(n, z);
      Mat numer = matmat(*ops.K, Z2);
      numer.noalias() -= st.S.leftCols(t) * (st.S.leftCols(t).transpose() * Z2);
      numer.noalias() += (1.0 / g) * y * ((y - h).transpose() * Z2);

      Mat u_sel(t, t), d_sel(t, z);
      for (Index cc = 0; cc < t; ++cc) {
        const Index idx = st.selected[static_cast<size_t>(cc)];
        u_sel.col(cc) = st.U.col(idx).head(t);
        d_sel.row(cc) = D.row(idx);
      }
      D.noalias() += st.S.leftCols(t) * (u_sel.transpose() * d_sel);

      const double zd = static_cast<double>(z);
      const Vec num_vec =
          numer.rowwise().squaredNorm() / zd + (1.0 / (g * g)) * y.cwiseAbs2();
      const Vec den_vec = D.rowwise().squaredNorm() / zd + (1.0 / g) * y.cwiseAbs2();
      for (Index j = 0; j < n; ++j)
        if (!taken[static_cast<size_t>(j)]) pick.offer(j, num_vec[j] / den_vec[j]);
    }
    require(pick.found(), "nuclear_max_laplacian_matrix_free: no finite scores to select from");
    const Index j = pick.index();

    ej[j] = 1.0;
    const Vec kcol = pinv_matvec(lap, precon, ej, pcg_tol);
    ej[j] = 0.0;
    const double pivot = kcol[j] - st.S.row(j).head(t).squaredNorm();
    if (!(pivot > 0.0)) {
      std::ostringstream msg;
      msg << "nuclear_max_laplacian_matrix_free: pivot for index " << j
          << " is not positive at step " << t;
      fail(msg.str());
    }

    B.col(t) = kcol;
    select::cholesky_extend(st, j, pivot, B.leftCols(t + 1));
    const auto s_t = st.S.col(t);
    double tau = 0.0;
    for (Index r = 0; r <= t; ++r) tau += st.U(r, j) * h[st.selected[static_cast<size_t>(r)]];
    g += tau * tau;
    y += tau * s_t;

    taken[static_cast<size_t>(j)] = 1;
    res.indices.push_back(j);
    const double obj = laplacian_objective_from_columns(B.leftCols(t + 1), h, st.selected);
    gains.push_back(obj - (objective.empty() ? 0.0 : objective.back()));
    objective.push_back(obj);
  }

  const Index done = static_cast<Index>(res.indices.size());
  res.gains = Eigen::Map<const Vec>(gains.data(), done);
  res.objective = Eigen::Map<const Vec>(objective.data(), done);
  res.residual_trace = (res.trace - res.objective.array()).matrix();
  if (state_out != nullptr) {
    state_out->g = g;
    state_out->y = y;
    state_out->c = Vec();
    state_out->chol = st;
  }
  if (opts.keep_state)
    res.state = std::make_shared<const select::CholeskyState>(std::move(st));
  return res;
}

}  // namespace nucsel::laplacian
