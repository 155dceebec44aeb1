#include "core/cur.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <utility>

#include "core/sketch.hpp"

namespace nucsel::cur {

namespace {
constexpr std::uint64_t kColSalt = 0x9e3779b97f4a7c15ULL;
}

GramOperators gram_operators(const SparseMat& A) {
  require(A.nnz() > 0, "gram_operators: A must be nonzero");
  const OpPtr a_op = sparse_op(A);
  const OpPtr at_op = sparse_op(A, /*transpose=*/true);

  GramOperators g;
  g.cols.C = at_op;                    // n x m
  g.cols.K = chain_op({at_op, a_op});  // A' (A x)
  g.cols.exact = true;
  g.rows.C = a_op;                     // m x n
  g.rows.K = chain_op({a_op, at_op});  // A (A' x)
  g.rows.exact = true;
  return g;
}

namespace {

// Exact Diag(K) and Diag(K^2) for K = B B' streamed over B's sparsity:
// diag is the squared row norms of B, diag_sq[i] = ||B (B' e_i)||^2.
std::pair<Vec, Vec> gram_diags(const SpMat& B) {
  const Index m = B.rows();
  Vec diag = Vec::Zero(m);
  for (Index j = 0; j < B.outerSize(); ++j)
    for (SpMat::InnerIterator it(B, j); it; ++it) diag[it.row()] += it.value() * it.value();
  Vec diag_sq(m);
  Vec e = Vec::Zero(m);
  for (Index i = 0; i < m; ++i) {
    e[i] = 1.0;
    diag_sq[i] = (B * (B.transpose() * e)).squaredNorm();
    e[i] = 0.0;
  }
  return {diag, diag_sq};
}

Mat dense_columns(const SpMat& A, const IndexList& J) {
  Mat out = Mat::Zero(A.rows(), static_cast<Index>(J.size()));
  for (size_t c = 0; c < J.size(); ++c)
    for (SpMat::InnerIterator it(A, J[c]); it; ++it)
      out(it.row(), static_cast<Index>(c)) = it.value();
  return out;
}

}  // namespace

CURResult cur_decompose(const SparseMat& A, Index k_rows, Index k_cols,
                        const CUROptions& opts) {
  const Index m = A.rows();
  const Index n = A.cols();
  require(k_rows >= 1 && k_rows <= m, "cur_decompose: need 1 <= k_rows <= rows");
  require(k_cols >= 1 && k_cols <= n, "cur_decompose: need 1 <= k_cols <= cols");

  const GramOperators g = gram_operators(A);
  select::SelectOptions sel = opts.select;
  sel.keep_state = true;

  CURResult res;
  if (opts.mode == CurMode::deterministic) {
    const auto [d_row, w_row] = gram_diags(A.mat());
    res.row_run = select::nuclear_max(g.rows, d_row, w_row, k_rows, sel);
    const SpMat At = A.mat().transpose();
    const auto [d_col, w_col] = gram_diags(At);
    res.col_run = select::nuclear_max(g.cols, d_col, w_col, k_cols, sel);
  } else {
    require(opts.z >= 1, "cur_decompose: z must be at least 1");
    res.row_run = sketch::nuclear_max_matrix_free(g.rows, k_rows, opts.z, opts.seed, sel);
    res.col_run = sketch::nuclear_max_matrix_free(g.cols, k_cols, opts.z, opts.seed ^ kColSalt,
                                                  sel);
  }

  const select::CholeskyState& st_r = *res.row_run.state;
  const select::CholeskyState& st_c = *res.col_run.state;
  const Index t_r = st_r.steps();
  const Index t_c = st_c.steps();
  res.row_indices = st_r.selected;
  res.col_indices = st_c.selected;
  res.S_R = st_r.S.leftCols(t_r);
  res.U_R = st_r.U.topRows(t_r);
  res.S_C = st_c.S.leftCols(t_c);
  res.U_C = st_c.U.topRows(t_c);

  // Closed-form error: the projected energy is ||S_R' A[:, J] Uc||_F^2 with
  // Uc upper-triangular in selection order.
  Mat u_c(t_c, t_c);
  for (Index c = 0; c < t_c; ++c)
    u_c.col(c) = res.U_C.col(res.col_indices[static_cast<size_t>(c)]);
  const Mat aj = dense_columns(A.mat(), res.col_indices);
  const Mat t = res.S_R.transpose() * (aj * u_c);
  const double err2 = A.mat().squaredNorm() - t.squaredNorm();
  res.frobenius_error = std::sqrt(std::max(0.0, err2));
  return res;
}

double cx_error(const SparseMat& A, const IndexList& J) {
  const Index n = A.cols();
  std::vector<char> seen(static_cast<size_t>(n), 0);
  for (const Index j : J) {
    require(j >= 0 && j < n, "cx_error: column index out of range");
    require(!seen[static_cast<size_t>(j)], "cx_error: duplicate column index");
    seen[static_cast<size_t>(j)] = 1;
  }
  const double trace = A.mat().squaredNorm();
  if (J.empty()) return trace;

  // Columns of K = A'A at J, via two sparse products per index.
  Mat cols(n, static_cast<Index>(J.size()));
  Vec e = Vec::Zero(n);
  for (size_t c = 0; c < J.size(); ++c) {
    e[J[c]] = 1.0;
    cols.col(static_cast<Index>(c)) = A.mat().transpose() * (A.mat() * e);
    e[J[c]] = 0.0;
  }
  const double obj = select::objective_from_columns(cols, J);
  return std::max(0.0, trace - obj);
}

bool triangle_bound_check(const CURResult& result, const SparseMat& A) {
  const SparseMat At(SpMat(A.mat().transpose()));
  const double e_row = cx_error(At, result.row_indices);
  const double e_col = cx_error(A, result.col_indices);
  const double slack = 1e-8 * std::sqrt(A.mat().squaredNorm());
  return result.frobenius_error <= std::sqrt(e_row) + std::sqrt(e_col) + slack;
}

Mat cur_dense(const CURResult& result, const SparseMat& A, Index guard) {
  const Index m = A.rows();
  const Index n = A.cols();
  require(m * n <= guard, "cur_dense: problem exceeds the dense guard");
  const Mat Ad = A.dense();
  const Mat C = dense_columns(A.mat(), result.col_indices);
  Mat R(static_cast<Index>(result.row_indices.size()), n);
  for (size_t r = 0; r < result.row_indices.size(); ++r)
    R.row(static_cast<Index>(r)) = Ad.row(result.row_indices[r]);

  // U = pinv(C) A pinv(R) via normal equations; selections that reach this
  // point carry full-rank blocks (the greedy pivots guarantee it).
  const Mat ca = Eigen::LDLT<Mat>(C.transpose() * C).solve(C.transpose() * Ad);
  const Mat u = Eigen::LDLT<Mat>(R * R.transpose()).solve(R * ca.transpose()).transpose();
  return C * u * R;
}

}  // namespace nucsel::cur
