// CUR decomposition by independent greedy row and column selection on the
// Gram matrices A A' and A' A, matrix-free by default, with the closed-form
// Frobenius error. C = A[:, J], R = A[I, :], U = pinv(C) A pinv(R).
#pragma once

#include <cstdint>

#include "core/common.hpp"
#include "core/linops.hpp"
#include "core/select.hpp"

namespace nucsel::cur {

// Implicit Gram operators, each applied as two chained sparse matvecs.
// cols:  K = A' A with factor C = A'.
// rows:  K = A A' with factor C = A.
struct GramOperators {
  FactoredOperator cols;
  FactoredOperator rows;
};
GramOperators gram_operators(const SparseMat& A);

enum class CurMode { deterministic, matrix_free };

struct CUROptions {
  CurMode mode = CurMode::matrix_free;
  Index z = 200;
  std::uint64_t seed = 0;
  select::SelectOptions select;
};

struct CURResult {
  IndexList row_indices;  // I, selection order
  IndexList col_indices;  // J, selection order
  Mat S_R, U_R;           // row-side factors (m x t_r, t_r x m)
  Mat S_C, U_C;           // column-side factors (n x t_c, t_c x n)
  double frobenius_error = 0.0;
  select::SelectionResult row_run;
  select::SelectionResult col_run;
};

// Row and column selections run independently (they share only A). The
// Frobenius error comes from the factor identity
// ||A - CUR||_F^2 = 1' A^{.2} 1 - 1' (S_R' A[:, J] Uc)^{.2} 1
// with Uc the column-side factor restricted to J.
CURResult cur_decompose(const SparseMat& A, Index k_rows, Index k_cols,
                        const CUROptions& opts = {});

// min_B || A[:, J] B - A ||_F^2, evaluated as Tr[A'A] - objective(A'A, J).
// Errors when A[:, J] is column-rank deficient.
double cx_error(const SparseMat& A, const IndexList& J);

// frobenius_error <= sqrt(E_row) + sqrt(E_col) + 1e-8 * ||A||_F.
bool triangle_bound_check(const CURResult& result, const SparseMat& A);

// Dense C U R product for small problems (guarded by m * n <= guard);
// used for direct-assembly checks and factor dumps.
Mat cur_dense(const CURResult& result, const SparseMat& A, Index guard = 2000000);

}  // namespace nucsel::cur
