// Rescaled graph Laplacians and selection on their pseudoinverses: validated
// Laplacian/preconditioner types, deflated-PCG pseudoinverse matvecs,
// Chebyshev inverse-square-root matvecs, the inverse-Laplacian objective, and
// the deterministic and matrix-free greedy selection algorithms for K = L^+.
#pragma once

#include <cstdint>
#include <vector>

#include "core/common.hpp"
#include "core/linops.hpp"
#include "core/select.hpp"

namespace nucsel::laplacian {

// Symmetric SPSD Laplacian L paired with its unit stationary eigenvector h
// (elementwise positive, L h = 0). The constructor validates symmetry, the
// diagonal sign, the null relation, and connectivity of the nonzero pattern.
class RescaledLaplacian {
 public:
  RescaledLaplacian(SparseMat L, Vec h);

  Index dim() const { return h_.size(); }
  const SparseMat& matrix() const { return L_; }
  const Vec& h() const { return h_; }
  Vec stationary() const { return h_.cwiseAbs2(); }

 private:
  SparseMat L_;
  Vec h_;
};

// Builds the rescaled Laplacian of a reversible CTMC generator: h = sqrt(pi)
// and L = -Diag(h) R Diag(1/h), symmetrized. Checks detailed balance
// (pi_i R_ij = pi_j R_ji to 1e-10), zero row sums, nonnegative off-diagonal
// rates, and pi > 0 with sum 1.
RescaledLaplacian from_rate_matrix(const SparseMat& rates, const Vec& pi);

// Lower-triangular factor R with a L <= R R' <= b L on the image. Columns
// whose pivot is structurally zero (listed in null_cols) are entirely zero;
// triangular pseudo-solves skip those coordinates.
struct PreconFactor {
  SpMat R;
  double a = 1.0;
  double b = 1.0;
  double kappa = 1.0;  // b / a
  std::vector<Index> null_cols;
};

enum class PreconMode {
  exact,     // grounded Cholesky of L; a = b = 1, one structural zero pivot
  identity,  // R = I; a = 1/lambda_max(L), b = 1/lambda_min(L) on the image
};

// Factory for the built-in preconditioners. The exact mode is guarded by
// n <= 5000; the identity mode estimates the extreme eigenvalues of L with
// h deflated.
PreconFactor default_precon(const RescaledLaplacian& lap, PreconMode mode);

// Wraps a user-supplied triangular factor with claimed bounds a, b. Validates
// the lower-triangular pattern, nonnegative pivots, that the single zero-pivot
// column vanishes entirely, and that R' h is numerically zero.
PreconFactor external_precon(const RescaledLaplacian& lap, SpMat R, double a, double b);

// Least-squares triangular solves that skip zero-pivot coordinates: the
// result solves the invertible subsystem on the nonzero-pivot rows and
// columns and is zero elsewhere.
Vec lower_pinv_solve(const SpMat& R, const Eigen::Ref<const Vec>& b);
Vec lower_pinv_solve_transpose(const SpMat& R, const Eigen::Ref<const Vec>& b);

// K x = L^+ x by preconditioned conjugate gradients. The h component of the
// right-hand side and of every iterate is projected out; the result satisfies
// ||L out - Px|| <= tol ||Px|| with P = I - h h'. Iterations are capped at
// ceil(10 sqrt(kappa) log(1/tol)) + 20.
Vec pinv_matvec(const RescaledLaplacian& lap, const PreconFactor& precon,
                const Eigen::Ref<const Vec>& x, double tol = 1e-10);

// Dense K = L^+ via the rank-one shift identity (L + h h')^{-1} - h h'.
DenseSym dense_pinv(const RescaledLaplacian& lap, Index guard = 2000);

// Relative sup-norm bound on the degree-`degree` Chebyshev interpolant of
// x -> ((a+b+(b-a)x)/2)^{-1/2}, as a function of kappa = b/a alone. Returns
// +inf where the bound's validity conditions fail and 0 for kappa <= 1.
double cheb_error_bound(Index degree, double kappa);

// Minimal interpolation degree whose error bound meets the tolerance, seeded
// by the closed-form Lambert-W estimate and refined by bisection. The
// dimension argument is validated but does not enter the tolerance rule.
Index cheb_degree(double kappa, double eps, Index n);

// Chebyshev coefficients c_0..c_degree of the inverse square root on [a, b],
// interpolated at first-kind nodes.
Vec cheb_coefficients(double a, double b, Index degree);

// f_degree(B) v for f(x) = x^{-1/2} on the image spectrum [a, b] of B, via
// the three-term recurrence. The caller must remove any null component of B
// from v first. Near-degenerate intervals short-circuit to v / sqrt(mid).
Vec cheb_inv_sqrt_matvec(const LinearOperator& B, double a, double b,
                         const Eigen::Ref<const Vec>& v, Index degree);

// Matvec-access pair (K, C) with K = C C' = L^+. K applies deflated PCG; C
// applies a triangular pseudo-solve sandwich around the Chebyshev inverse
// square root of the preconditioned operator R^+ L R^+'.
FactoredOperator laplacian_operators(const RescaledLaplacian& lap, const PreconFactor& precon,
                                     double cheb_eps = 1e-8, double pcg_tol = 1e-10);

// Objective for inverse-Laplacian selection:
//   Tr[(K^2)_II inv(K_II)] - (1 + q) / tau,
// with tau = h_I' inv(K_II) h_I and q = h_I' inv(K_II) (K^2)_II inv(K_II) h_I.
double laplacian_objective_eval(const DenseSym& K, const Vec& h, const IndexList& I);

// Same, from K = dense_pinv(lap) when precon is null (guarded by n <= 2000),
// or from PCG-computed columns of K when a preconditioner is supplied.
double laplacian_objective_eval(const RescaledLaplacian& lap, const IndexList& I,
                                const PreconFactor* precon = nullptr);

// Same objective computed from cached columns cols = K[:, I].
double laplacian_objective_from_columns(const Eigen::Ref<const Mat>& cols, const Vec& h,
                                        const IndexList& I);

// Cholesky state plus the stationary-mode bookkeeping of the Laplacian
// greedy: g accumulates the squared tau increments (g = h_I' inv(K_II) h_I),
// y tracks h - K[:,I] inv(K_II) h_I, and c the cross term of the exact
// scores. The matrix-free variant leaves c empty.
struct LaplacianState {
  select::CholeskyState chol;
  double g = 0.0;
  Vec y;
  Vec c;

  double tau() const { return g; }
};

// Deterministic greedy on a precomputed dense K = L^+ (requires ||K h||
// numerically zero). Per-step gains are the exact scores; the first equals
// the singleton objective -K_jj / h_j^2.
select::SelectionResult nuclear_max_laplacian_exact(const DenseSym& K, const Vec& h, Index k,
                                                    const select::SelectOptions& opts = {},
                                                    LaplacianState* state_out = nullptr);

// Matrix-free greedy: scores are randomized diagonal estimates with the
// exactly-computable stationary-mode terms added back; pivots, gains, and the
// reported objective use exact kernel columns obtained from PCG solves.
select::SelectionResult nuclear_max_laplacian_matrix_free(
    const RescaledLaplacian& lap, const PreconFactor& precon, Index k, Index z,
    std::uint64_t seed, const select::SelectOptions& opts = {}, double cheb_eps = 1e-8,
    double pcg_tol = 1e-10, LaplacianState* state_out = nullptr);

}  // namespace nucsel::laplacian
