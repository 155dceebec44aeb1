// Randomized diagonal estimation and matrix-free greedy selection on
// factored operators K = C C'. Scores come from Gaussian sketches; Cholesky
// updates use one exact K matvec per accepted index.
#pragma once

#include <cstdint>

#include "core/common.hpp"
#include "core/linops.hpp"
#include "core/rng.hpp"
#include "core/select.hpp"

namespace nucsel::sketch {

// (1/z) * squared row norms of Y Z for a Gaussian Z; unbiased for
// Diag(Y Y').
Vec estimate_diag(const LinearOperator& y_op, Index z, std::uint64_t seed);
Vec estimate_diag(const LinearOperator& y_op, Index z, Rng& rng);

// One iteration's sketched diagonals of the residual kernel and its square.
// Entries are nonnegative always and positive almost surely.
struct ScoreEstimate {
  Vec numerator;    // estimate of Diag(Ktilde^2)
  Vec denominator;  // estimate of Diag(Ktilde)
  Index z = 0;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

// Sketch the residual diagonals after the selections recorded in state.
// Consumes two fresh Gaussian blocks from rng (width z each); the seed
// overload is a single-shot convenience that derives its own stream.
ScoreEstimate randomized_scores(const select::CholeskyState& state, const FactoredOperator& ops,
                                Index z, Rng& rng);
ScoreEstimate randomized_scores(const select::CholeskyState& state, const FactoredOperator& ops,
                                Index z, std::uint64_t seed);

// Greedy matrix-free selection; scores are sketched, pivots and recorded
// gains are exact (one K column per step). A nonpositive residual pivot is a
// numerical breakdown and throws.
select::SelectionResult nuclear_max_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                std::uint64_t seed,
                                                const select::SelectOptions& opts = {});
select::SelectionResult diagonal_max_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                 std::uint64_t seed,
                                                 const select::SelectOptions& opts = {});
select::SelectionResult diagonal_sample_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                    std::uint64_t seed,
                                                    const select::SelectOptions& opts = {});

// Factored pair for an explicit dense SPSD kernel: shifts the diagonal by
// shift_rel times the mean diagonal, Cholesky-factors in place, and serves
// both K and C from the single stored factor (K x = C (C' x)).
FactoredOperator dense_kernel_operators(Mat K, double shift_rel = 1e-10);

}  // namespace nucsel::sketch
