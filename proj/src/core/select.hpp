// Deterministic column selection on explicit SPSD matrices: nuclear
// maximization, diagonal maximization, diagonal sampling, and uniform
// sampling, together with the objective evaluators and the naive reference
// greedy used to validate the fast path.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "core/common.hpp"
#include "core/linops.hpp"

namespace nucsel::select {

enum class Method {
  nuclear,
  diag_max,
  diag_sample,
  uniform,
};

const char* method_name(Method m);

// Incremental upper-Cholesky state shared by every greedy variant. After t
// selections: U[:t, selected] U[:t, selected]' = inv(K[sel, sel]),
// S[:, :t] S[:, :t]' = K[:, sel] inv(K[sel, sel]) K[sel, :], d = Diag of the
// residual kernel and w = Diag of its square.
struct CholeskyState {
  Index n = 0;
  Index k_max = 0;
  Mat U;  // k_max x n
  Mat S;  // n x k_max
  Vec d;
  Vec w;
  IndexList selected;

  Index steps() const { return static_cast<Index>(selected.size()); }
};

struct SelectionResult {
  IndexList indices;   // selection order; may include guard-skipped draws
  Vec gains;           // per-step objective increments
  Vec objective;       // cumulative objective values
  Vec residual_trace;  // Tr[K] - objective, per step
  Method method = Method::nuclear;
  std::uint64_t seed = 0;
  Index z = 0;  // sketch width; 0 marks a deterministic run
  Index n = 0;
  double trace = 0.0;
  bool early_stop = false;
  std::string diagnostic;
  // Populated when SelectOptions::keep_state is set; used by diagnostics and
  // invariant tests, never by the selection itself.
  std::shared_ptr<const CholeskyState> state;
};

struct SelectOptions {
  // Columns with residual diagonal below pivot_guard * K[j,j] leave the
  // candidate pool for the rest of the run.
  double pivot_guard = 1e-8;
  // Scores within this relative window count as tied; the lowest index wins.
  double tie_rel = 1e-12;
  // Recompute the objective from cached kernel columns at every step instead
  // of trusting the incremental gains. Slow; for cross-checking only.
  bool debug = false;
  bool keep_state = false;
};

// Tr[(K^2)[I,I] inv(K[I,I])]. Errors name the offending pivot when K[I,I]
// is numerically singular.
double objective_eval(const DenseSym& K, const IndexList& I);

// Same objective computed from cached kernel columns cols = K[:, I] (one
// column per element of I, in order). Used by the matrix-free paths, which
// never hold K explicitly.
double objective_from_columns(const Eigen::Ref<const Mat>& cols, const IndexList& I);

SelectionResult nuclear_max(const DenseSym& K, Index k, const SelectOptions& opts = {});
SelectionResult nuclear_max(const SparseMat& K, Index k, const SelectOptions& opts = {});

// Deterministic greedy on an implicit kernel: columns and matvecs go through
// ops.K, the exact diagonals of K and K^2 are supplied by the caller. Used
// when K is only available as a product (never formed explicitly).
SelectionResult nuclear_max(const FactoredOperator& ops, const Vec& diag, const Vec& diag_sq,
                            Index k, const SelectOptions& opts = {});

SelectionResult diagonal_max(const DenseSym& K, Index k, const SelectOptions& opts = {});
SelectionResult diagonal_max(const SparseMat& K, Index k, const SelectOptions& opts = {});

SelectionResult diagonal_sample(const DenseSym& K, Index k, std::uint64_t seed,
                                const SelectOptions& opts = {});
SelectionResult diagonal_sample(const SparseMat& K, Index k, std::uint64_t seed,
                                const SelectOptions& opts = {});

// Uniform k-subset without replacement; the bare overload returns only the
// index set, the kernel overloads fill in gains for the drawn subset.
IndexList uniform_sample(Index n, Index k, std::uint64_t seed);
SelectionResult uniform_sample(const DenseSym& K, Index k, std::uint64_t seed,
                               const SelectOptions& opts = {});
SelectionResult uniform_sample(const SparseMat& K, Index k, std::uint64_t seed,
                               const SelectOptions& opts = {});

// Exact maximizer of the objective over all s-subsets. Guarded by
// C(n,s) <= 1e6; subsets with numerically singular principal blocks are
// skipped rather than scored.
std::pair<IndexList, double> optimal_subset_bruteforce(const DenseSym& K, Index s);

// Conceptual greedy: re-evaluates the objective for every candidate at every
// step. Quadratically slower than nuclear_max and used only as an oracle.
SelectionResult nuclear_max_reference(const DenseSym& K, Index k);

// One rank-one extension of the upper-Cholesky state: appends j with residual
// diagonal value pivot, given cols = K[:, selected + {j}] in order. Updates
// U, S, and selected; the caller owns d, w, and any method-specific vectors.
void cholesky_extend(CholeskyState& st, Index j, double pivot,
                     const Eigen::Ref<const Mat>& cols);

// Lowest-index-wins argmax with a relative tie window. Offer candidates in
// increasing index order.
class ArgMax {
 public:
  explicit ArgMax(double tie_rel) : tie_rel_(tie_rel) {}

  void offer(Index j, double value);
  bool found() const { return best_ >= 0; }
  Index index() const { return best_; }
  double value() const { return value_; }

 private:
  double tie_rel_;
  Index best_ = -1;
  double value_ = 0.0;
};

}  // namespace nucsel::select
