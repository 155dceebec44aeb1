// Executable forms of the selection error bounds: linear-programming gap
// bounds on submodular-style gain sequences, the DPP discrepancy check, the
// additive column-count estimate, and the inverse-Laplacian gap check. Each
// check compares a measured run against a closed-form value and reports a
// machine-checkable verdict.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/common.hpp"
#include "core/laplacian.hpp"
#include "core/select.hpp"
#include "core/sympoly.hpp"

namespace nucsel::bounds {

// Relative-gap bounds from per-step coefficients f_t > 1: the tight product
// form prod(1 - 1/f_t) and the looser exp(-sum 1/f_t) alongside.
struct LpBound {
  double exact = 1.0;
  double exponential = 1.0;
};
LpBound lp_bound_general(const std::vector<double>& f);

// Accumulated-gain stopping bound: alpha f / (1 + alpha f).
double lp_bound_accumulated(double f_next, double alpha);

// Initial-gain stopping bound over f_tail = (f_2, ..., f_{k+1}):
// 1 / ( prod_{j=2}^{k} (1 - 1/f_j)^{-1} + 1/(beta f_{k+1}) ).
double lp_bound_initial(const std::vector<double>& f_tail, double beta);

// One bound check against one measured run. Scalar fields refer to the final
// prefix; the vectors carry every prefix for CSV emission. Ratio fields are
// NaN when the producing check does not define them.
struct BoundReport {
  std::string label;
  Index k = 0;
  Index s = 0;
  double zeta = 0.0;
  Vec f;              // per-step LP coefficients used by the check
  double r_ref = 0.0; // reference value (D_s or the optimal subset objective)
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double measured_gap = 0.0;
  double bound_value = 0.0;
  double nu = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  double eps = std::numeric_limits<double>::quiet_NaN();
  bool satisfied = false;

  Vec prefix_gap;       // gap at prefix length t = 1..k
  Vec prefix_bound;     // bound at the same prefixes
  Vec step_residuals;   // per-step inequality slack (nonnegative when obeyed)

  static std::string csv_header();
  std::string to_csv_row() const;
  std::string to_text() const;
};

// Discrepancy between a greedy run and the s-DPP expectation D_s:
// 1 - objective(t)/D_s < exp(-t / ((1+zeta) s)) at every prefix, plus the
// per-step slack sum_{i<t} g_i + (1+zeta) s g_t - D_s.
BoundReport dpp_discrepancy_check(const select::SelectionResult& run,
                                  const sympoly::Spectrum& lam, Index s, double zeta);

// Column count sufficient for trace error eps relative to the best rank-r
// approximation, with the matching DPP size reported alongside:
// k* = max(r, (1+zeta)(r/eps + r - 1)(log(1/nu) + log(1/eps - 1/r + 1))),
// s* = r/eps + r - 1.
struct ReBound {
  double columns = 0.0;
  double dpp_s = 0.0;
};
ReBound re_bound_columns(double r, double eps, double nu, double zeta);

// Exact maximizer of the inverse-Laplacian objective over s-subsets
// (C(n, s) <= 1e6 guard); K must be the Laplacian pseudoinverse.
std::pair<IndexList, double> optimal_subset_laplacian(const DenseSym& K, const Vec& h, Index s);

// Gap between the optimal s-subset and the greedy prefix objective against
// (2+zeta) Tr[pinv(L)] exp(-(k-1)/((1+zeta) s)). When opt_value is absent it
// is recomputed by brute force from the dense pseudoinverse; prefixes
// shorter than s are reported but not gated.
BoundReport laplacian_bound_check(const select::SelectionResult& run,
                                  const laplacian::RescaledLaplacian& lap, Index s, double zeta,
                                  std::optional<double> opt_value = std::nullopt);

}  // namespace nucsel::bounds
