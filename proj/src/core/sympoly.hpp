// Elementary symmetric polynomials and the s-DPP expectation.
#pragma once

#include <vector>

#include "core/linops.hpp"

namespace nucsel::sympoly {

// Eigenvalues sorted descending. SPSD-derived spectra may carry tiny
// negative noise; construction clamps anything in [-tol*max, 0) to zero and
// rejects larger violations.
struct Spectrum {
  Vec values;

  Index size() const { return values.size(); }
};

Spectrum make_spectrum(Vec v, double tol_psd = 1e-10);

// e_0..e_kmax by the stable one-row recurrence e_k += x_i * e_{k-1},
// computed on x scaled by max|x_i| and rescaled on output. e_{n+1} and
// anything past it are zero by convention. Raw values can overflow to inf
// for n in the thousands; use elem_sym_log there.
std::vector<double> elem_sym(const Vec& x, Index k_max);

// log e_k (entries -inf where e_k = 0). Requires x >= 0 elementwise.
std::vector<double> elem_sym_log(const Vec& x, Index k_max);

// Sum of the r largest eigenvalues.
double partial_trace(const Spectrum& lam, Index r);

struct DppOptions {
  bool log_space = false;
  double rank_tol = 1e-12;  // relative threshold for counting nonzero eigenvalues
};

// D_s(Diag(lambda)) = e_1 - (s+1) e_{s+1}/e_s. When fewer than s
// eigenvalues are nonzero the expectation degenerates: with `degenerate`
// non-null the trace is returned and the flag set; otherwise this is a
// rank-deficiency error.
double dpp_expectation(const Spectrum& lam, Index s, bool* degenerate = nullptr,
                       const DppOptions& opts = {});

// Exact weighted average over all s-subsets (n <= 14 guard):
// sum_I L_K(I) det(K_II) / sum_I det(K_II).
double dpp_expectation_bruteforce(const DenseSym& K, Index s);

}  // namespace nucsel::sympoly
