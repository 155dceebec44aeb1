#include "core/sympoly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nucsel::sympoly {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Scaled recurrence shared by elem_sym and dpp_expectation: returns
// e_k / scale^k for k = 0..k_max.
std::vector<double> elem_sym_scaled(const Vec& x, Index k_max, double* scale_out) {
  const Index n = x.size();
  double scale = n > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) scale = 1.0;
  *scale_out = scale;
  std::vector<double> e(static_cast<size_t>(k_max) + 1, 0.0);
  e[0] = 1.0;
  for (Index i = 0; i < n; ++i) {
    const double xi = x[i] / scale;
    const Index top = std::min<Index>(k_max, i + 1);
    for (Index k = top; k >= 1; --k) e[k] += xi * e[k - 1];
  }
  return e;
}

}  // namespace

Spectrum make_spectrum(Vec v, double tol_psd) {
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  if (v.size() > 0) {
    const double top = std::max(std::abs(v[0]), 1e-300);
    const double min = v[v.size() - 1];
    require(min >= -tol_psd * top, "make_spectrum: spectrum has a significantly negative value");
    for (Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  }
  return Spectrum{std::move(v)};
}

std::vector<double> elem_sym(const Vec& x, Index k_max) {
  require(k_max >= 0 && k_max <= x.size() + 1, "elem_sym: k_max out of range");
  double scale = 1.0;
  std::vector<double> e = elem_sym_scaled(x, k_max, &scale);
  double pw = 1.0;
  for (Index k = 1; k <= k_max; ++k) {
    pw *= scale;
    e[k] *= pw;
  }
  return e;
}

std::vector<double> elem_sym_log(const Vec& x, Index k_max) {
  require(k_max >= 0 && k_max <= x.size() + 1, "elem_sym_log: k_max out of range");
  require((x.array() >= 0).all(), "elem_sym_log: requires nonnegative input");
  std::vector<double> le(static_cast<size_t>(k_max) + 1, kNegInf);
  le[0] = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    const double lx = std::log(x[i]);
    const Index top = std::min<Index>(k_max, i + 1);
    for (Index k = top; k >= 1; --k) le[k] = log_add(le[k], lx + le[k - 1]);
  }
  return le;
}

double partial_trace(const Spectrum& lam, Index r) {
  require(r >= 0 && r <= lam.size(), "partial_trace: rank out of range");
  return lam.values.head(r).sum();
}

double dpp_expectation(const Spectrum& lam, Index s, bool* degenerate, const DppOptions& opts) {
  const Index n = lam.size();
  require(s >= 0 && s <= n, "dpp_expectation: subset size out of range");
  require(n == 0 || lam.values.minCoeff() >= 0.0, "dpp_expectation: negative eigenvalue");
  if (degenerate) *degenerate = false;
  if (s == 0) return 0.0;

  const double trace = lam.values.sum();
  const double top = n > 0 ? lam.values[0] : 0.0;
  Index rank = 0;
  for (Index i = 0; i < n; ++i)
    if (lam.values[i] > opts.rank_tol * top) ++rank;
  if (rank < s) {
    // Fewer than s nonzero eigenvalues: every admissible subset captures the
    // whole trace, which is the limiting value of the closed form.
    if (degenerate) {
      *degenerate = true;
      return trace;
    }
    fail("dpp_expectation: rank deficient (e_s = 0)");
  }
  if (s == n) return trace;

  if (opts.log_space) {
    std::vector<double> le = elem_sym_log(lam.values, s + 1);
    if (le[s + 1] == kNegInf) return trace;
    return trace - (s + 1) * std::exp(le[s + 1] - le[s]);
  }
  double scale = 1.0;
  std::vector<double> e = elem_sym_scaled(lam.values, s + 1, &scale);
  require(e[s] > 0, "dpp_expectation: e_s underflowed; use the log-space option");
  return trace - (s + 1) * scale * (e[s + 1] / e[s]);
}

double dpp_expectation_bruteforce(const DenseSym& K, Index s) {
  const Index n = K.dim();
  require(n <= 14, "dpp_expectation_bruteforce: n exceeds the combinatorial guard");
  require(s >= 0 && s <= n, "dpp_expectation_bruteforce: subset size out of range");
  if (s == 0) return 0.0;

  const Mat& M = K.mat();
  std::vector<Index> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  double num = 0.0, den = 0.0;
  while (true) {
    Mat sub(s, s);
    Mat cols(n, s);
    for (Index a = 0; a < s; ++a) {
      cols.col(a) = M.col(idx[a]);
      for (Index b = 0; b < s; ++b) sub(a, b) = M(idx[a], idx[b]);
    }
    const double det = sub.fullPivLu().determinant();
    const double obj = sub.ldlt().solve(cols.transpose() * cols).trace();
    num += obj * det;
    den += det;

    Index i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Index j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  require(den > 0, "dpp_expectation_bruteforce: all subset determinants vanish");
  return num / den;
}

}  // namespace nucsel::sympoly
