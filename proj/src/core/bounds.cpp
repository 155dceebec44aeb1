#include "core/bounds.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace nucsel::bounds {

LpBound lp_bound_general(const std::vector<double>& f) {
  LpBound b;
  double inv_sum = 0.0;
  for (const double ft : f) {
    require(ft > 1.0, "lp_bound_general: every coefficient must exceed 1");
    b.exact *= 1.0 - 1.0 / ft;
    inv_sum += 1.0 / ft;
  }
  b.exponential = std::exp(-inv_sum);
  return b;
}

double lp_bound_accumulated(double f_next, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "lp_bound_accumulated: need 0 < alpha < 1");
  require(f_next > 1.0, "lp_bound_accumulated: coefficient must exceed 1");
  const double af = alpha * f_next;
  return af / (1.0 + af);
}

double lp_bound_initial(const std::vector<double>& f_tail, double beta) {
  require(beta > 0.0 && beta < 1.0, "lp_bound_initial: need 0 < beta < 1");
  require(!f_tail.empty(), "lp_bound_initial: need at least f_{k+1}");
  double prod_inv = 1.0;  // prod (1 - 1/f_j)^{-1} over all but the last entry
  for (size_t i = 0; i + 1 < f_tail.size(); ++i) {
    require(f_tail[i] > 1.0, "lp_bound_initial: every coefficient must exceed 1");
    prod_inv /= 1.0 - 1.0 / f_tail[i];
  }
  const double f_next = f_tail.back();
  require(f_next > 1.0, "lp_bound_initial: every coefficient must exceed 1");
  return 1.0 / (prod_inv + 1.0 / (beta * f_next));
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string BoundReport::csv_header() {
  return "label,k,s,zeta,r_ref,alpha,beta,measured_gap,bound_value,nu,eta,omega,eps,"
         "min_step_residual,satisfied";
}

std::string BoundReport::to_csv_row() const {
  std::ostringstream os;
  os << label << ',' << k << ',' << s << ',' << fmt(zeta) << ',' << fmt(r_ref) << ','
     << fmt(alpha) << ',' << fmt(beta) << ',' << fmt(measured_gap) << ',' << fmt(bound_value)
     << ',' << fmt(nu) << ',' << fmt(eta) << ',' << fmt(omega) << ',' << fmt(eps) << ','
     << fmt(step_residuals.size() > 0 ? step_residuals.minCoeff()
                                      : std::numeric_limits<double>::quiet_NaN())
     << ',' << (satisfied ? "true" : "false");
  return os.str();
}

std::string BoundReport::to_text() const {
  std::ostringstream os;
  os << "check " << label << ": k=" << k << " s=" << s << " zeta=" << zeta << '\n'
     << "  reference " << r_ref << ", measured gap " << measured_gap << ", bound "
     << bound_value << '\n';
  if (step_residuals.size() > 0)
    os << "  min per-step slack " << step_residuals.minCoeff() << '\n';
  os << "  " << (satisfied ? "SATISFIED" : "VIOLATED") << '\n';
  return os.str();
}

BoundReport dpp_discrepancy_check(const select::SelectionResult& run,
                                  const sympoly::Spectrum& lam, Index s, double zeta) {
  require(s >= 1, "dpp_discrepancy_check: need s >= 1");
  require(zeta >= 0.0, "dpp_discrepancy_check: zeta must be nonnegative");
  const Index k = run.objective.size();
  require(k >= 1, "dpp_discrepancy_check: run is empty");

  BoundReport rep;
  rep.label = "dpp-discrepancy";
  rep.k = k;
  rep.s = s;
  rep.zeta = zeta;
  rep.r_ref = sympoly::dpp_expectation(lam, s);
  rep.f = Vec::Constant(k, (1.0 + zeta) * static_cast<double>(s));

  const double tol = 1e-10 * std::abs(rep.r_ref);
  rep.prefix_gap.resize(k);
  rep.prefix_bound.resize(k);
  rep.step_residuals.resize(k);
  rep.satisfied = true;
  double acc = 0.0;
  for (Index t = 0; t < k; ++t) {
    rep.prefix_gap[t] = 1.0 - run.objective[t] / rep.r_ref;
    rep.prefix_bound[t] =
        std::exp(-static_cast<double>(t + 1) / ((1.0 + zeta) * static_cast<double>(s)));
    if (rep.prefix_gap[t] > rep.prefix_bound[t] + tol) rep.satisfied = false;
    rep.step_residuals[t] = acc + rep.f[t] * run.gains[t] - rep.r_ref;
    acc += run.gains[t];
  }
  rep.measured_gap = rep.prefix_gap[k - 1];
  rep.bound_value = rep.prefix_bound[k - 1];

  const double trace = lam.values.sum();
  const double top_s = sympoly::partial_trace(lam, s);
  if (top_s > 0.0) {
    rep.eta = 1.0 - top_s / trace;
    rep.nu = (trace - top_s) / top_s;
  }
  return rep;
}

ReBound re_bound_columns(double r, double eps, double nu, double zeta) {
  require(r >= 1.0, "re_bound_columns: need r >= 1");
  require(eps > 0.0, "re_bound_columns: need eps > 0");
  require(nu > 0.0, "re_bound_columns: need nu > 0");
  require(zeta >= 0.0, "re_bound_columns: zeta must be nonnegative");
  const double inner = 1.0 / eps - 1.0 / r + 1.0;
  require(inner > 0.0, "re_bound_columns: parameters leave the bound undefined");
  ReBound out;
  out.dpp_s = r / eps + r - 1.0;
  const double value = (1.0 + zeta) * out.dpp_s * (std::log(1.0 / nu) + std::log(inner));
  out.columns = std::max(r, value);
  return out;
}

std::pair<IndexList, double> optimal_subset_laplacian(const DenseSym& K, const Vec& h,
                                                      Index s) {
  const Index n = K.dim();
  require(s >= 1 && s <= n, "optimal_subset_laplacian: need 1 <= s <= n");
  double combos = 1.0;
  for (Index i = 0; i < s; ++i)
    combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  require(combos <= 1e6, "optimal_subset_laplacian: C(n,s) exceeds the 1e6 guard");

  IndexList comb(static_cast<size_t>(s));
  std::iota(comb.begin(), comb.end(), Index{0});
  IndexList best;
  double best_val = -std::numeric_limits<double>::infinity();
  for (;;) {
    double val;
    bool ok = true;
    try {
      val = laplacian::laplacian_objective_eval(K, h, comb);
    } catch (const Error&) {
      ok = false;
      val = 0.0;
    }
    if (ok && val > best_val) {
      best_val = val;
      best = comb;
    }
    Index i = s - 1;
    while (i >= 0 && comb[static_cast<size_t>(i)] == n - s + i) --i;
    if (i < 0) break;
    ++comb[static_cast<size_t>(i)];
    for (Index r = i + 1; r < s; ++r)
      comb[static_cast<size_t>(r)] = comb[static_cast<size_t>(r - 1)] + 1;
  }
  require(!best.empty(), "optimal_subset_laplacian: every subset was numerically singular");
  return {best, best_val};
}

BoundReport laplacian_bound_check(const select::SelectionResult& run,
                                  const laplacian::RescaledLaplacian& lap, Index s, double zeta,
                                  std::optional<double> opt_value) {
  require(s >= 1, "laplacian_bound_check: need s >= 1");
  require(zeta >= 0.0, "laplacian_bound_check: zeta must be nonnegative");
  const Index k = run.objective.size();
  require(k >= 1, "laplacian_bound_check: run is empty");

  const DenseSym K = laplacian::dense_pinv(lap);
  const double trace_pinv = K.mat().trace();
  double opt;
  if (opt_value.has_value()) {
    opt = *opt_value;
  } else {
    opt = optimal_subset_laplacian(K, lap.h(), s).second;
  }

  BoundReport rep;
  rep.label = "laplacian-gap";
  rep.k = k;
  rep.s = s;
  rep.zeta = zeta;
  rep.r_ref = opt;
  rep.f = Vec::Constant(k, (1.0 + zeta) * static_cast<double>(s));

  const double tol = 1e-10 * std::abs(opt);
  rep.prefix_gap.resize(k);
  rep.prefix_bound.resize(k);
  rep.satisfied = true;
  for (Index t = 0; t < k; ++t) {
    rep.prefix_gap[t] = opt - run.objective[t];
    rep.prefix_bound[t] =
        (2.0 + zeta) * trace_pinv *
        std::exp(-static_cast<double>(t) / ((1.0 + zeta) * static_cast<double>(s)));
    if (t + 1 >= s && rep.prefix_gap[t] > rep.prefix_bound[t] + tol) rep.satisfied = false;
  }
  rep.measured_gap = rep.prefix_gap[k - 1];
  rep.bound_value = rep.prefix_bound[k - 1];
  return rep;
}

}  // namespace nucsel::bounds
