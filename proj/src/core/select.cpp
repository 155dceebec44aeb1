#include "core/select.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "core/rng.hpp"

namespace nucsel::select {

namespace {

constexpr std::uint64_t kSampleStream = 0x5e1ec7;

// Column access plus the one full matvec per step that keeps w current.
struct Kernel {
  Index n = 0;
  Vec diag;
  Vec diag_sq;
  std::function<void(Index, Eigen::Ref<Vec>)> column;
  std::function<void(const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)> matvec;
};

Kernel make_kernel(const DenseSym& K) {
  Kernel k;
  k.n = K.dim();
  std::tie(k.diag, k.diag_sq) = diag_and_diag_sq(K);
  auto m = K.shared();
  k.column = [m](Index j, Eigen::Ref<Vec> out) { out = m->col(j); };
  k.matvec = [m](const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) {
    y.noalias() = (*m) * x;
  };
  return k;
}

Kernel make_kernel(const SparseMat& K) {
  require(K.rows() == K.cols(), "selection: kernel must be square");
  Kernel k;
  k.n = K.rows();
  std::tie(k.diag, k.diag_sq) = diag_and_diag_sq(K);
  auto m = K.shared();
  k.column = [m](Index j, Eigen::Ref<Vec> out) {
    out.setZero();
    for (SpMat::InnerIterator it(*m, j); it; ++it) out(it.row()) = it.value();
  };
  k.matvec = [m](const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) {
    y.noalias() = (*m) * x;
  };
  return k;
}

struct EngineConfig {
  Method method = Method::nuclear;
  Index k = 0;
  std::uint64_t seed = 0;
  SelectOptions opts;
};

struct EvalOutcome {
  bool ok = false;
  double value = 0.0;
  Index bad = -1;  // original index of the failing pivot
};

// Diagonally pivoted Cholesky sweep over a symmetric block; returns the local
// index of the first pivot at or below the relative floor, or -1 when the
// block is safely positive definite.
Index find_singular_pivot(const Mat& A) {
  const Index s = A.rows();
  Mat W = A;
  const double floor = 1e-12 * std::max(W.diagonal().maxCoeff(), 0.0);
  std::vector<char> done(static_cast<size_t>(s), 0);
  for (Index p = 0; p < s; ++p) {
    Index arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < s; ++r)
      if (!done[static_cast<size_t>(r)] && W(r, r) > best) {
        best = W(r, r);
        arg = r;
      }
    if (!(best > floor) || !(best > 0.0)) return arg;
    done[static_cast<size_t>(arg)] = 1;
    for (Index r = 0; r < s; ++r) {
      if (done[static_cast<size_t>(r)]) continue;
      const double f = W(r, arg) / best;
      for (Index c = 0; c < s; ++c)
        if (!done[static_cast<size_t>(c)]) W(r, c) -= f * W(arg, c);
    }
  }
  return -1;
}

// Singularity-checked objective Tr[(K^2)[I,I] inv(K[I,I])] from the full
// kernel and an index set.
EvalOutcome eval_objective(const Mat& Km, const IndexList& I) {
  const Index s = static_cast<Index>(I.size());
  EvalOutcome out;
  if (s == 0) {
    out.ok = true;
    return out;
  }
  Mat A(s, s);
  for (Index r = 0; r < s; ++r)
    for (Index c = 0; c < s; ++c) A(r, c) = Km(I[static_cast<size_t>(r)], I[static_cast<size_t>(c)]);
  A = 0.5 * (A + A.transpose()).eval();

  const Index bad = find_singular_pivot(A);
  if (bad >= 0) {
    out.bad = I[static_cast<size_t>(bad)];
    return out;
  }

  const Index n = Km.rows();
  Mat B(n, s);
  for (Index c = 0; c < s; ++c) B.col(c) = Km.col(I[static_cast<size_t>(c)]);
  const Mat G = B.transpose() * B;  // (K^2)[I,I]
  out.value = Eigen::LDLT<Mat>(A).solve(G).trace();
  out.ok = true;
  return out;
}

SelectionResult run_greedy(const Kernel& K, const EngineConfig& cfg) {
  const Index n = K.n;
  const Index k = cfg.k;
  require(k >= 0, "selection: k must be nonnegative");
  require(k <= n, "selection: k exceeds the kernel dimension");

  CholeskyState st;
  st.n = n;
  st.k_max = k;
  st.U = Mat::Zero(k, n);
  st.S = Mat::Zero(n, k);
  st.d = K.diag;
  st.w = K.diag_sq;

  Mat B = Mat::Zero(n, k);  // cached kernel columns, one per factor step
  std::vector<char> taken(static_cast<size_t>(n), 0);
  const Vec guard_floor = cfg.opts.pivot_guard * K.diag;

  SelectionResult res;
  res.method = cfg.method;
  res.seed = cfg.seed;
  res.n = n;
  res.trace = K.diag.sum();

  IndexList drawn;
  if (cfg.method == Method::uniform) drawn = uniform_sample(n, k, cfg.seed);
  Rng rng(cfg.seed, kSampleStream);

  std::vector<double> gains, objective;
  gains.reserve(static_cast<size_t>(k));
  objective.reserve(static_cast<size_t>(k));
  Vec kst(n), proj(n);
  double obj = 0.0;

  auto candidate = [&](Index j) {
    return !taken[static_cast<size_t>(j)] && st.d[j] > 0.0 && st.d[j] >= guard_floor[j];
  };
  auto stop_early = [&](const char* why) {
    std::ostringstream msg;
    msg << why << " after " << res.indices.size() << " of " << k << " selections";
    res.early_stop = true;
    res.diagnostic = msg.str();
  };

  for (Index step = 0; step < k; ++step) {
    Index j = -1;
    bool factor = true;

    switch (cfg.method) {
      case Method::nuclear: {
        ArgMax pick(cfg.opts.tie_rel);
        for (Index c = 0; c < n; ++c)
          if (candidate(c)) pick.offer(c, st.w[c] / st.d[c]);
        if (!pick.found()) {
          stop_early("all candidates excluded by the pivot guard");
          break;
        }
        j = pick.index();
        break;
      }
      case Method::diag_max: {
        ArgMax pick(cfg.opts.tie_rel);
        for (Index c = 0; c < n; ++c)
          if (candidate(c)) pick.offer(c, st.d[c]);
        if (!pick.found()) {
          stop_early("all candidates excluded by the pivot guard");
          break;
        }
        j = pick.index();
        break;
      }
      case Method::diag_sample: {
        double total = 0.0;
        for (Index c = 0; c < n; ++c)
          if (candidate(c)) total += st.d[c];
        if (step == 0)
          require(total > 0.0, "diagonal_sample: diagonal mass is nonpositive");
        if (!(total > 0.0)) {
          stop_early("candidate diagonal mass exhausted");
          break;
        }
        const double r = rng.uniform() * total;
        double acc = 0.0;
        for (Index c = 0; c < n; ++c) {
          if (!candidate(c)) continue;
          j = c;
          acc += st.d[c];
          if (r < acc) break;
        }
        break;
      }
      case Method::uniform: {
        j = drawn[static_cast<size_t>(step)];
        // A drawn column already explained to guard precision stays in the
        // reported subset with zero gain but skips the factor update.
        if (!candidate(j)) factor = false;
        break;
      }
    }
    if (res.early_stop) break;

    if (factor) {
      const Index t = st.steps();
      const double pivot = st.d[j];
      const double gain = st.w[j] / pivot;
      K.column(j, B.col(t));
      cholesky_extend(st, j, pivot, B.leftCols(t + 1));
      const auto s_t = st.S.col(t);
      st.d -= s_t.cwiseAbs2();
      K.matvec(s_t, kst);
      const Vec coef = st.S.leftCols(t + 1).transpose() * s_t;
      proj.noalias() = st.S.leftCols(t + 1) * coef;
      st.w += s_t.cwiseProduct(2.0 * proj - 2.0 * kst - coef[t] * s_t);
      obj += gain;
      gains.push_back(gain);
    } else {
      gains.push_back(0.0);
    }
    taken[static_cast<size_t>(j)] = 1;
    res.indices.push_back(j);

    if (cfg.opts.debug && st.steps() > 0) {
      obj = objective_from_columns(B.leftCols(st.steps()), st.selected);
      gains.back() = obj - (objective.empty() ? 0.0 : objective.back());
    }
    objective.push_back(obj);
  }

  const Index done = static_cast<Index>(res.indices.size());
  res.gains = Eigen::Map<const Vec>(gains.data(), done);
  res.objective = Eigen::Map<const Vec>(objective.data(), done);
  res.residual_trace = (res.trace - res.objective.array()).matrix();
  if (cfg.opts.keep_state) res.state = std::make_shared<const CholeskyState>(std::move(st));
  return res;
}

SelectionResult run_for(const Kernel& kernel, Method m, Index k, std::uint64_t seed,
                        const SelectOptions& opts) {
  EngineConfig cfg;
  cfg.method = m;
  cfg.k = k;
  cfg.seed = seed;
  cfg.opts = opts;
  return run_greedy(kernel, cfg);
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::nuclear:
      return "nuclear";
    case Method::diag_max:
      return "diag-max";
    case Method::diag_sample:
      return "diag-sample";
    case Method::uniform:
      return "uniform";
  }
  return "unknown";
}

void ArgMax::offer(Index j, double value) {
  if (!std::isfinite(value)) return;
  if (best_ < 0) {
    best_ = j;
    value_ = value;
    return;
  }
  if (value > value_ &&
      value - value_ > tie_rel_ * std::max(std::abs(value), std::abs(value_))) {
    best_ = j;
    value_ = value;
  }
}

double objective_eval(const DenseSym& K, const IndexList& I) {
  const Index n = K.dim();
  std::vector<char> seen(static_cast<size_t>(n), 0);
  for (Index i : I) {
    require(i >= 0 && i < n, "objective_eval: index out of range");
    require(!seen[static_cast<size_t>(i)], "objective_eval: duplicate index in I");
    seen[static_cast<size_t>(i)] = 1;
  }
  const EvalOutcome out = eval_objective(K.mat(), I);
  if (!out.ok)
    fail("objective_eval: K[I,I] is numerically singular at pivot index " +
         std::to_string(out.bad));
  return out.value;
}

double objective_from_columns(const Eigen::Ref<const Mat>& cols, const IndexList& I) {
  const Index t = static_cast<Index>(I.size());
  require(cols.cols() == t, "objective_from_columns: one column per index required");
  if (t == 0) return 0.0;
  Mat Ksub(t, t);
  for (Index r = 0; r < t; ++r)
    for (Index c = 0; c < t; ++c) Ksub(r, c) = cols(I[static_cast<size_t>(r)], c);
  Ksub = 0.5 * (Ksub + Ksub.transpose()).eval();
  require(find_singular_pivot(Ksub) < 0,
          "objective_from_columns: singular principal block");
  const Mat G = cols.transpose() * cols;
  return Eigen::LDLT<Mat>(Ksub).solve(G).trace();
}

SelectionResult nuclear_max(const DenseSym& K, Index k, const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::nuclear, k, 0, opts);
}

SelectionResult nuclear_max(const SparseMat& K, Index k, const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::nuclear, k, 0, opts);
}

SelectionResult nuclear_max(const FactoredOperator& ops, const Vec& diag, const Vec& diag_sq,
                            Index k, const SelectOptions& opts) {
  require(ops.K != nullptr, "nuclear_max: factored operator is incomplete");
  const Index n = ops.K->rows();
  require(ops.K->cols() == n, "nuclear_max: operator must be square");
  require(diag.size() == n && diag_sq.size() == n, "nuclear_max: diagonal size mismatch");
  Kernel kernel;
  kernel.n = n;
  kernel.diag = diag;
  kernel.diag_sq = diag_sq;
  const OpPtr op = ops.K;
  kernel.column = [op, n](Index j, Eigen::Ref<Vec> out) {
    Vec e = Vec::Zero(n);
    e[j] = 1.0;
    op->apply(e, out);
  };
  kernel.matvec = [op](const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) { op->apply(x, y); };
  return run_for(kernel, Method::nuclear, k, 0, opts);
}

SelectionResult diagonal_max(const DenseSym& K, Index k, const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::diag_max, k, 0, opts);
}

SelectionResult diagonal_max(const SparseMat& K, Index k, const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::diag_max, k, 0, opts);
}

SelectionResult diagonal_sample(const DenseSym& K, Index k, std::uint64_t seed,
                                const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::diag_sample, k, seed, opts);
}

SelectionResult diagonal_sample(const SparseMat& K, Index k, std::uint64_t seed,
                                const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::diag_sample, k, seed, opts);
}

IndexList uniform_sample(Index n, Index k, std::uint64_t seed) {
  require(n >= 0, "uniform_sample: n must be nonnegative");
  require(k >= 0 && k <= n, "uniform_sample: need 0 <= k <= n");
  std::vector<Index> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  Rng rng(seed, kSampleStream);
  IndexList out;
  out.reserve(static_cast<size_t>(k));
  for (Index t = 0; t < k; ++t) {
    const Index r = t + static_cast<Index>(rng.below(static_cast<uint64_t>(n - t)));
    std::swap(pool[static_cast<size_t>(t)], pool[static_cast<size_t>(r)]);
    out.push_back(pool[static_cast<size_t>(t)]);
  }
  return out;
}

SelectionResult uniform_sample(const DenseSym& K, Index k, std::uint64_t seed,
                               const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::uniform, k, seed, opts);
}

SelectionResult uniform_sample(const SparseMat& K, Index k, std::uint64_t seed,
                               const SelectOptions& opts) {
  return run_for(make_kernel(K), Method::uniform, k, seed, opts);
}

std::pair<IndexList, double> optimal_subset_bruteforce(const DenseSym& K, Index s) {
  const Index n = K.dim();
  require(s >= 0 && s <= n, "optimal_subset_bruteforce: need 0 <= s <= n");
  double combos = 1.0;
  for (Index i = 0; i < s; ++i) combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  require(combos <= 1e6, "optimal_subset_bruteforce: C(n,s) exceeds the 1e6 guard");
  if (s == 0) return {IndexList{}, 0.0};

  IndexList comb(static_cast<size_t>(s));
  std::iota(comb.begin(), comb.end(), Index{0});
  IndexList best;
  double best_val = -1.0;
  for (;;) {
    const EvalOutcome out = eval_objective(K.mat(), comb);
    if (out.ok && out.value > best_val) {
      best_val = out.value;
      best = comb;
    }
    Index i = s - 1;
    while (i >= 0 && comb[static_cast<size_t>(i)] == n - s + i) --i;
    if (i < 0) break;
    ++comb[static_cast<size_t>(i)];
    for (Index r = i + 1; r < s; ++r)
      comb[static_cast<size_t>(r)] = comb[static_cast<size_t>(r - 1)] + 1;
  }
  require(best_val >= 0.0,
          "optimal_subset_bruteforce: every subset was numerically singular");
  return {best, best_val};
}

SelectionResult nuclear_max_reference(const DenseSym& K, Index k) {
  const Index n = K.dim();
  require(k >= 0 && k <= n, "nuclear_max_reference: need 0 <= k <= n");
  SelectionResult res;
  res.method = Method::nuclear;
  res.n = n;
  res.trace = K.mat().trace();

  std::vector<char> taken(static_cast<size_t>(n), 0);
  IndexList I;
  std::vector<double> gains, objective;
  double cur = 0.0;
  for (Index step = 0; step < k; ++step) {
    ArgMax pick(1e-12);
    for (Index j = 0; j < n; ++j) {
      if (taken[static_cast<size_t>(j)]) continue;
      IndexList trial = I;
      trial.push_back(j);
      const EvalOutcome out = eval_objective(K.mat(), trial);
      if (!out.ok) continue;
      pick.offer(j, out.value - cur);
    }
    if (!pick.found()) {
      res.early_stop = true;
      res.diagnostic = "all candidates numerically singular";
      break;
    }
    const Index j = pick.index();
    taken[static_cast<size_t>(j)] = 1;
    I.push_back(j);
    cur += pick.value();
    gains.push_back(pick.value());
    objective.push_back(cur);
  }
  res.indices = I;
  const Index done = static_cast<Index>(I.size());
  res.gains = Eigen::Map<const Vec>(gains.data(), done);
  res.objective = Eigen::Map<const Vec>(objective.data(), done);
  res.residual_trace = (res.trace - res.objective.array()).matrix();
  return res;
}

void cholesky_extend(CholeskyState& st, Index j, double pivot,
                     const Eigen::Ref<const Mat>& cols) {
  const Index t = st.steps();
  require(t < st.k_max, "cholesky_extend: state is full");
  require(j >= 0 && j < st.n, "cholesky_extend: index out of range");
  require(pivot > 0.0, "cholesky_extend: nonpositive pivot");
  require(cols.rows() == st.n && cols.cols() == t + 1,
          "cholesky_extend: column cache shape mismatch");

  st.U(t, j) = 1.0;
  st.U.col(j).head(t + 1) /= std::sqrt(pivot);
  const Vec u = st.U.col(j).head(t + 1);
  st.S.col(t).noalias() = -(cols * u);

  // The rank-one update below must leave the columns of already selected
  // indices (and of j itself) untouched; save and restore them.
  Mat saved(t + 1, t + 1);
  for (Index c = 0; c < t; ++c)
    saved.col(c) = st.U.col(st.selected[static_cast<size_t>(c)]).head(t + 1);
  saved.col(t) = st.U.col(j).head(t + 1);
  st.U.topRows(t + 1).noalias() += u * st.S.col(t).transpose();
  for (Index c = 0; c < t; ++c)
    st.U.col(st.selected[static_cast<size_t>(c)]).head(t + 1) = saved.col(c);
  st.U.col(j).head(t + 1) = saved.col(t);

  st.selected.push_back(j);
}

}  // namespace nucsel::select
