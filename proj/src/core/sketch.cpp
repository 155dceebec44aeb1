#include "core/sketch.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <utility>

namespace nucsel::sketch {

namespace {
constexpr std::uint64_t kSketchStream = 0x57e7c4;
constexpr std::uint64_t kPickStream = 0x9a3b1e;
}  // namespace

Vec estimate_diag(const LinearOperator& y_op, Index z, Rng& rng) {
  require(z >= 1, "estimate_diag: z must be at least 1");
  const Mat Z = rng.gaussian_matrix(y_op.cols(), z);
  const Mat Y = matmat(y_op, Z);
  return Y.rowwise().squaredNorm() / static_cast<double>(z);
}

Vec estimate_diag(const LinearOperator& y_op, Index z, std::uint64_t seed) {
  Rng rng(seed, kSketchStream);
  return estimate_diag(y_op, z, rng);
}

ScoreEstimate randomized_scores(const select::CholeskyState& state, const FactoredOperator& ops,
                                Index z, Rng& rng) {
  require(z >= 1, "randomized_scores: z must be at least 1");
  require(ops.K && ops.C, "randomized_scores: factored operator is incomplete");
  const Index n = ops.K->rows();
  require(ops.C->rows() == n, "randomized_scores: K and C row counts differ");
  const Index t = state.steps();

  const Mat Z1 = rng.gaussian_matrix(ops.C->cols(), z);
  Mat D = matmat(*ops.C, Z1);
  const Mat Z2 = rng.gaussian_matrix(n, z);
  Mat N = matmat(*ops.K, Z2);

  if (t > 0) {
    Mat u_sel(t, t), d_sel(t, z), n_sel(t, z);
    for (Index c = 0; c < t; ++c) {
      const Index idx = state.selected[static_cast<size_t>(c)];
      u_sel.col(c) = state.U.col(idx).head(t);
      d_sel.row(c) = D.row(idx);
      n_sel.row(c) = N.row(idx);
    }
    D.noalias() += state.S.leftCols(t) * (u_sel.transpose() * d_sel);
    N.noalias() += state.S.leftCols(t) * (u_sel.transpose() * n_sel);
  }

  ScoreEstimate est;
  est.numerator = N.rowwise().squaredNorm() / static_cast<double>(z);
  est.denominator = D.rowwise().squaredNorm() / static_cast<double>(z);
  est.z = z;
  return est;
}

ScoreEstimate randomized_scores(const select::CholeskyState& state, const FactoredOperator& ops,
                                Index z, std::uint64_t seed) {
  Rng rng(seed, kSketchStream);
  ScoreEstimate est = randomized_scores(state, ops, z, rng);
  est.seed = seed;
  return est;
}

namespace {

enum class MfMode { nuclear, diag_max, diag_sample };

select::SelectionResult run_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                        std::uint64_t seed, const select::SelectOptions& opts,
                                        MfMode mode) {
  require(ops.K && ops.C, "matrix-free selection: factored operator is incomplete");
  const Index n = ops.K->rows();
  require(ops.K->cols() == n && ops.C->rows() == n,
          "matrix-free selection: operator dimensions are inconsistent");
  require(k >= 0 && k <= n, "matrix-free selection: need 0 <= k <= n");
  require(z >= 1, "matrix-free selection: z must be at least 1");

  Rng score_rng(seed, kSketchStream);
  Rng pick_rng(seed, kPickStream);

  select::CholeskyState st;
  st.n = n;
  st.k_max = k;
  st.U = Mat::Zero(k, n);
  st.S = Mat::Zero(n, k);

  select::SelectionResult res;
  res.method = mode == MfMode::nuclear
                   ? select::Method::nuclear
                   : (mode == MfMode::diag_max ? select::Method::diag_max
                                               : select::Method::diag_sample);
  res.seed = seed;
  res.z = z;
  res.n = n;

  Mat B = Mat::Zero(n, k);
  std::vector<char> taken(static_cast<size_t>(n), 0);
  std::vector<double> gains, objective;
  Vec ej = Vec::Zero(n);

  for (Index t = 0; t < k; ++t) {
    ScoreEstimate est = randomized_scores(st, ops, z, score_rng);
    est.seed = seed;
    est.iteration = static_cast<std::uint64_t>(t);
    if (t == 0) res.trace = est.denominator.sum();

    Index j = -1;
    if (mode == MfMode::diag_sample) {
      double total = 0.0;
      for (Index i = 0; i < n; ++i)
        if (!taken[static_cast<size_t>(i)]) total += est.denominator[i];
      require(total > 0.0, "matrix-free selection: sampled diagonal estimate vanished");
      double u = pick_rng.uniform_pos() * total;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<size_t>(i)]) continue;
        u -= est.denominator[i];
        if (u <= 0.0) {
          j = i;
          break;
        }
      }
      if (j < 0)
        for (Index i = n - 1; i >= 0; --i)
          if (!taken[static_cast<size_t>(i)]) {
            j = i;
            break;
          }
    } else {
      select::ArgMax pick(opts.tie_rel);
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<size_t>(i)]) continue;
        if (mode == MfMode::nuclear)
          pick.offer(i, est.numerator[i] / est.denominator[i]);
        else
          pick.offer(i, est.denominator[i]);
      }
      require(pick.found(), "matrix-free selection: no finite scores to select from");
      j = pick.index();
    }

    ej[j] = 1.0;
    const Vec kcol = matvec(*ops.K, ej);
    ej[j] = 0.0;
    const double pivot = kcol[j] - st.S.row(j).head(t).squaredNorm();
    if (!(pivot > 0.0)) {
      std::ostringstream msg;
      msg << "matrix-free selection: residual pivot for index " << j << " is " << pivot
          << " at step " << t << "; numerical breakdown";
      fail(msg.str());
    }

    B.col(t) = kcol;
    select::cholesky_extend(st, j, pivot, B.leftCols(t + 1));
    taken[static_cast<size_t>(j)] = 1;
    res.indices.push_back(j);
    const double obj = select::objective_from_columns(B.leftCols(t + 1), st.selected);
    gains.push_back(obj - (objective.empty() ? 0.0 : objective.back()));
    objective.push_back(obj);
  }

  const Index done = static_cast<Index>(res.indices.size());
  res.gains = Eigen::Map<const Vec>(gains.data(), done);
  res.objective = Eigen::Map<const Vec>(objective.data(), done);
  res.residual_trace = (res.trace - res.objective.array()).matrix();
  if (opts.keep_state)
    res.state = std::make_shared<const select::CholeskyState>(std::move(st));
  return res;
}

}  // namespace

select::SelectionResult nuclear_max_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                std::uint64_t seed,
                                                const select::SelectOptions& opts) {
  return run_matrix_free(ops, k, z, seed, opts, MfMode::nuclear);
}

select::SelectionResult diagonal_max_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                 std::uint64_t seed,
                                                 const select::SelectOptions& opts) {
  return run_matrix_free(ops, k, z, seed, opts, MfMode::diag_max);
}

select::SelectionResult diagonal_sample_matrix_free(const FactoredOperator& ops, Index k, Index z,
                                                    std::uint64_t seed,
                                                    const select::SelectOptions& opts) {
  return run_matrix_free(ops, k, z, seed, opts, MfMode::diag_sample);
}

FactoredOperator dense_kernel_operators(Mat K, double shift_rel) {
  const Index n = K.rows();
  require(K.cols() == n && n >= 1, "dense_kernel_operators: kernel must be square");
  require(shift_rel >= 0.0, "dense_kernel_operators: shift must be nonnegative");
  const double shift = shift_rel * K.diagonal().mean();
  K.diagonal().array() += shift;

  auto storage = std::make_shared<Mat>(std::move(K));
  Eigen::LLT<Eigen::Ref<Mat>> llt(*storage);
  require(llt.info() == Eigen::Success,
          "dense_kernel_operators: Cholesky failed; the kernel needs a larger shift");

  FactoredOperator fo;
  fo.C = lower_triangular_op(storage);
  const OpPtr ct = lower_triangular_op(storage, /*transpose=*/true);
  fo.K = chain_op({fo.C, ct});
  fo.exact = true;
  return fo;
}

}  // namespace nucsel::sketch
