#include "nucsel.h"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "build_info.hpp"
#include "core/bounds.hpp"
#include "core/cur.hpp"
#include "core/gen.hpp"
#include "core/laplacian.hpp"
#include "core/linops.hpp"
#include "core/mmio.hpp"
#include "core/rng.hpp"
#include "core/select.hpp"
#include "core/sketch.hpp"
#include "core/sympoly.hpp"

using namespace nucsel;

struct nucsel_dense {
  DenseSym v;
};
struct nucsel_sparse {
  SparseMat v;
};
struct nucsel_laplacian {
  laplacian::RescaledLaplacian v;
};
struct nucsel_precon {
  laplacian::PreconFactor v;
};
struct nucsel_result {
  select::SelectionResult v;
};
struct nucsel_cur_result {
  cur::CURResult v;
  nucsel_result row_wrap;
  nucsel_result col_wrap;
};

namespace {

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p != nullptr) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <typename F>
int guarded(char** err, F&& fn) {
  try {
    fn();
    return 0;
  } catch (const std::exception& e) {
    if (err != nullptr) *err = dup_string(e.what());
    return 1;
  } catch (...) {
    if (err != nullptr) *err = dup_string("nucsel: unknown failure");
    return 1;
  }
}

select::Method method_from_name(const char* name) {
  const std::string m = name == nullptr ? "" : name;
  if (m == "nuclear") return select::Method::nuclear;
  if (m == "diag-max") return select::Method::diag_max;
  if (m == "diag-sample") return select::Method::diag_sample;
  if (m == "uniform") return select::Method::uniform;
  fail("unknown method '" + m + "'; expected nuclear, diag-max, diag-sample, or uniform");
}

}  // namespace

extern "C" {

void nucsel_free_buffer(void* p) { std::free(p); }
void nucsel_dense_free(nucsel_dense* h) { delete h; }
void nucsel_sparse_free(nucsel_sparse* h) { delete h; }
void nucsel_laplacian_free(nucsel_laplacian* h) { delete h; }
void nucsel_precon_free(nucsel_precon* h) { delete h; }
void nucsel_result_free(nucsel_result* h) { delete h; }
void nucsel_cur_result_free(nucsel_cur_result* h) { delete h; }

const char* nucsel_build_id(void) { return kBuildId; }

/* ------------------------------------------------------------------- I/O */

int nucsel_dense_load(const char* path, nucsel_dense** out, char** err) {
  return guarded(err, [&] {
    Mat m = mmio::read_dense(path);
    require(m.rows() == m.cols(), "dense kernel file must be square");
    *out = new nucsel_dense{DenseSym(std::move(m))};
  });
}

int nucsel_dense_save(const char* path, const nucsel_dense* h, char** err) {
  return guarded(err, [&] { mmio::write_dense(path, h->v.mat(), /*symmetric=*/true); });
}

int nucsel_sparse_load(const char* path, nucsel_sparse** out, char** err) {
  return guarded(err, [&] { *out = new nucsel_sparse{mmio::read_sparse(path)}; });
}

int nucsel_sparse_save(const char* path, const nucsel_sparse* h, char** err) {
  return guarded(err, [&] { mmio::write_sparse(path, h->v.mat()); });
}

int nucsel_laplacian_load(const char* l_path, const char* h_path, nucsel_laplacian** out,
                          char** err) {
  return guarded(err, [&] {
    SparseMat L = mmio::read_sparse(l_path);
    Vec h = mmio::read_vector(h_path);
    *out = new nucsel_laplacian{laplacian::RescaledLaplacian(std::move(L), std::move(h))};
  });
}

int nucsel_laplacian_save(const nucsel_laplacian* h, const char* l_path, const char* h_path,
                          char** err) {
  return guarded(err, [&] {
    mmio::write_sparse(l_path, h->v.matrix().mat(), /*symmetric=*/true);
    mmio::write_vector(h_path, h->v.h());
  });
}

int nucsel_dense_create(const double* data, int64_t n, nucsel_dense** out, char** err) {
  return guarded(err, [&] {
    require(data != nullptr && n >= 1, "dense_create: need data and n >= 1");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Mat m = Eigen::Map<const RowMat>(data, n, n);
    DenseSym d(std::move(m));
    require(d.is_spsd(), "dense_create: matrix is not positive semidefinite");
    *out = new nucsel_dense{std::move(d)};
  });
}

int64_t nucsel_dense_dim(const nucsel_dense* h) { return h->v.dim(); }
int64_t nucsel_sparse_rows(const nucsel_sparse* h) { return h->v.rows(); }
int64_t nucsel_sparse_cols(const nucsel_sparse* h) { return h->v.cols(); }
int64_t nucsel_laplacian_dim(const nucsel_laplacian* h) { return h->v.dim(); }

/* ------------------------------------------------------------ generators */

int nucsel_gen_adversarial(int64_t n, int64_t n_c, double alpha, nucsel_dense** out,
                           char** err) {
  return guarded(err, [&] {
    *out = new nucsel_dense{gen::adversarial_kernel(n, n_c, alpha).K};
  });
}

int nucsel_gen_star(int64_t n, double beta, nucsel_laplacian** out, char** err) {
  return guarded(err, [&] { *out = new nucsel_laplacian{gen::star_laplacian(n, beta)}; });
}

int nucsel_gen_points(const char* family, int64_t n, uint64_t seed, double** xy_out,
                      char** err) {
  return guarded(err, [&] {
    require(family != nullptr, "gen_points: family is required");
    const Mat pts = gen::point_clouds(gen::point_family_from_name(family), n, seed);
    double* buf = static_cast<double*>(std::malloc(sizeof(double) * 2 * pts.rows()));
    require(buf != nullptr, "gen_points: allocation failed");
    for (Index i = 0; i < pts.rows(); ++i) {
      buf[2 * i] = pts(i, 0);
      buf[2 * i + 1] = pts(i, 1);
    }
    *xy_out = buf;
  });
}

int nucsel_gen_sq_exp(const double* xy, int64_t n, double sigma, nucsel_dense** out,
                      char** err) {
  return guarded(err, [&] {
    require(xy != nullptr && n >= 1, "gen_sq_exp: need points and n >= 1");
    Mat pts(n, 2);
    for (Index i = 0; i < n; ++i) {
      pts(i, 0) = xy[2 * i];
      pts(i, 1) = xy[2 * i + 1];
    }
    *out = new nucsel_dense{gen::sq_exp_kernel(pts, sigma)};
  });
}

int nucsel_gen_random_laplacian(int64_t n, int64_t extra_edges, uint64_t seed,
                                nucsel_laplacian** out, char** err) {
  return guarded(err, [&] {
    *out = new nucsel_laplacian{gen::random_reversible_laplacian(n, extra_edges, seed)};
  });
}

int nucsel_gen_random_spsd(int64_t n, int64_t rank, double decay, uint64_t seed,
                           nucsel_dense** out, char** err) {
  return guarded(err, [&] { *out = new nucsel_dense{gen::random_spsd(n, rank, decay, seed)}; });
}

/* ------------------------------------------------------------- selection */

int nucsel_kernel_select(const nucsel_dense* K, const char* method, int64_t k, uint64_t seed,
                         int matrix_free, int64_t z, nucsel_result** out, char** err) {
  return guarded(err, [&] {
    const select::Method m = method_from_name(method);
    select::SelectionResult res;
    if (matrix_free != 0 && m != select::Method::uniform) {
      const FactoredOperator ops = sketch::dense_kernel_operators(Mat(K->v.mat()));
      switch (m) {
        case select::Method::nuclear:
          res = sketch::nuclear_max_matrix_free(ops, k, z, seed);
          break;
        case select::Method::diag_max:
          res = sketch::diagonal_max_matrix_free(ops, k, z, seed);
          break;
        default:
          res = sketch::diagonal_sample_matrix_free(ops, k, z, seed);
          break;
      }
    } else {
      switch (m) {
        case select::Method::nuclear:
          res = select::nuclear_max(K->v, k);
          break;
        case select::Method::diag_max:
          res = select::diagonal_max(K->v, k);
          break;
        case select::Method::diag_sample:
          res = select::diagonal_sample(K->v, k, seed);
          break;
        case select::Method::uniform:
          res = select::uniform_sample(K->v, k, seed);
          break;
      }
    }
    *out = new nucsel_result{std::move(res)};
  });
}

int nucsel_kernel_select_sparse(const nucsel_sparse* K, const char* method, int64_t k,
                                uint64_t seed, nucsel_result** out, char** err) {
  return guarded(err, [&] {
    select::SelectionResult res;
    switch (method_from_name(method)) {
      case select::Method::nuclear:
        res = select::nuclear_max(K->v, k);
        break;
      case select::Method::diag_max:
        res = select::diagonal_max(K->v, k);
        break;
      case select::Method::diag_sample:
        res = select::diagonal_sample(K->v, k, seed);
        break;
      case select::Method::uniform:
        res = select::uniform_sample(K->v, k, seed);
        break;
    }
    *out = new nucsel_result{std::move(res)};
  });
}

int nucsel_precon_create(const nucsel_laplacian* lap, const char* precon, nucsel_precon** out,
                         char** err) {
  return guarded(err, [&] {
    const std::string spec = precon == nullptr ? "exact" : precon;
    laplacian::PreconFactor pf;
    if (spec == "exact") {
      pf = laplacian::default_precon(lap->v, laplacian::PreconMode::exact);
    } else if (spec == "identity") {
      pf = laplacian::default_precon(lap->v, laplacian::PreconMode::identity);
    } else {
      const SparseMat R = mmio::read_sparse(spec);
      std::ifstream ab(spec + ".ab");
      require(ab.good(), "precon: missing spectral bound sidecar " + spec + ".ab");
      double a = 0.0, b = 0.0;
      ab >> a >> b;
      require(ab.good() || ab.eof(), "precon: malformed sidecar " + spec + ".ab");
      pf = laplacian::external_precon(lap->v, R.mat(), a, b);
    }
    *out = new nucsel_precon{std::move(pf)};
  });
}

double nucsel_precon_kappa(const nucsel_precon* h) { return h->v.kappa; }

int nucsel_precon_save(const nucsel_precon* h, const char* path, char** err) {
  return guarded(err, [&] {
    mmio::write_sparse(path, h->v.R);
    std::ofstream ab(std::string(path) + ".ab");
    require(ab.good(), "precon_save: cannot open sidecar for writing");
    ab.precision(17);
    ab << h->v.a << '\n' << h->v.b << '\n';
    require(ab.good(), "precon_save: sidecar write failed");
  });
}

int nucsel_laplacian_pinv(const nucsel_laplacian* lap, nucsel_dense** out, char** err) {
  return guarded(err, [&] { *out = new nucsel_dense{laplacian::dense_pinv(lap->v)}; });
}

int nucsel_laplacian_select(const nucsel_laplacian* lap, const nucsel_precon* precon,
                            int64_t k, int matrix_free, int64_t z, uint64_t seed,
                            double pcg_tol, double cheb_eps, nucsel_result** out, char** err) {
  return guarded(err, [&] {
    select::SelectionResult res;
    if (matrix_free != 0) {
      require(precon != nullptr, "laplacian_select: matrix-free mode needs a preconditioner");
      res = laplacian::nuclear_max_laplacian_matrix_free(lap->v, precon->v, k, z, seed, {},
                                                         cheb_eps, pcg_tol);
    } else {
      const DenseSym K = laplacian::dense_pinv(lap->v);
      res = laplacian::nuclear_max_laplacian_exact(K, lap->v.h(), k);
    }
    *out = new nucsel_result{std::move(res)};
  });
}

/* --------------------------------------------------------------- results */

int64_t nucsel_result_steps(const nucsel_result* h) {
  return static_cast<int64_t>(h->v.indices.size());
}
int64_t nucsel_result_index(const nucsel_result* h, int64_t step) {
  return h->v.indices[static_cast<size_t>(step)];
}
double nucsel_result_gain(const nucsel_result* h, int64_t step) { return h->v.gains[step]; }
double nucsel_result_objective(const nucsel_result* h, int64_t step) {
  return h->v.objective[step];
}
double nucsel_result_residual_trace(const nucsel_result* h, int64_t step) {
  return h->v.residual_trace[step];
}
double nucsel_result_trace(const nucsel_result* h) { return h->v.trace; }
int64_t nucsel_result_z(const nucsel_result* h) { return h->v.z; }
uint64_t nucsel_result_seed(const nucsel_result* h) { return h->v.seed; }
const char* nucsel_result_method(const nucsel_result* h) {
  return select::method_name(h->v.method);
}
int nucsel_result_early_stop(const nucsel_result* h) { return h->v.early_stop ? 1 : 0; }
const char* nucsel_result_diagnostic(const nucsel_result* h) {
  return h->v.diagnostic.c_str();
}

/* ---------------------------------------------------------------- spectra */

int nucsel_dense_spectrum(const nucsel_dense* K, double** lambda_out, char** err) {
  return guarded(err, [&] {
    const Vec lam = dense_eigenvalues(K->v);
    double* buf = static_cast<double*>(std::malloc(sizeof(double) * lam.size()));
    require(buf != nullptr, "dense_spectrum: allocation failed");
    for (Index i = 0; i < lam.size(); ++i) buf[i] = lam[i];
    *lambda_out = buf;
  });
}

int nucsel_dpp_expectation(const double* lambda, int64_t n, int64_t s, double* out,
                           char** err) {
  return guarded(err, [&] {
    require(lambda != nullptr && n >= 1, "dpp_expectation: need a spectrum");
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = lambda[i];
    const sympoly::Spectrum lam = sympoly::make_spectrum(std::move(v));
    bool degenerate = false;
    *out = sympoly::dpp_expectation(lam, s, &degenerate);
  });
}

int nucsel_re_bound(double r, double eps, double nu, double zeta, double* columns_out,
                    double* dpp_s_out, char** err) {
  return guarded(err, [&] {
    const bounds::ReBound b = bounds::re_bound_columns(r, eps, nu, zeta);
    if (columns_out != nullptr) *columns_out = b.columns;
    if (dpp_s_out != nullptr) *dpp_s_out = b.dpp_s;
  });
}

/* ------------------------------------------------------------------- CUR */

int nucsel_cur(const nucsel_sparse* A, int64_t k_rows, int64_t k_cols, int deterministic,
               int64_t z, uint64_t seed, nucsel_cur_result** out, char** err) {
  return guarded(err, [&] {
    cur::CUROptions opts;
    opts.mode = deterministic != 0 ? cur::CurMode::deterministic : cur::CurMode::matrix_free;
    opts.z = z;
    opts.seed = seed;
    cur::CURResult res = cur::cur_decompose(A->v, k_rows, k_cols, opts);
    auto* h = new nucsel_cur_result{std::move(res), {}, {}};
    h->row_wrap.v = h->v.row_run;
    h->col_wrap.v = h->v.col_run;
    *out = h;
  });
}

double nucsel_cur_error(const nucsel_cur_result* h) { return h->v.frobenius_error; }
int64_t nucsel_cur_row_count(const nucsel_cur_result* h) {
  return static_cast<int64_t>(h->v.row_indices.size());
}
int64_t nucsel_cur_col_count(const nucsel_cur_result* h) {
  return static_cast<int64_t>(h->v.col_indices.size());
}
int64_t nucsel_cur_row_index(const nucsel_cur_result* h, int64_t i) {
  return h->v.row_indices[static_cast<size_t>(i)];
}
int64_t nucsel_cur_col_index(const nucsel_cur_result* h, int64_t i) {
  return h->v.col_indices[static_cast<size_t>(i)];
}
const nucsel_result* nucsel_cur_row_run(const nucsel_cur_result* h) { return &h->row_wrap; }
const nucsel_result* nucsel_cur_col_run(const nucsel_cur_result* h) { return &h->col_wrap; }

int nucsel_cur_triangle_check(const nucsel_cur_result* h, const nucsel_sparse* A, int* ok_out,
                              char** err) {
  return guarded(err, [&] {
    *ok_out = cur::triangle_bound_check(h->v, A->v) ? 1 : 0;
  });
}

int nucsel_cx_error(const nucsel_sparse* A, const int64_t* indices, int64_t count,
                    int transpose, double* out, char** err) {
  return guarded(err, [&] {
    require(indices != nullptr || count == 0, "cx_error: null index list");
    IndexList J(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) J[static_cast<size_t>(i)] = indices[i];
    if (transpose != 0) {
      const SparseMat At(SpMat(A->v.mat().transpose()));
      *out = cur::cx_error(At, J);
    } else {
      *out = cur::cx_error(A->v, J);
    }
  });
}

/* ---------------------------------------------------------------- verify */

int nucsel_verify(uint64_t seed, char** report_out, int* all_ok_out, char** err) {
  return guarded(err, [&] {
    std::ostringstream rep;
    bool all_ok = true;
    const auto check = [&](const char* name, bool ok, const std::string& detail) {
      rep << (ok ? "PASS" : "FAIL") << "  " << name;
      if (!detail.empty()) rep << "  (" << detail << ")";
      rep << '\n';
      all_ok = all_ok && ok;
    };
    const auto fmt = [](double v) {
      std::ostringstream os;
      os.precision(6);
      os << v;
      return os.str();
    };

    {  // Product form of the LP gap bound never exceeds its exponential relaxation.
      bool ok = true;
      double worst = 0.0;
      Rng rng(seed, 0x1f01);
      for (int trial = 0; trial < 20 && ok; ++trial) {
        std::vector<double> f;
        const int k = 1 + static_cast<int>(rng.below(8));
        for (int i = 0; i < k; ++i) f.push_back(1.0 + 9.0 * rng.uniform_pos());
        const bounds::LpBound b = bounds::lp_bound_general(f);
        worst = std::max(worst, b.exact - b.exponential);
        ok = ok && b.exact <= b.exponential + 1e-12 && b.exact >= 0.0;
      }
      check("lp-bound-ordering", ok, "max exact minus exp " + fmt(worst));
    }

    {  // Column-count bound at the pinned reference point.
      const bounds::ReBound b = bounds::re_bound_columns(2.0, 0.1, 0.5, 0.0);
      const double want = 21.0 * (std::log(2.0) + std::log(10.5));
      const bool ok = std::abs(b.columns - want) <= 1e-9 && std::abs(b.dpp_s - 21.0) <= 1e-12;
      check("re-bound-reference", ok, "k* " + fmt(b.columns));
    }

    {  // Fast greedy agrees with the re-evaluating reference greedy.
      bool ok = true;
      double worst = 0.0;
      for (int trial = 0; trial < 5 && ok; ++trial) {
        const DenseSym K = gen::random_spsd(12, 12, 0.7, seed + 11 * trial);
        const auto fast = select::nuclear_max(K, 6);
        const auto ref = select::nuclear_max_reference(K, 6);
        for (Index t = 0; t < 6; ++t) {
          const double d = std::abs(fast.objective[t] - ref.objective[t]) /
                           std::max(1.0, std::abs(ref.objective[t]));
          worst = std::max(worst, d);
          ok = ok && d <= 1e-8;
        }
      }
      check("greedy-consistency", ok, "max rel deviation " + fmt(worst));
    }

    {  // Complement-trace identity for inverse-Laplacian selection.
      bool ok = true;
      double worst = 0.0;
      for (int trial = 0; trial < 5 && ok; ++trial) {
        const auto lap = gen::random_reversible_laplacian(12, 6, seed + 17 * trial);
        const DenseSym K = laplacian::dense_pinv(lap);
        const auto run = laplacian::nuclear_max_laplacian_exact(K, lap.h(), 4);
        const Mat Ld = lap.matrix().dense();
        const double tr_k = K.mat().trace();
        for (Index t = 0; t < run.objective.size(); ++t) {
          std::vector<char> in(12, 0);
          for (Index r = 0; r <= t; ++r) in[static_cast<size_t>(run.indices[r])] = 1;
          IndexList comp;
          for (Index i = 0; i < 12; ++i)
            if (!in[static_cast<size_t>(i)]) comp.push_back(i);
          Mat sub(comp.size(), comp.size());
          for (size_t r = 0; r < comp.size(); ++r)
            for (size_t c = 0; c < comp.size(); ++c) sub(r, c) = Ld(comp[r], comp[c]);
          const double tr_inv =
              Eigen::LDLT<Mat>(sub).solve(Mat::Identity(sub.rows(), sub.rows())).trace();
          const double d = std::abs(tr_inv - (tr_k - run.objective[t])) /
                           std::max(1.0, std::abs(tr_inv));
          worst = std::max(worst, d);
          ok = ok && d <= 1e-8;
        }
      }
      check("complement-trace-identity", ok, "max rel deviation " + fmt(worst));
    }

    {  // Greedy-vs-DPP discrepancy bound on random kernels.
      bool ok = true;
      for (int trial = 0; trial < 5 && ok; ++trial) {
        const DenseSym K = gen::random_spsd(24, 24, 0.6 + 0.08 * trial, seed + 23 * trial);
        const auto run = select::nuclear_max(K, 12);
        const auto lam = sympoly::make_spectrum(dense_eigenvalues(K));
        for (Index s = 1; s <= 3 && ok; ++s)
          ok = ok && bounds::dpp_discrepancy_check(run, lam, s, 0.0).satisfied;
      }
      check("dpp-discrepancy-bound", ok, "");
    }

    {  // Optimal-subset gap bound for inverse-Laplacian selection.
      bool ok = true;
      for (int trial = 0; trial < 3 && ok; ++trial) {
        const auto lap = gen::random_reversible_laplacian(8, 4, seed + 31 * trial);
        const DenseSym K = laplacian::dense_pinv(lap);
        const auto run = laplacian::nuclear_max_laplacian_exact(K, lap.h(), 6);
        for (Index s = 1; s <= 2 && ok; ++s)
          ok = ok && bounds::laplacian_bound_check(run, lap, s, 0.0).satisfied;
      }
      check("laplacian-gap-bound", ok, "");
    }

    {  // Best singleton never loses more than the whole pseudoinverse trace.
      bool ok = true;
      for (int trial = 0; trial < 3 && ok; ++trial) {
        const auto lap = gen::random_reversible_laplacian(10, 5, seed + 41 * trial);
        const DenseSym K = laplacian::dense_pinv(lap);
        double best = -std::numeric_limits<double>::infinity();
        for (Index j = 0; j < 10; ++j)
          best = std::max(best, -K(j, j) / (lap.h()[j] * lap.h()[j]));
        ok = ok && best >= -K.mat().trace() - 1e-10;
      }
      check("singleton-trace-bound", ok, "");
    }

    {  // CUR triangle inequality and closed-form error on a random sparse A.
      Rng rng(seed, 0xc07);
      std::vector<Triplet> trips;
      for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 25; ++j)
          if (rng.uniform_pos() < 0.35)
            trips.emplace_back(i, j, rng.normal());
      const SparseMat A(40, 25, trips);
      cur::CUROptions opts;
      opts.z = 64;
      opts.seed = seed;
      const auto res = cur::cur_decompose(A, 8, 8, opts);
      const Mat direct = cur::cur_dense(res, A);
      const double direct_err = std::sqrt((A.dense() - direct).squaredNorm());
      const bool tri = cur::triangle_bound_check(res, A);
      const double dev = std::abs(direct_err - res.frobenius_error) /
                         std::max(1.0, res.frobenius_error);
      check("cur-error-and-triangle", tri && dev <= 1e-8,
            "closed form " + fmt(res.frobenius_error) + " direct " + fmt(direct_err));
    }

    if (report_out != nullptr) *report_out = dup_string(rep.str());
    if (all_ok_out != nullptr) *all_ok_out = all_ok ? 1 : 0;
  });
}

}  // extern "C"
