#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "core/gen.hpp"
#include "core/laplacian.hpp"
#include "core/linops.hpp"
#include "core/mmio.hpp"
#include "core/select.hpp"
#include "nucsel.h"
#include "oracles.hpp"

namespace {

struct ErrGuard {
  char* err = nullptr;
  ~ErrGuard() { nucsel_free_buffer(err); }
  char** slot() { return &err; }
  std::string text() const { return err ? err : ""; }
};

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("capi_scratch_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("build id is a nonempty constant") {
  const char* id = nucsel_build_id();
  REQUIRE(id != nullptr);
  CHECK(std::strlen(id) > 0);
  CHECK(std::string(id) == nucsel_build_id());
}

TEST_CASE("dense kernels round trip through create, save, and load") {
  nucsel::Mat k = oracle::random_spsd(8, 8, 3);
  k = nucsel::Mat(0.5 * (k + k.transpose()));
  std::vector<double> row_major(64);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) row_major[static_cast<size_t>(i) * 8 + j] = k(i, j);

  ErrGuard err;
  nucsel_dense* h = nullptr;
  REQUIRE(nucsel_dense_create(row_major.data(), 8, &h, err.slot()) == 0);
  REQUIRE(h != nullptr);
  CHECK(nucsel_dense_dim(h) == 8);

  TempFile f("dense.mtx");
  REQUIRE(nucsel_dense_save(f.path.c_str(), h, err.slot()) == 0);
  nucsel_dense* back = nullptr;
  REQUIRE(nucsel_dense_load(f.path.c_str(), &back, err.slot()) == 0);
  CHECK(nucsel_dense_dim(back) == 8);

  double* lam_a = nullptr;
  double* lam_b = nullptr;
  REQUIRE(nucsel_dense_spectrum(h, &lam_a, err.slot()) == 0);
  REQUIRE(nucsel_dense_spectrum(back, &lam_b, err.slot()) == 0);
  for (int i = 0; i < 8; ++i) {
    REQUIRE(lam_a[i] == doctest::Approx(lam_b[i]).epsilon(1e-12));
  }
  nucsel_free_buffer(lam_a);
  nucsel_free_buffer(lam_b);
  nucsel_dense_free(h);
  nucsel_dense_free(back);
}

TEST_CASE("dense_create rejects non-SPSD input with a message") {
  std::vector<double> bad(9, 0.0);
  bad[0] = 1.0;
  bad[4] = -2.0;
  bad[8] = 1.0;
  ErrGuard err;
  nucsel_dense* h = nullptr;
  CHECK(nucsel_dense_create(bad.data(), 3, &h, err.slot()) != 0);
  CHECK(h == nullptr);
  CHECK_FALSE(err.text().empty());
}

TEST_CASE("generator wrappers mirror the core generators") {
  ErrGuard err;

  SUBCASE("adversarial") {
    nucsel_dense* k = nullptr;
    REQUIRE(nucsel_gen_adversarial(30, 4, 1.5, &k, err.slot()) == 0);
    CHECK(nucsel_dense_dim(k) == 30);
    double* lam = nullptr;
    REQUIRE(nucsel_dense_spectrum(k, &lam, err.slot()) == 0);
    CHECK(lam[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(lam[1] == doctest::Approx(1.5).epsilon(1e-12));
    nucsel_free_buffer(lam);
    nucsel_dense_free(k);
    CHECK(nucsel_gen_adversarial(10, 20, 1.5, &k, err.slot()) != 0);
  }
  SUBCASE("star and laplacian I/O") {
    nucsel_laplacian* lap = nullptr;
    REQUIRE(nucsel_gen_star(12, 0.8, &lap, err.slot()) == 0);
    CHECK(nucsel_laplacian_dim(lap) == 12);

    TempFile lf("star_L.mtx");
    TempFile hf("star_h.mtx");
    REQUIRE(nucsel_laplacian_save(lap, lf.path.c_str(), hf.path.c_str(), err.slot()) == 0);
    nucsel_laplacian* back = nullptr;
    REQUIRE(nucsel_laplacian_load(lf.path.c_str(), hf.path.c_str(), &back, err.slot()) == 0);
    CHECK(nucsel_laplacian_dim(back) == 12);
    nucsel_laplacian_free(back);
    nucsel_laplacian_free(lap);
  }
  SUBCASE("points feed sq_exp") {
    double* xy = nullptr;
    REQUIRE(nucsel_gen_points("spiral", 40, 0, &xy, err.slot()) == 0);
    REQUIRE(xy != nullptr);
    CHECK(xy[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(xy[1] == doctest::Approx(0.0).epsilon(1e-14));

    nucsel_dense* k = nullptr;
    REQUIRE(nucsel_gen_sq_exp(xy, 40, 100.0, &k, err.slot()) == 0);
    CHECK(nucsel_dense_dim(k) == 40);
    nucsel_dense_free(k);
    nucsel_free_buffer(xy);

    CHECK(nucsel_gen_points("pentagon", 10, 0, &xy, err.slot()) != 0);
    CHECK_FALSE(err.text().empty());
  }
  SUBCASE("random generators") {
    nucsel_laplacian* lap = nullptr;
    REQUIRE(nucsel_gen_random_laplacian(15, 6, 3, &lap, err.slot()) == 0);
    CHECK(nucsel_laplacian_dim(lap) == 15);
    nucsel_laplacian_free(lap);

    nucsel_dense* k = nullptr;
    REQUIRE(nucsel_gen_random_spsd(10, 4, 0.5, 7, &k, err.slot()) == 0);
    CHECK(nucsel_dense_dim(k) == 10);
    nucsel_dense_free(k);
  }
}

TEST_CASE("kernel_select matches the core library") {
  nucsel::gen::AdversarialKernel adv = nucsel::gen::adversarial_kernel(40, 5, 1.4);
  std::vector<double> row_major(1600);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) row_major[static_cast<size_t>(i) * 40 + j] = adv.K(i, j);
  ErrGuard err;
  nucsel_dense* k = nullptr;
  REQUIRE(nucsel_dense_create(row_major.data(), 40, &k, err.slot()) == 0);

  nucsel_result* res = nullptr;
  REQUIRE(nucsel_kernel_select(k, "nuclear", 6, 0, 0, 0, &res, err.slot()) == 0);
  nucsel::select::SelectionResult core = nucsel::select::nuclear_max(adv.K, 6);
  REQUIRE(nucsel_result_steps(res) == 6);
  CHECK(std::string(nucsel_result_method(res)) == "nuclear");
  CHECK(nucsel_result_z(res) == 0);
  CHECK(nucsel_result_early_stop(res) == 0);
  CHECK(std::string(nucsel_result_diagnostic(res)).empty());
  CHECK(nucsel_result_trace(res) == doctest::Approx(core.trace).epsilon(1e-12));
  for (int64_t t = 0; t < 6; ++t) {
    REQUIRE(nucsel_result_index(res, t) == core.indices[static_cast<size_t>(t)]);
    REQUIRE(nucsel_result_gain(res, t) == doctest::Approx(core.gains[t]).epsilon(1e-12));
    REQUIRE(nucsel_result_objective(res, t) ==
            doctest::Approx(core.objective[t]).epsilon(1e-12));
    REQUIRE(nucsel_result_residual_trace(res, t) ==
            doctest::Approx(core.residual_trace[t]).epsilon(1e-10));
  }
  nucsel_result_free(res);

  // Matrix-free path with the same seed matches the core sketch driver.
  nucsel_result* mf = nullptr;
  REQUIRE(nucsel_kernel_select(k, "nuclear", 6, 11, 1, 80, &mf, err.slot()) == 0);
  CHECK(nucsel_result_z(mf) == 80);
  CHECK(nucsel_result_seed(mf) == 11);
  for (int64_t t = 1; t <= 6; ++t) {
    nucsel::IndexList prefix;
    for (int64_t u = 0; u < t; ++u) prefix.push_back(nucsel_result_index(mf, u));
    REQUIRE(nucsel_result_objective(mf, t - 1) ==
            doctest::Approx(oracle::objective(adv.K.mat(), prefix)).epsilon(1e-8));
  }
  nucsel_result_free(mf);

  // Unknown methods surface an error string.
  nucsel_result* bad = nullptr;
  CHECK(nucsel_kernel_select(k, "sorcery", 3, 0, 0, 0, &bad, err.slot()) != 0);
  CHECK(bad == nullptr);
  CHECK_FALSE(err.text().empty());
  nucsel_dense_free(k);
}

TEST_CASE("sparse kernel selection works through the C surface") {
  nucsel::Mat k = oracle::random_spsd(20, 20, 9, 0.2);
  k = nucsel::Mat(0.5 * (k + k.transpose()));
  TempFile f("sparse_kernel.mtx");
  nucsel::mmio::write_sparse(f.path, nucsel::SpMat(k.sparseView()), true);

  ErrGuard err;
  nucsel_sparse* sp = nullptr;
  REQUIRE(nucsel_sparse_load(f.path.c_str(), &sp, err.slot()) == 0);
  CHECK(nucsel_sparse_rows(sp) == 20);
  CHECK(nucsel_sparse_cols(sp) == 20);

  nucsel_result* res = nullptr;
  REQUIRE(nucsel_kernel_select_sparse(sp, "diag-max", 5, 0, &res, err.slot()) == 0);
  nucsel::select::SelectionResult core =
      nucsel::select::diagonal_max(nucsel::DenseSym(k), 5);
  for (int64_t t = 0; t < 5; ++t) {
    REQUIRE(nucsel_result_index(res, t) == core.indices[static_cast<size_t>(t)]);
  }
  nucsel_result_free(res);

  TempFile g("sparse_save.mtx");
  REQUIRE(nucsel_sparse_save(g.path.c_str(), sp, err.slot()) == 0);
  nucsel_sparse* back = nullptr;
  REQUIRE(nucsel_sparse_load(g.path.c_str(), &back, err.slot()) == 0);
  CHECK(nucsel_sparse_rows(back) == 20);
  nucsel_sparse_free(back);
  nucsel_sparse_free(sp);
}

TEST_CASE("laplacian selection, preconditioners, and pinv work end to end") {
  ErrGuard err;
  nucsel_laplacian* lap = nullptr;
  REQUIRE(nucsel_gen_random_laplacian(18, 8, 5, &lap, err.slot()) == 0);

  nucsel_precon* exact = nullptr;
  REQUIRE(nucsel_precon_create(lap, "exact", &exact, err.slot()) == 0);
  CHECK(nucsel_precon_kappa(exact) == doctest::Approx(1.0).epsilon(1e-12));

  nucsel_precon* ident = nullptr;
  REQUIRE(nucsel_precon_create(lap, "identity", &ident, err.slot()) == 0);
  CHECK(nucsel_precon_kappa(ident) > 1.0);

  // Saved factors reload through the path form with the .ab sidecar.
  TempFile pf("precon.mtx");
  TempFile ab("precon.mtx.ab");
  REQUIRE(nucsel_precon_save(exact, pf.path.c_str(), err.slot()) == 0);
  nucsel_precon* loaded = nullptr;
  REQUIRE(nucsel_precon_create(lap, pf.path.c_str(), &loaded, err.slot()) == 0);
  CHECK(nucsel_precon_kappa(loaded) == doctest::Approx(1.0).epsilon(1e-10));

  // Deterministic and matrix-free selection agree on exact objectives.
  nucsel_result* det = nullptr;
  REQUIRE(nucsel_laplacian_select(lap, nullptr, 5, 0, 0, 0, 1e-10, 1e-8, &det,
                                  err.slot()) == 0);
  nucsel_result* mf = nullptr;
  REQUIRE(nucsel_laplacian_select(lap, exact, 5, 1, 150, 3, 1e-10, 1e-8, &mf,
                                  err.slot()) == 0);
  REQUIRE(nucsel_result_steps(det) == 5);
  REQUIRE(nucsel_result_steps(mf) == 5);

  nucsel_dense* pinv = nullptr;
  REQUIRE(nucsel_laplacian_pinv(lap, &pinv, err.slot()) == 0);
  CHECK(nucsel_dense_dim(pinv) == 18);

  // Check both trajectories against the dense objective.
  nucsel::Mat kd(18, 18);
  {
    TempFile kf("pinv.mtx");
    REQUIRE(nucsel_dense_save(kf.path.c_str(), pinv, err.slot()) == 0);
    kd = nucsel::mmio::read_dense(kf.path);
  }
  nucsel::Vec h(18);
  {
    TempFile lf("lap_L.mtx");
    TempFile hf("lap_h.mtx");
    REQUIRE(nucsel_laplacian_save(lap, lf.path.c_str(), hf.path.c_str(), err.slot()) == 0);
    h = nucsel::mmio::read_vector(hf.path);
  }
  for (nucsel_result* run : {det, mf}) {
    for (int64_t t = 1; t <= 5; ++t) {
      nucsel::IndexList prefix;
      for (int64_t u = 0; u < t; ++u) prefix.push_back(nucsel_result_index(run, u));
      REQUIRE(nucsel_result_objective(run, t - 1) ==
              doctest::Approx(oracle::laplacian_objective(kd, h, prefix)).epsilon(1e-6));
    }
  }

  // Matrix-free mode needs a preconditioner.
  nucsel_result* none = nullptr;
  CHECK(nucsel_laplacian_select(lap, nullptr, 4, 1, 100, 0, 1e-10, 1e-8, &none,
                                err.slot()) != 0);
  CHECK_FALSE(err.text().empty());

  nucsel_result_free(det);
  nucsel_result_free(mf);
  nucsel_dense_free(pinv);
  nucsel_precon_free(loaded);
  nucsel_precon_free(ident);
  nucsel_precon_free(exact);
  nucsel_laplacian_free(lap);
}

TEST_CASE("spectrum, DPP expectation, and the column-count bound") {
  ErrGuard err;
  nucsel_dense* k = nullptr;
  REQUIRE(nucsel_gen_random_spsd(10, 10, 0.7, 2, &k, err.slot()) == 0);
  double* lam = nullptr;
  REQUIRE(nucsel_dense_spectrum(k, &lam, err.slot()) == 0);
  for (int i = 1; i < 10; ++i) REQUIRE(lam[i] <= lam[i - 1] + 1e-12);

  double d1 = 0.0;
  REQUIRE(nucsel_dpp_expectation(lam, 10, 1, &d1, err.slot()) == 0);
  // D_1 = sum lam^2 / sum lam.
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 10; ++i) {
    num += lam[i] * lam[i];
    den += lam[i];
  }
  CHECK(d1 == doctest::Approx(num / den).epsilon(1e-10));

  // Oversized s degrades to the trace (degenerate DPP).
  double big = 0.0;
  std::vector<double> rank2{2.0, 1.0, 0.0, 0.0};
  REQUIRE(nucsel_dpp_expectation(rank2.data(), 4, 3, &big, err.slot()) == 0);
  CHECK(big == doctest::Approx(3.0).epsilon(1e-12));

  double cols = 0.0, s = 0.0;
  REQUIRE(nucsel_re_bound(2.0, 0.1, 0.5, 0.0, &cols, &s, err.slot()) == 0);
  CHECK(cols == doctest::Approx(21.0 * (std::log(2.0) + std::log(10.5))).epsilon(1e-12));
  CHECK(s == doctest::Approx(21.0).epsilon(1e-12));

  nucsel_free_buffer(lam);
  nucsel_dense_free(k);
}

TEST_CASE("CUR flows through the C surface with borrowed runs") {
  nucsel::Mat a = oracle::random_rect(24, 15, 0.4, 33);
  TempFile f("cur_input.mtx");
  nucsel::mmio::write_sparse(f.path, nucsel::SpMat(a.sparseView()));

  ErrGuard err;
  nucsel_sparse* as = nullptr;
  REQUIRE(nucsel_sparse_load(f.path.c_str(), &as, err.slot()) == 0);

  nucsel_cur_result* res = nullptr;
  REQUIRE(nucsel_cur(as, 6, 5, /*deterministic=*/1, 0, 0, &res, err.slot()) == 0);
  REQUIRE(nucsel_cur_row_count(res) == 6);
  REQUIRE(nucsel_cur_col_count(res) == 5);

  nucsel::IndexList rows, cols;
  for (int64_t i = 0; i < 6; ++i) rows.push_back(nucsel_cur_row_index(res, i));
  for (int64_t i = 0; i < 5; ++i) cols.push_back(nucsel_cur_col_index(res, i));
  double direct = oracle::cur_error_direct(a, rows, cols);
  CHECK(nucsel_cur_error(res) == doctest::Approx(direct).epsilon(1e-8));

  int ok = 0;
  REQUIRE(nucsel_cur_triangle_check(res, as, &ok, err.slot()) == 0);
  CHECK(ok == 1);

  const nucsel_result* row_run = nucsel_cur_row_run(res);
  const nucsel_result* col_run = nucsel_cur_col_run(res);
  REQUIRE(row_run != nullptr);
  REQUIRE(col_run != nullptr);
  CHECK(nucsel_result_steps(row_run) == 6);
  CHECK(nucsel_result_steps(col_run) == 5);
  CHECK(nucsel_result_index(row_run, 0) == rows[0]);

  double cx = 0.0;
  std::vector<int64_t> j64(cols.begin(), cols.end());
  REQUIRE(nucsel_cx_error(as, j64.data(), 5, 0, &cx, err.slot()) == 0);
  CHECK(cx == doctest::Approx(oracle::cx_residual_direct(a, cols)).epsilon(1e-8));

  double rx = 0.0;
  std::vector<int64_t> i64(rows.begin(), rows.end());
  REQUIRE(nucsel_cx_error(as, i64.data(), 6, 1, &rx, err.slot()) == 0);
  CHECK(rx == doctest::Approx(oracle::cx_residual_direct(nucsel::Mat(a.transpose()), rows))
                  .epsilon(1e-8));

  nucsel_cur_result_free(res);
  nucsel_sparse_free(as);
}

TEST_CASE("the embedded verification suite passes") {
  ErrGuard err;
  char* report = nullptr;
  int all_ok = 0;
  REQUIRE(nucsel_verify(3, &report, &all_ok, err.slot()) == 0);
  REQUIRE(report != nullptr);
  CHECK(all_ok == 1);
  CHECK(std::string(report).find("PASS") != std::string::npos);
  CHECK(std::string(report).find("FAIL") == std::string::npos);
  nucsel_free_buffer(report);
}

TEST_CASE("missing files produce error strings, not crashes") {
  ErrGuard err;
  nucsel_dense* h = nullptr;
  CHECK(nucsel_dense_load("capi_scratch_missing.mtx", &h, err.slot()) != 0);
  CHECK(h == nullptr);
  CHECK_FALSE(err.text().empty());
}
