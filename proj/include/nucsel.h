/* C interface to the nucsel core: greedy nuclear-norm column selection on
 * kernels and inverse graph Laplacians, CUR decomposition, bound checks, and
 * the input generators.
 *
 * Conventions:
 *   - Every fallible function returns 0 on success and nonzero on failure.
 *     On failure, *err (when err is non-NULL) receives a malloc'd message;
 *     release it with nucsel_free_buffer.
 *   - Out-parameters are written only on success.
 *   - Handles are opaque; each type has its own _free function. Accessors
 *     with a valid handle and in-range arguments cannot fail.
 *   - Buffers returned through double** out-parameters are malloc'd and
 *     released with nucsel_free_buffer.
 *   - All functions are thread-safe on distinct handles; a single handle may
 *     be read concurrently but not mutated (no function mutates a handle).
 */
#ifndef NUCSEL_H
#define NUCSEL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct nucsel_dense nucsel_dense;         /* symmetric PSD matrix */
typedef struct nucsel_sparse nucsel_sparse;       /* general sparse matrix */
typedef struct nucsel_laplacian nucsel_laplacian; /* rescaled Laplacian + h */
typedef struct nucsel_precon nucsel_precon;       /* triangular factor + bounds */
typedef struct nucsel_result nucsel_result;       /* one selection run */
typedef struct nucsel_cur_result nucsel_cur_result;

/* ------------------------------------------------------------- lifecycle */
void nucsel_free_buffer(void* p);
void nucsel_dense_free(nucsel_dense* h);
void nucsel_sparse_free(nucsel_sparse* h);
void nucsel_laplacian_free(nucsel_laplacian* h);
void nucsel_precon_free(nucsel_precon* h);
void nucsel_result_free(nucsel_result* h);
void nucsel_cur_result_free(nucsel_cur_result* h);

/* Build identifier baked in at compile time (static storage, do not free). */
const char* nucsel_build_id(void);

/* ------------------------------------------------------------------- I/O */
/* Matrix Market files; dense handles require square symmetric content. */
int nucsel_dense_load(const char* path, nucsel_dense** out, char** err);
int nucsel_dense_save(const char* path, const nucsel_dense* h, char** err);
int nucsel_sparse_load(const char* path, nucsel_sparse** out, char** err);
int nucsel_sparse_save(const char* path, const nucsel_sparse* h, char** err);
/* Laplacian = sparse matrix file + unit-norm positive h vector file. */
int nucsel_laplacian_load(const char* l_path, const char* h_path, nucsel_laplacian** out,
                          char** err);
int nucsel_laplacian_save(const nucsel_laplacian* h, const char* l_path, const char* h_path,
                          char** err);

/* Dense handle from a row-major n*n symmetric buffer (validated SPSD). */
int nucsel_dense_create(const double* data, int64_t n, nucsel_dense** out, char** err);
int64_t nucsel_dense_dim(const nucsel_dense* h);
int64_t nucsel_sparse_rows(const nucsel_sparse* h);
int64_t nucsel_sparse_cols(const nucsel_sparse* h);
int64_t nucsel_laplacian_dim(const nucsel_laplacian* h);

/* ------------------------------------------------------------ generators */
int nucsel_gen_adversarial(int64_t n, int64_t n_c, double alpha, nucsel_dense** out,
                           char** err);
int nucsel_gen_star(int64_t n, double beta, nucsel_laplacian** out, char** err);
/* family: "gaussian" | "spiral" | "smiley"; writes 2n doubles (x,y pairs). */
int nucsel_gen_points(const char* family, int64_t n, uint64_t seed, double** xy_out,
                      char** err);
/* Squared-exponential kernel on n points given as 2n doubles (x,y pairs). */
int nucsel_gen_sq_exp(const double* xy, int64_t n, double sigma, nucsel_dense** out,
                      char** err);
int nucsel_gen_random_laplacian(int64_t n, int64_t extra_edges, uint64_t seed,
                                nucsel_laplacian** out, char** err);
int nucsel_gen_random_spsd(int64_t n, int64_t rank, double decay, uint64_t seed,
                           nucsel_dense** out, char** err);

/* ------------------------------------------------------------- selection */
/* method: "nuclear" | "diag-max" | "diag-sample" | "uniform".
 * matrix_free nonzero sketches scores with width z (dense input only; the
 * kernel is shifted by 1e-10 relatively and Cholesky-factored internally). */
int nucsel_kernel_select(const nucsel_dense* K, const char* method, int64_t k,
                         uint64_t seed, int matrix_free, int64_t z, nucsel_result** out,
                         char** err);
/* Deterministic selection on an explicit sparse SPSD kernel. */
int nucsel_kernel_select_sparse(const nucsel_sparse* K, const char* method, int64_t k,
                                uint64_t seed, nucsel_result** out, char** err);

/* precon: "exact" | "identity" | a Matrix Market path (with "<path>.ab"
 * holding the two spectral bounds a and b on separate lines). */
int nucsel_precon_create(const nucsel_laplacian* lap, const char* precon,
                         nucsel_precon** out, char** err);
double nucsel_precon_kappa(const nucsel_precon* h);
int nucsel_precon_save(const nucsel_precon* h, const char* path, char** err);

/* Dense pseudoinverse of the Laplacian, usable as a kernel for the generic
 * selection methods. Guarded by dimension (n <= 2000). */
int nucsel_laplacian_pinv(const nucsel_laplacian* lap, nucsel_dense** out, char** err);

int nucsel_laplacian_select(const nucsel_laplacian* lap, const nucsel_precon* precon,
                            int64_t k, int matrix_free, int64_t z, uint64_t seed,
                            double pcg_tol, double cheb_eps, nucsel_result** out, char** err);

/* --------------------------------------------------------------- results */
int64_t nucsel_result_steps(const nucsel_result* h);
int64_t nucsel_result_index(const nucsel_result* h, int64_t step);
double nucsel_result_gain(const nucsel_result* h, int64_t step);
double nucsel_result_objective(const nucsel_result* h, int64_t step);
double nucsel_result_residual_trace(const nucsel_result* h, int64_t step);
double nucsel_result_trace(const nucsel_result* h);
int64_t nucsel_result_z(const nucsel_result* h);
uint64_t nucsel_result_seed(const nucsel_result* h);
const char* nucsel_result_method(const nucsel_result* h);
int nucsel_result_early_stop(const nucsel_result* h);
/* Static-lifetime within the handle; do not free. Empty string when clean. */
const char* nucsel_result_diagnostic(const nucsel_result* h);

/* ---------------------------------------------------------------- spectra */
/* Full descending spectrum of a dense kernel (n <= 4096). */
int nucsel_dense_spectrum(const nucsel_dense* K, double** lambda_out, char** err);
/* s-DPP expectation D_s from a descending spectrum of length n. */
int nucsel_dpp_expectation(const double* lambda, int64_t n, int64_t s, double* out,
                           char** err);
/* Column count and DPP size from the additive error bound. */
int nucsel_re_bound(double r, double eps, double nu, double zeta, double* columns_out,
                    double* dpp_s_out, char** err);

/* ------------------------------------------------------------------- CUR */
int nucsel_cur(const nucsel_sparse* A, int64_t k_rows, int64_t k_cols, int deterministic,
               int64_t z, uint64_t seed, nucsel_cur_result** out, char** err);
double nucsel_cur_error(const nucsel_cur_result* h);
int64_t nucsel_cur_row_count(const nucsel_cur_result* h);
int64_t nucsel_cur_col_count(const nucsel_cur_result* h);
int64_t nucsel_cur_row_index(const nucsel_cur_result* h, int64_t i);
int64_t nucsel_cur_col_index(const nucsel_cur_result* h, int64_t i);
/* Borrowed views of the per-side runs; valid while the parent handle lives. */
const nucsel_result* nucsel_cur_row_run(const nucsel_cur_result* h);
const nucsel_result* nucsel_cur_col_run(const nucsel_cur_result* h);
int nucsel_cur_triangle_check(const nucsel_cur_result* h, const nucsel_sparse* A, int* ok_out,
                              char** err);
/* min_B ||A[:,J] B - A||_F^2; transpose nonzero scores row selections. */
int nucsel_cx_error(const nucsel_sparse* A, const int64_t* indices, int64_t count,
                    int transpose, double* out, char** err);

/* ---------------------------------------------------------------- verify */
/* Runs the bundled bound and identity property suites on small random
 * corpora derived from seed. *report_out receives a malloc'd text table;
 * *all_ok_out is 1 iff every checked inequality held. Returns nonzero only
 * on execution failure (a violated bound is reported, not thrown). */
int nucsel_verify(uint64_t seed, char** report_out, int* all_ok_out, char** err);

#ifdef __cplusplus
}
#endif

#endif /* NUCSEL_H */
