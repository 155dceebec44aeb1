// Command-line surface for the nucsel shared library: dataset generation,
// kernel and Laplacian column selection, CUR decomposition, the self-check
// suite, and the replicated benchmark harness. All numerical work goes
// through the C API; this file only parses arguments, moves bytes, and
// assembles CSV output.
//
// Exit codes: 0 success, 1 downstream or usage error, 2 unreadable or
// unwritable path.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nucsel.h"

namespace {

using nlohmann::json;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PathError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raises CliError with the library's message when a C API call fails.
void check(int rc, char*& err) {
  if (rc == 0) return;
  std::string msg = err != nullptr ? err : "unknown library error";
  nucsel_free_buffer(err);
  err = nullptr;
  throw CliError(msg);
}

template <typename T, void (*F)(T*)>
struct Owned {
  T* p = nullptr;
  Owned() = default;
  ~Owned() {
    if (p != nullptr) F(p);
  }
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  Owned(Owned&& o) noexcept : p(o.p) { o.p = nullptr; }
  Owned& operator=(Owned&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  T* get() const { return p; }
  T** slot() { return &p; }
};

using Dense = Owned<nucsel_dense, nucsel_dense_free>;
using Sparse = Owned<nucsel_sparse, nucsel_sparse_free>;
using Laplacian = Owned<nucsel_laplacian, nucsel_laplacian_free>;
using Precon = Owned<nucsel_precon, nucsel_precon_free>;
using Result = Owned<nucsel_result, nucsel_result_free>;
using CurResult = Owned<nucsel_cur_result, nucsel_cur_result_free>;

void require_readable(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw PathError("cannot open input file: " + path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f.good()) throw PathError("cannot open output file: " + path);
  return f;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_row(std::ofstream& f, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) f << ',';
    f << csv_field(fields[i]);
  }
  f << '\n';
}

// Comment header carried by every output file: build identifier and the full
// run configuration, so any CSV can be traced back to the exact invocation.
void write_header(std::ofstream& f, const json& config) {
  f << "# nucsel build=" << nucsel_build_id() << '\n';
  f << "# config: " << config.dump() << '\n';
}

unsigned thread_cap() {
  if (const char* env = std::getenv("NUCSEL_THREADS"); env != nullptr) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Linear-interpolation quantile on a sorted sample (the convention most
// statistics packages default to).
double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = static_cast<size_t>(std::ceil(h));
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/* -------------------------------------------------------------------- gen */

struct GenArgs {
  int64_t n = 0;
  int64_t n_c = 0;
  int64_t rank = 0;
  int64_t extra_edges = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 1.0;
  double decay = 1.0;
  uint64_t seed = 1;
  std::string family;
  std::string out;
  std::string h_out;
};

void run_gen_adversarial(const GenArgs& a) {
  char* err = nullptr;
  Dense K;
  check(nucsel_gen_adversarial(a.n, a.n_c, a.alpha, K.slot(), &err), err);
  check(nucsel_dense_save(a.out.c_str(), K.get(), &err), err);
  std::cout << "wrote " << a.out << " (n=" << a.n << ")\n";
}

void run_gen_star(const GenArgs& a) {
  char* err = nullptr;
  Laplacian lap;
  check(nucsel_gen_star(a.n, a.beta, lap.slot(), &err), err);
  check(nucsel_laplacian_save(lap.get(), a.out.c_str(), a.h_out.c_str(), &err), err);
  std::cout << "wrote " << a.out << " and " << a.h_out << " (n=" << a.n << ")\n";
}

void run_gen_points(const GenArgs& a) {
  char* err = nullptr;
  double* xy = nullptr;
  check(nucsel_gen_points(a.family.c_str(), a.n, a.seed, &xy, &err), err);
  Dense K;
  const int rc = nucsel_gen_sq_exp(xy, a.n, a.sigma, K.slot(), &err);
  nucsel_free_buffer(xy);
  check(rc, err);
  check(nucsel_dense_save(a.out.c_str(), K.get(), &err), err);
  std::cout << "wrote " << a.out << " (" << a.family << ", n=" << a.n << ")\n";
}

void run_gen_random_laplacian(const GenArgs& a) {
  char* err = nullptr;
  Laplacian lap;
  check(nucsel_gen_random_laplacian(a.n, a.extra_edges, a.seed, lap.slot(), &err), err);
  check(nucsel_laplacian_save(lap.get(), a.out.c_str(), a.h_out.c_str(), &err), err);
  std::cout << "wrote " << a.out << " and " << a.h_out << " (n=" << a.n << ")\n";
}

void run_gen_random_spsd(const GenArgs& a) {
  char* err = nullptr;
  Dense K;
  check(nucsel_gen_random_spsd(a.n, a.rank, a.decay, a.seed, K.slot(), &err), err);
  check(nucsel_dense_save(a.out.c_str(), K.get(), &err), err);
  std::cout << "wrote " << a.out << " (n=" << a.n << ")\n";
}

/* ---------------------------------------------------------- kernel-select */

struct KernelSelectArgs {
  std::string input;
  std::string method = "nuclear";
  std::string out;
  int64_t k = 0;
  int64_t z = 200;
  uint64_t seed = 1;
  bool sparse = false;
  bool matrix_free = false;
  double alpha = 0.0;  // 0 disables the accumulated-gain stopping rule
  double beta = 0.0;   // 0 disables the initial-gain stopping rule
};

json kernel_select_config(const KernelSelectArgs& a) {
  json j;
  j["subcommand"] = "kernel-select";
  j["input"] = a.input;
  j["method"] = a.method;
  j["k"] = a.k;
  j["seed"] = a.seed;
  j["mode"] = a.matrix_free ? "matrix-free" : "deterministic";
  if (a.matrix_free) j["z"] = a.z;
  j["sparse"] = a.sparse;
  if (a.alpha > 0.0) j["alpha"] = a.alpha;
  if (a.beta > 0.0) j["beta"] = a.beta;
  j["out"] = a.out;
  return j;
}

void run_kernel_select(const KernelSelectArgs& a) {
  require_readable(a.input);
  std::ofstream out = open_output(a.out);
  if (a.sparse && a.matrix_free)
    throw CliError("matrix-free selection needs a dense kernel file");

  char* err = nullptr;
  Dense dense;
  Sparse sparse;
  Result res;
  if (a.sparse) {
    check(nucsel_sparse_load(a.input.c_str(), sparse.slot(), &err), err);
    check(nucsel_kernel_select_sparse(sparse.get(), a.method.c_str(), a.k, a.seed, res.slot(),
                                      &err),
          err);
  } else {
    check(nucsel_dense_load(a.input.c_str(), dense.slot(), &err), err);
    check(nucsel_kernel_select(dense.get(), a.method.c_str(), a.k, a.seed,
                               a.matrix_free ? 1 : 0, a.z, res.slot(), &err),
          err);
  }

  int64_t steps = nucsel_result_steps(res.get());

  // Post-hoc stopping rules: halt before the first step whose gain drops
  // below alpha times the accumulated prior gain, or below beta times the
  // first gain.
  std::string stop_note;
  for (int64_t t = 1; t < steps; ++t) {
    const double gain = nucsel_result_gain(res.get(), t);
    if (a.alpha > 0.0 && gain <= a.alpha * nucsel_result_objective(res.get(), t - 1)) {
      stop_note = "# stopped: rule=accumulated step=" + std::to_string(t);
      steps = t;
      break;
    }
    if (a.beta > 0.0 && gain <= a.beta * nucsel_result_gain(res.get(), 0)) {
      stop_note = "# stopped: rule=initial step=" + std::to_string(t);
      steps = t;
      break;
    }
  }

  // Spectral reference curves need the full spectrum, which is only feasible
  // for dense inputs of moderate size; otherwise the columns carry NaN.
  std::vector<double> eig_bound(static_cast<size_t>(steps),
                                std::numeric_limits<double>::quiet_NaN());
  std::vector<double> dpp_bound(static_cast<size_t>(steps),
                                std::numeric_limits<double>::quiet_NaN());
  if (!a.sparse && nucsel_dense_dim(dense.get()) <= 4096) {
    const int64_t n = nucsel_dense_dim(dense.get());
    double* lambda = nullptr;
    check(nucsel_dense_spectrum(dense.get(), &lambda, &err), err);
    double partial = 0.0;
    for (int64_t t = 0; t < steps; ++t) {
      if (t < n) partial += lambda[t];
      eig_bound[static_cast<size_t>(t)] = partial;
      double d = 0.0;
      check(nucsel_dpp_expectation(lambda, n, std::min<int64_t>(t + 1, n), &d, &err), err);
      dpp_bound[static_cast<size_t>(t)] = d;
    }
    nucsel_free_buffer(lambda);
  }

  write_header(out, kernel_select_config(a));
  out << "# trace: " << num(nucsel_result_trace(res.get())) << '\n';
  if (nucsel_result_early_stop(res.get()) != 0)
    out << "# early_stop: " << nucsel_result_diagnostic(res.get()) << '\n';
  if (!stop_note.empty()) out << stop_note << '\n';
  write_row(out, {"step", "index", "gain", "objective", "residual_trace", "eig_bound",
                  "dpp_bound"});
  for (int64_t t = 0; t < steps; ++t)
    write_row(out, {std::to_string(t), std::to_string(nucsel_result_index(res.get(), t)),
                    num(nucsel_result_gain(res.get(), t)),
                    num(nucsel_result_objective(res.get(), t)),
                    num(nucsel_result_residual_trace(res.get(), t)),
                    num(eig_bound[static_cast<size_t>(t)]),
                    num(dpp_bound[static_cast<size_t>(t)])});
  if (!out.good()) throw PathError("write failed: " + a.out);
  std::cout << "wrote " << a.out << " (" << steps << " steps)\n";
}

/* ------------------------------------------------------- laplacian-select */

struct LaplacianSelectArgs {
  std::string laplacian;
  std::string h;
  std::string precon = "exact";
  std::string out;
  int64_t k = 0;
  int64_t z = 200;
  uint64_t seed = 1;
  bool matrix_free = false;
  double pcg_tol = 1e-10;
  double cheb_eps = 1e-8;
};

json laplacian_select_config(const LaplacianSelectArgs& a) {
  json j;
  j["subcommand"] = "laplacian-select";
  j["laplacian"] = a.laplacian;
  j["h"] = a.h;
  j["k"] = a.k;
  j["seed"] = a.seed;
  j["mode"] = a.matrix_free ? "matrix-free" : "deterministic";
  if (a.matrix_free) {
    j["z"] = a.z;
    j["precon"] = a.precon;
    j["pcg_tol"] = a.pcg_tol;
    j["cheb_eps"] = a.cheb_eps;
  }
  j["out"] = a.out;
  return j;
}

void run_laplacian_select(const LaplacianSelectArgs& a) {
  require_readable(a.laplacian);
  require_readable(a.h);
  if (a.matrix_free && a.precon != "exact" && a.precon != "identity") {
    require_readable(a.precon);
    require_readable(a.precon + ".ab");
  }
  std::ofstream out = open_output(a.out);

  char* err = nullptr;
  Laplacian lap;
  check(nucsel_laplacian_load(a.laplacian.c_str(), a.h.c_str(), lap.slot(), &err), err);

  Precon precon;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  if (a.matrix_free) {
    check(nucsel_precon_create(lap.get(), a.precon.c_str(), precon.slot(), &err), err);
    kappa = nucsel_precon_kappa(precon.get());
  }

  Result res;
  check(nucsel_laplacian_select(lap.get(), precon.get(), a.k, a.matrix_free ? 1 : 0, a.z,
                                a.seed, a.pcg_tol, a.cheb_eps, res.slot(), &err),
        err);

  write_header(out, laplacian_select_config(a));
  out << "# trace: " << num(nucsel_result_trace(res.get())) << '\n';
  if (a.matrix_free) out << "# kappa: " << num(kappa) << '\n';
  if (nucsel_result_early_stop(res.get()) != 0)
    out << "# early_stop: " << nucsel_result_diagnostic(res.get()) << '\n';
  write_row(out, {"step", "index", "gain", "objective", "residual_trace"});
  const int64_t steps = nucsel_result_steps(res.get());
  for (int64_t t = 0; t < steps; ++t)
    write_row(out, {std::to_string(t), std::to_string(nucsel_result_index(res.get(), t)),
                    num(nucsel_result_gain(res.get(), t)),
                    num(nucsel_result_objective(res.get(), t)),
                    num(nucsel_result_residual_trace(res.get(), t))});
  if (!out.good()) throw PathError("write failed: " + a.out);
  std::cout << "wrote " << a.out << " (" << steps << " steps)\n";
}

/* -------------------------------------------------------------------- cur */

struct CurArgs {
  std::string input;
  std::string out;
  int64_t k_rows = 0;
  int64_t k_cols = 0;
  int64_t z = 200;
  uint64_t seed = 1;
  bool deterministic = false;
};

json cur_config(const CurArgs& a) {
  json j;
  j["subcommand"] = "cur";
  j["input"] = a.input;
  j["k_rows"] = a.k_rows;
  j["k_cols"] = a.k_cols;
  j["seed"] = a.seed;
  j["mode"] = a.deterministic ? "deterministic" : "matrix-free";
  if (!a.deterministic) j["z"] = a.z;
  j["out"] = a.out;
  return j;
}

void run_cur(const CurArgs& a) {
  require_readable(a.input);
  std::ofstream out = open_output(a.out);

  char* err = nullptr;
  Sparse A;
  check(nucsel_sparse_load(a.input.c_str(), A.slot(), &err), err);
  CurResult res;
  check(nucsel_cur(A.get(), a.k_rows, a.k_cols, a.deterministic ? 1 : 0, a.z, a.seed,
                   res.slot(), &err),
        err);

  int triangle_ok = 0;
  check(nucsel_cur_triangle_check(res.get(), A.get(), &triangle_ok, &err), err);
  const double cur_err = nucsel_cur_error(res.get());
  const nucsel_result* rows = nucsel_cur_row_run(res.get());
  const nucsel_result* cols = nucsel_cur_col_run(res.get());
  const int64_t n_rows = nucsel_result_steps(rows);
  const int64_t n_cols = nucsel_result_steps(cols);

  write_header(out, cur_config(a));
  out << "# cur_error: " << num(cur_err) << '\n';
  out << "# row_error: " << num(std::sqrt(std::max(0.0, nucsel_result_residual_trace(
                                                             rows, n_rows - 1))))
      << '\n';
  out << "# col_error: " << num(std::sqrt(std::max(0.0, nucsel_result_residual_trace(
                                                             cols, n_cols - 1))))
      << '\n';
  out << "# triangle_ok: " << (triangle_ok != 0 ? "true" : "false") << '\n';
  write_row(out, {"step", "row_index", "row_gain", "row_error", "col_index", "col_gain",
                  "col_error", "cur_error", "triangle_ok"});
  const int64_t steps = std::max(n_rows, n_cols);
  for (int64_t t = 0; t < steps; ++t) {
    std::vector<std::string> fields;
    fields.push_back(std::to_string(t));
    if (t < n_rows) {
      fields.push_back(std::to_string(nucsel_result_index(rows, t)));
      fields.push_back(num(nucsel_result_gain(rows, t)));
      fields.push_back(num(std::sqrt(std::max(0.0, nucsel_result_residual_trace(rows, t)))));
    } else {
      fields.insert(fields.end(), {"", "", ""});
    }
    if (t < n_cols) {
      fields.push_back(std::to_string(nucsel_result_index(cols, t)));
      fields.push_back(num(nucsel_result_gain(cols, t)));
      fields.push_back(num(std::sqrt(std::max(0.0, nucsel_result_residual_trace(cols, t)))));
    } else {
      fields.insert(fields.end(), {"", "", ""});
    }
    fields.push_back(num(cur_err));
    fields.push_back(triangle_ok != 0 ? "true" : "false");
    write_row(out, fields);
  }
  if (!out.good()) throw PathError("write failed: " + a.out);
  std::cout << "wrote " << a.out << " (error " << num(cur_err) << ", triangle "
            << (triangle_ok != 0 ? "ok" : "VIOLATED") << ")\n";
}

/* ----------------------------------------------------------------- verify */

int run_verify(uint64_t seed) {
  char* err = nullptr;
  char* report = nullptr;
  int all_ok = 0;
  check(nucsel_verify(seed, &report, &all_ok, &err), err);
  std::cout << report;
  nucsel_free_buffer(report);
  std::cout << (all_ok != 0 ? "verify: all checks passed\n" : "verify: FAILURES\n");
  return all_ok != 0 ? 0 : 1;
}

/* ------------------------------------------------------------------ bench */

struct BenchArgs {
  std::string input;
  std::string laplacian;
  std::string h;
  std::string out;
  std::string summary;
  int64_t k = 0;
  int64_t z = 200;
  int64_t replicates = 10;
  uint64_t seed = 1;
  bool matrix_free = false;
  std::vector<double> quantiles = {0.2, 0.5, 0.8};
};

json bench_config(const BenchArgs& a) {
  json j;
  j["subcommand"] = "bench";
  if (!a.input.empty()) j["input"] = a.input;
  if (!a.laplacian.empty()) {
    j["laplacian"] = a.laplacian;
    j["h"] = a.h;
  }
  j["k"] = a.k;
  j["seed"] = a.seed;
  j["replicates"] = a.replicates;
  j["mode"] = a.matrix_free ? "matrix-free" : "deterministic";
  if (a.matrix_free) j["z"] = a.z;
  j["quantiles"] = a.quantiles;
  j["out"] = a.out;
  return j;
}

void run_bench(const BenchArgs& a) {
  if (a.input.empty() == a.laplacian.empty())
    throw CliError("bench needs exactly one of --input or --laplacian/--h");
  for (double q : a.quantiles)
    if (!(q >= 0.0 && q <= 1.0)) throw CliError("quantiles must lie in [0, 1]");

  char* err = nullptr;
  Dense K;
  if (!a.input.empty()) {
    require_readable(a.input);
    check(nucsel_dense_load(a.input.c_str(), K.slot(), &err), err);
  } else {
    require_readable(a.laplacian);
    require_readable(a.h);
    Laplacian lap;
    check(nucsel_laplacian_load(a.laplacian.c_str(), a.h.c_str(), lap.slot(), &err), err);
    check(nucsel_laplacian_pinv(lap.get(), K.slot(), &err), err);
  }
  std::string summary_path = a.summary;
  if (summary_path.empty()) {
    summary_path = a.out;
    const std::string suffix = ".csv";
    if (summary_path.size() >= suffix.size() &&
        summary_path.compare(summary_path.size() - suffix.size(), suffix.size(), suffix) == 0)
      summary_path.resize(summary_path.size() - suffix.size());
    summary_path += ".summary.csv";
  }
  std::ofstream out = open_output(a.out);
  std::ofstream summary = open_output(summary_path);

  const std::vector<std::string> methods = {"nuclear", "diag-max", "diag-sample", "uniform"};
  // Deterministic trajectories are identical across replicates, so they are
  // computed once and reused; sampled methods run per replicate.
  const auto is_deterministic = [&](const std::string& m) {
    return !a.matrix_free && (m == "nuclear" || m == "diag-max");
  };

  struct Job {
    size_t method;
    int64_t replicate;
  };
  std::vector<Job> jobs;
  for (size_t m = 0; m < methods.size(); ++m) {
    const int64_t reps = is_deterministic(methods[m]) ? 1 : a.replicates;
    for (int64_t r = 0; r < reps; ++r) jobs.push_back({m, r});
  }

  std::vector<std::vector<std::vector<double>>> traj(methods.size());
  for (size_t m = 0; m < methods.size(); ++m)
    traj[m].resize(static_cast<size_t>(a.replicates));

  std::atomic<size_t> next{0};
  std::vector<std::string> failures(jobs.size());
  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      const bool mf = a.matrix_free && methods[job.method] != "uniform";
      char* job_err = nullptr;
      Result res;
      const int rc = nucsel_kernel_select(K.get(), methods[job.method].c_str(), a.k,
                                          a.seed ^ static_cast<uint64_t>(job.replicate),
                                          mf ? 1 : 0, a.z, res.slot(), &job_err);
      if (rc != 0) {
        failures[i] = job_err != nullptr ? job_err : "unknown library error";
        nucsel_free_buffer(job_err);
        continue;
      }
      const int64_t steps = nucsel_result_steps(res.get());
      std::vector<double> obj(static_cast<size_t>(steps));
      for (int64_t t = 0; t < steps; ++t)
        obj[static_cast<size_t>(t)] = nucsel_result_objective(res.get(), t);
      traj[job.method][static_cast<size_t>(job.replicate)] = std::move(obj);
    }
  };

  const unsigned n_threads =
      std::min<unsigned>(thread_cap(), static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const std::string& f : failures)
    if (!f.empty()) throw CliError("bench replicate failed: " + f);

  for (size_t m = 0; m < methods.size(); ++m)
    if (is_deterministic(methods[m]))
      for (int64_t r = 1; r < a.replicates; ++r)
        traj[m][static_cast<size_t>(r)] = traj[m][0];

  const json config = bench_config(a);
  write_header(out, config);
  write_row(out, {"method", "replicate", "step", "objective"});
  for (size_t m = 0; m < methods.size(); ++m)
    for (int64_t r = 0; r < a.replicates; ++r) {
      const auto& obj = traj[m][static_cast<size_t>(r)];
      for (size_t t = 0; t < obj.size(); ++t)
        write_row(out, {methods[m], std::to_string(r), std::to_string(t), num(obj[t])});
    }
  if (!out.good()) throw PathError("write failed: " + a.out);

  write_header(summary, config);
  write_row(summary, {"method", "step", "quantile", "objective"});
  for (size_t m = 0; m < methods.size(); ++m) {
    size_t max_steps = 0;
    for (const auto& obj : traj[m]) max_steps = std::max(max_steps, obj.size());
    for (size_t t = 0; t < max_steps; ++t) {
      std::vector<double> sample;
      for (const auto& obj : traj[m])
        if (t < obj.size()) sample.push_back(obj[t]);
      std::sort(sample.begin(), sample.end());
      for (double q : a.quantiles)
        write_row(summary, {methods[m], std::to_string(t), num(q),
                            num(quantile_type7(sample, q))});
    }
  }
  if (!summary.good()) throw PathError("write failed: " + summary_path);
  std::cout << "wrote " << a.out << " and " << summary_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Column selection by nuclear maximization: kernels, Laplacian "
               "pseudoinverses, and CUR decompositions"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "Generate benchmark inputs");
  cmd_gen->require_subcommand(1);

  auto* gen_adv = cmd_gen->add_subcommand("adversarial", "Block kernel with near-tied gains");
  gen_adv->add_option("--n", gen.n, "Matrix dimension")->required();
  gen_adv->add_option("--n-c", gen.n_c, "Size of the coupled block")->required();
  gen_adv->add_option("--alpha", gen.alpha, "Diagonal weight of the decoupled block")
      ->required();
  gen_adv->add_option("--out", gen.out, "Output Matrix Market file")->required();
  gen_adv->callback([&] { run_gen_adversarial(gen); });

  auto* gen_star = cmd_gen->add_subcommand("star", "Star-graph rescaled Laplacian");
  gen_star->add_option("--n", gen.n, "Number of vertices")->required();
  gen_star->add_option("--beta", gen.beta, "Leaf rescaling weight")->required();
  gen_star->add_option("--out", gen.out, "Output file for the Laplacian")->required();
  gen_star->add_option("--h-file", gen.h_out, "Output file for the stationary vector")->required();
  gen_star->callback([&] { run_gen_star(gen); });

  auto* gen_pts = cmd_gen->add_subcommand(
      "points", "Squared-exponential kernel on a 2-D point cloud");
  gen_pts->add_option("--family", gen.family, "gaussian, spiral, or smiley")->required();
  gen_pts->add_option("--n", gen.n, "Number of points")->required();
  gen_pts->add_option("--sigma", gen.sigma, "Kernel bandwidth")->capture_default_str();
  gen_pts->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_pts->add_option("--out", gen.out, "Output Matrix Market file")->required();
  gen_pts->callback([&] { run_gen_points(gen); });

  auto* gen_lap = cmd_gen->add_subcommand("random-laplacian",
                                          "Rescaled Laplacian of a random reversible chain");
  gen_lap->add_option("--n", gen.n, "Number of vertices")->required();
  gen_lap->add_option("--extra-edges", gen.extra_edges, "Edges beyond the spanning tree")
      ->capture_default_str();
  gen_lap->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_lap->add_option("--out", gen.out, "Output file for the Laplacian")->required();
  gen_lap->add_option("--h-file", gen.h_out, "Output file for the stationary vector")->required();
  gen_lap->callback([&] { run_gen_random_laplacian(gen); });

  auto* gen_spsd = cmd_gen->add_subcommand("random-spsd", "Random SPSD matrix");
  gen_spsd->add_option("--n", gen.n, "Matrix dimension")->required();
  gen_spsd->add_option("--rank", gen.rank, "Rank (0 means full)")->capture_default_str();
  gen_spsd->add_option("--decay", gen.decay, "Geometric eigenvalue decay")
      ->capture_default_str();
  gen_spsd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_spsd->add_option("--out", gen.out, "Output Matrix Market file")->required();
  gen_spsd->callback([&] {
    if (gen.rank == 0) gen.rank = gen.n;
    run_gen_random_spsd(gen);
  });

  KernelSelectArgs ks;
  auto* cmd_ks = app.add_subcommand("kernel-select", "Greedy column selection on a kernel");
  cmd_ks->add_option("--input", ks.input, "Kernel Matrix Market file")->required();
  cmd_ks->add_flag("--sparse", ks.sparse, "Treat the input as sparse");
  cmd_ks->add_option("--method", ks.method, "nuclear, diag-max, diag-sample, or uniform")
      ->capture_default_str();
  cmd_ks->add_option("--k", ks.k, "Number of columns to select")->required();
  cmd_ks->add_flag("--matrix-free", ks.matrix_free, "Use randomized score estimation");
  cmd_ks->add_option("--z", ks.z, "Sketch width")->capture_default_str();
  cmd_ks->add_option("--seed", ks.seed, "Random seed")->capture_default_str();
  cmd_ks->add_option("--alpha", ks.alpha, "Accumulated-gain stopping parameter");
  cmd_ks->add_option("--beta", ks.beta, "Initial-gain stopping parameter");
  cmd_ks->add_option("--out", ks.out, "Output CSV")->required();
  cmd_ks->callback([&] { run_kernel_select(ks); });

  LaplacianSelectArgs ls;
  auto* cmd_ls = app.add_subcommand("laplacian-select",
                                    "Greedy selection on an inverse Laplacian");
  cmd_ls->add_option("--laplacian", ls.laplacian, "Laplacian Matrix Market file")->required();
  cmd_ls->add_option("--h-file", ls.h, "Stationary vector file")->required();
  cmd_ls->add_option("--k", ls.k, "Number of columns to select")->required();
  cmd_ls->add_flag("--matrix-free", ls.matrix_free, "Use randomized score estimation");
  cmd_ls->add_option("--precon", ls.precon, "exact, identity, or a factor file path")
      ->capture_default_str();
  cmd_ls->add_option("--z", ls.z, "Sketch width")->capture_default_str();
  cmd_ls->add_option("--seed", ls.seed, "Random seed")->capture_default_str();
  cmd_ls->add_option("--pcg-tol", ls.pcg_tol, "Relative tolerance of the solver")
      ->capture_default_str();
  cmd_ls->add_option("--cheb-eps", ls.cheb_eps, "Polynomial approximation tolerance")
      ->capture_default_str();
  cmd_ls->add_option("--out", ls.out, "Output CSV")->required();
  cmd_ls->callback([&] { run_laplacian_select(ls); });

  CurArgs cur;
  auto* cmd_cur = app.add_subcommand("cur", "CUR decomposition of a sparse matrix");
  cmd_cur->add_option("--input", cur.input, "Matrix Market file")->required();
  cmd_cur->add_option("--k-rows", cur.k_rows, "Number of rows to select")->required();
  cmd_cur->add_option("--k-cols", cur.k_cols, "Number of columns to select")->required();
  cmd_cur->add_flag("--deterministic", cur.deterministic, "Exact scores instead of sketched");
  cmd_cur->add_option("--z", cur.z, "Sketch width")->capture_default_str();
  cmd_cur->add_option("--seed", cur.seed, "Random seed")->capture_default_str();
  cmd_cur->add_option("--out", cur.out, "Output CSV")->required();
  cmd_cur->callback([&] { run_cur(cur); });

  uint64_t verify_seed = 1;
  int verify_rc = 0;
  auto* cmd_verify = app.add_subcommand("verify", "Run the built-in bound-check suite");
  cmd_verify->add_option("--seed", verify_seed, "Random seed")->capture_default_str();
  cmd_verify->callback([&] { verify_rc = run_verify(verify_seed); });

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "Replicated comparison of all four methods");
  cmd_bench->add_option("--input", bench.input, "Dense kernel Matrix Market file");
  cmd_bench->add_option("--laplacian", bench.laplacian, "Laplacian file (used via its "
                        "pseudoinverse)");
  cmd_bench->add_option("--h-file", bench.h, "Stationary vector file");
  cmd_bench->add_option("--k", bench.k, "Number of columns to select")->required();
  cmd_bench->add_flag("--matrix-free", bench.matrix_free, "Use randomized score estimation");
  cmd_bench->add_option("--z", bench.z, "Sketch width")->capture_default_str();
  cmd_bench->add_option("--replicates", bench.replicates, "Number of replicates")
      ->capture_default_str();
  cmd_bench->add_option("--seed", bench.seed, "Base seed; replicate r uses seed xor r")
      ->capture_default_str();
  cmd_bench->add_option("--quantiles", bench.quantiles, "Summary quantiles")
      ->delimiter(',')
      ->capture_default_str();
  cmd_bench->add_option("--out", bench.out, "Long-format output CSV")->required();
  cmd_bench->add_option("--summary", bench.summary, "Quantile summary CSV path");
  cmd_bench->callback([&] { run_bench(bench); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const PathError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return verify_rc;
}
