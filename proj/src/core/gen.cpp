#include "core/gen.hpp"

#include <Eigen/QR>
#include <cmath>
#include <utility>

#include "core/rng.hpp"

namespace nucsel::gen {

namespace {
constexpr std::uint64_t kGaussianStream = 0x9e17;
constexpr std::uint64_t kSmileyStream = 0x5111e4;
constexpr std::uint64_t kGraphStream = 0x42a9;
constexpr std::uint64_t kSpsdStream = 0x595d;
}  // namespace

AdversarialKernel adversarial_kernel(Index n, Index n_c, double alpha) {
  require(n >= 1 && n_c >= 1 && n_c <= n, "adversarial_kernel: need 1 <= n_c <= n");
  require(alpha > 1.0, "adversarial_kernel: alpha must exceed 1");
  const Index n_d = n - n_c;

  Mat K = Mat::Zero(n, n);
  K.topLeftCorner(n_d, n_d) = alpha * Mat::Identity(n_d, n_d);
  K.bottomRightCorner(n_c, n_c).setOnes();

  Mat A = Mat::Zero(n, n);
  A.topLeftCorner(n_d, n_d) = std::sqrt(alpha) * Mat::Identity(n_d, n_d);
  A.block(n_d, n_d, n_c, 1).setOnes();

  AdversarialKernel out;
  out.K = DenseSym(std::move(K));
  out.A = std::move(A);
  out.n_c = n_c;
  out.alpha = alpha;
  return out;
}

laplacian::RescaledLaplacian star_laplacian(Index n, double beta) {
  require(n >= 2, "star_laplacian: need n >= 2");
  require(beta > 0.0 && beta <= 1.0, "star_laplacian: need 0 < beta <= 1");
  Vec h(n);
  h[0] = beta;
  h.tail(n - 1).setOnes();
  h /= std::sqrt(static_cast<double>(n - 1) + beta * beta);

  // Lbar has center degree n - 1 and unit leaves; L = Diag(1/h) Lbar Diag(1/h).
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(3 * n));
  trips.emplace_back(0, 0, static_cast<double>(n - 1) / (h[0] * h[0]));
  for (Index j = 1; j < n; ++j) {
    const double off = -1.0 / (h[0] * h[j]);
    trips.emplace_back(0, static_cast<int>(j), off);
    trips.emplace_back(static_cast<int>(j), 0, off);
    trips.emplace_back(static_cast<int>(j), static_cast<int>(j), 1.0 / (h[j] * h[j]));
  }
  return laplacian::RescaledLaplacian(SparseMat(n, n, trips), h);
}

DenseSym sq_exp_kernel(const Eigen::Ref<const Mat>& points, double sigma) {
  require(points.rows() >= 1 && points.cols() == 2, "sq_exp_kernel: points must be n x 2");
  require(sigma > 0.0, "sq_exp_kernel: sigma must be positive");
  const Index n = points.rows();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Mat K(n, n);
  for (Index j = 0; j < n; ++j) {
    K(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-(points.row(i) - points.row(j)).squaredNorm() * inv);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return DenseSym(std::move(K));
}

PointFamily point_family_from_name(const std::string& name) {
  if (name == "gaussian") return PointFamily::gaussian;
  if (name == "spiral") return PointFamily::spiral;
  if (name == "smiley") return PointFamily::smiley;
  fail("point_clouds: unknown family '" + name + "'");
}

const char* point_family_name(PointFamily family) {
  switch (family) {
    case PointFamily::gaussian: return "gaussian";
    case PointFamily::spiral: return "spiral";
    case PointFamily::smiley: return "smiley";
  }
  fail("point_clouds: unknown family");
}

namespace {

Mat gaussian_cloud(Index n, std::uint64_t seed) {
  Rng rng(seed, kGaussianStream);
  return rng.gaussian_matrix(n, 2);
}

Mat spiral_cloud(Index n) {
  Mat pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : 64.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    const double r = std::exp(t / 5.0);
    pts(i, 0) = r * std::cos(t);
    pts(i, 1) = r * std::sin(t);
  }
  return pts;
}

Mat smiley_cloud(Index n, std::uint64_t seed) {
  require(n >= 10, "point_clouds: smiley needs at least 10 points");
  Rng rng(seed, kSmileyStream);
  const Index eye = std::max<Index>(1, static_cast<Index>(std::llround(0.005 * n)));
  const Index smile = std::max<Index>(1, static_cast<Index>(std::llround(0.198 * n)));
  require(2 * eye + smile < n, "point_clouds: smiley point budget too small");
  const Index outline = n - 2 * eye - smile;

  Mat pts(n, 2);
  Index row = 0;
  const double deg = M_PI / 180.0;
  for (int side = 0; side < 2; ++side) {
    const double cx = side == 0 ? -4.0 : 4.0;
    for (Index i = 0; i < eye; ++i, ++row) {
      const double r = std::sqrt(rng.uniform_pos());
      const double th = 2.0 * M_PI * rng.uniform_pos();
      pts(row, 0) = cx + r * std::cos(th);
      pts(row, 1) = 3.0 + r * std::sin(th);
    }
  }
  for (Index i = 0; i < smile; ++i, ++row) {
    const double th =
        smile == 1 ? 270.0 * deg
                   : (200.0 + 140.0 * static_cast<double>(i) / static_cast<double>(smile - 1)) * deg;
    pts(row, 0) = 6.0 * std::cos(th);
    pts(row, 1) = 6.0 * std::sin(th);
  }
  for (Index i = 0; i < outline; ++i, ++row) {
    const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(outline);
    pts(row, 0) = 10.0 * std::cos(th);
    pts(row, 1) = 10.0 * std::sin(th);
  }
  return pts;
}

}  // namespace

Mat point_clouds(PointFamily family, Index n, std::uint64_t seed) {
  require(n >= 1, "point_clouds: need n >= 1");
  switch (family) {
    case PointFamily::gaussian: return gaussian_cloud(n, seed);
    case PointFamily::spiral: return spiral_cloud(n);
    case PointFamily::smiley: return smiley_cloud(n, seed);
  }
  fail("point_clouds: unknown family");
}

laplacian::RescaledLaplacian random_reversible_laplacian(Index n, Index extra_edges,
                                                         std::uint64_t seed) {
  require(n >= 2, "random_reversible_laplacian: need n >= 2");
  require(extra_edges >= 0, "random_reversible_laplacian: extra_edges must be nonnegative");
  Rng rng(seed, kGraphStream);

  // Symmetric positive edge weights: spanning tree first, then extras.
  std::vector<std::pair<Index, Index>> edges;
  std::vector<char> present(static_cast<size_t>(n * n), 0);
  const auto mark = [&](Index i, Index j) {
    present[static_cast<size_t>(i * n + j)] = 1;
    present[static_cast<size_t>(j * n + i)] = 1;
  };
  for (Index v = 1; v < n; ++v) {
    const Index p = static_cast<Index>(rng.below(static_cast<std::uint64_t>(v)));
    edges.emplace_back(p, v);
    mark(p, v);
  }
  for (Index e = 0; e < extra_edges; ++e) {
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    if (i == j || present[static_cast<size_t>(i * n + j)]) continue;
    edges.emplace_back(std::min(i, j), std::max(i, j));
    mark(i, j);
  }

  Vec pi(n);
  for (Index i = 0; i < n; ++i) pi[i] = -std::log(rng.uniform_pos());
  pi /= pi.sum();

  // R_ij = w_ij / pi_i makes pi_i R_ij symmetric, hence reversible.
  std::vector<Triplet> trips;
  Vec diag = Vec::Zero(n);
  for (const auto& [i, j] : edges) {
    const double w = 0.5 + 1.5 * rng.uniform_pos();
    const double rij = w / pi[i];
    const double rji = w / pi[j];
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), rij);
    trips.emplace_back(static_cast<int>(j), static_cast<int>(i), rji);
    diag[i] -= rij;
    diag[j] -= rji;
  }
  for (Index i = 0; i < n; ++i)
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
  return laplacian::from_rate_matrix(SparseMat(n, n, trips), pi);
}

DenseSym random_spsd(Index n, Index rank, double decay, std::uint64_t seed) {
  require(n >= 1 && rank >= 1 && rank <= n, "random_spsd: need 1 <= rank <= n");
  require(decay > 0.0 && decay <= 1.0, "random_spsd: need 0 < decay <= 1");
  Rng rng(seed, kSpsdStream);
  const Mat G = rng.gaussian_matrix(n, n);
  const Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);

  Vec lambda = Vec::Zero(n);
  for (Index i = 0; i < rank; ++i) lambda[i] = std::pow(decay, static_cast<double>(i));
  Mat K = Q.leftCols(rank) * lambda.head(rank).asDiagonal() * Q.leftCols(rank).transpose();
  return DenseSym(0.5 * (K + K.transpose()));
}

}  // namespace nucsel::gen
