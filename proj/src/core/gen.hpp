// Reproducible generators for the benchmark input families and for random
// test instances. Identical parameters and seed give bit-identical output
// within one build.
#pragma once

#include <cstdint>
#include <string>

#include "core/common.hpp"
#include "core/laplacian.hpp"
#include "core/linops.hpp"

namespace nucsel::gen {

// Block kernel with n - n_c near-unit diagonal outliers (value alpha) ahead
// of an n_c x n_c all-ones cluster, returned with an exact factor A so that
// A A' = K. Eigenvalues are {n_c, alpha (n - n_c times)}.
struct AdversarialKernel {
  DenseSym K;
  Mat A;
  Index n_c = 0;
  double alpha = 1.0;
};
AdversarialKernel adversarial_kernel(Index n, Index n_c, double alpha);

// Star graph on n nodes, center at index 0, symmetrically rescaled by
// h = (beta, 1, ..., 1)' / sqrt(n - 1 + beta^2): L = Diag(1/h) Lbar Diag(1/h).
laplacian::RescaledLaplacian star_laplacian(Index n, double beta);

// Squared-exponential kernel on 2-d points (one point per row):
// K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)).
DenseSym sq_exp_kernel(const Eigen::Ref<const Mat>& points, double sigma);

enum class PointFamily { gaussian, spiral, smiley };
PointFamily point_family_from_name(const std::string& name);
const char* point_family_name(PointFamily family);

// Benchmark point clouds, n rows by 2 columns.
//  gaussian: n i.i.d. draws from N(0, I_2).
//  spiral:   (e^{t/5} cos t, e^{t/5} sin t) for n evenly spaced t in [0, 64].
//  smiley:   two eye discs (radius 1 at (-4, 3) and (4, 3), 0.5% of n each,
//            uniform), a smile arc (radius 6, angles 200..340 degrees, 19.8%
//            of n, evenly spaced) and a circular outline (radius 10, evenly
//            spaced angles) with the remaining points.
Mat point_clouds(PointFamily family, Index n, std::uint64_t seed);

// Random spanning tree plus extra random edges, symmetric positive edge
// weights, random stationary distribution; converted through the reversible
// rate-matrix path so detailed balance holds by construction.
laplacian::RescaledLaplacian random_reversible_laplacian(Index n, Index extra_edges,
                                                         std::uint64_t seed);

// U Lambda U' with Haar-ish orthogonal U and lambda_i = decay^i for
// i < rank, zero beyond; decay = 1 gives a flat rank-sized spectrum.
DenseSym random_spsd(Index n, Index rank, double decay, std::uint64_t seed);

}  // namespace nucsel::gen
