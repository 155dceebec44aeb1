// Counter-based random number generation (Philox4x32-10).
//
// Every stochastic operation in the library takes an explicit seed and,
// where several independent streams are needed, a stream id. Identical
// (seed, stream) pairs reproduce identical bits on every platform and
// build, which is what makes the benchmark CSVs replayable.
#pragma once

#include <cstdint>

#include "core/common.hpp"

namespace nucsel {

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  uint64_t next_u64();

  // Uniform integer on [0, bound) by rejection, free of modulo bias.
  uint64_t below(uint64_t bound);

  // Uniform on [0,1) with 53 random bits.
  double uniform();
  // Uniform on (0,1), safe as a log() argument.
  double uniform_pos();
  // Standard normal (Box-Muller, buffered in pairs).
  double normal();

  void fill_uniform_pos(double* out, Index n);
  void fill_normal(double* out, Index n);

  // n x z matrix of i.i.d. standard normals, column-major fill order.
  Mat gaussian_matrix(Index rows, Index cols);

 private:
  void next_block(uint32_t out[4]);

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  uint32_t buf_[4];
  int buf_pos_ = 4;  // exhausted
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nucsel
