#include "core/rng.hpp"

#include <cmath>
#include <numbers>

namespace nucsel {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(uint32_t c[4], uint32_t k0, uint32_t k1) {
  const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
  const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  const uint32_t n0 = hi1 ^ c[1] ^ k0;
  const uint32_t n1 = lo1;
  const uint32_t n2 = hi0 ^ c[3] ^ k1;
  const uint32_t n3 = lo0;
  c[0] = n0;
  c[1] = n1;
  c[2] = n2;
  c[3] = n3;
}

inline void philox10(uint64_t counter, uint64_t stream, uint64_t seed, uint32_t out[4]) {
  uint32_t c[4] = {static_cast<uint32_t>(counter), static_cast<uint32_t>(counter >> 32),
                   static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
  uint32_t k0 = static_cast<uint32_t>(seed);
  uint32_t k1 = static_cast<uint32_t>(seed >> 32);
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  out[0] = c[0];
  out[1] = c[1];
  out[2] = c[2];
  out[3] = c[3];
}

inline double u64_to_unit(uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline double u64_to_unit_pos(uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

void Rng::next_block(uint32_t out[4]) { philox10(counter_++, stream_, seed_, out); }

uint64_t Rng::next_u64() {
  if (buf_pos_ >= 4) {
    next_block(buf_);
    buf_pos_ = 0;
  }
  const uint64_t lo = buf_[buf_pos_];
  const uint64_t hi = buf_[buf_pos_ + 1];
  buf_pos_ += 2;
  return (hi << 32) | lo;
}

uint64_t Rng::below(uint64_t bound) {
  require(bound > 0, "Rng::below: bound must be positive");
  const uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const uint64_t x = next_u64();
    if (x >= threshold) return x % bound;
  }
}

double Rng::uniform() { return u64_to_unit(next_u64()); }

double Rng::uniform_pos() { return u64_to_unit_pos(next_u64()); }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

void Rng::fill_uniform_pos(double* out, Index n) {
  Index i = 0;
  // Consume whole 4x32 blocks directly; the tail goes through next_u64 so the
  // stream position stays well defined regardless of call granularity.
  while (n - i >= 2) {
    uint32_t blk[4];
    next_block(blk);
    out[i++] = u64_to_unit_pos((static_cast<uint64_t>(blk[1]) << 32) | blk[0]);
    out[i++] = u64_to_unit_pos((static_cast<uint64_t>(blk[3]) << 32) | blk[2]);
  }
  while (i < n) out[i++] = uniform_pos();
}

void Rng::fill_normal(double* out, Index n) {
  constexpr Index kChunk = 4096;
  Eigen::ArrayXd u1(kChunk), u2(kChunk);
  Index done = 0;
  while (done < n) {
    const Index pairs = std::min<Index>(kChunk, (n - done + 1) / 2);
    fill_uniform_pos(u1.data(), pairs);
    fill_uniform_pos(u2.data(), pairs);
    Eigen::ArrayXd r = (-2.0 * u1.head(pairs).log()).sqrt();
    Eigen::ArrayXd a = (2.0 * std::numbers::pi) * u2.head(pairs);
    Eigen::ArrayXd n1 = r * a.cos();
    Eigen::ArrayXd n2 = r * a.sin();
    for (Index p = 0; p < pairs; ++p) {
      out[done++] = n1[p];
      if (done < n) out[done++] = n2[p];
    }
  }
}

Mat Rng::gaussian_matrix(Index rows, Index cols) {
  Mat Z(rows, cols);
  fill_normal(Z.data(), rows * cols);
  return Z;
}

}  // namespace nucsel
