#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "insider/errors.hpp"

namespace insider {

// Counter-based random stream (Philox-4x32-10).  A stream is a plain value:
// the same (seed, stream_id) replays the identical sequence, and distinct
// stream ids are statistically independent, so parallel Monte Carlo workers
// just take one stream per path block.  No shared state anywhere.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)},
        seed_(seed),
        stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    const std::uint32_t lo = next_u32();
    const std::uint32_t hi = next_u32();
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647693 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
  }

  std::uint32_t next_u32() {
    if (word_ == 4) refill();
    return buffer_[word_++];
  }

  void refill() {
    std::array<std::uint32_t, 4> x = {static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]};
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t hi0 = mul_hi(0xD2511F53u, x[0]);
      const std::uint32_t lo0 = 0xD2511F53u * x[0];
      const std::uint32_t hi1 = mul_hi(0xCD9E8D57u, x[2]);
      const std::uint32_t lo1 = 0xCD9E8D57u * x[2];
      x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buffer_ = x;
    word_ = 0;
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int word_ = 4;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Brownian increment pairs over a step h with constant correlation:
// dB^S = rho dB^R + sqrt(1 - rho^2) dW.
inline std::vector<std::pair<double, double>> correlated_increments(RngStream& stream, double rho,
                                                                    double h, std::size_t n) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("correlated_increments: |rho| must be <= 1");
  if (!(h > 0.0)) throw DomainError("correlated_increments: step h must be positive");
  const double sqrt_h = std::sqrt(h);
  const double ortho = std::sqrt(1.0 - rho * rho);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double db_r = sqrt_h * stream.normal();
    const double dw = sqrt_h * stream.normal();
    out.emplace_back(db_r, rho * db_r + ortho * dw);
  }
  return out;
}

}  // namespace insider
