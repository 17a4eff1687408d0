#pragma once

#include <cstdint>
#include <cmath>

namespace wf {

// Counter-based Philox4x32-10 stream. A stream is keyed by (seed, stream id);
// draws depend only on (key, position), so replicate streams are independent
// and identical across thread schedules.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(static_cast<std::uint32_t>(stream)),
        ctr3_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint64_t next_u64() {
    if (have_spare_u64_) {
      have_spare_u64_ = false;
      return spare_u64_;
    }
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    ++block_;
    std::uint32_t x0 = c0, x1 = c1, x2 = ctr2_, x3 = ctr3_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * x0;
      const std::uint64_t p1 = 0xCD9E8D57ull * x2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t y0 = hi1 ^ x1 ^ k0;
      const std::uint32_t y1 = lo1;
      const std::uint32_t y2 = hi0 ^ x3 ^ k1;
      const std::uint32_t y3 = lo0;
      x0 = y0; x1 = y1; x2 = y2; x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    spare_u64_ = (static_cast<std::uint64_t>(x2) << 32) | x3;
    have_spare_u64_ = true;
    return (static_cast<std::uint64_t>(x0) << 32) | x1;
  }

  // uniform on (0, 1]
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return next_u64() % n;  // modulo bias negligible for n << 2^64
  }

  double next_gaussian() {
    if (have_spare_gauss_) {
      have_spare_gauss_ = false;
      return spare_gauss_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_gauss_ = r * std::sin(a);
    have_spare_gauss_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint32_t key0_, key1_;
  std::uint32_t ctr2_, ctr3_;
  std::uint64_t block_ = 0;
  std::uint64_t spare_u64_ = 0;
  bool have_spare_u64_ = false;
  double spare_gauss_ = 0.0;
  bool have_spare_gauss_ = false;
};

}  // namespace wf
