#pragma once

#include <array>
#include <cstdint>

namespace trimsum {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A block is a pure function of (counter, key), so any replication can be
/// regenerated independently of the order in which replications run.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream of uniforms in the open interval (0,1) addressed by
/// (seed, stream, replication, grid point). Each Philox block yields two
/// 53-bit doubles.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint32_t replication,
                std::uint32_t grid_point = 0, std::uint32_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        replication_(replication),
        grid_point_(grid_point),
        stream_(stream) {}

  double next() noexcept {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  double operator()() noexcept { return next(); }

 private:
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits =
        ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void refill() noexcept {
    const auto out = Philox4x32::block(
        {block_++, replication_, grid_point_, stream_}, key_);
    buffer_[0] = to_open_unit(out[0], out[1]);
    buffer_[1] = to_open_unit(out[2], out[3]);
    cursor_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t replication_;
  std::uint32_t grid_point_;
  std::uint32_t stream_;
  std::uint32_t block_ = 0;
  std::array<double, 2> buffer_{};
  int cursor_ = 2;
};

}  // namespace trimsum
