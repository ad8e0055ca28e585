#ifndef MMSE_RANDOM_HPP
#define MMSE_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace mmse {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A (seed,
/// stream) pair selects an independent sequence, so parallel partitions can
/// be seeded deterministically. Satisfies UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (index_ == 4) {
      block_ = generate(counter_, key_);
      increment();
      index_ = 0;
    }
    return block_[index_++];
  }

  /// Uniform double in the open interval (0, 1).
  double uniform_open() noexcept {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// The keyed Philox bijection on a single 128-bit counter block.
  static Block generate(Block c, Key k) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      c = round(c, k);
    }
    return c;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Block round(const Block& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  void increment() noexcept {
    if (++counter_[0] != 0) return;
    ++counter_[1];
  }

  Key key_;
  Block counter_;
  Block block_{};
  int index_{4};
};

}  // namespace mmse

#endif  // MMSE_RANDOM_HPP
