#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace aglae {

/// Philox4x32-10 block function (Salmon et al., Random123). Pure: maps a
/// 128-bit counter and 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// What a substream is used for. The numeric values are part of the
/// reproducibility contract: never renumber.
enum class Purpose : std::uint32_t {
  init = 1,
  subset = 2,
  strategy = 3,
  shuffle = 4,
  model_init = 5,
  synth = 6,
  test = 100,
};

/// Counter-based generator over one substream keyed by (seed, cycle, purpose).
/// Two substreams with different keys never share a counter block, so draws
/// for one purpose do not perturb any other.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint32_t cycle, Purpose purpose) noexcept;

  static Rng substream(std::uint64_t seed, std::uint32_t cycle, Purpose purpose) noexcept {
    return Rng(seed, cycle, purpose);
  }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer on [0, bound). bound must be > 0. Unbiased (Lemire).
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() noexcept;

  template <typename T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// k distinct draws from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint32_t cycle_;
  std::uint32_t purpose_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace aglae
