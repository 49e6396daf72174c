#ifndef AGENTSIM__RNG_HPP_
#define AGENTSIM__RNG_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace agentsim
{
/// SplitMix64 finalizer; used to fold stream tags into a Philox key.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-dependent combination of two 64-bit values.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

/// FNV-1a over the bytes of a string.
std::uint64_t hash_string(std::string_view text) noexcept;

/**
 * @brief Counter-based generator (Philox4x32-10).
 *
 * A stream is identified by a 64-bit key. Child streams are derived by hashing
 * the parent key with tags (rollout index, agent id hash, step, ...), so the
 * values drawn by one consumer never depend on how many values another
 * consumer drew or in which order work was scheduled.
 *
 * Distributions are implemented here rather than with <random> so sequences
 * are identical across standard library implementations.
 */
class Rng
{
public:
  explicit Rng(std::uint64_t key = 0) noexcept;

  /// Stream keyed by hash(master, tags...).
  static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept;

  Rng child(std::initializer_list<std::uint64_t> tags) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

private:
  void refill() noexcept;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};
}  // namespace agentsim

#endif  // AGENTSIM__RNG_HPP_
