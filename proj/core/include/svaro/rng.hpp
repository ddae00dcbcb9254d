#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace svaro {

/// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator so it
/// plugs into the <random> distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

using Rng = Xoshiro256;

/// Identifies which update a random stream belongs to.
enum class Stage : std::uint64_t {
  kInit = 1,
  kW,
  kA,
  kGamma,
  kAlpha,
  kTau,
  kLambda,
  kSimIsing,
  kSimAr,
  kSimField,
  kSimNoise,
  kIsingPrior,
};

/// Returns a generator whose state is a hash of (seed, key...). Streams with
/// different keys are statistically independent, and a stream does not
/// depend on how many draws any other stream consumed. This is what makes
/// chain output independent of the thread count.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) noexcept;

inline Rng make_stream(std::uint64_t seed, Stage stage, std::uint64_t a = 0,
                       std::uint64_t b = 0) noexcept {
  return make_stream(seed, {static_cast<std::uint64_t>(stage), a, b});
}

}  // namespace svaro
