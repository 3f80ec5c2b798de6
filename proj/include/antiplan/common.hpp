#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace antiplan {

/// Action and plan costs. Move costs are quantized to multiples of
/// kCostQuantum so that sums of costs are exact in double precision.
using Cost = double;

inline constexpr Cost kInfiniteCost = std::numeric_limits<Cost>::infinity();
inline constexpr Cost kPickPlaceCost = 100.0;
inline constexpr double kCostQuantum = 1.0 / 1024.0;

inline Cost quantize_cost(double c) { return std::round(c / kCostQuantum) * kCostQuantum; }

// Error hierarchy. Unsolvable planning problems are not errors; they are
// reported through std::optional.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GenerationFailure : Error {
  using Error::Error;
};
struct UnknownEntity : Error {
  using Error::Error;
};
struct PreconditionViolation : Error {
  using Error::Error;
};
struct MissingMoveCost : Error {
  using Error::Error;
};
struct NoPath : Error {
  using Error::Error;
};
struct UnreachableLocation : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NonFiniteLoss : Error {
  using Error::Error;
};
struct UnsolvableTask : Error {
  using Error::Error;
};

/// Seed mixer used to derive independent streams from (seed, salt...) tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt, Rest... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(salt + 0x632be59bd9b4e019ULL)), rest...);
}

/// Portable random stream. The standard distributions are implementation
/// defined, so uniform draws are computed from raw engine output here.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - (max() % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

  template <typename Container>
  void shuffle(Container& c) {
    using std::swap;
    for (std::size_t i = c.size(); i > 1; --i) swap(c[i - 1], c[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

inline void hash_combine(std::size_t& h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

}  // namespace antiplan
