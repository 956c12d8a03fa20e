#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sandlab {

/// Stream tags keep independent pipelines on disjoint random streams even
/// when they share a master seed.
enum class Stream : std::uint64_t {
  InitialMass = 1,
  FieldCholesky = 2,
  FieldSpectral = 3,
  Bootstrap = 4,
  CltMass = 5,
  DensityMass = 6,
  Cli = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: every variate is a pure function of
/// (seed, stream, trial, site, slot). Results therefore do not depend on the
/// order in which trials or sites are visited, nor on the thread count.
class CounterRng {
 public:
  /// Variates of one trial. Caches the (seed, stream, trial) hash prefix;
  /// values equal those of the corresponding CounterRng calls.
  class Trial {
   public:
    std::uint64_t bits(std::uint64_t site, std::uint64_t slot = 0) const {
      return splitmix64(splitmix64(prefix_ ^ site) ^ slot);
    }
    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t site, std::uint64_t slot = 0) const {
      return (static_cast<double>(bits(site, slot) >> 11) + 0.5) * 0x1.0p-53;
    }
    /// Standard normal by Box-Muller on two counter slots.
    double normal(std::uint64_t site) const {
      const double u1 = uniform(site, 0);
      const double u2 = uniform(site, 1);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

   private:
    friend class CounterRng;
    explicit Trial(std::uint64_t prefix) : prefix_(prefix) {}
    std::uint64_t prefix_;
  };

  constexpr CounterRng(std::uint64_t seed, Stream stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  Stream stream() const { return stream_; }

  Trial trial(std::uint64_t t) const {
    std::uint64_t h = splitmix64(seed_ ^ 0x5851F42D4C957F2DULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream_));
    return Trial(splitmix64(h ^ t));
  }

  std::uint64_t bits(std::uint64_t trial_index, std::uint64_t site, std::uint64_t slot = 0) const {
    return trial(trial_index).bits(site, slot);
  }
  double uniform(std::uint64_t trial_index, std::uint64_t site, std::uint64_t slot = 0) const {
    return trial(trial_index).uniform(site, slot);
  }
  double normal(std::uint64_t trial_index, std::uint64_t site) const {
    return trial(trial_index).normal(site);
  }

 private:
  std::uint64_t seed_;
  Stream stream_;
};

}  // namespace sandlab
