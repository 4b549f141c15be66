#pragma once

// Seedable random streams. A single root seed fans out into independent
// sub-streams keyed by (domain, index), so trial i always sees the same
// numbers no matter which worker runs it or in which order.

#include <cstdint>
#include <random>

namespace gsplit {

enum class StreamDomain : std::uint64_t {
  Trial = 1,      // non-empty GS trials (fixed-n and until-t collection)
  RawTrial = 2,   // unconditioned GS trials used for probability estimation
  Pilot = 3,
  Smc = 4,
  Budget = 5,     // budget-limited GS replications in GS/SMC comparisons
  Reference = 6,  // independent reference runs (e.g. moments for Wald checks)
  Validation = 7,
  Replication = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RandomStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double open_uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Root of a tree of independent streams.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }

  std::uint64_t derive(StreamDomain domain, std::uint64_t index) const {
    std::uint64_t h = splitmix64(root_ ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(domain));
    return splitmix64(h + index);
  }

  RandomStream stream(StreamDomain domain, std::uint64_t index) const {
    return RandomStream(derive(domain, index));
  }

  SeedSequence child(StreamDomain domain, std::uint64_t index) const {
    return SeedSequence(derive(domain, index) ^ 0xbb67ae8584caa73bULL);
  }

 private:
  std::uint64_t root_;
};

}  // namespace gsplit
