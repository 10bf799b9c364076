#pragma once

#include <cstdint>
#include <random>

namespace flearn {

/// splitmix64 step; the standard finalizer from Steele et al. Used both to
/// derive per-trial seeds from a base seed and to decorrelate user seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for trial index i (0-based): the (i+1)-th output of a splitmix64
/// stream seeded with base_seed. Extending the trial count never changes
/// earlier seeds.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    std::uint64_t state = base_seed;
    std::uint64_t s = 0;
    for (int i = 0; i <= trial; ++i) s = splitmix64_next(state);
    return s;
}

/// mt19937_64 has a fully specified output sequence, so draws are identical
/// across platforms and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0,1) with 53 random bits, bypassing the unspecified
    /// behaviour of std::uniform_real_distribution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace flearn
