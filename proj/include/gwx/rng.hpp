#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gwx {

// The toolkit's single generator: 64-bit Mersenne Twister (std::mt19937_64,
// whose output sequence is fixed by the C++ standard).
using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to turn (base, index) pairs into well-spread
// seeds so that trial i draws from its own stream regardless of which
// thread evaluates it.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// seed for trial `index` under `base`: mix_seed(base XOR index)
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix_seed(base ^ index);
}

// n standard normal draws from a generator seeded with `seed`.
std::vector<double> gaussian_draws(std::uint64_t seed, std::size_t n);

}    // namespace gwx
