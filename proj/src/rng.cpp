#include "gwx/rng.hpp"

namespace gwx {

std::vector<double> gaussian_draws(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

}    // namespace gwx
