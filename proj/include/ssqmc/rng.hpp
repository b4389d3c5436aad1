#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ssqmc {

// Counter-based stream: every output is a pure function of
// (master_seed, trajectory_index, counter), so trajectories can be scheduled
// on any number of threads, in any order, without changing a single draw.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t trajectory_index = 0)
        : master_seed_(master_seed), trajectory_index_(trajectory_index) {
        key_ = mix64(mix64(master_seed + 0x9e3779b97f4a7c15ull) ^
                     (0xbf58476d1ce4e5b9ull * (trajectory_index + 1)));
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t trajectory_index() const { return trajectory_index_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
    }

    // uniform in (0,1]; never returns 0 so log() below is safe
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
    }

    // standard normal via Box-Muller (fixed two-draw cost, no caching)
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // uniform over {0,1,2} via multiply-high, rejection-free
    int roll3() {
        return static_cast<int>(
            (static_cast<unsigned __int128>(next_u64()) * 3u) >> 64);
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t master_seed_;
    std::uint64_t trajectory_index_;
    std::uint64_t counter_ = 0;
    std::uint64_t key_;
};

} // namespace ssqmc
