#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sdlab {

using Rng = std::mt19937_64;

inline double draw_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline std::vector<double> draw_normal_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = draw_normal(rng);
    return v;
}

// FNV-1a over the master seed, sampler name and run seed. Adding samplers to
// a sweep must not perturb the streams of existing runs.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view sampler_name,
                                 std::uint64_t run_seed) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(master);
    for (char c : sampler_name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    mix(run_seed);
    return h;
}

}  // namespace sdlab
