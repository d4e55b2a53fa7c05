// Deterministic draws on top of std::mt19937. The <random> distributions are
// implementation-defined, so anything that must reproduce bitwise across
// compilers goes through these helpers instead.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace csae {

// uniform in [0,1) with 24 bits of randomness
inline float uniform_float(std::mt19937& g) {
    return static_cast<float>(g() >> 8) * (1.0f / 16777216.0f);
}

// uniform in [0,1) with the full 53 bits a double can hold
inline double uniform_double(std::mt19937& g) {
    const std::uint64_t hi = g() >> 5;  // 27 bits
    const std::uint64_t lo = g() >> 6;  // 26 bits
    return static_cast<double>(hi * 67108864ULL + lo) * (1.0 / 9007199254740992.0);
}

template <typename T>
T uniform01(std::mt19937& g);

template <>
inline float uniform01<float>(std::mt19937& g) { return uniform_float(g); }

template <>
inline double uniform01<double>(std::mt19937& g) { return uniform_double(g); }

// uniform index in [0,n); multiply-shift keeps it branch-free and portable
inline std::uint32_t uniform_index(std::mt19937& g, std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(g()) * n) >> 32);
}

// in-place Fisher-Yates shuffle
template <typename V>
void fisher_yates(std::vector<V>& v, std::mt19937& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = uniform_index(g, static_cast<std::uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<int> shuffled_indices(int n, std::mt19937& g) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    fisher_yates(idx, g);
    return idx;
}

}  // namespace csae
