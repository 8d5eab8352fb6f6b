#pragma once

#include <cstdint>
#include <random>

namespace flsim {

// SplitMix64 finalizer. Used to derive independent stream seeds from one
// master seed so that per-round / per-client randomness does not depend on
// execution order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a) {
    return splitmix64(seed ^ splitmix64(a));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    return mix_seed(mix_seed(seed, a, b), c);
}

// Stream tags; any two distinct tags give unrelated streams.
namespace seed_tag {
inline constexpr std::uint64_t data = 0x01;
inline constexpr std::uint64_t test_split = 0x02;
inline constexpr std::uint64_t partition = 0x03;
inline constexpr std::uint64_t root_sample = 0x04;
inline constexpr std::uint64_t client_sample = 0x05;
inline constexpr std::uint64_t local_train = 0x06;
inline constexpr std::uint64_t server_train = 0x07;
inline constexpr std::uint64_t model_init = 0x08;
inline constexpr std::uint64_t poison = 0x09;
inline constexpr std::uint64_t attack = 0x0a;
} // namespace seed_tag

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace flsim
