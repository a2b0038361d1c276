#pragma once

// Deterministic random-number plumbing. Every stream is derived from
// (base_seed, run index, purpose, node) through splitmix64, so replicas and
// per-node streams are independent and reproducible. Bounded draws use the
// 128-bit multiply-shift reduction instead of std::uniform_int_distribution,
// whose algorithm is implementation-defined and would break byte-identical
// output across standard libraries.

#include <cstdint>
#include <random>

namespace fanet {

// Named sub-stream purposes; values are part of the reproducibility contract.
enum class RngPurpose : std::uint64_t {
    Traffic = 1,   // application src/dst sampling
    MacBackoff = 2,
    ProtocolMisc = 3,  // e.g. DSDV broadcast stagger
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine seed components by chaining splitmix64 over each word.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t run, std::uint64_t purpose,
                              std::uint64_t node) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ run);
    s = splitmix64(s ^ purpose);
    s = splitmix64(s ^ node);
    return s;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    Rng(std::uint64_t base, std::uint64_t run, RngPurpose purpose, std::uint64_t node)
        : eng_(mix_seed(base, run, static_cast<std::uint64_t>(purpose), node)) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, n) via 128-bit multiply-shift (slightly biased
    // for astronomically large n; exact enough and fully portable).
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace fanet
