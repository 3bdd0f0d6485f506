#pragma once

// Bernoulli bit reversal of CA outputs with a counter-based random source:
// every flip decision is a pure function of (seed, pattern, rule, site), so
// tables can be corrupted in any order or in parallel with identical results.

#include <cmath>
#include <cstdint>
#include <string>

#include "capca/ca_engine.hpp"
#include "capca/errors.hpp"

namespace capca {

namespace detail {

// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t pattern, std::uint64_t rule,
                                 std::uint64_t site) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ pattern);
    h = splitmix64(h ^ (rule << 32 | site));
    return h;
}

}  // namespace detail

class NoiseModel {
public:
    NoiseModel(double p, std::uint64_t seed) : p_(p), seed_(seed) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("noise probability " + std::to_string(p) + " outside [0, 1]");
        }
    }

    [[nodiscard]] double p() const noexcept { return p_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform draw in [0, 1) keyed on the cell coordinates.
    [[nodiscard]] double uniform(std::uint64_t pattern_idx, std::uint64_t rule_idx,
                                 std::uint64_t site) const noexcept {
        const std::uint64_t h = detail::hash_key(seed_, pattern_idx, rule_idx, site);
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] bool flips(std::uint64_t pattern_idx, std::uint64_t rule_idx,
                             std::uint64_t site) const noexcept {
        return uniform(pattern_idx, rule_idx, site) < p_;
    }

private:
    double p_;
    std::uint64_t seed_;
};

/// Reverses each site of `bits` independently with the model's probability.
inline BitPattern flip_bits(const BitPattern& bits, const NoiseModel& model,
                            std::uint64_t pattern_idx, std::uint64_t rule_idx) {
    BitPattern out = bits;
    for (std::size_t s = 0; s < out.size(); ++s) {
        if (model.flips(pattern_idx, rule_idx, s)) out.flip(s);
    }
    return out;
}

}  // namespace capca
