#pragma once

// Elementary (radius 1, binary) cellular automata on finite patterns.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "capca/errors.hpp"

namespace capca {

inline constexpr int kRuleCount = 256;
inline constexpr int kMaxPatternLength = 20;

/// One of the 256 elementary rules. table[w] is the output for the
/// neighborhood window whose 3-bit value (left, centre, right) is w.
struct Rule {
    int index = 0;
    std::array<std::uint8_t, 8> table{};

    friend bool operator==(const Rule&, const Rule&) = default;
};

/// Fixed-length binary word, leftmost site first.
class BitPattern {
public:
    BitPattern() = default;

    explicit BitPattern(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_) {
            if (b > 1) throw DomainError("BitPattern: site value must be 0 or 1");
        }
    }

    /// Parses a string of '0'/'1' characters.
    static BitPattern from_string(std::string_view text) {
        std::vector<std::uint8_t> bits;
        bits.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') throw DomainError("BitPattern: expected '0' or '1'");
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        return BitPattern(std::move(bits));
    }

    /// Pattern of `length` sites whose binary reading (MSB first) is `value`.
    static BitPattern from_cardinal(std::uint64_t value, int length) {
        if (length < 0 || length > 63) throw DomainError("BitPattern: length out of range");
        if (length < 63 && value >> length) throw DomainError("BitPattern: value does not fit length");
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(length));
        for (int k = 0; k < length; ++k) {
            bits[static_cast<std::size_t>(k)] =
                static_cast<std::uint8_t>((value >> (length - 1 - k)) & 1U);
        }
        return BitPattern(std::move(bits));
    }

    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
    [[nodiscard]] std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    [[nodiscard]] const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    void flip(std::size_t i) { bits_[i] ^= 1U; }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
        return s;
    }

    friend bool operator==(const BitPattern&, const BitPattern&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Decodes a Wolfram rule number: bit w of the index is the output for window w.
inline Rule rule_from_index(int index) {
    if (index < 0 || index >= kRuleCount) {
        throw DomainError("rule index " + std::to_string(index) + " outside 0..255");
    }
    Rule rule;
    rule.index = index;
    for (int w = 0; w < 8; ++w) {
        rule.table[static_cast<std::size_t>(w)] = static_cast<std::uint8_t>((index >> w) & 1);
    }
    return rule;
}

/// Re-encodes the lookup table as sum table[w] * 2^w.
inline int rule_index(const Rule& rule) noexcept {
    int index = 0;
    for (int w = 0; w < 8; ++w) {
        index |= (rule.table[static_cast<std::size_t>(w)] & 1) << w;
    }
    return index;
}

/// One synchronous step with open boundaries: output site j reads the window
/// (input[j], input[j+1], input[j+2]), so the result is two sites shorter.
inline BitPattern evolve_open(const Rule& rule, const BitPattern& input) {
    if (input.size() < 3) throw DomainError("evolve_open: pattern needs at least 3 sites");
    std::vector<std::uint8_t> out(input.size() - 2);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const unsigned w = (input[j] << 2) | (input[j + 1] << 1) | input[j + 2];
        out[j] = rule.table[w];
    }
    return BitPattern(std::move(out));
}

/// Binary value of the pattern, first site most significant.
inline std::uint64_t cardinal(const BitPattern& bits) noexcept {
    std::uint64_t value = 0;
    for (auto b : bits.bits()) value = (value << 1) | b;
    return value;
}

/// All 2^length patterns in ascending cardinal order.
inline std::vector<BitPattern> enumerate_patterns(int length) {
    if (length < 1 || length > kMaxPatternLength) {
        throw DomainError("enumerate_patterns: length " + std::to_string(length) + " outside 1..20");
    }
    const std::uint64_t count = std::uint64_t{1} << length;
    std::vector<BitPattern> patterns;
    patterns.reserve(count);
    for (std::uint64_t v = 0; v < count; ++v) patterns.push_back(BitPattern::from_cardinal(v, length));
    return patterns;
}

}  // namespace capca
