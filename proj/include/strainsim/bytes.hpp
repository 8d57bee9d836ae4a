#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace strainsim {

using Bytes = std::vector<std::uint8_t>;

inline std::string to_hex(const std::uint8_t* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

// SplitMix64 step; also used to derive content for synthetic fixture blobs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fold_string(std::string_view s) {
    // FNV-1a, for seeding synthetic content only (never identity).
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Deterministic pseudo-random blob; content depends only on (tag, size).
inline Bytes synthetic_bytes(std::string_view tag, std::size_t size) {
    std::uint64_t state = fold_string(tag) ^ (0x5851F42D4C957F2DULL * size);
    Bytes out;
    out.reserve(size);
    while (out.size() < size) {
        std::uint64_t word = splitmix64(state);
        for (int i = 0; i < 8 && out.size() < size; ++i) {
            out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
        }
    }
    return out;
}

}  // namespace strainsim
