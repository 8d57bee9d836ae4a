#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "strainsim/error.hpp"
#include "strainsim/hash.hpp"

namespace strainsim {

// Deterministic per-consumer random stream. State is seeded from
// sha256(seed, label), so streams are mutually independent and adding a new
// label never perturbs an existing one. No std:: distributions: their
// algorithms differ across standard libraries, which would break replay.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::string_view label) {
        CanonicalWriter w;
        w.tag("rng_stream");
        w.u64(seed);
        w.str(label);
        ContentHash h = w.finish();
        state_ = 0;
        for (int i = 0; i < 8; ++i) state_ |= std::uint64_t(h.digest[i]) << (8 * i);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, bound), unbiased by rejection
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    double next_exponential(double mean) { return -mean * std::log(1.0 - next_unit()); }

  private:
    std::uint64_t state_;
};

// Hands out streams and enforces one label per consumer.
class RngRegistry {
  public:
    explicit RngRegistry(std::uint64_t seed) : seed_(seed) {}

    RngStream stream(const std::string& label) {
        if (!labels_.insert(label).second) throw DuplicateLabel(label);
        return RngStream(seed_, label);
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::set<std::string> labels_;
};

inline RngStream rng_stream(std::uint64_t seed, std::string_view label) {
    return RngStream(seed, label);
}

}  // namespace strainsim
