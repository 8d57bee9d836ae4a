#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "strainsim/bytes.hpp"
#include "strainsim/sha256.hpp"

namespace strainsim {

// 256-bit content digest. Equal canonical content <=> equal digest, stable
// across runs, processes and hosts.
struct ContentHash {
    std::array<std::uint8_t, 32> digest{};

    auto operator<=>(const ContentHash&) const = default;
    bool operator==(const ContentHash&) const = default;

    std::string hex() const { return to_hex(digest.data(), digest.size()); }
    std::string short_hex() const { return hex().substr(0, 16); }
    bool is_zero() const {
        for (auto b : digest)
            if (b != 0) return false;
        return true;
    }

    static ContentHash from_hex(std::string_view hex);
};

inline ContentHash ContentHash::from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    ContentHash out{};
    if (hex.size() != 2 * out.digest.size()) throw std::invalid_argument("bad hash hex length");
    for (std::size_t i = 0; i < out.digest.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("bad hash hex digit");
        out.digest[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

// Streams values into a digest using the canonical encoding documented in
// docs/formats.md: integers little-endian u64, strings and blobs length
// prefixed, map entries in sorted key order, optionals with a presence byte.
class CanonicalWriter {
  public:
    void u8(std::uint8_t v) { raw(&v, 1); }

    void u64(std::uint64_t v) {
        std::uint8_t le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(le, 8);
    }

    void boolean(bool v) { u8(v ? 1 : 0); }

    void str(std::string_view s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    void blob(const Bytes& b) {
        u64(b.size());
        raw(b.data(), b.size());
    }

    void tag(std::string_view t) { str(t); }

    ContentHash finish() { return ContentHash{sha_.finish()}; }

  private:
    void raw(const void* data, std::size_t n) { sha_.update(data, n); }

    detail::Sha256 sha_;
};

inline void write_canonical(CanonicalWriter& w, std::uint64_t v) { w.u64(v); }
inline void write_canonical(CanonicalWriter& w, std::uint32_t v) { w.u64(v); }
inline void write_canonical(CanonicalWriter& w, int v) { w.u64(static_cast<std::uint64_t>(v)); }
inline void write_canonical(CanonicalWriter& w, bool v) { w.boolean(v); }
inline void write_canonical(CanonicalWriter& w, const std::string& s) { w.str(s); }
inline void write_canonical(CanonicalWriter& w, const Bytes& b) { w.blob(b); }
inline void write_canonical(CanonicalWriter& w, const ContentHash& h) {
    w.u64(h.digest.size());
    for (auto b : h.digest) w.u8(b);
}

template <class T>
void write_canonical(CanonicalWriter& w, const std::optional<T>& v) {
    w.boolean(v.has_value());
    if (v) write_canonical(w, *v);
}

template <class T>
void write_canonical(CanonicalWriter& w, const std::vector<T>& v) {
    w.u64(v.size());
    for (const auto& item : v) write_canonical(w, item);
}

inline void write_canonical(CanonicalWriter& w, const std::set<std::string>& s) {
    w.u64(s.size());
    for (const auto& item : s) w.str(item);
}

// std::map with string keys already iterates in lexicographic key order.
template <class V>
void write_canonical(CanonicalWriter& w, const std::map<std::string, V>& m) {
    w.u64(m.size());
    for (const auto& [k, v] : m) {
        w.str(k);
        write_canonical(w, v);
    }
}

template <class T>
ContentHash canonical_hash(const T& value) {
    CanonicalWriter w;
    write_canonical(w, value);
    return w.finish();
}

}  // namespace strainsim
