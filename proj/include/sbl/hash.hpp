// hash.hpp - FNV-1a content hashing used for cache keys and memo tables

#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace sbl {

class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& add(double v) {
        if (v == 0.0) v = 0.0; // fold -0 into +0
        return bytes(&v, sizeof v);
    }
    Fnv1a& add(std::int64_t v) { return bytes(&v, sizeof v); }
    Fnv1a& add(std::uint64_t v) { return bytes(&v, sizeof v); }
    Fnv1a& add(std::string_view s) {
        add(static_cast<std::uint64_t>(s.size()));
        return bytes(s.data(), s.size());
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_{0xcbf29ce484222325ULL};
};

} // namespace sbl
