#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>

namespace demgrade {

// FNV-1a 64-bit, used for content hashes and config digests.
class Fnv1a64 {
public:
    void update(const void* data, size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    uint64_t value() const { return hash_; }

private:
    uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(uint64_t value);

inline std::string fnv1a64_hex(const void* data, size_t n) {
    Fnv1a64 h;
    h.update(data, n);
    return to_hex(h.value());
}

inline std::string fnv1a64_hex(std::string_view s) {
    return fnv1a64_hex(s.data(), s.size());
}

}  // namespace demgrade
