#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace semiseg {

// FNV-1a 64-bit; used for provider identity digests in manifests.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_digest(std::uint64_t h);

} // namespace semiseg
