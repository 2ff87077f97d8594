#include "semiseg/util/fnv.hpp"

#include <array>

namespace semiseg {

std::string hex_digest(std::uint64_t h) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace semiseg
