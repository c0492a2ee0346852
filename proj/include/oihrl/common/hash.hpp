#pragma once

#include <cstdint>
#include <string_view>

namespace oihrl {

/// 64-bit FNV-1a. Stable across platforms; used for domain and checkpoint fingerprints.
constexpr auto fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept -> std::uint64_t {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}    // namespace oihrl
