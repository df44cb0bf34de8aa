#pragma once

#include <cstdint>
#include <string_view>

namespace drfuse {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace drfuse
