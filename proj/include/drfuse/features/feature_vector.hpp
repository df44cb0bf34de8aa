#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "drfuse/error.hpp"

namespace drfuse {

/// Descriptor blocks in their canonical fusion order.
enum class Block : std::uint8_t { Hu = 0, Zernike, Haralick, Ldp, ColorHist, Deep };

inline constexpr std::array<std::string_view, 6> kBlockNames = {"hu", "zernike", "haralick", "ldp", "color_hist", "deep"};

constexpr std::string_view block_name(Block b) noexcept { return kBlockNames[static_cast<std::size_t>(b)]; }

/// Feature flags raised by extractors when a convention replaced an undefined value.
enum FeatureFlag : std::uint32_t {
    kFlagNone = 0,
    kFlagZeroVarianceCorrelation = 1u << 0,
};

struct FeatureVector {
    Block block = Block::Hu;
    std::vector<double> values;
    std::uint32_t flags = kFlagNone;

    std::size_t dim() const noexcept { return values.size(); }
    std::string_view name() const noexcept { return block_name(block); }

    bool operator==(const FeatureVector&) const = default;
};

/// Extractors never let NaN or infinities escape.
inline void require_finite(const FeatureVector& fv)
{
    for (double v : fv.values)
        if (!std::isfinite(v))
            fail(Errc::NonFiniteFeature, std::string("non-finite value in block ") + std::string(fv.name()));
}

} // namespace drfuse
