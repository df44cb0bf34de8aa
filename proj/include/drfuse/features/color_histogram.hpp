#pragma once

#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/feature_vector.hpp"
#include "drfuse/image.hpp"

namespace drfuse {

/// Joint RGB histogram over ROI pixels, R-major then G then B, summing to 1.
inline FeatureVector color_histogram(const RasterImage& img, const BinaryMask& roi, int bins_per_channel = 8)
{
    if (img.channels != 3)
        fail(Errc::NotColorImage, "color histogram needs a 3-channel image");
    if (bins_per_channel < 2 || bins_per_channel > 256)
        fail(Errc::InvalidConfig, "bins_per_channel must be in [2, 256]");
    if (roi.width != img.width || roi.height != img.height)
        fail(Errc::DimensionMismatch, "ROI and image sizes differ");

    const std::size_t b = static_cast<std::size_t>(bins_per_channel);
    FeatureVector fv{Block::ColorHist, std::vector<double>(b * b * b, 0.0), kFlagNone};
    std::size_t total = 0;
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        if (!roi.data[i])
            continue;
        const std::size_t r = img.data[3 * i] * b / 256;
        const std::size_t g = img.data[3 * i + 1] * b / 256;
        const std::size_t bl = img.data[3 * i + 2] * b / 256;
        fv.values[(r * b + g) * b + bl] += 1.0;
        ++total;
    }
    if (total == 0)
        fail(Errc::EmptyRoi, "color histogram over an empty ROI");
    for (auto& v : fv.values)
        v /= static_cast<double>(total);
    return fv;
}

} // namespace drfuse
