#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "drfuse/error.hpp"
#include "drfuse/image.hpp"

namespace drfuse {

/// Canonical working resolution of the pipeline.
inline constexpr int kCanonicalSize = 224;

/// Rounds half away from zero and saturates to [0, 255].
inline std::uint8_t saturate_u8(double v) noexcept
{
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

// Half-pixel-centred bilinear resampling with edge clamping.
inline RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h)
{
    if (img.empty())
        fail(Errc::EmptyImage, "resize_bilinear on empty image");
    if (out_w < 1 || out_h < 1)
        fail(Errc::EmptyImage, "resize_bilinear target must be at least 1x1");
    if (out_w == img.width && out_h == img.height)
        return img;

    RasterImage out(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy_src = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(fy_src));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = fy_src - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx_src = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(fx_src));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = fx_src - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
                const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
                out.at(x, y, c) = saturate_u8(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    return out;
}

/// BT.601 luma. One-channel rasters pass through unchanged.
inline GrayImage to_grayscale(const RasterImage& img)
{
    GrayImage out(img.width, img.height);
    if (img.channels == 1) {
        out.data = img.data;
        return out;
    }
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.data[3 * i];
        const double g = img.data[3 * i + 1];
        const double b = img.data[3 * i + 2];
        out.data[i] = saturate_u8(0.299 * r + 0.587 * g + 0.114 * b);
    }
    return out;
}

inline RasterImage to_raster(const GrayImage& gray)
{
    RasterImage out(gray.width, gray.height, 1);
    out.data = gray.data;
    return out;
}

/// Replicates a single channel into three.
inline RasterImage to_rgb(const RasterImage& img)
{
    if (img.channels == 3)
        return img;
    RasterImage out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    return out;
}

/// Mask rendered as 0/255 luma for export.
inline GrayImage mask_to_gray(const BinaryMask& mask)
{
    GrayImage out(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        out.data[i] = mask.data[i] ? 255 : 0;
    return out;
}

} // namespace drfuse
