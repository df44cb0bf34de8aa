#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/image.hpp"
#include "drfuse/imaging.hpp"

namespace drfuse {

struct SegmentationConfig {
    int blur_kernel = 5;
    double blur_sigma = 1.0;
    int block_size = 51;
    /// Constant subtracted from the local mean to form the per-pixel threshold.
    double threshold_offset = 2.0;
    int opening_radius = 2;
    /// Blurred intensities at or below this level are never foreground
    /// (keeps the black field outside the fundus out of the ROI).
    int background_level = 0;

    void validate() const
    {
        if (blur_kernel < 1 || blur_kernel % 2 == 0)
            fail(Errc::InvalidKernel, "blur_kernel must be odd and >= 1, got " + std::to_string(blur_kernel));
        if (!(blur_sigma > 0.0) || !std::isfinite(blur_sigma))
            fail(Errc::InvalidSigma, "blur_sigma must be > 0");
        if (block_size < 3 || block_size % 2 == 0)
            fail(Errc::InvalidBlockSize, "block_size must be odd and >= 3, got " + std::to_string(block_size));
        if (opening_radius < 1)
            fail(Errc::InvalidRadius, "opening_radius must be >= 1");
        if (!std::isfinite(threshold_offset))
            fail(Errc::InvalidConfig, "threshold_offset must be finite");
    }
};

/// Normalised 1-D Gaussian taps for an odd kernel width.
inline std::vector<double> gaussian_kernel(int kernel, double sigma)
{
    const int r = kernel / 2;
    std::vector<double> w(static_cast<std::size_t>(kernel));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        w[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += w[i + r];
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Separable convolution, edge replication, single rounding at the end.
inline GrayImage gaussian_blur(const GrayImage& img, int kernel, double sigma)
{
    if (img.empty())
        fail(Errc::EmptyImage, "gaussian_blur on empty image");
    if (kernel < 1 || kernel % 2 == 0 || kernel > std::min(img.width, img.height))
        fail(Errc::InvalidKernel, "kernel " + std::to_string(kernel) + " must be odd and within [1, min(w,h)]");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        fail(Errc::InvalidSigma, "sigma must be > 0");

    const auto w = gaussian_kernel(kernel, sigma);
    const int r = kernel / 2;
    const int W = img.width, H = img.height;
    std::vector<double> tmp(static_cast<std::size_t>(W) * H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += w[k + r] * img.at(std::clamp(x + k, 0, W - 1), y);
            tmp[static_cast<std::size_t>(y) * W + x] = acc;
        }
    GrayImage out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += w[k + r] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, H - 1)) * W + x];
            out.at(x, y) = saturate_u8(acc);
        }
    return out;
}

/// Sum of each pixel's block x block neighbourhood under edge replication.
inline std::vector<std::int64_t> box_sums_replicated(const GrayImage& img, int block)
{
    const int r = block / 2;
    const int W = img.width, H = img.height;
    std::vector<std::int64_t> rows(static_cast<std::size_t>(W) * H);
    std::vector<std::int64_t> prefix;
    for (int y = 0; y < H; ++y) {
        prefix.assign(static_cast<std::size_t>(W + 2 * r + 1), 0);
        for (int i = 0; i < W + 2 * r; ++i)
            prefix[i + 1] = prefix[i] + img.at(std::clamp(i - r, 0, W - 1), y);
        for (int x = 0; x < W; ++x)
            rows[static_cast<std::size_t>(y) * W + x] = prefix[x + block] - prefix[x];
    }
    std::vector<std::int64_t> out(rows.size());
    for (int x = 0; x < W; ++x) {
        prefix.assign(static_cast<std::size_t>(H + 2 * r + 1), 0);
        for (int i = 0; i < H + 2 * r; ++i)
            prefix[i + 1] = prefix[i] + rows[static_cast<std::size_t>(std::clamp(i - r, 0, H - 1)) * W + x];
        for (int y = 0; y < H; ++y)
            out[static_cast<std::size_t>(y) * W + x] = prefix[y + block] - prefix[y];
    }
    return out;
}

/// Pixel is foreground iff value > (local mean - offset).
inline BinaryMask adaptive_threshold(const GrayImage& img, int block_size, double offset)
{
    if (block_size < 3 || block_size % 2 == 0)
        fail(Errc::InvalidBlockSize, "block_size must be odd and >= 3, got " + std::to_string(block_size));
    if (img.empty())
        fail(Errc::EmptyImage, "adaptive_threshold on empty image");
    const auto sums = box_sums_replicated(img, block_size);
    const double area = static_cast<double>(block_size) * block_size;
    BinaryMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double t = static_cast<double>(sums[i]) / area - offset;
        mask.data[i] = img.data[i] > t ? 1 : 0;
    }
    return mask;
}

namespace detail {

// Square-window min (erode) or max (dilate); outside pixels count as 0.
inline BinaryMask square_filter(const BinaryMask& m, int radius, bool erode)
{
    const int W = m.width, H = m.height;
    BinaryMask tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::uint8_t v = erode ? 1 : 0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = x + k;
                const std::uint8_t s = (xx < 0 || xx >= W) ? 0 : m.at(xx, y);
                v = erode ? std::min(v, s) : std::max(v, s);
            }
            tmp.at(x, y) = v;
        }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::uint8_t v = erode ? 1 : 0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = y + k;
                const std::uint8_t s = (yy < 0 || yy >= H) ? 0 : tmp.at(x, yy);
                v = erode ? std::min(v, s) : std::max(v, s);
            }
            out.at(x, y) = v;
        }
    return out;
}

} // namespace detail

inline BinaryMask erode(const BinaryMask& m, int radius) { return detail::square_filter(m, radius, true); }
inline BinaryMask dilate(const BinaryMask& m, int radius) { return detail::square_filter(m, radius, false); }

/// Opening with a (2r+1) x (2r+1) square element.
inline BinaryMask morphological_open(const BinaryMask& mask, int radius)
{
    if (radius < 1)
        fail(Errc::InvalidRadius, "opening radius must be >= 1");
    return dilate(erode(mask, radius), radius);
}

/// Zeroes every channel of background pixels.
inline RasterImage apply_mask(const RasterImage& img, const BinaryMask& mask)
{
    RasterImage out = img;
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        if (!mask.data[i])
            for (int c = 0; c < img.channels; ++c)
                out.data[i * img.channels + c] = 0;
    return out;
}

struct Segmentation {
    BinaryMask mask;
    RasterImage masked;
};

/// grayscale -> blur -> adaptive threshold -> opening. Throws EmptyRoi when
/// nothing survives.
inline Segmentation segment(const RasterImage& img, const SegmentationConfig& cfg = {})
{
    cfg.validate();
    if (img.empty())
        fail(Errc::EmptyImage, "segment on empty image");
    const GrayImage blurred = gaussian_blur(to_grayscale(img), cfg.blur_kernel, cfg.blur_sigma);
    BinaryMask mask = adaptive_threshold(blurred, cfg.block_size, cfg.threshold_offset);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (blurred.data[i] <= cfg.background_level)
            mask.data[i] = 0;
    mask = morphological_open(mask, cfg.opening_radius);
    if (mask.count() == 0)
        fail(Errc::EmptyRoi, "segmentation produced an empty mask");
    RasterImage masked = apply_mask(img, mask);
    return {std::move(mask), std::move(masked)};
}

struct SegmentationOutcome {
    Segmentation seg;
    bool used_fallback = false;
};

/// segment(), substituting the full-image mask on EmptyRoi.
inline SegmentationOutcome segment_with_fallback(const RasterImage& img, const SegmentationConfig& cfg = {})
{
    try {
        return {segment(img, cfg), false};
    } catch (const Error& e) {
        if (e.code() != Errc::EmptyRoi)
            throw;
    }
    return {{BinaryMask(img.width, img.height, 1), img}, true};
}

} // namespace drfuse
