#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "drfuse/error.hpp"

namespace drfuse {

/// Row-major, channel-interleaved 8-bit raster with 1 or 3 channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    RasterImage() = default;
    RasterImage(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill)
    {
        if (c != 1 && c != 3)
            fail(Errc::UnsupportedChannelCount, "channels must be 1 or 3");
    }

    bool empty() const noexcept { return width <= 0 || height <= 0 || data.empty(); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }

    std::uint8_t& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

    bool operator==(const RasterImage&) const = default;
};

/// Single-channel 8-bit luma.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill)
    {
    }

    bool empty() const noexcept { return width <= 0 || height <= 0 || data.empty(); }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const GrayImage&) const = default;
};

/// Values are 0 or 1; 1 marks the region of interest.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0)
    {
    }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t count() const noexcept
    {
        std::size_t n = 0;
        for (auto v : data)
            n += v;
        return n;
    }

    bool operator==(const BinaryMask&) const = default;
};

} // namespace drfuse
