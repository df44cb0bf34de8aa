#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/image.hpp"
#include "drfuse/imaging.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse {

/// Source of the deep embedding block. Implementations are immutable after
/// construction and `embed` is safe to call concurrently.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t output_dim() const = 0;
    /// Expects a 224x224 3-channel raster.
    virtual std::vector<double> embed(const RasterImage& img) const = 0;
    /// Identifies everything that changes the embedding (cache invalidation).
    virtual std::string fingerprint() const = 0;
};

using ProviderPtr = std::shared_ptr<const FeatureProvider>;

/// Block-average pooling to grid x grid cells, values scaled to [0, 1],
/// flattened (row, column, channel).
inline std::vector<double> pool_blocks(const RasterImage& img, int grid)
{
    const RasterImage rgb = to_rgb(img);
    std::vector<double> out(static_cast<std::size_t>(grid) * grid * 3, 0.0);
    auto span_of = [grid](int i, int extent) {
        int lo = static_cast<int>(static_cast<std::int64_t>(i) * extent / grid);
        int hi = static_cast<int>(static_cast<std::int64_t>(i + 1) * extent / grid);
        lo = std::min(lo, extent - 1);
        hi = std::max(hi, lo + 1);
        return std::pair{lo, hi};
    };
    for (int by = 0; by < grid; ++by) {
        const auto [y0, y1] = span_of(by, rgb.height);
        for (int bx = 0; bx < grid; ++bx) {
            const auto [x0, x1] = span_of(bx, rgb.width);
            for (int c = 0; c < 3; ++c) {
                std::int64_t sum = 0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x)
                        sum += rgb.at(x, y, c);
                const double count = static_cast<double>(y1 - y0) * (x1 - x0);
                out[(static_cast<std::size_t>(by) * grid + bx) * 3 + c] = static_cast<double>(sum) / count / 255.0;
            }
        }
    }
    return out;
}

/// Deterministic stand-in for a CNN backbone: 16x16x3 block means projected
/// through a fixed Gaussian matrix drawn from `seed`.
class SeededProjectionProvider final : public FeatureProvider {
public:
    static constexpr int kGrid = 16;
    static constexpr std::size_t kInputDim = kGrid * kGrid * 3;

    SeededProjectionProvider(std::uint64_t seed, std::size_t output_dim) : seed_(seed), dim_(output_dim)
    {
        if (output_dim < 1)
            fail(Errc::InvalidDim, "projection output_dim must be >= 1");
        Rng rng(seed);
        const double scale = 1.0 / std::sqrt(static_cast<double>(kInputDim));
        weights_.resize(kInputDim * dim_);
        for (auto& w : weights_)
            w = rng.normal() * scale;
    }

    std::string name() const override { return "seeded_projection"; }
    std::size_t output_dim() const override { return dim_; }

    std::vector<double> embed(const RasterImage& img) const override
    {
        if (img.empty())
            fail(Errc::EmptyImage, "embed on empty image");
        const auto pooled = pool_blocks(img, kGrid);
        std::vector<double> out(dim_, 0.0);
        for (std::size_t i = 0; i < kInputDim; ++i) {
            const double v = pooled[i];
            const double* row = weights_.data() + i * dim_;
            for (std::size_t j = 0; j < dim_; ++j)
                out[j] += v * row[j];
        }
        return out;
    }

    std::string fingerprint() const override
    {
        return "seeded_projection;seed=" + std::to_string(seed_) + ";dim=" + std::to_string(dim_);
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::vector<double> weights_; // kInputDim x dim_, row-major
};

inline ProviderPtr seeded_projection_provider(std::uint64_t seed = 42, std::size_t output_dim = 64)
{
    return std::make_shared<SeededProjectionProvider>(seed, output_dim);
}

} // namespace drfuse
