#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>

#include "drfuse/dataset/manifest.hpp"
#include "drfuse/image.hpp"
#include "drfuse/image_io.hpp"
#include "drfuse/imaging.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse {

/// Fundus-like test images: an orange disk on black whose stripe texture
/// frequency and bright-spot count both grow with the class index.
struct SyntheticSpec {
    int size = kCanonicalSize;
    /// Stripe cycles across the disk diameter, per class.
    std::array<double, kNumClasses> cycles{4.0, 9.0, 14.0, 19.0, 24.0};
    std::array<int, kNumClasses> spots{1, 5, 9, 13, 17};
    double spot_radius_min = 3.0;
    double spot_radius_max = 6.0;
    /// Per-image uniform jitter of the base colour, in intensity units.
    double color_jitter = 2.0;
    std::array<double, 3> spot_color{235.0, 215.0, 90.0};
    double stripe_amplitude = 28.0;
    double noise_sigma = 8.0;
};

inline RasterImage synthetic_fundus(int cls, std::uint64_t seed, const SyntheticSpec& spec = {})
{
    Rng rng(seed);
    const int n = spec.size;
    const double cx = n / 2.0 + rng.uniform(-0.04, 0.04) * n;
    const double cy = n / 2.0 + rng.uniform(-0.04, 0.04) * n;
    const double radius = n * rng.uniform(0.40, 0.45);
    const double j = spec.color_jitter;
    const double base[3] = {182.0 + rng.uniform(-j, j), 90.0 + rng.uniform(-j, j), 40.0 + rng.uniform(-j, j)};
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double k = 2.0 * std::numbers::pi * spec.cycles[static_cast<std::size_t>(cls)] / (2.0 * radius);
    const double ux = std::cos(theta), uy = std::sin(theta);

    struct Spot {
        double x, y, r;
    };
    std::vector<Spot> spots;
    const int count = spec.spots[static_cast<std::size_t>(cls)] + static_cast<int>(rng.index(3)) - 1;
    for (int s = 0; s < std::max(count, 0); ++s) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double d = radius * 0.75 * std::sqrt(rng.uniform());
        spots.push_back({cx + d * std::cos(a), cy + d * std::sin(a), rng.uniform(spec.spot_radius_min, spec.spot_radius_max)});
    }

    RasterImage img(n, n, 3, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double r2 = (dx * dx + dy * dy) / (radius * radius);
            if (r2 > 1.0)
                continue;
            const double shade = 1.0 - 0.35 * r2;
            const double stripe = spec.stripe_amplitude * std::sin(k * (dx * ux + dy * uy) + phase);
            bool in_spot = false;
            for (const auto& s : spots) {
                const double ex = x + 0.5 - s.x, ey = y + 0.5 - s.y;
                in_spot = in_spot || ex * ex + ey * ey <= s.r * s.r;
            }
            for (int c = 0; c < 3; ++c) {
                const double v = in_spot ? spec.spot_color[static_cast<std::size_t>(c)]
                                         : base[c] * shade + stripe * (c == 0 ? 1.0 : 0.5);
                img.at(x, y, c) = saturate_u8(v + spec.noise_sigma * rng.normal());
            }
        }
    return img;
}

/// Writes <root>/<class>/img_NNNN.png, `per_class` images per class.
inline void write_synthetic_dataset(const std::filesystem::path& root, int per_class, std::uint64_t seed,
                                    const SyntheticSpec& spec = {})
{
    for (int c = 0; c < kNumClasses; ++c) {
        const auto dir = root / std::string(kClassNames[static_cast<std::size_t>(c)]);
        std::filesystem::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%04d.png", i);
            const auto s = derive_seed(seed, static_cast<std::uint64_t>(c) * 1000003ULL + static_cast<std::uint64_t>(i));
            save_png(dir / name, synthetic_fundus(c, s, spec));
        }
    }
}

} // namespace drfuse
