#pragma once

#include <algorithm>
#include <cmath>

#include "drfuse/image.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse::testing {

inline GrayImage random_gray(Rng& rng, int w, int h)
{
    GrayImage g(w, h);
    for (auto& v : g.data)
        v = static_cast<std::uint8_t>(rng.index(256));
    return g;
}

inline RasterImage random_rgb(Rng& rng, int w, int h)
{
    RasterImage r(w, h, 3);
    for (auto& v : r.data)
        v = static_cast<std::uint8_t>(rng.index(256));
    return r;
}

inline BinaryMask random_mask(Rng& rng, int w, int h, double p = 0.5)
{
    BinaryMask m(w, h);
    for (auto& v : m.data)
        v = rng.uniform() < p ? 1 : 0;
    return m;
}

/// Union of a few random ellipses inside a w x h canvas, never empty.
inline BinaryMask random_blob(Rng& rng, int w, int h)
{
    BinaryMask m(w, h);
    const int blobs = 1 + static_cast<int>(rng.index(3));
    for (int b = 0; b < blobs; ++b) {
        const double cx = rng.uniform(0.3, 0.7) * w, cy = rng.uniform(0.3, 0.7) * h;
        const double rx = rng.uniform(0.08, 0.25) * w, ry = rng.uniform(0.08, 0.25) * h;
        const double t = rng.uniform(0.0, 3.14159);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = (dx * std::cos(t) + dy * std::sin(t)) / rx;
                const double v = (-dx * std::sin(t) + dy * std::cos(t)) / ry;
                if (u * u + v * v <= 1.0)
                    m.at(x, y) = 1;
            }
    }
    if (m.count() == 0)
        m.at(w / 2, h / 2) = 1;
    return m;
}

/// Exact 90-degree clockwise rotation: (x, y) -> (h - 1 - y, x).
inline BinaryMask rotate90(const BinaryMask& m)
{
    BinaryMask r(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            r.at(m.height - 1 - y, x) = m.at(x, y);
    return r;
}

inline BinaryMask translate(const BinaryMask& m, int dx, int dy, int w, int h)
{
    BinaryMask r(w, h);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < w && ny < h)
                    r.at(nx, ny) = 1;
            }
    return r;
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12)
{
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

} // namespace drfuse::testing
