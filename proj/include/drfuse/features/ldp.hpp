#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/feature_vector.hpp"
#include "drfuse/image.hpp"

namespace drfuse {

// Ring of 3x3 neighbours, clockwise from East (y grows downward).
inline constexpr std::array<std::array<int, 2>, 8> kCompassRing = {{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

/// Kirsch mask k has weight 5 on the three ring cells centred on direction k
/// and -3 on the other five.
inline int kirsch_weight(int mask, int ring_pos) noexcept
{
    const int d = (ring_pos - mask + 8) % 8;
    return (d == 0 || d == 1 || d == 7) ? 5 : -3;
}

inline std::array<int, 8> kirsch_responses(const GrayImage& g, int x, int y)
{
    std::array<int, 8> ring{};
    for (int i = 0; i < 8; ++i)
        ring[i] = g.at(x + kCompassRing[i][0], y + kCompassRing[i][1]);
    std::array<int, 8> resp{};
    for (int m = 0; m < 8; ++m) {
        int acc = 0;
        for (int i = 0; i < 8; ++i)
            acc += kirsch_weight(m, i) * ring[i];
        resp[m] = acc;
    }
    return resp;
}

/// Code with bits set for the k largest |responses|; ties go to the lower index.
inline std::uint8_t ldp_code(const std::array<int, 8>& responses, int k)
{
    std::array<int, 8> order{0, 1, 2, 3, 4, 5, 6, 7};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(responses[a]) > std::abs(responses[b]); });
    std::uint8_t code = 0;
    for (int i = 0; i < k; ++i)
        code |= static_cast<std::uint8_t>(1u << order[i]);
    return code;
}

/// Maps each 8-bit code with popcount k to its rank among such codes; -1 otherwise.
inline std::array<int, 256> ldp_bin_table(int k)
{
    std::array<int, 256> table{};
    int next = 0;
    for (int c = 0; c < 256; ++c)
        table[c] = std::popcount(static_cast<unsigned>(c)) == k ? next++ : -1;
    return table;
}

constexpr std::size_t binomial(int n, int k) noexcept
{
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

/// Normalised histogram of LDP codes over ROI pixels whose 3x3 neighbourhood
/// lies inside the image.
inline FeatureVector ldp_features(const GrayImage& gray, const BinaryMask& roi, int k = 3)
{
    if (k < 1 || k > 7)
        fail(Errc::InvalidK, "LDP k must be in [1, 7], got " + std::to_string(k));
    if (roi.width != gray.width || roi.height != gray.height)
        fail(Errc::DimensionMismatch, "ROI and image sizes differ");

    const auto table = ldp_bin_table(k);
    FeatureVector fv{Block::Ldp, std::vector<double>(binomial(8, k), 0.0), kFlagNone};
    std::size_t total = 0;
    for (int y = 1; y + 1 < gray.height; ++y)
        for (int x = 1; x + 1 < gray.width; ++x) {
            if (!roi.at(x, y))
                continue;
            fv.values[table[ldp_code(kirsch_responses(gray, x, y), k)]] += 1.0;
            ++total;
        }
    if (total == 0)
        fail(Errc::DegenerateRoi, "no ROI pixel with a full 3x3 neighbourhood");
    for (auto& v : fv.values)
        v /= static_cast<double>(total);
    return fv;
}

} // namespace drfuse
