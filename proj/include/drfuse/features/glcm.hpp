#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/feature_vector.hpp"
#include "drfuse/image.hpp"

namespace drfuse {

struct GlcmConfig {
    int levels = 32;
    std::vector<int> distances{1, 2};
    /// Degrees; each one of 0, 45, 90, 135.
    std::vector<int> angles{0, 45, 90, 135};
    bool symmetric = true;
    bool normalized = true;

    void validate() const
    {
        if (levels < 2 || levels > 256)
            fail(Errc::InvalidConfig, "GLCM levels must be in [2, 256]");
        if (distances.empty() || angles.empty())
            fail(Errc::InvalidConfig, "GLCM needs at least one distance and one angle");
        for (int d : distances)
            if (d < 1)
                fail(Errc::InvalidConfig, "GLCM distances must be >= 1");
        for (int a : angles)
            if (a != 0 && a != 45 && a != 90 && a != 135)
                fail(Errc::InvalidConfig, "GLCM angle " + std::to_string(a) + " not in {0,45,90,135}");
    }
};

inline constexpr std::size_t kHaralickDim = 13;

/// Pixel offset (dx, dy) for a distance/angle pair; y grows downward.
inline std::pair<int, int> glcm_offset(int distance, int angle)
{
    switch (angle) {
    case 0: return {distance, 0};
    case 45: return {distance, -distance};
    case 90: return {0, -distance};
    case 135: return {-distance, -distance};
    default: fail(Errc::InvalidConfig, "bad GLCM angle " + std::to_string(angle));
    }
}

/// Raw co-occurrence counts (levels x levels, row-major) over pairs with both
/// pixels in the ROI; optionally symmetrised and normalised.
inline std::vector<double> glcm_matrix(const GrayImage& gray, const BinaryMask& roi, int levels, int dx, int dy,
                                       bool symmetric, bool normalized)
{
    std::vector<double> p(static_cast<std::size_t>(levels) * levels, 0.0);
    auto quant = [levels](int v) { return v * levels / 256; };
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) {
            const int x2 = x + dx, y2 = y + dy;
            if (x2 < 0 || y2 < 0 || x2 >= gray.width || y2 >= gray.height)
                continue;
            if (!roi.at(x, y) || !roi.at(x2, y2))
                continue;
            p[static_cast<std::size_t>(quant(gray.at(x, y))) * levels + quant(gray.at(x2, y2))] += 1.0;
        }
    if (symmetric)
        for (int i = 0; i < levels; ++i)
            for (int j = i + 1; j < levels; ++j) {
                const double s = p[i * levels + j] + p[j * levels + i];
                p[i * levels + j] = p[j * levels + i] = s;
            }
    if (symmetric)
        for (int i = 0; i < levels; ++i)
            p[i * levels + i] *= 2.0;
    if (normalized) {
        double total = 0.0;
        for (double v : p)
            total += v;
        if (total > 0.0)
            for (auto& v : p)
                v /= total;
    }
    return p;
}

struct HaralickStats {
    std::array<double, kHaralickDim> f{};
    bool zero_variance = false;
};

// Angular second moment, contrast, correlation, sum of squares variance,
// inverse difference moment, sum average, sum variance, sum entropy, entropy,
// difference variance, difference entropy, information measures of
// correlation 1 and 2. `p` must be a normalised levels x levels matrix.
inline HaralickStats haralick_from_glcm(const std::vector<double>& p, int levels)
{
    const int n = levels;
    auto at = [&](int i, int j) { return p[static_cast<std::size_t>(i) * n + j]; };
    auto plogp = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };

    std::vector<double> px(n, 0.0), py(n, 0.0), psum(2 * n - 1, 0.0), pdiff(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = at(i, j);
            px[i] += v;
            py[j] += v;
            psum[i + j] += v;
            pdiff[std::abs(i - j)] += v;
        }
    double mux = 0.0, muy = 0.0;
    for (int i = 0; i < n; ++i) {
        mux += i * px[i];
        muy += i * py[i];
    }
    double varx = 0.0, vary = 0.0;
    for (int i = 0; i < n; ++i) {
        varx += (i - mux) * (i - mux) * px[i];
        vary += (i - muy) * (i - muy) * py[i];
    }

    HaralickStats out;
    auto& f = out.f;
    double asm_ = 0.0, cross = 0.0, idm = 0.0, entropy = 0.0, ss_var = 0.0, hxy1 = 0.0, hxy2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = at(i, j);
            asm_ += v * v;
            cross += static_cast<double>(i) * j * v;
            idm += v / (1.0 + static_cast<double>(i - j) * (i - j));
            entropy -= plogp(v);
            ss_var += (i - mux) * (i - mux) * v;
            const double pp = px[i] * py[j];
            if (v > 0.0)
                hxy1 -= v * std::log(pp);
            if (pp > 0.0)
                hxy2 -= pp * std::log(pp);
        }
    double contrast = 0.0, dmean = 0.0, dent = 0.0;
    for (int k = 0; k < n; ++k) {
        contrast += static_cast<double>(k) * k * pdiff[k];
        dmean += k * pdiff[k];
        dent -= plogp(pdiff[k]);
    }
    double dvar = 0.0;
    for (int k = 0; k < n; ++k)
        dvar += (k - dmean) * (k - dmean) * pdiff[k];
    double savg = 0.0, sent = 0.0;
    for (int k = 0; k < 2 * n - 1; ++k) {
        savg += k * psum[k];
        sent -= plogp(psum[k]);
    }
    double svar = 0.0;
    for (int k = 0; k < 2 * n - 1; ++k)
        svar += (k - savg) * (k - savg) * psum[k];
    double hx = 0.0, hy = 0.0;
    for (int i = 0; i < n; ++i) {
        hx -= plogp(px[i]);
        hy -= plogp(py[i]);
    }

    const double sdx = std::sqrt(varx), sdy = std::sqrt(vary);
    double corr = 0.0;
    if (sdx > 1e-12 && sdy > 1e-12)
        corr = (cross - mux * muy) / (sdx * sdy);
    else
        out.zero_variance = true;

    const double hmax = std::max(hx, hy);
    f[0] = asm_;
    f[1] = contrast;
    f[2] = corr;
    f[3] = ss_var;
    f[4] = idm;
    f[5] = savg;
    f[6] = svar;
    f[7] = sent;
    f[8] = entropy;
    f[9] = dvar;
    f[10] = dent;
    f[11] = hmax > 0.0 ? (entropy - hxy1) / hmax : 0.0;
    f[12] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));
    return out;
}

/// The 13 Haralick statistics averaged over every (distance, angle) GLCM that
/// holds at least one ROI pair.
inline FeatureVector haralick_features(const GrayImage& gray, const BinaryMask& roi, const GlcmConfig& cfg = {})
{
    cfg.validate();
    if (roi.width != gray.width || roi.height != gray.height)
        fail(Errc::DimensionMismatch, "ROI and image sizes differ");
    if (roi.count() < 2)
        fail(Errc::DegenerateRoi, "GLCM needs at least two ROI pixels");

    FeatureVector fv{Block::Haralick, std::vector<double>(kHaralickDim, 0.0), kFlagNone};
    int used = 0;
    for (int d : cfg.distances)
        for (int a : cfg.angles) {
            const auto [dx, dy] = glcm_offset(d, a);
            auto p = glcm_matrix(gray, roi, cfg.levels, dx, dy, cfg.symmetric, true);
            double total = 0.0;
            for (double v : p)
                total += v;
            if (total == 0.0)
                continue;
            const auto stats = haralick_from_glcm(p, cfg.levels);
            for (std::size_t k = 0; k < kHaralickDim; ++k)
                fv.values[k] += stats.f[k];
            if (stats.zero_variance)
                fv.flags |= kFlagZeroVarianceCorrelation;
            ++used;
        }
    if (used == 0)
        fail(Errc::DegenerateRoi, "no co-occurring ROI pixel pair at any offset");
    for (auto& v : fv.values)
        v /= used;
    return fv;
}

} // namespace drfuse
