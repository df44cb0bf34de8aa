#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/color_histogram.hpp"
#include "drfuse/features/feature_vector.hpp"
#include "drfuse/features/glcm.hpp"
#include "drfuse/features/ldp.hpp"
#include "drfuse/features/moments.hpp"
#include "drfuse/image.hpp"
#include "drfuse/imaging.hpp"

namespace drfuse {

struct HandcraftedParams {
    int zernike_order = 8;
    GlcmConfig glcm{};
    int ldp_k = 3;
    int color_bins = 8;

    std::size_t total_dim() const
    {
        const auto b = static_cast<std::size_t>(color_bins);
        return 7 + zernike_dim(zernike_order) + kHaralickDim + binomial(8, ldp_k) + b * b * b;
    }

    /// Canonical text form; feeds the feature-cache fingerprint.
    std::string describe() const
    {
        std::ostringstream os;
        os << "zernike_order=" << zernike_order << ";glcm.levels=" << glcm.levels << ";glcm.distances=";
        for (int d : glcm.distances)
            os << d << ',';
        os << ";glcm.angles=";
        for (int a : glcm.angles)
            os << a << ',';
        os << ";glcm.symmetric=" << glcm.symmetric << ";glcm.normalized=" << glcm.normalized << ";ldp_k=" << ldp_k << ";color_bins=" << color_bins;
        return os.str();
    }
};

// Shape moments come from the mask, texture from the masked grayscale and
// colour from the masked raster. Blocks are returned in canonical order.
inline std::vector<FeatureVector> extract_all(const RasterImage& img, const BinaryMask& mask,
                                              const HandcraftedParams& params = {})
{
    if (mask.width != img.width || mask.height != img.height)
        fail(Errc::DimensionMismatch, "mask and image sizes differ");
    if (mask.count() == 0)
        fail(Errc::EmptyRoi, "extract_all with an empty ROI");
    const GrayImage gray = to_grayscale(img);

    std::vector<FeatureVector> blocks;
    blocks.reserve(5);
    blocks.push_back(hu_moments(mask));
    blocks.push_back(zernike_moments(mask, params.zernike_order));
    blocks.push_back(haralick_features(gray, mask, params.glcm));
    blocks.push_back(ldp_features(gray, mask, params.ldp_k));
    blocks.push_back(color_histogram(img, mask, params.color_bins));
    for (const auto& b : blocks)
        require_finite(b);
    return blocks;
}

} // namespace drfuse
