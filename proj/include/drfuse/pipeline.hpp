#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "drfuse/deep/provider.hpp"
#include "drfuse/features/handcrafted.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/imaging.hpp"
#include "drfuse/segmentation.hpp"

namespace drfuse {

/// Everything that shapes a fused raw vector apart from the provider.
struct ExtractionParams {
    SegmentationConfig segmentation;
    HandcraftedParams handcrafted;

    std::string describe() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "seg.blur_kernel=" << segmentation.blur_kernel << ";seg.blur_sigma=" << segmentation.blur_sigma
           << ";seg.block_size=" << segmentation.block_size << ";seg.threshold_offset=" << segmentation.threshold_offset
           << ";seg.opening_radius=" << segmentation.opening_radius
           << ";seg.background_level=" << segmentation.background_level << ";" << handcrafted.describe();
        return os.str();
    }
};

struct RecordFeatures {
    FusedVector fused;
    bool used_fallback = false;
};

/// Resize to 224x224 RGB, segment (full-mask fallback on EmptyRoi), extract
/// the handcrafted blocks and embed the masked image.
inline RecordFeatures extract_record(const RasterImage& img, const FeatureProvider& provider,
                                     const ExtractionParams& params)
{
    const RasterImage canon = resize_bilinear(to_rgb(img), kCanonicalSize, kCanonicalSize);
    auto outcome = segment_with_fallback(canon, params.segmentation);
    auto blocks = extract_all(canon, outcome.seg.mask, params.handcrafted);
    FeatureVector deep{Block::Deep, provider.embed(outcome.seg.masked), {}};
    if (deep.values.size() != provider.output_dim())
        fail(Errc::DimensionMismatch, "provider returned " + std::to_string(deep.values.size()) + " values, declared "
                                          + std::to_string(provider.output_dim()));
    require_finite(deep);
    blocks.push_back(std::move(deep));
    return {concat(blocks), outcome.used_fallback};
}

} // namespace drfuse
