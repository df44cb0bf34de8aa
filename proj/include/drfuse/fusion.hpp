#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/feature_vector.hpp"

namespace drfuse {

inline constexpr int kNumClasses = 5;

struct FusedSample {
    std::vector<double> features;
    int label = 0;
    std::uint64_t source_id = 0;
};

/// Where one block sits inside a fused vector.
struct BlockSpan {
    Block block;
    std::size_t offset;
    std::size_t dim;
};

struct FusedVector {
    std::vector<double> values;
    std::vector<BlockSpan> layout;

    const BlockSpan* find(Block b) const
    {
        for (const auto& s : layout)
            if (s.block == b)
                return &s;
        return nullptr;
    }
};

/// Concatenates blocks that appear in canonical order (gaps allowed).
inline FusedVector concat(std::span<const FeatureVector> blocks)
{
    if (blocks.empty())
        fail(Errc::EmptyBlockList, "concat needs at least one block");
    FusedVector out;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k > 0 && static_cast<int>(blocks[k].block) <= static_cast<int>(blocks[k - 1].block))
            fail(Errc::BlockOrderViolation, std::string("block '") + std::string(blocks[k].name())
                                                + "' follows '" + std::string(blocks[k - 1].name()) + "'");
        out.layout.push_back({blocks[k].block, out.values.size(), blocks[k].dim()});
        out.values.insert(out.values.end(), blocks[k].values.begin(), blocks[k].values.end());
    }
    return out;
}

/// Per-dimension z-scoring fitted on training data only.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t dim() const noexcept { return means.size(); }

    bool operator==(const Standardizer&) const = default;
};

// Population standard deviation; two-pass for accuracy.
inline Standardizer fit_standardizer(std::span<const FusedSample> train)
{
    if (train.size() < 2)
        fail(Errc::InsufficientSamples, "standardizer needs at least 2 samples");
    const std::size_t d = train.front().features.size();
    for (const auto& s : train)
        if (s.features.size() != d)
            fail(Errc::DimensionMismatch, "training samples have mixed dimensions");
    Standardizer st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(train.size());
    for (const auto& s : train)
        for (std::size_t j = 0; j < d; ++j)
            st.means[j] += s.features[j];
    for (auto& m : st.means)
        m /= n;
    for (const auto& s : train)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = s.features[j] - st.means[j];
            st.stds[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        bool constant = true;
        for (const auto& s : train)
            if (s.features[j] != train.front().features[j]) {
                constant = false;
                break;
            }
        // A constant column gets exactly zero spread even if the mean rounds.
        st.stds[j] = constant ? 0.0 : std::sqrt(st.stds[j] / n);
    }
    return st;
}

/// Zero-variance dimensions map to 0.
inline std::vector<double> apply_standardizer(const Standardizer& s, std::span<const double> v)
{
    if (v.size() != s.dim())
        fail(Errc::DimensionMismatch,
             "vector has " + std::to_string(v.size()) + " dims, standardizer expects " + std::to_string(s.dim()));
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j)
        out[j] = s.stds[j] > 0.0 ? (v[j] - s.means[j]) / s.stds[j] : 0.0;
    return out;
}

inline std::vector<FusedSample> apply_standardizer(const Standardizer& s, std::span<const FusedSample> samples)
{
    std::vector<FusedSample> out;
    out.reserve(samples.size());
    for (const auto& x : samples)
        out.push_back({apply_standardizer(s, x.features), x.label, x.source_id});
    return out;
}

} // namespace drfuse
