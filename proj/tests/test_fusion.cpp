#include <gtest/gtest.h>

#include "drfuse/fusion.hpp"
#include "test_util.hpp"

using namespace drfuse;
using namespace drfuse::testing;

namespace {

FeatureVector block(Block b, std::size_t dim, double base)
{
    FeatureVector fv{b, {}, kFlagNone};
    for (std::size_t i = 0; i < dim; ++i)
        fv.values.push_back(base + static_cast<double>(i));
    return fv;
}

} // namespace

TEST(Concat, HandcraftedPlusDeep)
{
    const std::vector<FeatureVector> blocks = {block(Block::Hu, 7, 0), block(Block::Zernike, 25, 100),
                                               block(Block::Haralick, 13, 200), block(Block::Ldp, 56, 300),
                                               block(Block::ColorHist, 512, 400), block(Block::Deep, 64, 1000)};
    const auto fused = concat(blocks);
    ASSERT_EQ(fused.values.size(), 677u);
    for (const auto& b : blocks) {
        const auto* span = fused.find(b.block);
        ASSERT_NE(span, nullptr);
        ASSERT_EQ(span->dim, b.dim());
        for (std::size_t i = 0; i < b.dim(); ++i)
            EXPECT_EQ(fused.values[span->offset + i], b.values[i]);
    }
}

TEST(Concat, SingleBlockIdentity)
{
    const auto b = block(Block::Deep, 9, 3.5);
    const auto fused = concat(std::vector<FeatureVector>{b});
    EXPECT_EQ(fused.values, b.values);
}

TEST(Concat, GapsAllowed)
{
    const auto fused = concat(std::vector<FeatureVector>{block(Block::Hu, 2, 0), block(Block::Deep, 3, 0)});
    EXPECT_EQ(fused.values.size(), 5u);
    EXPECT_EQ(fused.find(Block::Zernike), nullptr);
}

TEST(Concat, Errors)
{
    EXPECT_ERRC(concat(std::vector<FeatureVector>{}), EmptyBlockList);
    EXPECT_ERRC(concat(std::vector<FeatureVector>{block(Block::Ldp, 2, 0), block(Block::Hu, 2, 0)}), BlockOrderViolation);
    EXPECT_ERRC(concat(std::vector<FeatureVector>{block(Block::Hu, 2, 0), block(Block::Hu, 2, 0)}), BlockOrderViolation);
}

TEST(Standardizer, HandExample)
{
    const std::vector<FusedSample> train = {{{0, 10}, 0, 0}, {{2, 10}, 1, 1}};
    const auto s = fit_standardizer(train);
    EXPECT_EQ(s.means, (std::vector<double>{1, 10}));
    EXPECT_EQ(s.stds, (std::vector<double>{1, 0}));
    EXPECT_EQ(apply_standardizer(s, std::vector<double>{1, 10}), (std::vector<double>{0, 0}));
    EXPECT_EQ(apply_standardizer(s, std::vector<double>{3, -99}), (std::vector<double>{2, 0}));
}

TEST(Standardizer, Errors)
{
    EXPECT_ERRC(fit_standardizer(std::vector<FusedSample>{{{1.0}, 0, 0}}), InsufficientSamples);
    EXPECT_ERRC(fit_standardizer(std::vector<FusedSample>{{{1.0}, 0, 0}, {{1.0, 2.0}, 0, 1}}), DimensionMismatch);
    const auto s = fit_standardizer(std::vector<FusedSample>{{{1.0}, 0, 0}, {{2.0}, 0, 1}});
    EXPECT_ERRC(apply_standardizer(s, std::vector<double>{1, 2}), DimensionMismatch);
}

TEST(Standardizer, TransformedTrainIsZScored)
{
    Rng rng(51);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + rng.index(40), d = 1 + rng.index(12);
        std::vector<FusedSample> train(n);
        const double c = rng.uniform(-1e3, 1e3);
        for (auto& s : train) {
            for (std::size_t j = 0; j < d; ++j)
                // Every third column is constant, the rest spread over wildly different scales.
                s.features.push_back(j % 3 == 2 ? c : rng.normal() * std::pow(10.0, static_cast<double>(j % 5)) + c);
        }
        const auto st = fit_standardizer(train);
        const auto z = apply_standardizer(st, train);
        for (std::size_t j = 0; j < d; ++j) {
            double mean = 0, var = 0;
            for (const auto& s : z)
                mean += s.features[j];
            mean /= n;
            for (const auto& s : z)
                var += (s.features[j] - mean) * (s.features[j] - mean);
            const double sd = std::sqrt(var / n);
            EXPECT_LT(std::abs(mean), 1e-9);
            if (j % 3 == 2)
                EXPECT_EQ(sd, 0.0);
            else
                EXPECT_NEAR(sd, 1.0, 1e-9);
            EXPECT_GE(st.stds[j], 0.0);
        }
    }
}
