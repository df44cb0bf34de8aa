#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "drfuse/features/handcrafted.hpp"
#include "test_util.hpp"

using namespace drfuse;
using namespace drfuse::testing;

namespace {

// Plain double-precision Hu, straight from the textbook formulas.
std::array<double, 7> hu_oracle(const BinaryMask& m)
{
    double n = 0, sx = 0, sy = 0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                n += 1;
                sx += x;
                sy += y;
            }
    const double cx = sx / n, cy = sy / n;
    auto eta = [&](int p, int q) {
        double mu = 0;
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                if (m.at(x, y))
                    mu += std::pow(x - cx, p) * std::pow(y - cy, q);
        return mu / std::pow(n, 1 + (p + q) / 2.0);
    };
    const double e20 = eta(2, 0), e02 = eta(0, 2), e11 = eta(1, 1), e30 = eta(3, 0), e03 = eta(0, 3),
                 e21 = eta(2, 1), e12 = eta(1, 2);
    std::array<double, 7> h{};
    h[0] = e20 + e02;
    h[1] = std::pow(e20 - e02, 2) + 4 * e11 * e11;
    h[2] = std::pow(e30 - 3 * e12, 2) + std::pow(3 * e21 - e03, 2);
    h[3] = std::pow(e30 + e12, 2) + std::pow(e21 + e03, 2);
    h[4] = (e30 - 3 * e12) * (e30 + e12) * (std::pow(e30 + e12, 2) - 3 * std::pow(e21 + e03, 2))
           + (3 * e21 - e03) * (e21 + e03) * (3 * std::pow(e30 + e12, 2) - std::pow(e21 + e03, 2));
    h[5] = (e20 - e02) * (std::pow(e30 + e12, 2) - std::pow(e21 + e03, 2)) + 4 * e11 * (e30 + e12) * (e21 + e03);
    h[6] = (3 * e21 - e03) * (e30 + e12) * (std::pow(e30 + e12, 2) - 3 * std::pow(e21 + e03, 2))
           - (e30 - 3 * e12) * (e21 + e03) * (3 * std::pow(e30 + e12, 2) - std::pow(e21 + e03, 2));
    return h;
}

// Direct projection with cos/sin and the factorial radial formula.
std::vector<double> zernike_oracle(const BinaryMask& m, int order)
{
    double n = 0, sx = 0, sy = 0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                n += 1;
                sx += x;
                sy += y;
            }
    const double cx = sx / n, cy = sy / n;
    double r = 0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y))
                r = std::max(r, std::hypot(x - cx, y - cy));
    if (r == 0)
        r = 1;
    auto radial = [](int nn, int mm, double rho) {
        double s = 0;
        for (int k = 0; k <= (nn - mm) / 2; ++k)
            s += std::pow(-1.0, k) * std::tgamma(nn - k + 1)
                 / (std::tgamma(k + 1) * std::tgamma((nn + mm) / 2 - k + 1) * std::tgamma((nn - mm) / 2 - k + 1))
                 * std::pow(rho, nn - 2 * k);
        return s;
    };
    std::vector<double> out;
    for (int nn = 0; nn <= order; ++nn)
        for (int mm = nn % 2; mm <= nn; mm += 2) {
            double re = 0, im = 0;
            for (int y = 0; y < m.height; ++y)
                for (int x = 0; x < m.width; ++x)
                    if (m.at(x, y)) {
                        const double dx = (x - cx) / r, dy = (y - cy) / r;
                        const double rho = std::hypot(dx, dy), th = std::atan2(dy, dx);
                        const double rv = radial(nn, mm, rho);
                        re += rv * std::cos(mm * th);
                        im -= rv * std::sin(mm * th);
                    }
            out.push_back((nn + 1) / std::numbers::pi / (r * r) * std::hypot(re, im));
        }
    return out;
}

std::vector<double> glcm_oracle(const GrayImage& g, const BinaryMask& roi, int levels, int dx, int dy)
{
    std::vector<double> p(levels * levels, 0.0);
    double total = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            for (int s = 0; s < 2; ++s) {
                // Forward pair, then the reversed pair for symmetry.
                const int ox = s ? -dx : dx, oy = s ? -dy : dy;
                const int x2 = x + ox, y2 = y + oy;
                if (x2 < 0 || y2 < 0 || x2 >= g.width || y2 >= g.height || !roi.at(x, y) || !roi.at(x2, y2))
                    continue;
                const int i = g.at(x, y) * levels / 256, j = g.at(x2, y2) * levels / 256;
                p[i * levels + j] += 1;
                total += 1;
            }
    for (auto& v : p)
        v /= total;
    return p;
}

GrayImage transpose(const GrayImage& g)
{
    GrayImage t(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            t.at(y, x) = g.at(x, y);
    return t;
}

BinaryMask transpose(const BinaryMask& m)
{
    BinaryMask t(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            t.at(y, x) = m.at(x, y);
    return t;
}

double sum(const std::vector<double>& v)
{
    double s = 0;
    for (double x : v)
        s += x;
    return s;
}

} // namespace

TEST(Hu, MatchesOracle)
{
    Rng rng(21);
    for (int t = 0; t < 10; ++t) {
        const auto m = random_blob(rng, 60, 50);
        const auto got = hu_invariants(central_moments(m));
        const auto want = hu_oracle(m);
        for (int i = 0; i < 7; ++i)
            EXPECT_TRUE(close_rel(got[i], want[i], 1e-7, 1e-18)) << i << ": " << got[i] << " vs " << want[i];
    }
}

TEST(Hu, TranslationExact)
{
    Rng rng(22);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_blob(rng, 64, 64);
        const auto a = hu_moments(m), b = hu_moments(translate(m, 13, -7, 100, 100));
        ASSERT_EQ(m.count(), translate(m, 13, -7, 100, 100).count());
        for (int i = 0; i < 7; ++i)
            EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
    }
}

TEST(Hu, RotationWithinTolerance)
{
    Rng rng(23);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_blob(rng, 70, 50);
        auto r = m;
        const auto a = hu_moments(m);
        for (int k = 0; k < 3; ++k) {
            r = rotate90(r);
            const auto b = hu_moments(r);
            for (int i = 0; i < 7; ++i)
                EXPECT_NEAR(a.values[i], b.values[i], 1e-2) << "rotation " << k + 1 << " term " << i;
        }
    }
}

TEST(Hu, ScaledMaskClose)
{
    BinaryMask m(40, 40);
    for (int y = 8; y < 30; ++y)
        for (int x = 10; x < 22 + y / 3; ++x)
            m.at(x, y) = 1;
    BinaryMask s(80, 80);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            s.at(x, y) = m.at(x / 2, y / 2);
    const auto a = hu_moments(m), b = hu_moments(s);
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(a.values[i], b.values[i], 1e-2) << i;
}

TEST(Hu, EmptyMask) { EXPECT_ERRC(hu_moments(BinaryMask(5, 5)), EmptyImage); }

TEST(Hu, SignedLog)
{
    EXPECT_DOUBLE_EQ(signed_log(1e-3), 3.0);
    EXPECT_DOUBLE_EQ(signed_log(-1e-3), -3.0);
    EXPECT_DOUBLE_EQ(signed_log(0.0), 0.0);
}

TEST(Zernike, Dimension)
{
    EXPECT_EQ(zernike_dim(8), 25u);
    EXPECT_EQ(zernike_dim(0), 1u);
    EXPECT_EQ(zernike_moments(BinaryMask(3, 3, 1), 8).dim(), 25u);
    EXPECT_EQ(zernike_moments(BinaryMask(3, 3, 1), 3).dim(), 6u);
}

TEST(Zernike, MatchesOracle)
{
    Rng rng(24);
    for (int t = 0; t < 5; ++t) {
        const auto m = random_blob(rng, 48, 40);
        const auto got = zernike_moments(m, 8).values;
        const auto want = zernike_oracle(m, 8);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            EXPECT_TRUE(close_rel(got[i], want[i], 1e-8, 1e-9)) << i << ": " << got[i] << " vs " << want[i];
    }
}

TEST(Zernike, DiskHasSmallAngularTerms)
{
    BinaryMask m(101, 101);
    for (int y = 0; y < 101; ++y)
        for (int x = 0; x < 101; ++x)
            if (std::hypot(x - 50, y - 50) <= 40)
                m.at(x, y) = 1;
    const auto z = zernike_moments(m, 8).values;
    ASSERT_GT(z[0], 0.0);
    std::size_t i = 0;
    for (int n = 0; n <= 8; ++n)
        for (int mm = n % 2; mm <= n; mm += 2, ++i)
            if (mm != 0) {
                EXPECT_LT(z[i], 0.05 * z[0]) << "n=" << n << " m=" << mm;
            }
}

TEST(Zernike, Rotation90)
{
    Rng rng(25);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_blob(rng, 60, 44);
        const auto a = zernike_moments(m).values, b = zernike_moments(rotate90(m)).values;
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_TRUE(close_rel(a[i], b[i], 1e-6, 1e-12)) << i;
    }
}

TEST(Zernike, Errors)
{
    EXPECT_ERRC(zernike_moments(BinaryMask(4, 4), 8), EmptyImage);
    EXPECT_ERRC(zernike_moments(BinaryMask(4, 4, 1), -1), InvalidOrder);
}

TEST(Glcm, ConstantRoi)
{
    const GrayImage g(12, 9, 77);
    const auto f = haralick_features(g, BinaryMask(12, 9, 1)).values;
    EXPECT_EQ(f[0], 1.0);
    EXPECT_EQ(f[1], 0.0);
    EXPECT_EQ(f[8], 0.0);
}

TEST(Glcm, Checkerboard2x2)
{
    GrayImage g(2, 2);
    g.at(1, 0) = 255;
    g.at(0, 1) = 255;
    const BinaryMask roi(2, 2, 1);
    const auto p = glcm_matrix(g, roi, 2, 1, 0, true, true);
    EXPECT_EQ(p, (std::vector<double>{0, 0.5, 0.5, 0}));
    GlcmConfig cfg;
    cfg.levels = 2;
    cfg.distances = {1};
    cfg.angles = {0};
    const auto f = haralick_features(g, roi, cfg).values;
    EXPECT_EQ(f[1], 1.0);
    EXPECT_EQ(f[0], 0.5);
}

TEST(Glcm, MatchesOracleSymmetricNormalized)
{
    Rng rng(26);
    for (int t = 0; t < 30; ++t) {
        const int w = 2 + static_cast<int>(rng.index(20)), h = 2 + static_cast<int>(rng.index(20));
        const auto g = random_gray(rng, w, h);
        const auto roi = random_mask(rng, w, h, 0.7);
        const int levels = 2 + static_cast<int>(rng.index(31));
        const auto [dx, dy] = glcm_offset(1 + static_cast<int>(rng.index(2)), 45 * static_cast<int>(rng.index(4)));
        const auto p = glcm_matrix(g, roi, levels, dx, dy, true, true);
        if (sum(p) == 0.0)
            continue;
        const auto want = glcm_oracle(g, roi, levels, dx, dy);
        double s = 0;
        for (int i = 0; i < levels; ++i)
            for (int j = 0; j < levels; ++j) {
                ASSERT_NEAR(p[i * levels + j], want[i * levels + j], 1e-15);
                ASSERT_EQ(p[i * levels + j], p[j * levels + i]);
                s += p[i * levels + j];
            }
        EXPECT_NEAR(s, 1.0, 1e-12);
        const auto f = haralick_from_glcm(p, levels).f;
        EXPECT_GE(f[1], 0.0);
        EXPECT_GE(f[0], 0.0);
        EXPECT_LE(f[0], 1.0);
    }
}

TEST(Glcm, HaralickStatisticsByHand)
{
    // p = [[0.25, 0.25], [0.25, 0.25]]: independent marginals.
    const auto f = haralick_from_glcm({0.25, 0.25, 0.25, 0.25}, 2).f;
    EXPECT_DOUBLE_EQ(f[0], 0.25);
    EXPECT_DOUBLE_EQ(f[1], 0.5);
    EXPECT_NEAR(f[2], 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(f[3], 0.25);
    EXPECT_DOUBLE_EQ(f[4], 0.75);
    EXPECT_DOUBLE_EQ(f[5], 1.0);
    EXPECT_DOUBLE_EQ(f[6], 0.5);
    EXPECT_NEAR(f[7], 1.5 * std::log(2.0), 1e-15);
    EXPECT_NEAR(f[8], 2 * std::log(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(f[9], 0.25);
    EXPECT_NEAR(f[10], std::log(2.0), 1e-15);
    EXPECT_NEAR(f[11], 0.0, 1e-15);
    EXPECT_NEAR(f[12], 0.0, 1e-7);
}

TEST(Glcm, TransposeSwapsAngles)
{
    Rng rng(27);
    GlcmConfig cfg;
    cfg.angles = {0, 90};
    for (int t = 0; t < 10; ++t) {
        const auto g = random_gray(rng, 17, 11);
        const auto roi = random_mask(rng, 17, 11, 0.8);
        const auto a = haralick_features(g, roi, cfg).values;
        const auto b = haralick_features(transpose(g), transpose(roi), cfg).values;
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_NEAR(a[i], b[i], 1e-12) << i;
    }
}

TEST(Glcm, ZeroVarianceFlag)
{
    const auto fv = haralick_features(GrayImage(8, 8, 5), BinaryMask(8, 8, 1));
    EXPECT_EQ(fv.values[2], 0.0);
    EXPECT_TRUE(fv.flags & kFlagZeroVarianceCorrelation);
}

TEST(Glcm, Errors)
{
    BinaryMask one(6, 6);
    one.at(2, 2) = 1;
    EXPECT_ERRC(haralick_features(GrayImage(6, 6), one), DegenerateRoi);
    BinaryMask far(6, 6);
    far.at(0, 0) = 1;
    far.at(5, 3) = 1;
    EXPECT_ERRC(haralick_features(GrayImage(6, 6), far), DegenerateRoi);
    GlcmConfig cfg;
    cfg.angles = {30};
    EXPECT_ERRC(haralick_features(GrayImage(6, 6), BinaryMask(6, 6, 1), cfg), InvalidConfig);
}

TEST(Ldp, ConstantImageSingleBin)
{
    const auto fv = ldp_features(GrayImage(10, 10, 40), BinaryMask(10, 10, 1), 3);
    ASSERT_EQ(fv.dim(), 56u);
    // Code 0b00000111 is the first popcount-3 code in ascending order.
    EXPECT_EQ(ldp_bin_table(3)[7], 0);
    EXPECT_EQ(fv.values[0], 1.0);
    EXPECT_EQ(sum(fv.values), 1.0);
}

TEST(Ldp, CodeMatchesOracle)
{
    Rng rng(28);
    const auto g = random_gray(rng, 30, 30);
    for (int y = 1; y < 29; ++y)
        for (int x = 1; x < 29; ++x) {
            // Responses from the explicit Kirsch kernels.
            static const int east[3][3] = {{-3, -3, 5}, {-3, 0, 5}, {-3, -3, 5}};
            std::array<int, 8> r{};
            for (int k = 0; k < 8; ++k) {
                int acc = 0;
                for (int i = 0; i < 8; ++i) {
                    const auto [ox, oy] = kCompassRing[(i + k) % 8];
                    const auto [ex, ey] = kCompassRing[i];
                    acc += east[ey + 1][ex + 1] * g.at(x + ox, y + oy);
                }
                r[k] = acc;
            }
            ASSERT_EQ(kirsch_responses(g, x, y), r);
            for (int k = 1; k <= 7; ++k) {
                const auto code = ldp_code(r, k);
                ASSERT_EQ(std::popcount(static_cast<unsigned>(code)), k);
                int weakest_in = 1 << 30, strongest_out = -1;
                for (int i = 0; i < 8; ++i)
                    (code >> i & 1 ? weakest_in = std::min(weakest_in, std::abs(r[i]))
                                   : strongest_out = std::max(strongest_out, std::abs(r[i])));
                ASSERT_GE(weakest_in, strongest_out);
            }
        }
}

TEST(Ldp, SumsToOneOnRandomImages)
{
    Rng rng(29);
    for (int t = 0; t < 30; ++t) {
        const int w = 3 + static_cast<int>(rng.index(40)), h = 3 + static_cast<int>(rng.index(40));
        const auto fv = ldp_features(random_gray(rng, w, h), BinaryMask(w, h, 1), 3);
        EXPECT_NEAR(sum(fv.values), 1.0, 1e-12);
        for (double v : fv.values)
            EXPECT_GE(v, 0.0);
    }
}

TEST(Ldp, Errors)
{
    EXPECT_ERRC(ldp_features(GrayImage(5, 5), BinaryMask(5, 5, 1), 0), InvalidK);
    EXPECT_ERRC(ldp_features(GrayImage(5, 5), BinaryMask(5, 5, 1), 8), InvalidK);
    EXPECT_ERRC(ldp_features(GrayImage(2, 9), BinaryMask(2, 9, 1), 3), DegenerateRoi);
    BinaryMask border(5, 5, 1);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 4; ++x)
            border.at(x, y) = 0;
    EXPECT_ERRC(ldp_features(GrayImage(5, 5), border, 3), DegenerateRoi);
}

TEST(ColorHist, UniformRed)
{
    RasterImage img(6, 4, 3, 0);
    for (int i = 0; i < 24; ++i)
        img.data[3 * i] = 255;
    const auto fv = color_histogram(img, BinaryMask(6, 4, 1), 8);
    ASSERT_EQ(fv.dim(), 512u);
    EXPECT_EQ(fv.values[7 * 64], 1.0);
    EXPECT_EQ(sum(fv.values), 1.0);
}

TEST(ColorHist, TwoPixelRoi)
{
    RasterImage img(3, 1, 3, 0);
    img.at(0, 0, 0) = 255;
    img.at(1, 0, 1) = 255;
    img.at(2, 0, 2) = 255;
    BinaryMask roi(3, 1);
    roi.at(0, 0) = roi.at(1, 0) = 1;
    const auto fv = color_histogram(img, roi, 8);
    EXPECT_EQ(fv.values[7 * 64], 0.5);
    EXPECT_EQ(fv.values[7 * 8], 0.5);
    EXPECT_EQ(sum(fv.values), 1.0);
}

TEST(ColorHist, PermutationInvariantAndNormalized)
{
    Rng rng(30);
    for (int t = 0; t < 20; ++t) {
        const auto img = random_rgb(rng, 20, 15);
        auto shuffled = img;
        std::vector<std::size_t> perm(img.pixel_count());
        for (std::size_t i = 0; i < perm.size(); ++i)
            perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));
        for (std::size_t i = 0; i < perm.size(); ++i)
            for (int c = 0; c < 3; ++c)
                shuffled.data[3 * i + c] = img.data[3 * perm[i] + c];
        const BinaryMask all(20, 15, 1);
        const auto a = color_histogram(img, all), b = color_histogram(shuffled, all);
        EXPECT_EQ(a, b);
        EXPECT_NEAR(sum(a.values), 1.0, 1e-12);
    }
}

TEST(ColorHist, Errors)
{
    EXPECT_ERRC(color_histogram(RasterImage(3, 3, 1), BinaryMask(3, 3, 1)), NotColorImage);
    EXPECT_ERRC(color_histogram(RasterImage(3, 3, 3), BinaryMask(3, 3)), EmptyRoi);
    EXPECT_ERRC(color_histogram(RasterImage(3, 3, 3), BinaryMask(3, 3, 1), 1), InvalidConfig);
}

TEST(ExtractAll, DefaultLayout)
{
    Rng rng(31);
    const auto img = random_rgb(rng, 64, 64);
    const auto mask = random_blob(rng, 64, 64);
    const auto blocks = extract_all(img, mask);
    ASSERT_EQ(blocks.size(), 5u);
    const Block order[] = {Block::Hu, Block::Zernike, Block::Haralick, Block::Ldp, Block::ColorHist};
    std::size_t total = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(blocks[i].block, order[i]);
        total += blocks[i].dim();
    }
    EXPECT_EQ(total, 613u);
    EXPECT_EQ(HandcraftedParams{}.total_dim(), 613u);
    EXPECT_EQ(extract_all(img, mask), blocks);
}

TEST(ExtractAll, EmptyRoi) { EXPECT_ERRC(extract_all(RasterImage(8, 8, 3), BinaryMask(8, 8)), EmptyRoi); }
