#include <gtest/gtest.h>

#include <cmath>

#include "drfuse/image_io.hpp"
#include "drfuse/imaging.hpp"
#include "test_util.hpp"

using namespace drfuse;
using namespace drfuse::testing;

namespace {

// Scalar reference: half-pixel centres, clamp to the edge, then interpolate.
double bilinear_ref(const RasterImage& img, double u, double v, int c)
{
    auto clampd = [](double a, double lo, double hi) { return a < lo ? lo : (a > hi ? hi : a); };
    const double sx = clampd(u, 0.0, img.width - 1.0);
    const double sy = clampd(v, 0.0, img.height - 1.0);
    const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
    const int x1 = x0 + 1 < img.width ? x0 + 1 : x0;
    const int y1 = y0 + 1 < img.height ? y0 + 1 : y0;
    const double ax = sx - x0, ay = sy - y0;
    return (1 - ay) * ((1 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c))
           + ay * ((1 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c));
}

} // namespace

TEST(Resize, IdentityAtSameSize)
{
    Rng rng(1);
    const auto img = random_rgb(rng, 224, 224);
    EXPECT_EQ(resize_bilinear(img, 224, 224), img);
}

TEST(Resize, ConstantStaysConstant)
{
    const RasterImage img(2, 2, 3, 37);
    const auto out = resize_bilinear(img, 224, 224);
    ASSERT_EQ(out.width, 224);
    ASSERT_EQ(out.height, 224);
    for (auto v : out.data)
        ASSERT_EQ(v, 37);
}

TEST(Resize, RampMatchesScalarOracle)
{
    RasterImage img(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(x * 85);
    const auto out = resize_bilinear(img, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const double want = bilinear_ref(img, (x + 0.5) * 0.5 - 0.5, (y + 0.5) * 0.5 - 0.5, 0);
            EXPECT_EQ(out.at(x, y), static_cast<int>(std::lround(want))) << x << "," << y;
        }
}

TEST(Resize, RandomImagesMatchOracle)
{
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const int w = 1 + static_cast<int>(rng.index(12)), h = 1 + static_cast<int>(rng.index(12));
        const int ow = 1 + static_cast<int>(rng.index(20)), oh = 1 + static_cast<int>(rng.index(20));
        const auto img = random_rgb(rng, w, h);
        const auto out = resize_bilinear(img, ow, oh);
        if (ow == w && oh == h)
            continue;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double u = (x + 0.5) * w / ow - 0.5, v = (y + 0.5) * h / oh - 0.5;
                    ASSERT_NEAR(out.at(x, y, c), bilinear_ref(img, u, v, c), 0.5 + 1e-9);
                }
    }
}

TEST(Resize, EmptyInputRejected)
{
    EXPECT_ERRC(resize_bilinear(RasterImage{}, 4, 4), EmptyImage);
    EXPECT_ERRC(resize_bilinear(RasterImage(2, 2, 3), 0, 4), EmptyImage);
}

TEST(Grayscale, Anchors)
{
    RasterImage img(3, 1, 3);
    const std::uint8_t px[3][3] = {{255, 255, 255}, {255, 0, 0}, {0, 0, 0}};
    for (int x = 0; x < 3; ++x)
        for (int c = 0; c < 3; ++c)
            img.at(x, 0, c) = px[x][c];
    const auto g = to_grayscale(img);
    EXPECT_EQ(g.at(0, 0), 255);
    EXPECT_EQ(g.at(1, 0), 76);
    EXPECT_EQ(g.at(2, 0), 0);
}

TEST(Grayscale, SingleChannelPassesThrough)
{
    Rng rng(3);
    RasterImage img(5, 4, 1);
    for (auto& v : img.data)
        v = static_cast<std::uint8_t>(rng.index(256));
    EXPECT_EQ(to_grayscale(img).data, img.data);
}

TEST(Grayscale, LumaWithinChannelRange)
{
    Rng rng(4);
    const auto img = random_rgb(rng, 64, 64);
    const auto g = to_grayscale(img);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int r = img.at(x, y, 0), gg = img.at(x, y, 1), b = img.at(x, y, 2);
            EXPECT_GE(g.at(x, y), std::min({r, gg, b}));
            EXPECT_LE(g.at(x, y), std::max({r, gg, b}));
            EXPECT_EQ(g.at(x, y), std::lround(0.299 * r + 0.587 * gg + 0.114 * b));
        }
}

TEST(RasterImage, RejectsBadChannelCount) { EXPECT_ERRC(RasterImage(2, 2, 2), UnsupportedChannelCount); }

TEST(ImageIo, LoadsRgbPng)
{
    const auto img = load_image(data_dir() / "rgb_100x80.png");
    EXPECT_EQ(img.width, 100);
    EXPECT_EQ(img.height, 80);
    EXPECT_EQ(img.channels, 3);
}

TEST(ImageIo, PngRoundTripIsBitExact)
{
    Rng rng(5);
    for (int channels : {1, 3}) {
        RasterImage img(17, 9, channels);
        for (auto& v : img.data)
            v = static_cast<std::uint8_t>(rng.index(256));
        EXPECT_EQ(decode_image(encode_png(img)), img);
    }
    const auto loaded = load_image(data_dir() / "rgb_100x80.png");
    const auto dir = scratch_dir("png_roundtrip");
    save_png(dir / "x.png", loaded);
    EXPECT_EQ(load_image(dir / "x.png"), loaded);
}

TEST(ImageIo, SixteenBitIsShifted)
{
    const auto img = load_image(data_dir() / "gray16_max.png");
    ASSERT_EQ(img.channels, 1);
    for (auto v : img.data)
        EXPECT_EQ(v, 255);
    const auto ramp = load_image(data_dir() / "gray16_ramp.png");
    ASSERT_EQ(ramp.width, 6);
    for (int i = 0; i < 30; ++i)
        EXPECT_EQ(ramp.data[static_cast<std::size_t>(i)], (i * 2000 + 123) >> 8);
}

TEST(ImageIo, AlphaDroppedPaletteExpanded)
{
    const auto rgba = load_image(data_dir() / "rgba.png");
    const auto rgb = load_image(data_dir() / "rgb_100x80.png");
    ASSERT_EQ(rgba.channels, 3);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                ASSERT_EQ(rgba.at(x, y, c), rgb.at(x, y, c));
    const auto pal = load_image(data_dir() / "palette.png");
    EXPECT_EQ(pal.channels, 3);
    EXPECT_EQ(pal.width, 8);
}

TEST(ImageIo, GrayAlphaRejected) { EXPECT_ERRC(load_image(data_dir() / "gray_alpha.png"), UnsupportedChannelCount); }

TEST(ImageIo, Jpeg)
{
    const auto rgb = load_image(data_dir() / "rgb.jpg");
    EXPECT_EQ(rgb.channels, 3);
    EXPECT_EQ(rgb.width, 100);
    const auto gray = load_image(data_dir() / "gray.jpg");
    EXPECT_EQ(gray.channels, 1);
    EXPECT_ERRC(load_image(data_dir() / "cmyk.jpg"), UnsupportedChannelCount);
}

TEST(ImageIo, Errors)
{
    EXPECT_ERRC(load_image(data_dir() / "does_not_exist.png"), FileNotFound);
    const auto bytes = read_file(data_dir() / "rgb_100x80.png");
    EXPECT_ERRC(decode_image(bytes.substr(0, bytes.size() / 2)), DecodeError);
    const auto jpg = read_file(data_dir() / "rgb.jpg");
    EXPECT_ERRC(decode_image(jpg.substr(0, jpg.size() / 2)), DecodeError);
    EXPECT_ERRC(decode_image("GIF89a not supported"), DecodeError);
    EXPECT_ERRC(decode_image(""), DecodeError);
}
