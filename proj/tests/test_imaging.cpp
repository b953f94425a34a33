#include <gtest/gtest.h>

#include "entrain/image.hpp"
#include "entrain/image_io.hpp"
#include "entrain/synth.hpp"
#include "support.hpp"

using namespace entrain;

TEST(Grayscale, WhiteStaysWhite) {
    Raster r{4, 3, 3, std::vector<std::uint8_t>(36, 255)};
    const auto g = to_grayscale(r);
    ASSERT_EQ(g.width(), 4);
    ASSERT_EQ(g.height(), 3);
    for (auto v : g.pixels()) EXPECT_EQ(v, 255);
}

TEST(Grayscale, PureRedIs76) {
    Raster r{1, 1, 3, {255, 0, 0}};
    EXPECT_EQ(to_grayscale(r).at(0, 0), 76);
}

TEST(Grayscale, SingleChannelUnchanged) {
    Raster r{2, 2, 1, {1, 2, 3, 4}};
    const auto g = to_grayscale(r);
    EXPECT_EQ(g.data(), r.data);
}

TEST(Grayscale, ZeroAreaIsInvalid) {
    Raster r{0, 5, 3, {}};
    EXPECT_ERRC(to_grayscale(r), Errc::InvalidImage);
}

TEST(ImageBufferType, DataLengthMustMatch) {
    EXPECT_ERRC(ImageBuffer(2, 2, std::vector<std::uint8_t>{1, 2, 3}), Errc::InvalidImage);
}

TEST(Resize, SameSizeIsIdentity) {
    const auto img = synth::noise(3, 300, 300);
    EXPECT_EQ(resize(img, 300, 300), img);
}

TEST(Resize, BlockTilingAveragesTo50) {
    ImageBuffer img(600, 600);
    for (int y = 0; y < 600; ++y)
        for (int x = 0; x < 600; ++x) img.at(x, y) = ((x + y) % 2 == 0) ? 0 : 100;
    const auto out = resize(img, 300, 300);
    ASSERT_EQ(out.width(), 300);
    for (auto v : out.pixels()) ASSERT_EQ(v, 50);
}

TEST(Resize, ConstantStaysConstant) {
    const ImageBuffer img(37, 91, 123);
    for (auto [w, h] : {std::pair{300, 300}, std::pair{5, 7}, std::pair{100, 20}}) {
        const auto out = resize(img, w, h);
        EXPECT_EQ(out.width(), w);
        EXPECT_EQ(out.height(), h);
        for (auto v : out.pixels()) ASSERT_EQ(v, 123);
    }
}

TEST(Resize, ZeroTargetRejected) {
    EXPECT_ERRC(resize(ImageBuffer(4, 4), 0, 3), Errc::InvalidDimensions);
}

namespace {

ImageBuffer square_with_specks() {
    ImageBuffer img(100, 100, 255);
    for (int y = 40; y < 50; ++y)
        for (int x = 40; x < 50; ++x) img.at(x, y) = 0;
    img.at(5, 5) = 0;
    img.at(80, 20) = 0;
    img.at(20, 90) = 0;
    return img;
}

}  // namespace

TEST(FloodFill, ConstantWhiteHasNoForeground) {
    const auto out = flood_fill_clean(ImageBuffer(50, 50, 255), {0, 0});
    for (auto v : out.pixels()) ASSERT_EQ(v, 255);
}

TEST(FloodFill, KeepsSquareErasesSpecks) {
    const auto out = flood_fill_clean(square_with_specks(), {0, 0});
    EXPECT_EQ(foreground_count(out), 100U);
    for (int y = 40; y < 50; ++y)
        for (int x = 40; x < 50; ++x) ASSERT_EQ(out.at(x, y), 0);
    EXPECT_EQ(out.at(5, 5), 255);
    EXPECT_EQ(out.at(80, 20), 255);
    EXPECT_EQ(out.at(20, 90), 255);
}

TEST(FloodFill, SeedInsideShapeIsBadSeed) {
    EXPECT_ERRC(flood_fill_clean(square_with_specks(), {45, 45}), Errc::BadSeed);
}

TEST(FloodFill, SeedOutOfBoundsIsBadSeed) {
    EXPECT_ERRC(flood_fill_clean(square_with_specks(), {100, 0}), Errc::BadSeed);
}

TEST(FloodFill, NeverIncreasesForeground) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto img = synth::render(synth::random_figure(s), 120);
        EXPECT_LE(foreground_count(flood_fill_clean(img, {0, 0})), foreground_count(img));
    }
}

TEST(Augment, EightVariantsIdentityFirst) {
    const auto img = synth::noise(11, 13, 9);
    const auto v = augment(img, {});
    ASSERT_EQ(v.size(), 8U);
    EXPECT_EQ(v[0], img);
    EXPECT_EQ(v[1], invert(img));
}

TEST(Augment, HalfTurnIsInvolution) {
    const auto img = synth::noise(12, 16, 10);
    const auto v = augment(img, {});
    EXPECT_EQ(rotate(v[4], 180), img);  // (180, plain)
}

TEST(Augment, CountMatchesConfig) {
    AugmentConfig c{{0, 180}, false};
    EXPECT_EQ(augment(ImageBuffer(3, 3), c).size(), 2U);
    c.include_inversion = true;
    EXPECT_EQ(augment(ImageBuffer(3, 3), c).size(), 4U);
}

TEST(Augment, InvalidConfigRejected) {
    EXPECT_ERRC(augment(ImageBuffer(3, 3), AugmentConfig{{}, true}), Errc::InvalidArgument);
    EXPECT_ERRC(augment(ImageBuffer(3, 3), AugmentConfig{{45}, true}), Errc::InvalidArgument);
    EXPECT_ERRC(augment(ImageBuffer(3, 3), AugmentConfig{{90, 90}, true}), Errc::InvalidArgument);
}

TEST(Transforms, FourQuarterTurnsAndDoubleInversion) {
    const auto img = synth::noise(5, 7, 4);
    EXPECT_EQ(rotate(rotate(rotate(rotate(img, 90), 90), 90), 90), img);
    EXPECT_EQ(invert(invert(img)), img);
}

TEST(Codec, PngRoundTripIsBitExact) {
    const auto img = synth::noise(21, 31, 17);
    EXPECT_EQ(decode_gray(encode_png(img)), img);
}

TEST(Codec, GarbageIsDecodeError) {
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
    EXPECT_ERRC(decode_gray(junk), Errc::DecodeError);
}
