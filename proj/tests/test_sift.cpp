#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "entrain/fixtures.hpp"
#include "entrain/sift.hpp"
#include "entrain/synth.hpp"
#include "support.hpp"

using namespace entrain;

namespace {

sift::Descriptor unit(std::size_t i) {
    std::array<float, sift::kDescriptorLength> raw{};
    raw[i] = 1.0F;
    return *sift::Descriptor::from_raw(raw);
}

const std::vector<LabeledImage>& tangrams() {
    static const auto s = fixtures::stimuli();
    return s;
}

}  // namespace

TEST(Keypoints, ConstantImageHasNone) {
    EXPECT_TRUE(sift::detect_keypoints(ImageBuffer(64, 64, 128)).empty());
}

TEST(Keypoints, TooSmallIsInvalid) {
    EXPECT_ERRC(sift::detect_keypoints(ImageBuffer(15, 40, 0)), Errc::InvalidImage);
}

TEST(Keypoints, BlobFoundNearCenter) {
    const auto kps = sift::detect_keypoints(synth::gaussian_blob(64, 3.0, 32.0, 32.0));
    ASSERT_FALSE(kps.empty());
    double best = 1e9;
    for (const auto& k : kps) best = std::min(best, std::hypot(k.x - 32.0, k.y - 32.0));
    EXPECT_LE(best, 2.0);
}

TEST(Keypoints, InvariantsAndOrdering) {
    const auto& img = tangrams()[0].image;
    const auto kps = sift::detect_keypoints(img);
    ASSERT_FALSE(kps.empty());
    for (std::size_t i = 0; i < kps.size(); ++i) {
        const auto& k = kps[i];
        EXPECT_GE(k.x, 0.0);
        EXPECT_LT(k.x, img.width());
        EXPECT_GE(k.y, 0.0);
        EXPECT_LT(k.y, img.height());
        EXPECT_GT(k.scale, 0.0);
        EXPECT_GE(k.orientation, 0.0);
        EXPECT_LT(k.orientation, 2 * std::numbers::pi);
        if (i > 0) {
            const auto& p = kps[i - 1];
            EXPECT_LE(std::tuple(p.octave, p.y, p.x), std::tuple(k.octave, k.y, k.x));
        }
    }
}

// Textured scenes: silhouettes repeat near-identical corners, which yields
// false matches unrelated to the coordinate mapping under test.
TEST(Keypoints, UpscaleDoublesCoordinates) {
    std::size_t total = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto small = synth::smooth_texture(seed, 150);
        const auto big = resize(small, 300, 300);
        const auto fa = sift::extract_features(small), fb = sift::extract_features(big);
        for (const auto& m : sift::match_descriptors(fa.descriptors, fb.descriptors)) {
            const auto& a = fa.keypoints[m.index_a];
            const auto& b = fb.keypoints[m.index_b];
            EXPECT_NEAR(b.x, 2 * a.x, 1.5);
            EXPECT_NEAR(b.y, 2 * a.y, 1.5);
            ++total;
        }
    }
    EXPECT_GE(total, 5U);
}

TEST(Descriptors, EmptyKeypointsGiveEmpty) {
    EXPECT_TRUE(sift::compute_descriptors(tangrams()[0].image, {}).descriptors.empty());
}

TEST(Descriptors, DeterministicAndUnitNorm) {
    const auto& img = tangrams()[1].image;
    const auto kps = sift::detect_keypoints(img);
    const auto a = sift::compute_descriptors(img, kps);
    const auto b = sift::compute_descriptors(img, kps);
    ASSERT_FALSE(a.descriptors.empty());
    EXPECT_EQ(a.descriptors, b.descriptors);
    EXPECT_EQ(a.keypoint_index, b.keypoint_index);
    for (const auto& d : a.descriptors) EXPECT_NEAR(d.norm(), 1.0, 1e-6);
}

TEST(Descriptors, AllZeroRejected) {
    EXPECT_FALSE(sift::Descriptor::from_raw({}).has_value());
}

TEST(Descriptors, RotationInvariantAtCorrespondingKeypoints) {
    const auto& img = tangrams()[2].image;
    const auto rot = rotate(img, 90);
    const auto fa = sift::extract_features(img), fb = sift::extract_features(rot);
    const int h = img.height();
    int pairs = 0, close = 0;
    for (std::size_t i = 0; i < fa.keypoints.size(); ++i) {
        const auto& k = fa.keypoints[i];
        // clockwise quarter turn: (x, y) -> (h - 1 - y, x)
        const double tx = h - 1 - k.y, ty = k.x;
        // y points down, so a clockwise turn adds a quarter to the orientation
        const double theta = std::fmod(k.orientation + std::numbers::pi / 2, 2 * std::numbers::pi);
        std::optional<std::size_t> hit;
        for (std::size_t j = 0; j < fb.keypoints.size(); ++j) {
            const auto& q = fb.keypoints[j];
            const double dtheta = std::abs(std::remainder(q.orientation - theta, 2 * std::numbers::pi));
            if (std::hypot(q.x - tx, q.y - ty) < 1.0 && std::abs(q.scale / k.scale - 1.0) < 0.1 &&
                q.octave == k.octave && dtheta < 0.2) {
                hit = j;
                break;
            }
        }
        if (!hit) continue;
        ++pairs;
        if (distance(fa.descriptors[i], fb.descriptors[*hit]) < 0.35) ++close;
    }
    ASSERT_GE(pairs, 10);
    EXPECT_GE(static_cast<double>(close) / pairs, 0.9) << close << "/" << pairs;
}

TEST(Matching, IdenticalSetsMatchAtZero) {
    // Keypoints sharing a location and orientation produce equal vectors; keep distinct ones.
    std::vector<sift::Descriptor> d;
    for (const auto& x : sift::extract_features(tangrams()[4].image).descriptors) {
        if (std::find(d.begin(), d.end(), x) == d.end()) d.push_back(x);
    }
    ASSERT_GE(d.size(), 10U);
    const auto m = sift::match_descriptors(d, d);
    EXPECT_EQ(m.size(), d.size());
    for (const auto& x : m) {
        EXPECT_EQ(x.index_a, x.index_b);
        EXPECT_EQ(x.distance, 0.0);
    }
}

TEST(Matching, EmptyTargetGivesNothing) {
    const std::vector<sift::Descriptor> a{unit(0)}, b;
    EXPECT_TRUE(sift::match_descriptors(a, b).empty());
}

TEST(Matching, EquidistantNeighboursRejected) {
    const std::vector<sift::Descriptor> a{unit(0)}, b{unit(1), unit(2)};
    EXPECT_TRUE(sift::match_descriptors(a, b).empty());
}

TEST(Matching, OneToOneOnTargetIndex) {
    const auto fa = sift::extract_features(tangrams()[5].image);
    const auto fb = sift::extract_features(tangrams()[6].image);
    const auto m = sift::match_descriptors(fa.descriptors, fb.descriptors, 1.0);
    std::set<std::size_t> used;
    for (const auto& x : m) EXPECT_TRUE(used.insert(x.index_b).second);
}

TEST(Align, SelfAlignmentIsIdentity) {
    const auto& img = tangrams()[7].image;
    const auto out = sift::align(img, img);
    const auto* a = std::get_if<sift::Alignment>(&out);
    ASSERT_NE(a, nullptr);
    EXPECT_EQ(a->inliers, a->matches);
    const Eigen::Matrix3d d = a->homography.matrix() - Eigen::Matrix3d::Identity();
    EXPECT_LE(d.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Align, QuarterTurnCornersRecovered) {
    const auto& img = tangrams()[8].image;
    const auto out = sift::align(rotate(img, 90), img);
    const auto* a = std::get_if<sift::Alignment>(&out);
    ASSERT_NE(a, nullptr);
    const double n = img.width() - 1;
    // src corner (u, v) came from dst (v, n - u)
    for (auto [u, v] : {std::pair{0.0, 0.0}, {n, 0.0}, {0.0, n}, {n, n}}) {
        const auto p = a->homography.apply(u, v);
        ASSERT_TRUE(p);
        EXPECT_NEAR(p->first, v, 2.0);
        EXPECT_NEAR(p->second, n - u, 2.0);
    }
}

TEST(Align, NoisePairFails) {
    const auto out = sift::align(synth::noise(1, 128, 128), synth::noise(2, 128, 128));
    EXPECT_TRUE(std::holds_alternative<sift::AlignFailure>(out));
}

TEST(Align, RansacDeterministic) {
    const auto& img = tangrams()[9].image;
    const auto src = rotate(img, 180);
    const auto a = sift::align(src, img), b = sift::align(src, img);
    ASSERT_TRUE(std::holds_alternative<sift::Alignment>(a));
    EXPECT_EQ(std::get<sift::Alignment>(a).homography.matrix(), std::get<sift::Alignment>(b).homography.matrix());
    EXPECT_EQ(std::get<sift::Alignment>(a).warped, std::get<sift::Alignment>(b).warped);
}

TEST(Align, WarpFillsOutsideWithWhite) {
    const auto& img = tangrams()[0].image;
    auto t = Eigen::Matrix3d::Identity().eval();
    t(0, 2) = 50.0;
    const auto w = sift::warp(img, *sift::Homography::from_matrix(t), img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) EXPECT_EQ(w.at(10, y), 255);
}
