#include <cmath>
#include <gtest/gtest.h>

#include "entrain/metrics.hpp"
#include "entrain/synth.hpp"
#include "support.hpp"

using namespace entrain;

namespace {

ImageBuffer img2x2(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return ImageBuffer(2, 2, std::vector<std::uint8_t>{a, b, c, d});
}

// Single-window Q evaluated straight from the definition.
double direct_q(const ImageBuffer& x, const ImageBuffer& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x.pixels()[i];
        my += y.pixels()[i];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x.pixels()[i] - mx, dy = y.pixels()[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= n - 1;
    vy /= n - 1;
    cxy /= n - 1;
    const double den = (vx + vy) * (mx * mx + my * my);
    if (den == 0.0) return x == y ? 1.0 : 0.0;
    return 4 * cxy * mx * my / den;
}

}  // namespace

TEST(Uqi, SelfSimilarityIsOne) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto x = synth::noise(s, 40, 30);
        EXPECT_EQ(uqi(x, x), 1.0);
    }
}

TEST(Uqi, HandExample) {
    const auto x = img2x2(1, 2, 3, 4), y = img2x2(2, 3, 4, 5);
    EXPECT_NEAR(uqi(x, y, 2), 0.9459, 1e-4);
    EXPECT_LT(uqi(x, y, 2), 1.0);
    EXPECT_NEAR(normalize_to_similarity(MetricKind::UQI, uqi(x, y, 2)), 0.97295, 1e-4);
}

TEST(Uqi, ConstantConventions) {
    EXPECT_EQ(uqi(ImageBuffer(8, 8, 7), ImageBuffer(8, 8, 7)), 1.0);
    EXPECT_EQ(uqi(ImageBuffer(8, 8, 7), ImageBuffer(8, 8, 9)), 0.0);
}

TEST(Uqi, Symmetric) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto x = synth::noise(s, 24, 24), y = synth::noise(s + 100, 24, 24);
        EXPECT_NEAR(uqi(x, y), uqi(y, x), 1e-12);
    }
}

TEST(Uqi, FullWindowMatchesDirectEvaluation) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto x = synth::noise(2 * s, 4, 4), y = synth::noise(2 * s + 1, 4, 4);
        EXPECT_NEAR(uqi(x, y, 4), direct_q(x, y), 1e-12);
    }
}

TEST(Uqi, DimensionMismatch) {
    EXPECT_ERRC(uqi(ImageBuffer(4, 4), ImageBuffer(4, 5)), Errc::DimensionError);
}

TEST(Metric, StandardValues) {
    const auto x = synth::noise(3, 16, 16);
    EXPECT_EQ(metric(MetricKind::MSE, x, x), 0.0);
    const ImageBuffer a(2, 1, std::vector<std::uint8_t>{0, 0}), b(2, 1, std::vector<std::uint8_t>{1, 3});
    EXPECT_DOUBLE_EQ(metric(MetricKind::MAE, a, b), 2.0);
    EXPECT_EQ(metric(MetricKind::PSNR, x, x), kPsnrIdentical);
    EXPECT_NEAR(metric(MetricKind::SSIM, x, x), 1.0, 1e-12);
}

TEST(Metric, NormalizationAnchors) {
    EXPECT_EQ(normalize_to_similarity(MetricKind::UQI, 1.0), 1.0);
    EXPECT_EQ(normalize_to_similarity(MetricKind::MSE, 0.0), 1.0);
    EXPECT_EQ(normalize_to_similarity(MetricKind::MAE, 0.0), 1.0);
    EXPECT_EQ(normalize_to_similarity(MetricKind::PSNR, 100.0), 1.0);
    EXPECT_NEAR(normalize_to_similarity(MetricKind::UQI, 0.9459), 0.97295, 1e-12);
}

TEST(Metric, NormalizationMonotone) {
    for (double a = -1.0; a < 1.0; a += 0.1) {
        EXPECT_GE(normalize_to_similarity(MetricKind::UQI, a + 0.1), normalize_to_similarity(MetricKind::UQI, a));
        EXPECT_GE(normalize_to_similarity(MetricKind::SSIM, a + 0.1), normalize_to_similarity(MetricKind::SSIM, a));
    }
    for (double e = 0.0; e < 5000.0; e += 250.0) {
        // lower error means more similar
        EXPECT_GE(normalize_to_similarity(MetricKind::MSE, e), normalize_to_similarity(MetricKind::MSE, e + 250));
        EXPECT_GE(normalize_to_similarity(MetricKind::MAE, e / 20), normalize_to_similarity(MetricKind::MAE, e / 20 + 12));
        EXPECT_GE(normalize_to_similarity(MetricKind::PSNR, e / 50 + 5), normalize_to_similarity(MetricKind::PSNR, e / 50));
    }
}

TEST(Metric, NamesAndExtensions) {
    for (auto k : kAllMetrics) EXPECT_EQ(metric_from_string(to_string(k)), k);
    EXPECT_EQ(metric_from_string("uqi"), MetricKind::UQI);
    EXPECT_ERRC(metric_from_string("vif"), Errc::InvalidArgument);
    EXPECT_ERRC(metric_from_string("bogus"), Errc::InvalidArgument);
}

TEST(BestVariant, MatchesExplicitAugmentation) {
    const auto ref = synth::render(synth::random_figure(4), 64);
    const auto cand = rotate(invert(synth::render(synth::random_figure(4), 64)), 90);
    for (auto k : kAllMetrics) {
        double best = -1.0;
        for (const auto& v : augment(cand, {})) best = std::max(best, similarity(k, v, ref));
        EXPECT_NEAR(best_variant_similarity(k, ref, cand).value, best, 1e-12) << to_string(k);
    }
    EXPECT_EQ(best_variant_similarity(MetricKind::UQI, ref, cand).value, 1.0);
}
