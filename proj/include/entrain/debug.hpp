#pragma once

// Side-by-side match overlay for `match --dump-matches`: source left, target
// right, RANSAC inliers in green and rejected matches in red.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "entrain/image.hpp"
#include "entrain/sift.hpp"

namespace entrain {

namespace detail {

inline void put(Raster& r, int x, int y, std::uint8_t cr, std::uint8_t cg, std::uint8_t cb) {
    if (x < 0 || y < 0 || x >= r.width || y >= r.height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * r.width + x) * 3;
    r.data[i] = cr;
    r.data[i + 1] = cg;
    r.data[i + 2] = cb;
}

inline void line(Raster& r, double x0, double y0, double x1, double y1, std::uint8_t cr, std::uint8_t cg,
                 std::uint8_t cb) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        put(r, static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))),
            cr, cg, cb);
    }
}

}  // namespace detail

struct MatchOverlay {
    Raster image;
    int matches = 0;
    int inliers = 0;
};

inline MatchOverlay match_overlay(const ImageBuffer& src, const ImageBuffer& dst, const sift::Params& p = {}) {
    const auto fa = sift::extract_features(src, p);
    const auto fb = sift::extract_features(dst, p);
    const auto matches = sift::match_descriptors(fa.descriptors, fb.descriptors, p.match_ratio);
    std::vector<sift::Point> s, d;
    for (const auto& m : matches) {
        s.emplace_back(fa.keypoints[m.index_a].x, fa.keypoints[m.index_a].y);
        d.emplace_back(fb.keypoints[m.index_b].x, fb.keypoints[m.index_b].y);
    }
    std::set<std::size_t> inliers;
    if (auto fit = sift::ransac_homography(s, d, p)) inliers.insert(fit->inliers.begin(), fit->inliers.end());

    MatchOverlay out;
    out.matches = static_cast<int>(matches.size());
    out.inliers = static_cast<int>(inliers.size());
    Raster& r = out.image;
    r.width = src.width() + dst.width();
    r.height = std::max(src.height(), dst.height());
    r.data.assign(static_cast<std::size_t>(r.width) * r.height * 3, 0);
    auto blit = [&](const ImageBuffer& img, int ox) {
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const auto v = static_cast<std::uint8_t>(img.at(x, y) / 2 + 64);  // dimmed so lines stand out
                detail::put(r, ox + x, y, v, v, v);
            }
    };
    blit(src, 0);
    blit(dst, src.width());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool in = inliers.contains(i);
        detail::line(r, s[i].first, s[i].second, d[i].first + src.width(), d[i].second, in ? 0 : 220, in ? 200 : 0,
                     0);
    }
    return out;
}

}  // namespace entrain
