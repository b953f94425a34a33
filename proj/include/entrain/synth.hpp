#pragma once

// Procedural tangram silhouettes and distractor imagery. Everything is
// seeded so fixture packs are identical across runs and platforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "entrain/image.hpp"

namespace entrain::synth {

using Vec2 = std::pair<double, double>;

struct Polygon {
    std::vector<Vec2> pts;
};

using Figure = std::vector<Polygon>;

/// Platform-independent bounded draw (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

/// The seven tans of the classic 4x4 square.
inline Figure solved_square() {
    return {
        Polygon{{{0, 0}, {4, 0}, {2, 2}}},          // large triangle
        Polygon{{{0, 0}, {2, 2}, {0, 4}}},          // large triangle
        Polygon{{{2, 4}, {4, 4}, {4, 2}}},          // medium triangle
        Polygon{{{1, 3}, {2, 2}, {3, 3}}},          // small triangle
        Polygon{{{3, 1}, {4, 0}, {4, 2}}},          // small triangle
        Polygon{{{2, 2}, {3, 1}, {4, 2}, {3, 3}}},  // square
        Polygon{{{0, 4}, {1, 3}, {3, 3}, {2, 4}}},  // parallelogram
    };
}

inline bool contains(const Polygon& poly, double x, double y) {
    bool inside = false;
    const auto& p = poly.pts;
    for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
        const auto [xi, yi] = p[i];
        const auto [xj, yj] = p[j];
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

inline bool contains(const Figure& fig, double x, double y) {
    return std::any_of(fig.begin(), fig.end(), [&](const Polygon& p) { return contains(p, x, y); });
}

inline Vec2 centroid(const Polygon& p) {
    double cx = 0.0;
    double cy = 0.0;
    for (const auto& [x, y] : p.pts) {
        cx += x;
        cy += y;
    }
    return {cx / static_cast<double>(p.pts.size()), cy / static_cast<double>(p.pts.size())};
}

inline Polygon transformed(const Polygon& p, double angle_rad, double scale, Vec2 pivot, Vec2 shift) {
    Polygon out;
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    for (const auto& [x, y] : p.pts) {
        const double dx = (x - pivot.first) * scale;
        const double dy = (y - pivot.second) * scale;
        out.pts.emplace_back(pivot.first + c * dx - s * dy + shift.first, pivot.second + s * dx + c * dy + shift.second);
    }
    return out;
}

struct Bounds {
    double min_x, min_y, max_x, max_y;
};

inline Bounds bounds(const Figure& fig) {
    Bounds b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const auto& p : fig) {
        for (const auto& [x, y] : p.pts) {
            b.min_x = std::min(b.min_x, x);
            b.min_y = std::min(b.min_y, y);
            b.max_x = std::max(b.max_x, x);
            b.max_y = std::max(b.max_y, y);
        }
    }
    return b;
}

/// Placement of a figure inside a square canvas.
struct Pose {
    double rotation_deg = 0.0;
    double scale = 1.0;  // relative to the fitted size
    double shift_x = 0.0;  // pixels
    double shift_y = 0.0;
    double margin = 0.12;  // fraction of the side left empty around the fitted box
};

/// Maps figure coordinates onto pixel coordinates of a side x side canvas.
inline Figure place(const Figure& fig, int side, const Pose& pose = {}) {
    const Bounds b = bounds(fig);
    const double span = std::max(b.max_x - b.min_x, b.max_y - b.min_y);
    const double usable = side * (1.0 - 2.0 * pose.margin);
    const double fit = usable / span;
    const Vec2 center{(b.min_x + b.max_x) / 2.0, (b.min_y + b.max_y) / 2.0};
    const double angle = pose.rotation_deg * std::numbers::pi / 180.0;
    const Vec2 target{side / 2.0 + pose.shift_x, side / 2.0 + pose.shift_y};
    Figure out;
    for (const auto& p : fig) {
        Polygon q = transformed(p, angle, fit * pose.scale, center, {target.first - center.first, target.second - center.second});
        out.push_back(std::move(q));
    }
    return out;
}

/// Point-sampled fill at pixel centers.
inline ImageBuffer rasterize(const Figure& pixel_fig, int width, int height, std::uint8_t fg = 0,
                             std::uint8_t bg = 255) {
    ImageBuffer img(width, height, bg);
    for (const auto& poly : pixel_fig) {
        Bounds b = bounds(Figure{poly});
        const int x0 = std::max(0, static_cast<int>(std::floor(b.min_x)));
        const int y0 = std::max(0, static_cast<int>(std::floor(b.min_y)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(b.max_x)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(b.max_y)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (contains(poly, x + 0.5, y + 0.5)) img.at(x, y) = fg;
            }
        }
    }
    return img;
}

inline ImageBuffer render(const Figure& fig, int side = 300, const Pose& pose = {}, std::uint8_t fg = 0,
                          std::uint8_t bg = 255) {
    return rasterize(place(fig, side, pose), side, side, fg, bg);
}

namespace detail {

inline double overlap_fraction(const Polygon& piece, const Figure& placed) {
    const Bounds b = bounds(Figure{piece});
    int inside = 0;
    int clash = 0;
    constexpr double step = 0.1;
    for (double y = b.min_y + step / 2; y < b.max_y; y += step) {
        for (double x = b.min_x + step / 2; x < b.max_x; x += step) {
            if (!contains(piece, x, y)) continue;
            ++inside;
            if (contains(placed, x, y)) ++clash;
        }
    }
    return inside == 0 ? 1.0 : static_cast<double>(clash) / inside;
}

}  // namespace detail

/// A connected arrangement of the seven tans: every piece is snapped vertex-to-vertex
/// onto an earlier one with (almost) no overlap, at a multiple of 45 degrees.
inline Figure random_figure(std::uint64_t seed) {
    Rng rng(seed);
    Figure tans = solved_square();
    for (std::size_t i = tans.size(); i > 1; --i) std::swap(tans[i - 1], tans[rng.below(i)]);

    Figure placed;
    for (const auto& tan : tans) {
        const Vec2 c = centroid(tan);
        bool done = false;
        for (int attempt = 0; attempt < 400 && !done; ++attempt) {
            const double angle = static_cast<double>(rng.below(8)) * std::numbers::pi / 4.0;
            Polygon piece = transformed(tan, angle, 1.0, c, {0.0, 0.0});
            if (rng.below(2) == 1) {
                for (auto& pt : piece.pts) pt.first = 2 * c.first - pt.first;  // mirror
            }
            if (placed.empty()) {
                placed.push_back(piece);
                done = true;
                break;
            }
            const Polygon& host = placed[rng.below(placed.size())];
            const Vec2 anchor = host.pts[rng.below(host.pts.size())];
            const Vec2 handle = piece.pts[rng.below(piece.pts.size())];
            for (auto& pt : piece.pts) {
                pt.first += anchor.first - handle.first;
                pt.second += anchor.second - handle.second;
            }
            if (detail::overlap_fraction(piece, placed) < 0.01) {
                placed.push_back(std::move(piece));
                done = true;
            }
        }
        if (!done) {
            // Fallback: park the piece beside the bounding box, touching it.
            const Bounds b = bounds(placed);
            const Bounds pb = bounds(Figure{tan});
            placed.push_back(transformed(tan, 0.0, 1.0, c, {b.max_x - pb.min_x, b.min_y - pb.min_y}));
        }
    }
    return placed;
}

/// Smooth low-frequency grey texture (sum of random cosine waves).
inline ImageBuffer smooth_texture(std::uint64_t seed, int side = 300) {
    Rng rng(seed);
    struct Wave { double fx, fy, phase, amp; };
    std::vector<Wave> waves;
    for (int i = 0; i < 6; ++i) {
        waves.push_back({rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(0.0, 2 * std::numbers::pi),
                         rng.uniform(0.3, 1.0)});
    }
    const double base = rng.uniform(90.0, 170.0);
    ImageBuffer img(side, side);
    double norm = 0.0;
    for (const auto& w : waves) norm += w.amp;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double v = 0.0;
            for (const auto& w : waves) {
                v += w.amp * std::cos(2 * std::numbers::pi * (w.fx * x + w.fy * y) / side + w.phase);
            }
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(base + 80.0 * v / norm, 0.0, 255.0));
        }
    }
    return img;
}

/// Random ellipses and rectangles on a light background, clip-art style.
inline ImageBuffer blob_scene(std::uint64_t seed, int side = 300) {
    Rng rng(seed);
    ImageBuffer img(side, side, static_cast<std::uint8_t>(rng.uniform(200.0, 255.0)));
    const int shapes = 3 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
        const double cx = rng.uniform(0.2, 0.8) * side;
        const double cy = rng.uniform(0.2, 0.8) * side;
        const double rx = rng.uniform(0.05, 0.25) * side;
        const double ry = rng.uniform(0.05, 0.25) * side;
        const auto shade = static_cast<std::uint8_t>(rng.uniform(0.0, 160.0));
        const bool ellipse = rng.below(2) == 0;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double dx = (x + 0.5 - cx) / rx;
                const double dy = (y + 0.5 - cy) / ry;
                const bool in = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (in) img.at(x, y) = shade;
            }
        }
    }
    return img;
}

/// Uniform i.i.d. noise.
inline ImageBuffer noise(std::uint64_t seed, int width, int height) {
    Rng rng(seed);
    ImageBuffer img(width, height);
    for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

/// Gaussian blob on a dark background.
inline ImageBuffer gaussian_blob(int side, double sigma, double cx, double cy, double amplitude = 255.0) {
    ImageBuffer img(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(amplitude * std::exp(-r2 / (2 * sigma * sigma))), 0L, 255L));
        }
    }
    return img;
}

}  // namespace entrain::synth
