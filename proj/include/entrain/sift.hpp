#pragma once

// Difference-of-Gaussians keypoints, 4x4x8 gradient descriptors, ratio-test
// matching and RANSAC homography alignment of a scraped image onto a stimulus.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "entrain/error.hpp"
#include "entrain/image.hpp"

namespace entrain::sift {

/// Transformation family searched by RANSAC; all are reported as a Homography.
enum class Motion { Similarity, Affine, Homography };

struct Params {
    int octaves = 4;
    int scales_per_octave = 3;
    double sigma0 = 1.6;
    double assumed_blur = 0.5;
    double contrast_threshold = 0.03;
    double edge_ratio = 10.0;
    double match_ratio = 0.75;
    double ransac_threshold = 3.0;
    int ransac_iterations = 1000;
    std::uint64_t seed = 0x5eed;
    int min_inliers = 8;
    Motion motion = Motion::Similarity;
};

struct Keypoint {
    double x = 0.0;  // input-image pixel coordinates
    double y = 0.0;
    double scale = 0.0;  // sigma relative to its octave
    double orientation = 0.0;  // radians, [0, 2*pi)
    int octave = 0;
    double layer = 0.0;  // interpolated scale index inside the octave
    double response = 0.0;

    double absolute_sigma() const { return scale * std::ldexp(1.0, octave); }
};

inline constexpr std::size_t kDescriptorLength = 128;

/// Unit-norm gradient histogram; all-zero inputs cannot be constructed.
class Descriptor {
public:
    static std::optional<Descriptor> from_raw(std::array<float, kDescriptorLength> raw) {
        double norm = 0.0;
        for (float v : raw) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) return std::nullopt;
        for (auto& v : raw) v = std::min(static_cast<float>(v / norm), 0.2F);
        norm = 0.0;
        for (float v : raw) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        for (auto& v : raw) v = static_cast<float>(v / norm);
        return Descriptor(raw);
    }

    const std::array<float, kDescriptorLength>& values() const noexcept { return values_; }

    double norm() const {
        double n = 0.0;
        for (float v : values_) n += static_cast<double>(v) * v;
        return std::sqrt(n);
    }

    friend double distance(const Descriptor& a, const Descriptor& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kDescriptorLength; ++i) {
            const double d = static_cast<double>(a.values_[i]) - b.values_[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }

    friend bool operator==(const Descriptor&, const Descriptor&) = default;

private:
    explicit Descriptor(const std::array<float, kDescriptorLength>& v) : values_(v) {}
    std::array<float, kDescriptorLength> values_{};
};

/// 3x3 projective map, normalized so that m(2,2) == 1.
class Homography {
public:
    Homography() : m_(Eigen::Matrix3d::Identity()) {}

    static std::optional<Homography> from_matrix(const Eigen::Matrix3d& m) {
        if (std::abs(m(2, 2)) < 1e-15) return std::nullopt;
        Eigen::Matrix3d n = m / m(2, 2);
        if (!n.allFinite() || std::abs(n.determinant()) <= 1e-12) return std::nullopt;
        return Homography(n);
    }

    const Eigen::Matrix3d& matrix() const noexcept { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }

    std::optional<std::pair<double, double>> apply(double x, double y) const {
        const Eigen::Vector3d p = m_ * Eigen::Vector3d(x, y, 1.0);
        if (std::abs(p.z()) < 1e-12) return std::nullopt;
        return std::pair{p.x() / p.z(), p.y() / p.z()};
    }

    Homography inverse() const { return Homography(normalize(m_.inverse())); }

private:
    explicit Homography(const Eigen::Matrix3d& m) : m_(m) {}
    static Eigen::Matrix3d normalize(const Eigen::Matrix3d& m) { return m / m(2, 2); }
    Eigen::Matrix3d m_;
};

namespace detail {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0F) {}
    float operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
    float& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

inline Plane gaussian_blur(const Plane& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double k = std::exp(-(i * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = static_cast<float>(k);
        sum += k;
    }
    for (auto& k : kernel) k = static_cast<float>(k / sum);

    Plane tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            float acc = 0.0F;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[static_cast<std::size_t>(i + radius)] * src(reflect101(x + i, src.width), y);
            }
            tmp(x, y) = acc;
        }
    }
    Plane out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            float acc = 0.0F;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp(x, reflect101(y + i, src.height));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

// Keeps even-indexed samples; odd sizes keep both borders so that
// 90-degree rotations commute with decimation.
inline Plane decimate(const Plane& src) {
    Plane out((src.width + 1) / 2, (src.height + 1) / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) out(x, y) = src(2 * x, 2 * y);
    }
    return out;
}

struct ScaleSpace {
    std::vector<std::vector<Plane>> gauss;  // [octave][scales + 3]
    std::vector<std::vector<Plane>> dog;    // [octave][scales + 2]
};

inline ScaleSpace build_scale_space(const ImageBuffer& img, const Params& p) {
    Plane base(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) base(x, y) = static_cast<float>(img.at(x, y) / 255.0);
    }
    const int s = p.scales_per_octave;
    const double k = std::pow(2.0, 1.0 / s);
    base = gaussian_blur(base, std::sqrt(std::max(0.01, p.sigma0 * p.sigma0 - p.assumed_blur * p.assumed_blur)));

    std::vector<double> increments(static_cast<std::size_t>(s + 3), 0.0);
    for (int i = 1; i < s + 3; ++i) {
        const double prev = p.sigma0 * std::pow(k, i - 1);
        const double total = prev * k;
        increments[static_cast<std::size_t>(i)] = std::sqrt(total * total - prev * prev);
    }

    ScaleSpace space;
    Plane octave_base = std::move(base);
    for (int o = 0; o < p.octaves; ++o) {
        if (std::min(octave_base.width, octave_base.height) < 12) break;
        std::vector<Plane> levels;
        levels.reserve(static_cast<std::size_t>(s + 3));
        levels.push_back(octave_base);
        for (int i = 1; i < s + 3; ++i) {
            levels.push_back(gaussian_blur(levels.back(), increments[static_cast<std::size_t>(i)]));
        }
        std::vector<Plane> diffs;
        for (int i = 0; i + 1 < s + 3; ++i) {
            Plane d(octave_base.width, octave_base.height);
            for (std::size_t j = 0; j < d.v.size(); ++j) {
                d.v[j] = levels[static_cast<std::size_t>(i + 1)].v[j] - levels[static_cast<std::size_t>(i)].v[j];
            }
            diffs.push_back(std::move(d));
        }
        octave_base = decimate(levels[static_cast<std::size_t>(s)]);
        space.gauss.push_back(std::move(levels));
        space.dog.push_back(std::move(diffs));
    }
    return space;
}

inline constexpr int kBorder = 5;
inline constexpr int kOrientationBins = 36;

inline bool is_extremum(const std::vector<Plane>& dog, int layer, int x, int y) {
    const float v = dog[static_cast<std::size_t>(layer)](x, y);
    const bool maximum = v > 0;
    for (int dl = -1; dl <= 1; ++dl) {
        const Plane& pl = dog[static_cast<std::size_t>(layer + dl)];
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dl == 0 && dx == 0 && dy == 0) continue;
                const float n = pl(x + dx, y + dy);
                if (maximum ? n > v : n < v) return false;
            }
        }
    }
    return true;
}

struct Refined {
    int x, y, layer;
    double ox, oy, os;
    double value;
};

inline std::optional<Refined> refine(const std::vector<Plane>& dog, int layer, int x, int y, const Params& p) {
    const int s = p.scales_per_octave;
    const Plane& probe = dog.front();
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad;
    for (int iter = 0; iter < 5; ++iter) {
        const Plane& c = dog[static_cast<std::size_t>(layer)];
        const Plane& lo = dog[static_cast<std::size_t>(layer - 1)];
        const Plane& hi = dog[static_cast<std::size_t>(layer + 1)];
        const double v = c(x, y);
        grad = Eigen::Vector3d(0.5 * (c(x + 1, y) - c(x - 1, y)), 0.5 * (c(x, y + 1) - c(x, y - 1)),
                               0.5 * (hi(x, y) - lo(x, y)));
        Eigen::Matrix3d hess;
        const double dxx = c(x + 1, y) + c(x - 1, y) - 2 * v;
        const double dyy = c(x, y + 1) + c(x, y - 1) - 2 * v;
        const double dss = hi(x, y) + lo(x, y) - 2 * v;
        const double dxy = 0.25 * (c(x + 1, y + 1) - c(x - 1, y + 1) - c(x + 1, y - 1) + c(x - 1, y - 1));
        const double dxs = 0.25 * (hi(x + 1, y) - hi(x - 1, y) - lo(x + 1, y) + lo(x - 1, y));
        const double dys = 0.25 * (hi(x, y + 1) - hi(x, y - 1) - lo(x, y + 1) + lo(x, y - 1));
        hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
        if (std::abs(hess.determinant()) < 1e-18) return std::nullopt;
        offset = -hess.colPivHouseholderQr().solve(grad);
        if (!offset.allFinite()) return std::nullopt;
        if (offset.cwiseAbs().maxCoeff() < 0.5) break;
        if (offset.cwiseAbs().maxCoeff() > 1e3) return std::nullopt;
        x += static_cast<int>(std::lround(offset.x()));
        y += static_cast<int>(std::lround(offset.y()));
        layer += static_cast<int>(std::lround(offset.z()));
        if (layer < 1 || layer > s || x < kBorder || y < kBorder || x >= probe.width - kBorder ||
            y >= probe.height - kBorder) {
            return std::nullopt;
        }
        if (iter == 4) return std::nullopt;
    }
    if (offset.cwiseAbs().maxCoeff() >= 0.5) return std::nullopt;
    const double value = dog[static_cast<std::size_t>(layer)](x, y) + 0.5 * grad.dot(offset);
    if (std::abs(value) < p.contrast_threshold) return std::nullopt;

    const Plane& c = dog[static_cast<std::size_t>(layer)];
    const double v = c(x, y);
    const double dxx = c(x + 1, y) + c(x - 1, y) - 2 * v;
    const double dyy = c(x, y + 1) + c(x, y - 1) - 2 * v;
    const double dxy = 0.25 * (c(x + 1, y + 1) - c(x - 1, y + 1) - c(x + 1, y - 1) + c(x - 1, y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    const double r = p.edge_ratio;
    if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return std::nullopt;
    return Refined{x, y, layer, offset.x(), offset.y(), offset.z(), value};
}

inline void gradient(const Plane& g, int x, int y, double& mag, double& ang) {
    const double dx = g(x + 1, y) - g(x - 1, y);
    const double dy = g(x, y + 1) - g(x, y - 1);
    mag = std::sqrt(dx * dx + dy * dy);
    ang = std::atan2(dy, dx);
}

inline std::vector<double> dominant_orientations(const Plane& g, int cx, int cy, double sigma) {
    const double win_sigma = 1.5 * sigma;
    const int radius = static_cast<int>(std::lround(3.0 * win_sigma));
    std::array<double, kOrientationBins> hist{};
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (x <= 0 || y <= 0 || x >= g.width - 1 || y >= g.height - 1) continue;
            double mag = 0.0;
            double ang = 0.0;
            gradient(g, x, y, mag, ang);
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * win_sigma * win_sigma));
            int bin = static_cast<int>(std::lround(ang / (2 * std::numbers::pi) * kOrientationBins));
            bin = ((bin % kOrientationBins) + kOrientationBins) % kOrientationBins;
            hist[static_cast<std::size_t>(bin)] += w * mag;
        }
    }
    std::array<double, kOrientationBins> smooth{};
    for (int i = 0; i < kOrientationBins; ++i) {
        auto at = [&](int j) { return hist[static_cast<std::size_t>((j + kOrientationBins) % kOrientationBins)]; };
        smooth[static_cast<std::size_t>(i)] =
            (at(i - 2) + at(i + 2)) * (1.0 / 16) + (at(i - 1) + at(i + 1)) * (4.0 / 16) + at(i) * (6.0 / 16);
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    std::vector<double> out;
    if (!(peak > 0.0)) return out;
    for (int i = 0; i < kOrientationBins; ++i) {
        const double l = smooth[static_cast<std::size_t>((i + kOrientationBins - 1) % kOrientationBins)];
        const double r = smooth[static_cast<std::size_t>((i + 1) % kOrientationBins)];
        const double c = smooth[static_cast<std::size_t>(i)];
        if (c > l && c > r && c >= 0.8 * peak) {
            double bin = i + 0.5 * (l - r) / (l - 2 * c + r);
            double angle = bin * 2 * std::numbers::pi / kOrientationBins;
            angle = std::fmod(angle, 2 * std::numbers::pi);
            if (angle < 0) angle += 2 * std::numbers::pi;
            if (angle >= 2 * std::numbers::pi) angle = 0.0;
            out.push_back(angle);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::optional<Descriptor> describe(const Plane& g, double px, double py, double sigma, double orientation) {
    constexpr int d = 4;
    constexpr int n = 8;
    const double hist_width = 3.0 * sigma;
    const double core = hist_width * d * 0.5 * std::numbers::sqrt2;
    if (px - core < 0 || py - core < 0 || px + core > g.width - 1 || py + core > g.height - 1) {
        return std::nullopt;
    }
    const int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
    const int cx = static_cast<int>(std::lround(px));
    const int cy = static_cast<int>(std::lround(py));
    const double cos_t = std::cos(orientation) / hist_width;
    const double sin_t = std::sin(orientation) / hist_width;
    const double bins_per_rad = n / (2 * std::numbers::pi);
    const double exp_scale = -1.0 / (d * d * 0.5);

    std::array<double, (d + 2) * (d + 2) * (n + 2)> hist{};
    auto cell = [&](int r, int c, int o) -> double& {
        return hist[static_cast<std::size_t>(((r + 1) * (d + 2) + (c + 1)) * (n + 2) + o)];
    };
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            const int x = cx + j;
            const int y = cy + i;
            if (x <= 0 || y <= 0 || x >= g.width - 1 || y >= g.height - 1) continue;
            // Sample offset expressed in the keypoint frame (rotated by -orientation).
            const double c_rot = j * cos_t + i * sin_t;
            const double r_rot = -j * sin_t + i * cos_t;
            const double rbin = r_rot + d / 2.0 - 0.5;
            const double cbin = c_rot + d / 2.0 - 0.5;
            if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;
            double mag = 0.0;
            double ang = 0.0;
            gradient(g, x, y, mag, ang);
            const double weight = std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
            double obin = (ang - orientation) * bins_per_rad;
            obin = std::fmod(obin, static_cast<double>(n));
            if (obin < 0) obin += n;
            const double v = mag * weight;

            const int r0 = static_cast<int>(std::floor(rbin));
            const int c0 = static_cast<int>(std::floor(cbin));
            const int o0 = static_cast<int>(std::floor(obin));
            const double dr = rbin - r0;
            const double dc = cbin - c0;
            const double dobin = obin - o0;
            for (int a = 0; a <= 1; ++a) {
                const double wr = a ? dr : 1 - dr;
                for (int b = 0; b <= 1; ++b) {
                    const double wc = b ? dc : 1 - dc;
                    for (int e = 0; e <= 1; ++e) {
                        const double wo = e ? dobin : 1 - dobin;
                        cell(r0 + a, c0 + b, o0 + e) += v * wr * wc * wo;
                    }
                }
            }
        }
    }
    std::array<float, kDescriptorLength> raw{};
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            // Orientation bins n and n+1 wrap to 0 and 1.
            cell(r, c, 0) += cell(r, c, n);
            cell(r, c, 1) += cell(r, c, n + 1);
            for (int o = 0; o < n; ++o) {
                raw[static_cast<std::size_t>((r * d + c) * n + o)] = static_cast<float>(cell(r, c, o));
            }
        }
    }
    return Descriptor::from_raw(raw);
}

inline int nearest_level(const Keypoint& kp) { return static_cast<int>(std::lround(kp.layer)); }

}  // namespace detail

namespace detail {

inline std::vector<Keypoint> detect(const ScaleSpace& space, const Params& p) {
    std::vector<Keypoint> out;
    const int s = p.scales_per_octave;
    const double prelim = 0.5 * p.contrast_threshold;
    for (std::size_t o = 0; o < space.dog.size(); ++o) {
        const auto& dog = space.dog[o];
        const int w = dog.front().width;
        const int h = dog.front().height;
        std::vector<Keypoint> octave_kps;
        for (int layer = 1; layer <= s; ++layer) {
            for (int y = kBorder; y < h - kBorder; ++y) {
                for (int x = kBorder; x < w - kBorder; ++x) {
                    if (std::abs(dog[static_cast<std::size_t>(layer)](x, y)) <= prelim) continue;
                    if (!is_extremum(dog, layer, x, y)) continue;
                    auto refined = refine(dog, layer, x, y, p);
                    if (!refined) continue;
                    const double layer_f = refined->layer + refined->os;
                    const double sigma = p.sigma0 * std::pow(2.0, layer_f / s);
                    const Plane& g = space.gauss[o][static_cast<std::size_t>(refined->layer)];
                    const double scale = std::ldexp(1.0, static_cast<int>(o));
                    for (double angle : dominant_orientations(g, refined->x, refined->y, sigma)) {
                        Keypoint kp;
                        kp.x = (refined->x + refined->ox) * scale;
                        kp.y = (refined->y + refined->oy) * scale;
                        kp.scale = sigma;
                        kp.orientation = angle;
                        kp.octave = static_cast<int>(o);
                        kp.layer = layer_f;
                        kp.response = std::abs(refined->value);
                        octave_kps.push_back(kp);
                    }
                }
            }
        }
        // Refinement can land two seeds on the same extremum.
        std::sort(octave_kps.begin(), octave_kps.end(), [](const Keypoint& a, const Keypoint& b) {
            return std::tie(a.y, a.x, a.layer, a.orientation) < std::tie(b.y, b.x, b.layer, b.orientation);
        });
        octave_kps.erase(std::unique(octave_kps.begin(), octave_kps.end(),
                                     [](const Keypoint& a, const Keypoint& b) {
                                         return a.x == b.x && a.y == b.y && a.layer == b.layer &&
                                                a.orientation == b.orientation;
                                     }),
                         octave_kps.end());
        out.insert(out.end(), octave_kps.begin(), octave_kps.end());
    }
    return out;
}

}  // namespace detail

inline void require_detectable(const ImageBuffer& img) {
    if (img.width() < 16 || img.height() < 16) {
        throw Error(Errc::InvalidImage, "keypoint detection needs at least 16x16 pixels");
    }
}

/// Keypoints ordered by octave, then y, then x.
inline std::vector<Keypoint> detect_keypoints(const ImageBuffer& img, const Params& p = {}) {
    require_detectable(img);
    return detail::detect(detail::build_scale_space(img, p), p);
}

struct DescriptorSet {
    std::vector<Descriptor> descriptors;
    std::vector<std::size_t> keypoint_index;  // descriptors[i] belongs to keypoints[keypoint_index[i]]
};

namespace detail {

inline DescriptorSet describe_all(const ScaleSpace& space, std::span<const Keypoint> kps) {
    DescriptorSet out;
    for (std::size_t i = 0; i < kps.size(); ++i) {
        const Keypoint& kp = kps[i];
        if (kp.octave < 0 || kp.octave >= static_cast<int>(space.gauss.size())) continue;
        const auto& levels = space.gauss[static_cast<std::size_t>(kp.octave)];
        const int level = std::clamp(nearest_level(kp), 0, static_cast<int>(levels.size()) - 1);
        const double scale = std::ldexp(1.0, kp.octave);
        auto desc = describe(levels[static_cast<std::size_t>(level)], kp.x / scale, kp.y / scale, kp.scale,
                             kp.orientation);
        if (!desc) continue;
        out.descriptors.push_back(*desc);
        out.keypoint_index.push_back(i);
    }
    return out;
}

}  // namespace detail

/// Keypoints whose descriptor grid leaves the image are dropped; see keypoint_index.
inline DescriptorSet compute_descriptors(const ImageBuffer& img, std::span<const Keypoint> kps,
                                         const Params& p = {}) {
    if (kps.empty()) return {};
    require_detectable(img);
    return detail::describe_all(detail::build_scale_space(img, p), kps);
}

/// Keypoints that survived description, paired index-for-index with their descriptors.
struct FeatureSet {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;
};

inline FeatureSet extract_features(const ImageBuffer& img, const Params& p = {}) {
    require_detectable(img);
    const auto space = detail::build_scale_space(img, p);
    const auto kps = detail::detect(space, p);
    auto described = detail::describe_all(space, kps);
    FeatureSet out;
    out.descriptors = std::move(described.descriptors);
    for (std::size_t idx : described.keypoint_index) out.keypoints.push_back(kps[idx]);
    return out;
}

struct Match {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double distance = 0.0;
};

/// Nearest-neighbour ratio test, then one claim per b index (lowest distance wins).
inline std::vector<Match> match_descriptors(std::span<const Descriptor> a, std::span<const Descriptor> b,
                                            double ratio = 0.75) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw Error(Errc::InvalidArgument, "ratio must lie in (0, 1]");
    }
    std::vector<Match> candidates;
    if (a.empty() || b.empty()) return candidates;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = distance(a[i], b[j]);
            if (d < best) {
                second = best;
                best = d;
                best_j = j;
            } else if (d < second) {
                second = d;
            }
        }
        const bool accept = std::isinf(second) ? true : (second > 0.0 && best / second < ratio);
        if (accept) candidates.push_back({i, best_j, best});
    }
    std::vector<std::optional<Match>> claim(b.size());
    for (const auto& m : candidates) {
        auto& slot = claim[m.index_b];
        if (!slot || m.distance < slot->distance) slot = m;
    }
    std::vector<Match> out;
    for (const auto& m : candidates) {
        if (claim[m.index_b] && claim[m.index_b]->index_a == m.index_a) out.push_back(m);
    }
    return out;
}

using Point = std::pair<double, double>;

namespace detail {

inline Eigen::Matrix3d normalizer(std::span<const Point> pts) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double spread = 0.0;
    for (const auto& [x, y] : pts) spread += std::hypot(x - mx, y - my);
    spread /= static_cast<double>(pts.size());
    const double s = spread > 1e-12 ? std::numbers::sqrt2 / spread : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return t;
}

}  // namespace detail

/// Normalized direct linear transform; needs at least four correspondences.
inline std::optional<Homography> fit_homography(std::span<const Point> src, std::span<const Point> dst) {
    const std::size_t n = src.size();
    if (n < 4 || dst.size() != n) return std::nullopt;
    const Eigen::Matrix3d ts = detail::normalizer(src);
    const Eigen::Matrix3d td = detail::normalizer(dst);
    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = ts * Eigen::Vector3d(src[i].first, src[i].second, 1.0);
        const Eigen::Vector3d q = td * Eigen::Vector3d(dst[i].first, dst[i].second, 1.0);
        const double x = p.x() / p.z();
        const double y = p.y() / p.z();
        const double u = q.x() / q.z();
        const double v = q.y() / q.z();
        a.row(static_cast<Eigen::Index>(2 * i)) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(static_cast<Eigen::Index>(2 * i + 1)) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return Homography::from_matrix(td.inverse() * hn * ts);
}

/// Least-squares affine map; needs at least three correspondences.
inline std::optional<Homography> fit_affine(std::span<const Point> src, std::span<const Point> dst) {
    const std::size_t n = src.size();
    if (n < 3 || dst.size() != n) return std::nullopt;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 6);
    Eigen::VectorXd b(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.row(r) << src[i].first, src[i].second, 1, 0, 0, 0;
        a.row(r + 1) << 0, 0, 0, src[i].first, src[i].second, 1;
        b(r) = dst[i].first;
        b(r + 1) = dst[i].second;
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    Eigen::Matrix3d m;
    m << x(0), x(1), x(2), x(3), x(4), x(5), 0, 0, 1;
    return Homography::from_matrix(m);
}

/// Least-squares rotation + uniform scale + translation; needs two correspondences.
inline std::optional<Homography> fit_similarity(std::span<const Point> src, std::span<const Point> dst) {
    const std::size_t n = src.size();
    if (n < 2 || dst.size() != n) return std::nullopt;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(2 * n), 4);
    Eigen::VectorXd b(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(2 * i);
        const auto [x, y] = src[i];
        a.row(r) << x, -y, 1, 0;
        a.row(r + 1) << y, x, 0, 1;
        b(r) = dst[i].first;
        b(r + 1) = dst[i].second;
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    Eigen::Matrix3d m;
    m << x(0), -x(1), x(2), x(1), x(0), x(3), 0, 0, 1;
    return Homography::from_matrix(m);
}

inline std::size_t minimal_sample(Motion m) {
    switch (m) {
        case Motion::Similarity: return 2;
        case Motion::Affine: return 3;
        case Motion::Homography: return 4;
    }
    return 4;
}

inline std::optional<Homography> fit_motion(Motion m, std::span<const Point> src, std::span<const Point> dst) {
    switch (m) {
        case Motion::Similarity: return fit_similarity(src, dst);
        case Motion::Affine: return fit_affine(src, dst);
        case Motion::Homography: return fit_homography(src, dst);
    }
    return std::nullopt;
}

inline double reprojection_error(const Homography& h, const Point& s, const Point& d) {
    const auto p = h.apply(s.first, s.second);
    if (!p) return std::numeric_limits<double>::infinity();
    return std::hypot(p->first - d.first, p->second - d.second);
}

struct RansacResult {
    Homography homography;
    std::vector<std::size_t> inliers;
};

namespace detail {

inline bool collinear(const Point& a, const Point& b, const Point& c) {
    const double cross = (b.first - a.first) * (c.second - a.second) - (b.second - a.second) * (c.first - a.first);
    return std::abs(cross) < 1e-6;
}

inline bool degenerate(std::span<const Point> pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second) < 1e-6) return true;
    if (pts.size() < 3) return false;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k)
                if (collinear(pts[i], pts[j], pts[k])) return true;
    return false;
}

/// Rejects models that fold or strongly foreshorten the region spanned by the
/// source points: the mapped bounding box must stay a convex quad and the
/// projective depth may vary by at most `max_depth_ratio` across it.
inline bool plausible(const Homography& h, std::span<const Point> src, double max_depth_ratio = 2.0) {
    double x0 = std::numeric_limits<double>::max(), y0 = x0;
    double x1 = std::numeric_limits<double>::lowest(), y1 = x1;
    for (const auto& [x, y] : src) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    const std::array<Point, 4> corners{Point{x0, y0}, Point{x1, y0}, Point{x1, y1}, Point{x0, y1}};
    std::array<Point, 4> mapped{};
    double wmin = std::numeric_limits<double>::max();
    double wmax = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [x, y] = corners[i];
        const double w = h(2, 0) * x + h(2, 1) * y + h(2, 2);
        if (w <= 0.0) return false;
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        mapped[i] = {(h(0, 0) * x + h(0, 1) * y + h(0, 2)) / w, (h(1, 0) * x + h(1, 1) * y + h(1, 2)) / w};
    }
    if (wmax > max_depth_ratio * wmin) return false;
    int sign = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point& a = mapped[i];
        const Point& b = mapped[(i + 1) % 4];
        const Point& c = mapped[(i + 2) % 4];
        const double cross = (b.first - a.first) * (c.second - b.second) - (b.second - a.second) * (c.first - b.first);
        const int sg = cross > 0 ? 1 : (cross < 0 ? -1 : 0);
        if (sg == 0 || (sign != 0 && sg != sign)) return false;
        sign = sg;
    }
    return true;
}

}  // namespace detail

/// RANSAC over minimal samples of the configured motion model, scored with a truncated quadratic
/// loss (MSAC), followed by least-squares refits that must lower that loss.
inline std::optional<RansacResult> ransac_homography(std::span<const Point> src, std::span<const Point> dst,
                                                     const Params& p) {
    const std::size_t n = src.size();
    const std::size_t m = minimal_sample(p.motion);
    if (n < m) return std::nullopt;
    std::mt19937_64 rng(p.seed);
    const double t2 = p.ransac_threshold * p.ransac_threshold;
    auto cost = [&](const Homography& h) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = reprojection_error(h, src[i], dst[i]);
            c += std::min(e * e, t2);
        }
        return c;
    };
    auto collect = [&](const Homography& h, double band) {
        std::vector<std::size_t> in;
        for (std::size_t i = 0; i < n; ++i) {
            if (reprojection_error(h, src[i], dst[i]) < band) in.push_back(i);
        }
        return in;
    };
    auto refit = [&](const std::vector<std::size_t>& subset) -> std::optional<Homography> {
        std::vector<Point> s;
        std::vector<Point> d;
        for (std::size_t i : subset) {
            s.push_back(src[i]);
            d.push_back(dst[i]);
        }
        return fit_motion(p.motion, s, d);
    };

    std::optional<Homography> best;
    double best_cost = std::numeric_limits<double>::infinity();
    int budget = p.ransac_iterations;
    for (int iter = 0; iter < budget; ++iter) {
        std::array<std::size_t, 4> idx{};
        for (std::size_t k = 0; k < m; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = static_cast<std::size_t>(rng() % n);
                fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx[k]) ==
                        idx.begin() + static_cast<std::ptrdiff_t>(k);
            }
        }
        std::vector<Point> s(m);
        std::vector<Point> d(m);
        for (std::size_t k = 0; k < m; ++k) {
            s[k] = src[idx[k]];
            d[k] = dst[idx[k]];
        }
        if (detail::degenerate(s) || detail::degenerate(d)) continue;
        auto h = fit_motion(p.motion, s, d);
        if (!h || !detail::plausible(*h, src)) continue;
        const double c = cost(*h);
        if (c < best_cost) {
            best_cost = c;
            best = h;
            if (c == 0.0) break;
            // Standard adaptive stopping at 99.9% confidence, capped by the configured budget.
            const double w = static_cast<double>(collect(*h, p.ransac_threshold).size()) / static_cast<double>(n);
            const double miss = 1.0 - std::pow(w, static_cast<double>(m));
            if (miss <= 0.0) break;
            if (miss < 1.0) {
                const double needed = std::ceil(std::log(1.0 - 0.999) / std::log(miss));
                budget = std::min(budget, static_cast<int>(std::min(needed, 1e9)));
            }
        }
    }
    if (!best) return std::nullopt;

    // Refit on progressively tighter residual bands; a refit is kept while it
    // holds at least as many points inside the band as the model it replaces.
    for (double band : {p.ransac_threshold, p.ransac_threshold / 2, p.ransac_threshold / 4}) {
        for (int round = 0; round < 3; ++round) {
            const auto subset = collect(*best, band);
            if (subset.size() < m) break;
            auto h = refit(subset);
            if (!h || !detail::plausible(*h, src) || collect(*h, band).size() < subset.size()) break;
            best = h;
        }
    }
    return RansacResult{*best, collect(*best, p.ransac_threshold)};
}

/// Samples `src` through the inverse of `h` into a width x height frame; unmapped pixels are 255.
inline ImageBuffer warp(const ImageBuffer& src, const Homography& h, int width, int height) {
    const Eigen::Matrix3d inv = h.matrix().inverse();
    ImageBuffer out(width, height, 255);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Eigen::Vector3d q = inv * Eigen::Vector3d(x, y, 1.0);
            if (q.z() <= 1e-12) continue;
            const double sx = q.x() / q.z();
            const double sy = q.y() / q.z();
            if (!(sx >= 0.0 && sy >= 0.0 && sx <= src.width() - 1 && sy <= src.height() - 1)) continue;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const int y1 = std::min(y0 + 1, src.height() - 1);
            const double tx = sx - x0;
            const double ty = sy - y0;
            const double v = (1 - tx) * (1 - ty) * src.at(x0, y0) + tx * (1 - ty) * src.at(x1, y0) +
                             (1 - tx) * ty * src.at(x0, y1) + tx * ty * src.at(x1, y1);
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

struct Alignment {
    ImageBuffer warped;
    Homography homography;
    int inliers = 0;
    int matches = 0;
};

enum class AlignFailureReason { InsufficientMatches, InsufficientInliers };

struct AlignFailure {
    AlignFailureReason reason = AlignFailureReason::InsufficientMatches;
    int matches = 0;
    int inliers = 0;
};

using AlignOutcome = std::variant<Alignment, AlignFailure>;

/// Feature-level alignment, for callers that cache FeatureSets across pairs.
inline AlignOutcome align_features(const ImageBuffer& src, const FeatureSet& src_features,
                                   const FeatureSet& dst_features, int dst_width, int dst_height,
                                   const Params& p = {}) {
    const auto matches = match_descriptors(src_features.descriptors, dst_features.descriptors, p.match_ratio);
    const int match_count = static_cast<int>(matches.size());
    if (match_count < std::max(4, p.min_inliers)) {
        return AlignFailure{AlignFailureReason::InsufficientMatches, match_count, 0};
    }
    std::vector<Point> s;
    std::vector<Point> d;
    for (const auto& m : matches) {
        const auto& a = src_features.keypoints[m.index_a];
        const auto& b = dst_features.keypoints[m.index_b];
        s.emplace_back(a.x, a.y);
        d.emplace_back(b.x, b.y);
    }
    auto fit = ransac_homography(s, d, p);
    const int inliers = fit ? static_cast<int>(fit->inliers.size()) : 0;
    if (!fit || inliers < p.min_inliers) {
        return AlignFailure{AlignFailureReason::InsufficientInliers, match_count, inliers};
    }
    return Alignment{warp(src, fit->homography, dst_width, dst_height), fit->homography, inliers, match_count};
}

inline AlignOutcome align(const ImageBuffer& src, const ImageBuffer& dst, const Params& p = {}) {
    if (src.width() < 16 || src.height() < 16 || dst.width() < 16 || dst.height() < 16) {
        return AlignFailure{AlignFailureReason::InsufficientMatches, 0, 0};
    }
    return align_features(src, extract_features(src, p), extract_features(dst, p), dst.width(), dst.height(), p);
}

}  // namespace entrain::sift
