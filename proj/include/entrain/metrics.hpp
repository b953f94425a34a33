#pragma once

// Full-reference image similarity indices and their mapping onto a common
// "higher is more similar" [0, 1] scale.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/error.hpp"
#include "entrain/image.hpp"

namespace entrain {

enum class MetricKind { UQI, SSIM, MSE, MAE, PSNR };

inline constexpr std::array<MetricKind, 5> kAllMetrics{MetricKind::UQI, MetricKind::SSIM, MetricKind::MSE,
                                                      MetricKind::MAE, MetricKind::PSNR};

inline constexpr double kPsnrIdentical = 100.0;
inline constexpr int kDefaultWindow = 8;

constexpr std::string_view to_string(MetricKind k) noexcept {
    switch (k) {
        case MetricKind::UQI: return "uqi";
        case MetricKind::SSIM: return "ssim";
        case MetricKind::MSE: return "mse";
        case MetricKind::MAE: return "mae";
        case MetricKind::PSNR: return "psnr";
    }
    return "?";
}

inline MetricKind metric_from_string(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (MetricKind k : kAllMetrics) {
        if (lower == to_string(k)) return k;
    }
    // Remaining indices of the original sweep; they would plug in through `metric`.
    for (std::string_view ext : {"ergas", "rase", "sam", "scc", "vif"}) {
        if (lower == ext) throw Error(Errc::InvalidArgument, "metric '" + lower + "' is not implemented");
    }
    throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

namespace detail {

inline void require_same_shape(const ImageBuffer& x, const ImageBuffer& y) {
    if (x.width() != y.width() || x.height() != y.height()) {
        throw Error(Errc::DimensionError, "images differ in size: " + std::to_string(x.width()) + "x" +
                                              std::to_string(x.height()) + " vs " + std::to_string(y.width()) +
                                              "x" + std::to_string(y.height()));
    }
    if (x.empty()) throw Error(Errc::InvalidImage, "empty image");
}

/// Summed-area tables of v and v^2 for one image; exact in 64-bit integers.
class Integral {
public:
    explicit Integral(const ImageBuffer& img)
        : w_(img.width()), h_(img.height()), stride_(static_cast<std::size_t>(img.width()) + 1) {
        s_.assign(stride_ * (static_cast<std::size_t>(h_) + 1), 0);
        ss_.assign(s_.size(), 0);
        for (int r = 0; r < h_; ++r) {
            std::int64_t a = 0, aa = 0;
            for (int c = 0; c < w_; ++c) {
                const std::int64_t v = img.at(c, r);
                a += v;
                aa += v * v;
                s_[idx(c + 1, r + 1)] = s_[idx(c + 1, r)] + a;
                ss_[idx(c + 1, r + 1)] = ss_[idx(c + 1, r)] + aa;
            }
        }
    }

    std::size_t idx(int c, int r) const { return static_cast<std::size_t>(r) * stride_ + static_cast<std::size_t>(c); }
    const std::vector<std::int64_t>& sum() const { return s_; }
    const std::vector<std::int64_t>& sum_sq() const { return ss_; }

private:
    int w_;
    int h_;
    std::size_t stride_;
    std::vector<std::int64_t> s_, ss_;
};

/// Summed-area table of x*y.
inline std::vector<std::int64_t> cross_integral(const ImageBuffer& x, const ImageBuffer& y) {
    const std::size_t stride = static_cast<std::size_t>(x.width()) + 1;
    std::vector<std::int64_t> t(stride * (static_cast<std::size_t>(x.height()) + 1), 0);
    for (int r = 0; r < x.height(); ++r) {
        std::int64_t a = 0;
        for (int c = 0; c < x.width(); ++c) {
            a += static_cast<std::int64_t>(x.at(c, r)) * y.at(c, r);
            t[(r + 1) * stride + c + 1] = t[r * stride + c + 1] + a;
        }
    }
    return t;
}

struct Moments {
    std::int64_t sx, sy, sxx, syy, sxy;
};

inline double uqi_window(const Moments& m, std::int64_t n) {
    // With A = n*Sxx - Sx^2 etc. the (n-1) normalizations cancel:
    // Q = 4*C*Sx*Sy / ((A + B) * (Sx^2 + Sy^2)).
    const std::int64_t a = n * m.sxx - m.sx * m.sx;
    const std::int64_t b = n * m.syy - m.sy * m.sy;
    const std::int64_t cxy = n * m.sxy - m.sx * m.sy;
    const double means = static_cast<double>(m.sx) * m.sx + static_cast<double>(m.sy) * m.sy;
    const double denom = static_cast<double>(a + b) * means;
    if (denom == 0.0) {
        // Both windows flat (or both all-zero): equal iff their sums agree.
        return (a + b == 0 && m.sx == m.sy) || means == 0.0 ? 1.0 : 0.0;
    }
    return 4.0 * static_cast<double>(cxy) * static_cast<double>(m.sx) * static_cast<double>(m.sy) / denom;
}

inline double ssim_window(const Moments& m, std::int64_t count) {
    constexpr double c1 = (0.01 * 255) * (0.01 * 255);
    constexpr double c2 = (0.03 * 255) * (0.03 * 255);
    const double n = static_cast<double>(count);
    const double mx = m.sx / n;
    const double my = m.sy / n;
    const double vx = (n * m.sxx - static_cast<double>(m.sx) * m.sx) / (n * (n - 1));
    const double vy = (n * m.syy - static_cast<double>(m.sy) * m.sy) / (n * (n - 1));
    const double cov = (n * m.sxy - static_cast<double>(m.sx) * m.sy) / (n * (n - 1));
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

/// Mean of `q` over all stride-1 size x size windows. With `invert_y` the
/// moments are those of 255 - y, derived from y's tables.
template <class Q>
double mean_over_windows(const Integral& ix, const Integral& iy, const std::vector<std::int64_t>& ixy, int width,
                         int height, int size, bool invert_y, Q q) {
    const std::int64_t n = static_cast<std::int64_t>(size) * size;
    auto box = [&](const std::vector<std::int64_t>& t, int c, int r) {
        return t[ix.idx(c + size, r + size)] - t[ix.idx(c, r + size)] - t[ix.idx(c + size, r)] + t[ix.idx(c, r)];
    };
    double total = 0.0;
    std::size_t count = 0;
    for (int r = 0; r + size <= height; ++r) {
        for (int c = 0; c + size <= width; ++c) {
            Moments m{box(ix.sum(), c, r), box(iy.sum(), c, r), box(ix.sum_sq(), c, r), box(iy.sum_sq(), c, r),
                      box(ixy, c, r)};
            if (invert_y) {
                m.syy = 255 * 255 * n - 2 * 255 * m.sy + m.syy;
                m.sxy = 255 * m.sx - m.sxy;
                m.sy = 255 * n - m.sy;
            }
            total += q(m, n);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

inline int effective_window(const ImageBuffer& x, int window) {
    if (window < 2) throw Error(Errc::InvalidArgument, "window must be at least 2");
    return std::min({window, x.width(), x.height()});
}

}  // namespace detail

/// Universal quality index, averaged over all stride-1 windows.
/// A window larger than the image is clamped to the image.
inline double uqi(const ImageBuffer& x, const ImageBuffer& y, int window = kDefaultWindow) {
    detail::require_same_shape(x, y);
    const int size = detail::effective_window(x, window);
    return detail::mean_over_windows(detail::Integral(x), detail::Integral(y), detail::cross_integral(x, y), x.width(),
                                     x.height(), size, false, detail::uqi_window);
}

/// Mean SSIM over stride-1 windows, k1 = 0.01, k2 = 0.03, L = 255.
inline double ssim(const ImageBuffer& x, const ImageBuffer& y, int window = kDefaultWindow) {
    detail::require_same_shape(x, y);
    const int size = detail::effective_window(x, window);
    return detail::mean_over_windows(detail::Integral(x), detail::Integral(y), detail::cross_integral(x, y), x.width(),
                                     x.height(), size, false, detail::ssim_window);
}

inline double mse(const ImageBuffer& x, const ImageBuffer& y) {
    detail::require_same_shape(x, y);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x.pixels()[i]) - y.pixels()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

inline double mae(const ImageBuffer& x, const ImageBuffer& y) {
    detail::require_same_shape(x, y);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::abs(static_cast<double>(x.pixels()[i]) - y.pixels()[i]);
    }
    return acc / static_cast<double>(x.size());
}

/// Identical images report the finite sentinel kPsnrIdentical.
inline double psnr(const ImageBuffer& x, const ImageBuffer& y) {
    const double e = mse(x, y);
    if (e == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(255.0 * 255.0 / e);
}

inline double metric(MetricKind kind, const ImageBuffer& x, const ImageBuffer& y, int window = kDefaultWindow) {
    switch (kind) {
        case MetricKind::UQI: return uqi(x, y, window);
        case MetricKind::SSIM: return ssim(x, y, window);
        case MetricKind::MSE: return mse(x, y);
        case MetricKind::MAE: return mae(x, y);
        case MetricKind::PSNR: return psnr(x, y);
    }
    throw Error(Errc::InvalidArgument, "unknown metric kind");
}

/// Monotone map of a raw metric value onto [0, 1], 1 meaning identical.
inline double normalize_to_similarity(MetricKind kind, double raw) {
    switch (kind) {
        case MetricKind::UQI:
        case MetricKind::SSIM: return std::clamp((raw + 1.0) / 2.0, 0.0, 1.0);
        case MetricKind::MSE: return 1.0 / (1.0 + raw / (255.0 * 255.0));
        case MetricKind::MAE: return 1.0 / (1.0 + raw / 255.0);
        case MetricKind::PSNR: return std::clamp(raw / 100.0, 0.0, 1.0);
    }
    return 0.0;
}

inline double similarity(MetricKind kind, const ImageBuffer& x, const ImageBuffer& y, int window = kDefaultWindow) {
    return normalize_to_similarity(kind, metric(kind, x, y, window));
}

struct VariantScore {
    double value = -1.0;  // normalized similarity
    std::size_t variant = 0;  // index into augment(candidate, cfg)
};

/// Best normalized similarity of `reference` against every augmented variant of
/// `candidate`, equal to scoring augment(candidate, cfg) one by one. The
/// windowed indices reuse the reference tables and derive inverted variants
/// from the plain ones.
inline VariantScore best_variant_similarity(MetricKind kind, const ImageBuffer& reference, const ImageBuffer& candidate,
                                            const AugmentConfig& cfg = {}, int window = kDefaultWindow) {
    cfg.validate();
    std::vector<int> rotations = cfg.rotations;
    std::sort(rotations.begin(), rotations.end());
    const bool windowed = kind == MetricKind::UQI || kind == MetricKind::SSIM;
    std::optional<detail::Integral> ref_tables;
    if (windowed) ref_tables.emplace(reference);
    VariantScore best;
    std::size_t index = 0;
    for (int deg : rotations) {
        ImageBuffer v = rotate(candidate, deg);
        if (v.width() != reference.width() || v.height() != reference.height()) {
            v = resize(v, reference.width(), reference.height());
        }
        detail::require_same_shape(reference, v);
        const int polarities = cfg.include_inversion ? 2 : 1;
        if (windowed) {
            const int size = detail::effective_window(reference, window);
            const detail::Integral tables(v);
            const auto cross = detail::cross_integral(reference, v);
            for (int p = 0; p < polarities; ++p) {
                const double raw =
                    kind == MetricKind::UQI
                        ? detail::mean_over_windows(*ref_tables, tables, cross, v.width(), v.height(), size, p == 1,
                                                    detail::uqi_window)
                        : detail::mean_over_windows(*ref_tables, tables, cross, v.width(), v.height(), size, p == 1,
                                                    detail::ssim_window);
                const double sim = normalize_to_similarity(kind, raw);
                if (sim > best.value) best = {sim, index};
                ++index;
            }
        } else {
            for (int p = 0; p < polarities; ++p) {
                const double sim = similarity(kind, p == 1 ? invert(v) : v, reference, window);
                if (sim > best.value) best = {sim, index};
                ++index;
            }
        }
    }
    return best;
}

}  // namespace entrain
