#pragma once

// Single-channel raster type and the preprocessing / augmentation transforms
// shared by tangram stimuli and scraped images.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entrain/error.hpp"

namespace entrain {

/// Row-major 8-bit intensity raster. The uint8 storage pins every value to [0, 255].
class ImageBuffer {
public:
    ImageBuffer() = default;

    ImageBuffer(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height) {
        if (width < 0 || height < 0) {
            throw Error(Errc::InvalidDimensions, "negative image dimensions");
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 0 || height < 0 ||
            data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw Error(Errc::InvalidImage, "data length does not match width x height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

    std::span<const std::uint8_t> pixels() const noexcept { return data_; }
    std::span<std::uint8_t> pixels() noexcept { return data_; }
    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Interleaved multi-channel raster as it comes out of a decoder (1 or 3 channels).
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;
};

/// Rotation/inversion variants generated for every scraped image.
struct AugmentConfig {
    std::vector<int> rotations{0, 90, 180, 270};
    bool include_inversion = true;

    void validate() const {
        if (rotations.empty()) {
            throw Error(Errc::InvalidArgument, "augment rotations must be non-empty");
        }
        std::vector<int> seen;
        for (int r : rotations) {
            if (r != 0 && r != 90 && r != 180 && r != 270) {
                throw Error(Errc::InvalidArgument,
                            "rotation " + std::to_string(r) + " is not a multiple of 90 in [0, 270]");
            }
            if (std::find(seen.begin(), seen.end(), r) != seen.end()) {
                throw Error(Errc::InvalidArgument, "duplicate rotation " + std::to_string(r));
            }
            seen.push_back(r);
        }
    }

    std::size_t variant_count() const noexcept {
        return rotations.size() * (include_inversion ? 2U : 1U);
    }
};

inline ImageBuffer to_grayscale(const Raster& rgb) {
    if (rgb.width <= 0 || rgb.height <= 0) {
        throw Error(Errc::InvalidImage, "zero-area raster");
    }
    const auto count = static_cast<std::size_t>(rgb.width) * static_cast<std::size_t>(rgb.height);
    if (rgb.channels != 1 && rgb.channels != 3) {
        throw Error(Errc::InvalidImage, "unsupported channel count " + std::to_string(rgb.channels));
    }
    if (rgb.data.size() != count * static_cast<std::size_t>(rgb.channels)) {
        throw Error(Errc::InvalidImage, "raster data length mismatch");
    }
    if (rgb.channels == 1) {
        return ImageBuffer(rgb.width, rgb.height, rgb.data);
    }
    std::vector<std::uint8_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double luma = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] +
                            0.114 * rgb.data[3 * i + 2];
        out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
    }
    return ImageBuffer(rgb.width, rgb.height, std::move(out));
}

namespace detail {

// Resamples one axis. Shrinking averages the covered source span with
// fractional edge weights; growing interpolates linearly between centers.
inline std::vector<double> resample_line(std::span<const double> src, int dst_len) {
    const int src_len = static_cast<int>(src.size());
    std::vector<double> dst(static_cast<std::size_t>(dst_len));
    if (dst_len == src_len) {
        std::copy(src.begin(), src.end(), dst.begin());
        return dst;
    }
    const double scale = static_cast<double>(src_len) / dst_len;
    if (dst_len < src_len) {
        for (int i = 0; i < dst_len; ++i) {
            const double lo = i * scale;
            const double hi = (i + 1) * scale;
            double acc = 0.0;
            for (int s = static_cast<int>(std::floor(lo)); s < static_cast<int>(std::ceil(hi)); ++s) {
                const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
                if (w > 0.0) acc += w * src[static_cast<std::size_t>(std::min(s, src_len - 1))];
            }
            dst[static_cast<std::size_t>(i)] = acc / scale;
        }
    } else {
        for (int i = 0; i < dst_len; ++i) {
            double pos = (i + 0.5) * scale - 0.5;
            pos = std::clamp(pos, 0.0, static_cast<double>(src_len - 1));
            const int i0 = static_cast<int>(std::floor(pos));
            const int i1 = std::min(i0 + 1, src_len - 1);
            const double t = pos - i0;
            dst[static_cast<std::size_t>(i)] = (1.0 - t) * src[static_cast<std::size_t>(i0)] +
                                               t * src[static_cast<std::size_t>(i1)];
        }
    }
    return dst;
}

inline std::uint8_t to_pixel(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace detail

/// Area-averaging downscale, bilinear upscale, applied separably per axis.
inline ImageBuffer resize(const ImageBuffer& img, int w, int h) {
    if (w < 1 || h < 1) {
        throw Error(Errc::InvalidDimensions, "resize target must be at least 1x1");
    }
    if (img.empty()) {
        throw Error(Errc::InvalidImage, "cannot resize an empty image");
    }
    if (w == img.width() && h == img.height()) {
        return img;
    }
    const int sw = img.width();
    const int sh = img.height();

    std::vector<double> horiz(static_cast<std::size_t>(w) * static_cast<std::size_t>(sh));
    std::vector<double> line(static_cast<std::size_t>(sw));
    for (int y = 0; y < sh; ++y) {
        for (int x = 0; x < sw; ++x) line[static_cast<std::size_t>(x)] = img.at(x, y);
        auto out = detail::resample_line(line, w);
        std::copy(out.begin(), out.end(), horiz.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }

    ImageBuffer result(w, h);
    std::vector<double> column(static_cast<std::size_t>(sh));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < sh; ++y) {
            column[static_cast<std::size_t>(y)] = horiz[static_cast<std::size_t>(y) * w + x];
        }
        auto out = detail::resample_line(column, h);
        for (int y = 0; y < h; ++y) result.at(x, y) = detail::to_pixel(out[static_cast<std::size_t>(y)]);
    }
    return result;
}

/// Clockwise rotation by a multiple of 90 degrees.
inline ImageBuffer rotate(const ImageBuffer& img, int degrees) {
    const int quarter = ((degrees / 90) % 4 + 4) % 4;
    if (degrees % 90 != 0) {
        throw Error(Errc::InvalidArgument, "rotation must be a multiple of 90 degrees");
    }
    if (quarter == 0) return img;
    const int w = img.width();
    const int h = img.height();
    const bool swap = quarter % 2 == 1;
    ImageBuffer out(swap ? h : w, swap ? w : h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            switch (quarter) {
                case 1: out.at(h - 1 - y, x) = img.at(x, y); break;
                case 2: out.at(w - 1 - x, h - 1 - y) = img.at(x, y); break;
                default: out.at(y, w - 1 - x) = img.at(x, y); break;
            }
        }
    }
    return out;
}

inline ImageBuffer invert(const ImageBuffer& img) {
    ImageBuffer out = img;
    for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(255 - v);
    return out;
}

/// Variants in deterministic order: rotations ascending, plain before inverted.
inline std::vector<ImageBuffer> augment(const ImageBuffer& img, const AugmentConfig& cfg) {
    cfg.validate();
    std::vector<int> rotations = cfg.rotations;
    std::sort(rotations.begin(), rotations.end());
    std::vector<ImageBuffer> variants;
    variants.reserve(cfg.variant_count());
    for (int r : rotations) {
        ImageBuffer rotated = rotate(img, r);
        if (cfg.include_inversion) {
            ImageBuffer inverted = invert(rotated);
            variants.push_back(std::move(rotated));
            variants.push_back(std::move(inverted));
        } else {
            variants.push_back(std::move(rotated));
        }
    }
    return variants;
}

struct FloodFillOptions {
    int tolerance = 32;
    int speck_threshold = 9;
};

/// Most frequent intensity along the image border (ties go to the brighter value).
inline std::uint8_t border_mode(const ImageBuffer& img) {
    std::array<int, 256> hist{};
    const int w = img.width();
    const int h = img.height();
    for (int x = 0; x < w; ++x) {
        ++hist[img.at(x, 0)];
        if (h > 1) ++hist[img.at(x, h - 1)];
    }
    for (int y = 1; y + 1 < h; ++y) {
        ++hist[img.at(0, y)];
        if (w > 1) ++hist[img.at(w - 1, y)];
    }
    int best = 255;
    for (int v = 255; v >= 0; --v) {
        if (hist[static_cast<std::size_t>(v)] > hist[static_cast<std::size_t>(best)]) best = v;
    }
    return static_cast<std::uint8_t>(best);
}

/// Binarizes a stimulus: background-like pixels become 255, foreground
/// components of at least `speck_threshold` pixels become 0, smaller specks
/// are erased. The seed must sit on background.
inline ImageBuffer flood_fill_clean(const ImageBuffer& img, std::pair<int, int> background_seed,
                                    const FloodFillOptions& opts = {}) {
    const auto [sx, sy] = background_seed;
    if (img.empty() || !img.contains(sx, sy)) {
        throw Error(Errc::BadSeed, "seed outside image bounds");
    }
    const int mode = border_mode(img);
    auto is_background = [&](std::uint8_t v) { return std::abs(static_cast<int>(v) - mode) <= opts.tolerance; };
    if (!is_background(img.at(sx, sy))) {
        throw Error(Errc::BadSeed, "seed pixel lies in the foreground");
    }

    const int w = img.width();
    const int h = img.height();
    ImageBuffer out(w, h, 255);
    std::vector<int> label(img.size(), -1);
    std::vector<int> stack;
    std::vector<int> component;
    for (int start = 0; start < static_cast<int>(img.size()); ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) continue;
        if (is_background(img.pixels()[static_cast<std::size_t>(start)])) continue;
        // 8-connected foreground component.
        component.clear();
        stack.push_back(start);
        label[static_cast<std::size_t>(start)] = start;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            component.push_back(p);
            const int px = p % w;
            const int py = p / w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx;
                    const int ny = py + dy;
                    if ((dx == 0 && dy == 0) || !img.contains(nx, ny)) continue;
                    const int q = ny * w + nx;
                    if (label[static_cast<std::size_t>(q)] >= 0) continue;
                    if (is_background(img.pixels()[static_cast<std::size_t>(q)])) continue;
                    label[static_cast<std::size_t>(q)] = start;
                    stack.push_back(q);
                }
            }
        }
        if (static_cast<int>(component.size()) >= opts.speck_threshold) {
            for (int p : component) out.pixels()[static_cast<std::size_t>(p)] = 0;
        }
    }
    return out;
}

/// Count of pixels farther than `tolerance` from the border mode.
inline std::size_t foreground_count(const ImageBuffer& img, int tolerance = 32) {
    const int mode = border_mode(img);
    return static_cast<std::size_t>(std::count_if(img.pixels().begin(), img.pixels().end(), [&](std::uint8_t v) {
        return std::abs(static_cast<int>(v) - mode) > tolerance;
    }));
}

/// Stimulus preparation: grayscale, speck removal, then the canonical 300x300 size.
inline ImageBuffer prepare_stimulus(const ImageBuffer& gray, int side = 300) {
    const int mode = border_mode(gray);
    std::pair<int, int> seed{0, 0};
    for (int x = 0; x < gray.width(); ++x) {
        if (std::abs(gray.at(x, 0) - mode) <= FloodFillOptions{}.tolerance) {
            seed = {x, 0};
            break;
        }
    }
    return resize(flood_fill_clean(gray, seed), side, side);
}

/// Scraped images only get the size normalization.
inline ImageBuffer prepare_scraped(const ImageBuffer& gray, int side = 300) {
    return resize(gray, side, side);
}

}  // namespace entrain
