#pragma once

// Evidence aggregation g(object, images): every scraped image is aligned onto
// the stimulus (falling back to the raw image when alignment fails), expanded
// into its rotation/inversion variants, and scored with the configured metric.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrain/error.hpp"
#include "entrain/image.hpp"
#include "entrain/metrics.hpp"
#include "entrain/sift.hpp"

namespace entrain {

enum class Aggregation { Max, MeanTopM };

struct LabeledImage {
    std::string id;
    ImageBuffer image;
};

inline std::uint64_t fingerprint(const ImageBuffer& img) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(img.width()));
    mix(static_cast<std::uint64_t>(img.height()));
    for (std::uint8_t v : img.pixels()) mix(v);
    return h;
}

/// Memoizes SIFT features and alignment outcomes by image content. Alignment
/// does not depend on the metric, so metric sweeps share one cache.
class ScoringCache {
public:
    std::shared_ptr<const sift::FeatureSet> features(const ImageBuffer& img, const sift::Params& p) {
        const auto key = fingerprint(img);
        {
            std::lock_guard lock(mutex_);
            if (auto it = features_.find(key); it != features_.end()) return it->second;
        }
        auto f = std::make_shared<const sift::FeatureSet>(sift::extract_features(img, p));
        std::lock_guard lock(mutex_);
        return features_.emplace(key, std::move(f)).first->second;
    }

    std::optional<std::optional<ImageBuffer>> find_alignment(std::uint64_t src, std::uint64_t dst) {
        std::lock_guard lock(mutex_);
        if (auto it = alignments_.find({src, dst}); it != alignments_.end()) return it->second;
        return std::nullopt;
    }

    void store_alignment(std::uint64_t src, std::uint64_t dst, std::optional<ImageBuffer> warped) {
        std::lock_guard lock(mutex_);
        alignments_.emplace(std::pair{src, dst}, std::move(warped));
    }

private:
    std::mutex mutex_;
    std::map<std::uint64_t, std::shared_ptr<const sift::FeatureSet>> features_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::optional<ImageBuffer>> alignments_;
};

struct ScoringConfig {
    MetricKind metric = MetricKind::UQI;
    AugmentConfig augment{};
    bool align = true;
    sift::Params sift{};
    int window = kDefaultWindow;
    Aggregation aggregation = Aggregation::Max;
    int top_m = 3;
    std::shared_ptr<ScoringCache> cache;  // optional
};

struct PairScore {
    double value = 0.0;  // normalized similarity of the best variant
    bool aligned = false;
    std::size_t best_variant = 0;
};

namespace detail {

inline std::shared_ptr<const sift::FeatureSet> features_of(const ImageBuffer& img, const ScoringConfig& cfg) {
    if (cfg.cache) return cfg.cache->features(img, cfg.sift);
    return std::make_shared<const sift::FeatureSet>(sift::extract_features(img, cfg.sift));
}

/// Warps `scraped` onto `stimulus`. Both polarities are tried because SIFT
/// descriptors do not survive intensity inversion; the one with more inliers wins
/// and the warped image keeps that polarity (the inversion variant undoes it).
inline std::optional<ImageBuffer> aligned_onto(const ImageBuffer& scraped, const ImageBuffer& stimulus,
                                               const ScoringConfig& cfg) {
    if (scraped.width() < 16 || scraped.height() < 16 || stimulus.width() < 16 || stimulus.height() < 16) {
        return std::nullopt;
    }
    const auto src_key = fingerprint(scraped);
    const auto dst_key = fingerprint(stimulus);
    if (cfg.cache) {
        if (auto hit = cfg.cache->find_alignment(src_key, dst_key)) return *hit;
    }
    const auto dst_f = features_of(stimulus, cfg);
    std::optional<sift::Alignment> best;
    auto attempt = [&](const ImageBuffer& src) {
        auto outcome = sift::align_features(src, *features_of(src, cfg), *dst_f, stimulus.width(), stimulus.height(),
                                            cfg.sift);
        if (auto* a = std::get_if<sift::Alignment>(&outcome)) {
            if (!best || a->inliers > best->inliers) best = std::move(*a);
        }
    };
    attempt(scraped);
    if (cfg.augment.include_inversion) attempt(invert(scraped));
    std::optional<ImageBuffer> warped;
    if (best) warped = std::move(best->warped);
    if (cfg.cache) cfg.cache->store_alignment(src_key, dst_key, warped);
    return warped;
}

}  // namespace detail

/// Best normalized similarity between `stimulus` and any variant of the (aligned) scraped image.
inline PairScore score_pair(const ImageBuffer& stimulus, const ImageBuffer& scraped, const ScoringConfig& cfg) {
    ImageBuffer candidate = (scraped.width() == stimulus.width() && scraped.height() == stimulus.height())
                                ? scraped
                                : resize(scraped, stimulus.width(), stimulus.height());
    PairScore out;
    if (cfg.align) {
        if (auto warped = detail::aligned_onto(candidate, stimulus, cfg)) {
            candidate = std::move(*warped);
            out.aligned = true;
        }
    }
    const auto best = best_variant_similarity(cfg.metric, stimulus, candidate, cfg.augment, cfg.window);
    out.value = best.value;
    out.best_variant = best.variant;
    return out;
}

/// Collapses one object's per-image scores into g.
inline double aggregate_row(std::span<const double> row, const ScoringConfig& cfg) {
    if (row.empty()) throw Error(Errc::NoEvidence, "no scraped images to aggregate");
    if (cfg.aggregation == Aggregation::Max) return *std::max_element(row.begin(), row.end());
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t m = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(cfg.top_m, 1)), 1, sorted.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += sorted[i];
    return acc / static_cast<double>(m);
}

inline double aggregate_similarity(const ImageBuffer& stimulus, std::span<const ImageBuffer> scraped,
                                   const ScoringConfig& cfg = {}) {
    if (scraped.empty()) throw Error(Errc::NoEvidence, "no scraped images for this object");
    std::vector<double> row;
    row.reserve(scraped.size());
    for (const auto& img : scraped) row.push_back(score_pair(stimulus, img, cfg).value);
    return aggregate_row(row, cfg);
}

/// |objects| x |images| table of best-variant similarities.
struct ScoreMatrix {
    std::vector<std::string> object_ids;
    std::vector<std::string> image_ids;
    std::vector<std::vector<double>> values;
    MetricKind metric = MetricKind::UQI;
    bool aligned = true;

    std::size_t rows() const { return object_ids.size(); }
    std::size_t cols() const { return image_ids.size(); }

    /// Per-object aggregated evidence, keyed by object id.
    std::map<std::string, double> aggregate(const ScoringConfig& cfg) const {
        std::map<std::string, double> g;
        for (std::size_t i = 0; i < rows(); ++i) g[object_ids[i]] = aggregate_row(values[i], cfg);
        return g;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "object";
        for (const auto& id : image_ids) out << ',' << id;
        out << '\n';
        for (std::size_t i = 0; i < rows(); ++i) {
            out << object_ids[i];
            for (double v : values[i]) out << ',' << v;
            out << '\n';
        }
        return out.str();
    }

    nlohmann::json to_json() const {
        return {{"metric", std::string(to_string(metric))},
                {"aligned", aligned},
                {"object_ids", object_ids},
                {"image_ids", image_ids},
                {"values", values}};
    }
};

inline ScoreMatrix score_matrix(std::span<const LabeledImage> stimuli, std::span<const LabeledImage> scraped,
                                const ScoringConfig& cfg = {}) {
    if (scraped.empty()) throw Error(Errc::NoEvidence, "no scraped images");
    if (stimuli.empty()) throw Error(Errc::InvalidArgument, "no stimuli");
    ScoreMatrix m;
    m.metric = cfg.metric;
    m.aligned = cfg.align;
    for (const auto& s : stimuli) m.object_ids.push_back(s.id);
    for (const auto& s : scraped) m.image_ids.push_back(s.id);
    m.values.assign(stimuli.size(), std::vector<double>(scraped.size(), 0.0));
    ScoringConfig local = cfg;
    if (!local.cache && local.align) local.cache = std::make_shared<ScoringCache>();
    for (std::size_t i = 0; i < stimuli.size(); ++i) {
        for (std::size_t j = 0; j < scraped.size(); ++j) {
            m.values[i][j] = score_pair(stimuli[i].image, scraped[j].image, local).value;
        }
    }
    return m;
}

}  // namespace entrain
