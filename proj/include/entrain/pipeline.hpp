#pragma once

// One director utterance through fetch, dedupe and scoring. Shared by corpus
// replay and live sessions.

#include <chrono>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entrain/common_ground.hpp"
#include "entrain/config.hpp"
#include "entrain/image_source.hpp"
#include "entrain/linguistics.hpp"
#include "entrain/similarity.hpp"

namespace entrain {

struct Pipeline {
    std::vector<LabeledImage> stimuli;
    std::shared_ptr<ImageProvider> provider;
    LanguageModel language;
    std::vector<ImageBuffer> stop_images{bundled_stop_image()};
    PipelineConfig config;

    std::set<ObjectId> object_ids() const {
        std::set<ObjectId> out;
        for (const auto& s : stimuli) out.insert(s.id);
        return out;
    }
};

struct Evidence {
    Scores scores;  // empty when nothing survived fetch + dedupe
    std::size_t fetched = 0;
    std::size_t kept = 0;
    std::optional<std::string> missing;  // why there is no evidence
    double compute_ms = 0.0;  // scoring time, fetch excluded
};

/// Fetch, dedupe and score. NoResults always degrades to "no evidence";
/// ProviderError does too unless `config.strict_provider` is set.
inline Evidence gather_evidence(const Pipeline& p, const Query& q) {
    Evidence ev;
    ScrapeResult fetched;
    try {
        fetched = p.provider->fetch({q, p.config.n_images});
    } catch (const Error& e) {
        if (e.code() == Errc::ProviderError && p.config.strict_provider) throw;
        if (e.code() != Errc::NoResults && e.code() != Errc::ProviderError) throw;
        ev.missing = e.what();
        return ev;
    }
    ev.fetched = fetched.images.size();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ImageBuffer> guard;
    if (p.config.dedupe_guard_stimuli) {
        for (const auto& s : p.stimuli) guard.push_back(s.image);
    }
    for (auto& li : fetched.images) li.image = prepare_scraped(li.image);
    const auto kept = dedupe_generic(fetched, p.stop_images, p.config.dedupe_threshold, guard);
    ev.kept = kept.images.size();
    if (kept.images.empty()) {
        ev.missing = "every scraped image was removed as generic";
    } else {
        const auto matrix = score_matrix(p.stimuli, kept.images, p.config.scoring);
        ev.scores = matrix.aggregate(p.config.scoring);
    }
    ev.compute_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return ev;
}

inline std::set<ObjectId> decide(const Evidence& ev, const CommonGroundContext& ctx, const PipelineConfig& c) {
    if (ev.scores.empty()) return {};
    if (c.decision == DecisionMode::Threshold) return derive_bindings(ev.scores, c.epsilon, &ctx);
    Scores open;
    for (const auto& [o, g] : ev.scores) {
        if (!ctx.bound_referent(o)) open.emplace(o, g);
    }
    if (open.empty()) return {};
    std::set<ObjectId> b;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(c.k), open.size());
    for (const auto& h : softmax_hypotheses(open, c.temperature, k).entries) b.insert(h.object);
    return b;
}

}  // namespace entrain
