#pragma once

// Builds a Pipeline from configuration: stimuli, word lists, stop images and
// the provider stack (fixture | cache | http, the last two wrapped in the disk cache).

#include <filesystem>
#include <memory>
#include <string>

#include "entrain/config.hpp"
#include "entrain/fixtures.hpp"
#include "entrain/http_provider.hpp"
#include "entrain/image_source.hpp"
#include "entrain/pipeline.hpp"
#include "entrain/service.hpp"

namespace entrain {

inline std::shared_ptr<ImageProvider> make_provider(const PipelineConfig& c) {
    if (c.provider == "fixture") {
        if (c.fixture_dir.empty()) throw Error(Errc::InvalidConfig, "provider fixture needs fixture_dir");
        return std::make_shared<FixtureProvider>(FixtureProvider::load(c.fixture_dir));
    }
    if (c.provider == "cache") return std::make_shared<CachedProvider>(nullptr, c.cache_dir);
    if (c.provider == "http") {
        return std::make_shared<CachedProvider>(std::make_shared<HttpProvider>(c.http), c.cache_dir);
    }
    throw Error(Errc::InvalidConfig, "provider must be fixture, cache or http");
}

inline Pipeline make_pipeline(const PipelineConfig& c) {
    Pipeline p;
    p.config = c;
    if (c.stimuli_dir.empty()) {
        p.stimuli = fixtures::stimuli();
    } else {
        p.stimuli = load_pack(c.stimuli_dir, "default").stimuli;
    }
    if (!c.stoplist.empty()) p.language.stoplist = Stoplist::load(c.stoplist);
    if (!c.lexicon.empty()) p.language.lexicon = Lexicon::load(c.lexicon);
    p.language.cue = c.cue;
    for (const auto& path : c.stop_images) p.stop_images.push_back(load_gray(path));
    p.provider = make_provider(c);
    return p;
}

}  // namespace entrain
