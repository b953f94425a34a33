#pragma once

// Synthetic worlds for tests, the acceptance runner and `make-fixtures`.
// Twelve procedurally assembled tangrams stand in for the stimulus set; each
// director description is registered with a fixture image list.

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/image.hpp"
#include "entrain/image_io.hpp"
#include "entrain/image_source.hpp"
#include "entrain/linguistics.hpp"
#include "entrain/synth.hpp"

namespace entrain::fixtures {

inline constexpr int kObjects = 12;

inline const std::array<std::string, kObjects>& descriptions() {
    static const std::array<std::string, kObjects> d{
        "the one that looks like a tall man",
        "a bird with a long neck",
        "kind of like a rabbit sitting",
        "a person kneeling down",
        "boat with a big sail",
        "the dancer on one leg",
        "looks like a swan",
        "a house with a chimney",
        "a fox running",
        "the candle",
        "a man with a hat walking",
        "the arrow pointing up",
    };
    return d;
}

inline std::string object_id(int i) { return std::string(1, static_cast<char>('A' + i)); }

inline synth::Figure figure(int i) { return synth::random_figure(100 + static_cast<std::uint64_t>(i)); }

inline std::vector<LabeledImage> stimuli() {
    std::vector<LabeledImage> out;
    for (int i = 0; i < kObjects; ++i) out.push_back({object_id(i), prepare_stimulus(synth::render(figure(i), 300))});
    return out;
}

/// A rotated, rescaled, shifted copy of the true tangram (inverted for odd
/// targets), a darker "scan" of a different stimulus, and five distractors.
inline std::vector<LabeledImage> oracle_images(int t) {
    synth::Rng rng(7000 + static_cast<std::uint64_t>(t));
    synth::Pose pose;
    pose.rotation_deg = 90.0 * (t % 4) + rng.uniform(-6, 6);
    pose.scale = rng.uniform(0.88, 1.0);
    pose.shift_x = rng.uniform(-8, 8);
    pose.shift_y = rng.uniform(-8, 8);
    ImageBuffer copy = synth::render(figure(t), 300, pose);
    if (t % 2 == 1) copy = invert(copy);

    std::vector<LabeledImage> out;
    out.push_back({"copy", std::move(copy)});
    const int other = (t + 1 + static_cast<int>(rng.below(kObjects - 1))) % kObjects;
    synth::Pose scan;
    scan.shift_x = rng.uniform(-2, 2);
    out.push_back({"scan", synth::render(figure(other), 300, scan, 0, 248)});
    for (int d = 0; d < 5; ++d) {
        const std::uint64_t s = 1000 + static_cast<std::uint64_t>(t) * 10 + static_cast<std::uint64_t>(d);
        ImageBuffer img = d == 0         ? synth::render(synth::random_figure(s), 300, {}, 40, 248)
                          : d % 2 == 1 ? synth::smooth_texture(s)
                                       : synth::blob_scene(s);
        out.push_back({"d" + std::to_string(d), std::move(img)});
    }
    return out;
}

/// Slightly perturbed renders of the solved square, the kind of generic
/// result a search engine returns for any "tangram" query.
inline ImageBuffer stop_near_duplicate(std::uint64_t seed) {
    synth::Rng rng(seed);
    synth::Pose p;
    p.shift_x = rng.uniform(-1.5, 1.5);
    p.shift_y = rng.uniform(-1.5, 1.5);
    p.scale = rng.uniform(0.985, 1.015);
    p.rotation_deg = rng.uniform(-1.0, 1.0);
    return synth::render(synth::solved_square(), 300, p);
}

struct World {
    std::vector<LabeledImage> stimuli;
    std::shared_ptr<FixtureProvider> provider = std::make_shared<FixtureProvider>();
    std::vector<CorpusRecord> corpus;
    std::vector<std::string> keys;  // fixture key per object, in object order
    int n_images = kDefaultImageCount;
};

enum class Variant {
    Oracle,       // every description finds a copy of its tangram
    Adversarial,  // three stop-image near-duplicates precede each oracle list
    AllRemoved,   // one description's images are all near-duplicates of the stop image
};

inline constexpr int kRemovedTarget = 10;

inline World make_world(Variant v, const LanguageModel& lm = {}) {
    World w;
    w.stimuli = stimuli();
    if (v == Variant::Adversarial) w.n_images = 10;
    for (int t = 0; t < kObjects; ++t) {
        const Utterance u{descriptions()[t], Speaker::Director, 0, 1, object_id(t)};
        const auto key = canonical_key(utterance_to_query(u, lm).tokens);
        w.keys.push_back(key);
        std::vector<LabeledImage> images;
        if (v == Variant::Adversarial || (v == Variant::AllRemoved && t == kRemovedTarget)) {
            for (int k = 0; k < 3; ++k) {
                images.push_back({"stop" + std::to_string(k),
                                  stop_near_duplicate(5000 + static_cast<std::uint64_t>(t) * 10 + k)});
            }
        }
        if (!(v == Variant::AllRemoved && t == kRemovedTarget)) {
            for (auto& li : oracle_images(t)) images.push_back(std::move(li));
        }
        w.provider->add(key, std::move(images));
        w.corpus.push_back({"game-1", 1, Speaker::Director, 1000 * (t + 1), descriptions()[t], object_id(t)});
    }
    return w;
}

/// Writes stimuli/, fixtures/ and corpus.csv for the CLI.
inline void write_world(const World& w, const std::filesystem::path& root) {
    const auto stim = root / "stimuli";
    std::filesystem::create_directories(stim);
    for (const auto& s : w.stimuli) save_png(stim / (s.id + ".png"), s.image);
    w.provider->save(root / "fixtures");
    const auto csv = corpus_to_csv(w.corpus);
    write_file(root / "corpus.csv", std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
}

}  // namespace entrain::fixtures
