#pragma once

// Live-play sessions. A singleton binding set is not committed straight to
// Gamma: it becomes an outstanding guess that the director confirms or rejects.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrain/common_ground.hpp"
#include "entrain/fixtures.hpp"
#include "entrain/image_io.hpp"
#include "entrain/pipeline.hpp"
#include "entrain/synth.hpp"

namespace entrain {

struct StimulusPack {
    std::string name;
    std::vector<LabeledImage> stimuli;
};

inline StimulusPack default_pack() { return {"default", fixtures::stimuli()}; }

/// Every `*.png` directly under `dir`, id = file stem, prepared like any stimulus.
inline StimulusPack load_pack(const std::filesystem::path& dir, std::string name) {
    if (!std::filesystem::is_directory(dir)) throw Error(Errc::UnknownPack, "no stimulus directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(Errc::UnknownPack, "no PNG stimuli in " + dir.string());
    StimulusPack p{std::move(name), {}};
    for (const auto& f : files) p.stimuli.push_back({f.stem().string(), prepare_stimulus(load_gray(f))});
    return p;
}

/// Packs from a stimuli root: PNGs directly inside form the "default" pack,
/// each subdirectory holding PNGs forms a pack of that name.
inline std::map<std::string, StimulusPack> load_packs(const std::filesystem::path& root) {
    std::map<std::string, StimulusPack> out;
    if (!std::filesystem::is_directory(root)) throw Error(Errc::UnknownPack, "no stimulus directory " + root.string());
    bool top_level = false;
    for (const auto& e : std::filesystem::directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".png") top_level = true;
        if (e.is_directory()) {
            try {
                auto p = load_pack(e.path(), e.path().filename().string());
                out.emplace(p.name, std::move(p));
            } catch (const Error&) {
                // not a pack
            }
        }
    }
    if (top_level) out.insert_or_assign("default", load_pack(root, "default"));
    if (out.empty()) throw Error(Errc::UnknownPack, "no stimulus packs under " + root.string());
    return out;
}

struct ServiceOptions {
    std::chrono::seconds ttl{30 * 60};
    std::optional<std::filesystem::path> snapshot;
};

namespace detail {

using PairSet = std::set<std::pair<std::string, std::string>>;

inline PairSet pairs_of(const std::vector<Binding>& bs) {
    PairSet out;
    for (const auto& b : bs) out.emplace(b.referent, b.object);
    return out;
}

inline nlohmann::json pair_list(const PairSet& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [r, o] : s) arr.push_back({{"referent", r}, {"object", o}});
    return arr;
}

inline PairSet minus(const PairSet& a, const PairSet& b) {
    PairSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
    return out;
}

}  // namespace detail

/// Added and removed pact entries between two contexts.
inline nlohmann::json context_delta(const CommonGroundContext& before, const CommonGroundContext& after) {
    using namespace detail;
    const auto g0 = pairs_of(before.gamma()), g1 = pairs_of(after.gamma());
    const auto x0 = pairs_of(before.xi()), x1 = pairs_of(after.xi());
    const auto o0 = pairs_of(before.omega()), o1 = pairs_of(after.omega());
    return {{"gamma_added", pair_list(minus(g1, g0))},
            {"xi_added", pair_list(minus(x1, x0))},
            {"xi_removed", pair_list(minus(x0, x1))},
            {"omega_added", pair_list(minus(o1, o0))}};
}

struct Session {
    std::string id;
    std::string pack;
    std::uint64_t seed = 0;
    std::vector<ObjectId> order;
    CommonGroundContext context;
    nlohmann::json transcript = nlohmann::json::array();
    std::map<ReferentId, ObjectId> outstanding;
    std::chrono::steady_clock::time_point touched = std::chrono::steady_clock::now();
    std::mutex mutex;

    nlohmann::json to_json() const {
        nlohmann::json out_guesses = nlohmann::json::object();
        for (const auto& [r, o] : outstanding) out_guesses[r] = o;
        return {{"session_id", id},
                {"pack", pack},
                {"seed", seed},
                {"order", order},
                {"context", context.to_json()},
                {"outstanding", out_guesses},
                {"entrained", is_entrained(context)},
                {"transcript", transcript}};
    }
};

/// Seeded Fisher-Yates on our own generator so orders match across platforms.
inline std::vector<ObjectId> shuffled_order(const std::vector<LabeledImage>& stimuli, std::uint64_t seed) {
    std::vector<ObjectId> ids;
    for (const auto& s : stimuli) ids.push_back(s.id);
    synth::Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    return ids;
}

class SessionManager {
public:
    SessionManager(Pipeline base, std::map<std::string, StimulusPack> packs, ServiceOptions opts = {})
        : base_(std::move(base)), packs_(std::move(packs)), opts_(std::move(opts)) {
        if (!base_.provider) throw Error(Errc::InvalidConfig, "service needs an image provider");
        if (opts_.snapshot && std::filesystem::exists(*opts_.snapshot)) load_snapshot(*opts_.snapshot);
    }

    const StimulusPack& pack(const std::string& name) const {
        auto it = packs_.find(name);
        if (it == packs_.end()) throw Error(Errc::UnknownPack, "unknown stimulus pack '" + name + "'");
        return it->second;
    }

    nlohmann::json create_session(const std::string& pack_name, std::optional<std::uint64_t> seed = std::nullopt) {
        const auto& p = pack(pack_name);
        auto s = std::make_shared<Session>();
        s->id = new_id();
        s->pack = p.name;
        s->seed = seed ? *seed : std::random_device{}();
        s->order = shuffled_order(p.stimuli, s->seed);
        std::set<ObjectId> ids(s->order.begin(), s->order.end());
        s->context = CommonGroundContext(std::move(ids));
        nlohmann::json out = {{"session_id", s->id}, {"pack", s->pack}, {"seed", s->seed}, {"order", s->order},
                              {"status", "wait"}};
        {
            std::lock_guard lock(mutex_);
            expire_locked();
            sessions_[s->id] = s;
        }
        persist();
        return out;
    }

    nlohmann::json post_utterance(const std::string& id, const std::string& text) {
        auto s = find(id);
        nlohmann::json response;
        {
            std::lock_guard lock(s->mutex);
            const Pipeline pipe = pipeline_for(*s);
            const Utterance u{text, Speaker::Director, 0, 0, std::nullopt};
            const Query q = utterance_to_query(u, pipe.language);
            ReferentId r = canonical_key(q.tokens);
            const CommonGroundContext before = s->context;
            Evidence ev;
            GuessOutcome guess;
            std::set<ObjectId> b;
            if (auto bound = s->context.bound_object(r)) {
                guess = {*bound, GuessSource::Gamma};
            } else {
                ev = gather_evidence(pipe, q);
                for (const auto& o : decide(ev, s->context, pipe.config)) {
                    if (!s->context.is_negated(r, o)) b.insert(o);
                }
                if (b.size() == 1) {
                    guess = {*b.begin(), GuessSource::Scores};
                } else {
                    auto out = apply_update_with_policy(s->context, r, b, pipe.config.contradiction);
                    s->context = std::move(out.context);
                    r = out.referent;
                    guess = resolve_guess(s->context, r,
                                          ev.scores.empty() ? std::nullopt : std::optional<Scores>(ev.scores));
                }
            }
            if (guess.object) {
                s->outstanding[r] = *guess.object;
            } else {
                s->outstanding.erase(r);
            }
            response = {{"status", status_of(*s, guess)},
                        {"referent", r},
                        {"query", q.rendered},
                        {"guess", guess.object ? nlohmann::json(*guess.object) : nlohmann::json(nullptr)},
                        {"source", std::string(to_string(guess.source))},
                        {"bindings", b},
                        {"distribution", distribution_json(ev.scores, pipe.config.temperature)},
                        {"evidence",
                         {{"fetched", ev.fetched},
                          {"kept", ev.kept},
                          {"missing", ev.missing ? nlohmann::json(*ev.missing) : nlohmann::json(nullptr)}}},
                        {"context_delta", context_delta(before, s->context)},
                        {"context", s->context.to_json()}};
            s->transcript.push_back({{"utterance", text}, {"response", response}});
            check(*s);
        }
        persist();
        return response;
    }

    nlohmann::json post_feedback(const std::string& id, const ReferentId& r, const std::string& verdict) {
        if (verdict != "confirm" && verdict != "reject") {
            throw Error(Errc::InvalidArgument, "verdict must be confirm or reject");
        }
        auto s = find(id);
        nlohmann::json response;
        {
            std::lock_guard lock(s->mutex);
            auto it = s->outstanding.find(r);
            if (it == s->outstanding.end()) throw Error(Errc::NoOutstandingGuess, "no outstanding guess for '" + r + "'");
            const ObjectId o = it->second;
            const CommonGroundContext before = s->context;
            CommonGroundContext next = s->context;
            if (verdict == "confirm") {
                next = apply_update(next, r, {o});
            } else {
                if (next.bound_object(r) == o) {
                    throw Error(Errc::Contradiction, "(" + r + " <- " + o + "): rejecting an established pact");
                }
                auto xi = next.hypotheses(r);
                xi.erase(o);
                next.set_hypotheses(r, std::move(xi));
                next.negate(r, o);
            }
            s->context = std::move(next);
            s->outstanding.erase(it);
            response = {{"status", is_entrained(s->context) ? "entrained" : "wait"},
                        {"referent", r},
                        {"object", o},
                        {"verdict", verdict},
                        {"context_delta", context_delta(before, s->context)},
                        {"context", s->context.to_json()}};
            s->transcript.push_back({{"feedback", {{"referent", r}, {"object", o}, {"verdict", verdict}}}});
            check(*s);
        }
        persist();
        return response;
    }

    nlohmann::json get_state(const std::string& id) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        return s->to_json();
    }

    std::size_t size() {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

    /// Drops sessions idle for longer than the TTL as of `now`.
    void expire(std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now()) {
        std::lock_guard lock(mutex_);
        expire_locked(now);
    }

    void save_snapshot(const std::filesystem::path& path) {
        nlohmann::json all = nlohmann::json::array();
        {
            std::lock_guard lock(mutex_);
            for (const auto& [id, s] : sessions_) {
                std::lock_guard slock(s->mutex);
                all.push_back(s->to_json());
            }
        }
        const std::string text = nlohmann::json{{"schema", 1}, {"sessions", all}}.dump() + "\n";
        auto tmp = path;
        tmp += ".tmp";
        write_file(tmp, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        std::filesystem::rename(tmp, path);
    }

    void load_snapshot(const std::filesystem::path& path) {
        const auto j = nlohmann::json::parse(detail::slurp(path));
        std::lock_guard lock(mutex_);
        for (const auto& sj : j.at("sessions")) {
            auto s = std::make_shared<Session>();
            s->id = sj.at("session_id").get<std::string>();
            s->pack = sj.at("pack").get<std::string>();
            s->seed = sj.at("seed").get<std::uint64_t>();
            s->order = sj.at("order").get<std::vector<ObjectId>>();
            s->context = CommonGroundContext::from_json(sj.at("context"));
            s->transcript = sj.at("transcript");
            for (const auto& [r, o] : sj.at("outstanding").items()) s->outstanding[r] = o.get<ObjectId>();
            sessions_[s->id] = std::move(s);
        }
    }

private:
    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        expire_locked();
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(Errc::SessionNotFound, "no session '" + id + "'");
        it->second->touched = std::chrono::steady_clock::now();
        return it->second;
    }

    void expire_locked(std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now()) {
        std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->touched > opts_.ttl; });
    }

    Pipeline pipeline_for(const Session& s) const {
        Pipeline p = base_;
        p.stimuli = pack(s.pack).stimuli;
        if (!p.config.scoring.cache && p.config.scoring.align) {
            std::lock_guard lock(cache_mutex_);
            if (!cache_) cache_ = std::make_shared<ScoringCache>();
            p.config.scoring.cache = cache_;
        }
        return p;
    }

    static std::string status_of(const Session& s, const GuessOutcome& g) {
        if (is_entrained(s.context)) return "entrained";
        return g.object ? "guess" : "wait";
    }

    static nlohmann::json distribution_json(const Scores& scores, double temperature) {
        nlohmann::json arr = nlohmann::json::array();
        if (scores.empty()) return arr;
        for (const auto& h : softmax_hypotheses(scores, temperature, scores.size()).entries) {
            arr.push_back({{"object", h.object}, {"probability", h.probability}});
        }
        return arr;
    }

    static void check(const Session& s) {
        if (auto v = s.context.violation()) throw Error(Errc::Contradiction, "context invariant broken: " + *v);
    }

    void persist() {
        if (opts_.snapshot) save_snapshot(*opts_.snapshot);
    }

    std::string new_id() {
        std::lock_guard lock(rng_mutex_);
        static constexpr char hex[] = "0123456789abcdef";
        std::string id;
        for (int i = 0; i < 2; ++i) {
            const std::uint64_t v = rng_();
            for (int k = 0; k < 16; ++k) id.push_back(hex[(v >> (4 * k)) & 0xf]);
        }
        return id;
    }

    Pipeline base_;
    std::map<std::string, StimulusPack> packs_;
    ServiceOptions opts_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    mutable std::mutex cache_mutex_;
    mutable std::shared_ptr<ScoringCache> cache_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace entrain
