#pragma once

// Flat `key = value` configuration shared by the CLI, the replay harness and
// the live service.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/common_ground.hpp"
#include "entrain/error.hpp"
#include "entrain/image.hpp"
#include "entrain/metrics.hpp"
#include "entrain/sift.hpp"
#include "entrain/similarity.hpp"

namespace entrain {

/// Raw key/value pairs in file order; later duplicates override earlier ones.
class KeyValues {
public:
    static KeyValues parse(std::string_view text) {
        KeyValues kv;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) {
                throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = trim(trimmed.substr(0, eq));
            if (key.empty()) throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
            kv.values_[key] = trim(trimmed.substr(eq + 1));
        }
        return kv;
    }

    static KeyValues load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    std::optional<std::string> get(const std::string& key) const {
        if (auto it = values_.find(key); it != values_.end()) return it->second;
        return std::nullopt;
    }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    static std::string trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return std::string(s.substr(b, e - b + 1));
    }

    std::map<std::string, std::string> values_;
};

/// Threshold: B = {o : g(o) > epsilon}. TopK: B = the k most probable softmax hypotheses.
enum class DecisionMode { Threshold, TopK };

struct HttpSettings {
    std::string endpoint;
    std::string api_key_env;
    std::string api_key_header = "X-Api-Key";
    std::string query_param = "q";
    std::string count_param = "count";
    std::string results_path = "value[].contentUrl";
    double rate_limit_per_sec = 1.0;
    int retries = 2;
    int timeout_sec = 10;
};

struct ColumnMap {
    std::string game_id = "gameid";
    std::string round = "repNum";
    std::string role = "role";
    std::string timestamp = "time";
    std::string text = "contents";
    std::string target = "intendedName";
};

/// Everything a replay or live session needs besides the data itself.
struct PipelineConfig {
    double epsilon = 0.95;
    int n_images = 7;
    double temperature = 0.05;
    int k = 3;
    DecisionMode decision = DecisionMode::Threshold;
    ScoringConfig scoring{};
    double dedupe_threshold = 0.95;
    bool dedupe_guard_stimuli = false;
    ContradictionPolicy contradiction = ContradictionPolicy::ForgiveAndRebind;
    bool strict_provider = false;
    bool measure_latency = true;
    std::string cue = "tangram figure";
    std::string provider = "fixture";
    std::filesystem::path fixture_dir;
    std::filesystem::path stimuli_dir;
    std::filesystem::path cache_dir = ".entrain-cache";
    std::filesystem::path stoplist;
    std::filesystem::path lexicon;
    std::vector<std::filesystem::path> stop_images;
    HttpSettings http{};
    ColumnMap columns{};
    bool strict_corpus = false;
    std::string cors_origin = "*";
    int session_ttl_minutes = 30;
    std::filesystem::path snapshot;

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(Errc::InvalidConfig, "epsilon must lie in [0, 1)");
        if (n_images < 1 || n_images > 50) throw Error(Errc::InvalidConfig, "n_images must lie in [1, 50]");
        if (!(temperature > 0.0)) throw Error(Errc::InvalidConfig, "temperature must be positive");
        if (k < 1) throw Error(Errc::InvalidConfig, "k must be at least 1");
        if (!(dedupe_threshold > 0.0 && dedupe_threshold <= 1.0)) {
            throw Error(Errc::InvalidConfig, "dedupe.threshold must lie in (0, 1]");
        }
        if (session_ttl_minutes < 1) throw Error(Errc::InvalidConfig, "service.ttl_minutes must be positive");
        if (scoring.window < 2) throw Error(Errc::InvalidConfig, "window must be at least 2");
        try {
            scoring.augment.validate();
        } catch (const Error& e) {
            throw Error(Errc::InvalidConfig, e.what());
        }
    }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::InvalidConfig, key + ": not a number: '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    const bool hex = v.rfind("0x", 0) == 0;
    const char* begin = v.data() + (hex ? 2 : 0);
    const char* end = v.data() + v.size();
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(begin, end, out, hex ? 16 : 10);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw Error(Errc::InvalidConfig, key + ": not an integer: '" + v + "'");
    }
    return out;
}

inline bool to_bool(const std::string& key, std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw Error(Errc::InvalidConfig, key + ": not a boolean: '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ' && c != '\t') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    std::erase_if(out, [](const std::string& s) { return s.empty(); });
    return out;
}

}  // namespace detail

/// Applies recognized keys on top of `base`; unknown keys are an error so typos surface.
inline PipelineConfig apply_config(const KeyValues& kv, PipelineConfig base = {}) {
    using namespace detail;
    PipelineConfig c = std::move(base);
    for (const auto& [key, v] : kv.values()) {
        if (key == "epsilon") c.epsilon = to_double(key, v);
        else if (key == "n_images") c.n_images = static_cast<int>(to_int(key, v));
        else if (key == "temperature") c.temperature = to_double(key, v);
        else if (key == "k") c.k = static_cast<int>(to_int(key, v));
        else if (key == "decision") {
            if (v == "threshold") c.decision = DecisionMode::Threshold;
            else if (v == "top_k") c.decision = DecisionMode::TopK;
            else throw Error(Errc::InvalidConfig, "decision must be threshold or top_k");
        }
        else if (key == "metric") {
            try {
                c.scoring.metric = metric_from_string(v);
            } catch (const Error& e) {
                throw Error(Errc::InvalidConfig, e.what());
            }
        }
        else if (key == "align") c.scoring.align = to_bool(key, v);
        else if (key == "window") c.scoring.window = static_cast<int>(to_int(key, v));
        else if (key == "aggregation") {
            if (v == "max") c.scoring.aggregation = Aggregation::Max;
            else if (v == "mean_top_m") c.scoring.aggregation = Aggregation::MeanTopM;
            else throw Error(Errc::InvalidConfig, "aggregation must be max or mean_top_m");
        }
        else if (key == "top_m") c.scoring.top_m = static_cast<int>(to_int(key, v));
        else if (key == "augment.rotations") {
            c.scoring.augment.rotations.clear();
            for (const auto& r : split_list(v)) c.scoring.augment.rotations.push_back(static_cast<int>(to_int(key, r)));
        }
        else if (key == "augment.invert") c.scoring.augment.include_inversion = to_bool(key, v);
        else if (key == "sift.octaves") c.scoring.sift.octaves = static_cast<int>(to_int(key, v));
        else if (key == "sift.scales") c.scoring.sift.scales_per_octave = static_cast<int>(to_int(key, v));
        else if (key == "sift.sigma0") c.scoring.sift.sigma0 = to_double(key, v);
        else if (key == "sift.contrast") c.scoring.sift.contrast_threshold = to_double(key, v);
        else if (key == "sift.edge") c.scoring.sift.edge_ratio = to_double(key, v);
        else if (key == "sift.match_ratio") c.scoring.sift.match_ratio = to_double(key, v);
        else if (key == "sift.ransac_threshold") c.scoring.sift.ransac_threshold = to_double(key, v);
        else if (key == "sift.ransac_iterations") c.scoring.sift.ransac_iterations = static_cast<int>(to_int(key, v));
        else if (key == "sift.seed") c.scoring.sift.seed = static_cast<std::uint64_t>(to_int(key, v));
        else if (key == "sift.min_inliers") c.scoring.sift.min_inliers = static_cast<int>(to_int(key, v));
        else if (key == "sift.motion") {
            if (v == "similarity") c.scoring.sift.motion = sift::Motion::Similarity;
            else if (v == "affine") c.scoring.sift.motion = sift::Motion::Affine;
            else if (v == "homography") c.scoring.sift.motion = sift::Motion::Homography;
            else throw Error(Errc::InvalidConfig, "sift.motion must be similarity, affine or homography");
        }
        else if (key == "dedupe.threshold") c.dedupe_threshold = to_double(key, v);
        else if (key == "dedupe.guard_stimuli") c.dedupe_guard_stimuli = to_bool(key, v);
        else if (key == "dedupe.stop_images") {
            c.stop_images.clear();
            for (const auto& p : split_list(v)) c.stop_images.emplace_back(p);
        }
        else if (key == "contradiction") {
            if (v == "strict") c.contradiction = ContradictionPolicy::Strict;
            else if (v == "forgive") c.contradiction = ContradictionPolicy::ForgiveAndRebind;
            else throw Error(Errc::InvalidConfig, "contradiction must be strict or forgive");
        }
        else if (key == "strict_provider") c.strict_provider = to_bool(key, v);
        else if (key == "measure_latency") c.measure_latency = to_bool(key, v);
        else if (key == "cue") c.cue = v;
        else if (key == "provider") c.provider = v;
        else if (key == "fixture_dir") c.fixture_dir = v;
        else if (key == "stimuli") c.stimuli_dir = v;
        else if (key == "cache_dir") c.cache_dir = v;
        else if (key == "stoplist") c.stoplist = v;
        else if (key == "lexicon") c.lexicon = v;
        else if (key == "http.endpoint") c.http.endpoint = v;
        else if (key == "http.api_key_env") c.http.api_key_env = v;
        else if (key == "http.api_key_header") c.http.api_key_header = v;
        else if (key == "http.query_param") c.http.query_param = v;
        else if (key == "http.count_param") c.http.count_param = v;
        else if (key == "http.results_path") c.http.results_path = v;
        else if (key == "http.rate_limit_per_sec") c.http.rate_limit_per_sec = to_double(key, v);
        else if (key == "http.retries") c.http.retries = static_cast<int>(to_int(key, v));
        else if (key == "http.timeout_sec") c.http.timeout_sec = static_cast<int>(to_int(key, v));
        else if (key == "service.cors_origin") c.cors_origin = v;
        else if (key == "service.ttl_minutes") c.session_ttl_minutes = static_cast<int>(to_int(key, v));
        else if (key == "service.snapshot") c.snapshot = v;
        else if (key == "corpus.strict") c.strict_corpus = to_bool(key, v);
        else if (key == "column.game_id") c.columns.game_id = v;
        else if (key == "column.round") c.columns.round = v;
        else if (key == "column.role") c.columns.role = v;
        else if (key == "column.timestamp") c.columns.timestamp = v;
        else if (key == "column.text") c.columns.text = v;
        else if (key == "column.target") c.columns.target = v;
        else throw Error(Errc::InvalidConfig, "unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) { return apply_config(KeyValues::load(path)); }

}  // namespace entrain
