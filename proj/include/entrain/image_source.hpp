#pragma once

// Candidate-image providers. The fixture provider is the deterministic test
// substrate; CachedProvider persists any provider's results on disk.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <unistd.h>

#include "entrain/error.hpp"
#include "entrain/image.hpp"
#include "entrain/image_io.hpp"
#include "entrain/linguistics.hpp"
#include "entrain/metrics.hpp"
#include "entrain/similarity.hpp"
#include "entrain/synth.hpp"

namespace entrain {

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(Errc::IoError, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_hex(std::string_view s) {
    return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// Hash of the canonical PNG encoding, which is also what the cache stores.
inline std::string content_hash(const ImageBuffer& img) { return sha256_hex(encode_png(img)); }

inline std::string iso8601_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline constexpr int kDefaultImageCount = 7;
inline constexpr int kMaxImageCount = 50;

struct ScrapeRequest {
    Query query;
    int n = kDefaultImageCount;

    void validate() const {
        if (n < 1 || n > kMaxImageCount) throw Error(Errc::InvalidArgument, "n must lie in [1, 50]");
        if (query.tokens.empty()) throw Error(Errc::EmptyQuery, "query has no tokens");
    }
};

struct ManifestEntry {
    std::string id;
    std::string file;
    std::string sha256;
};

struct Manifest {
    std::string query;
    int n = 0;
    std::string provider;
    std::string fetched_at;
    std::vector<ManifestEntry> entries;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json e = nlohmann::ordered_json::array();
        for (const auto& m : entries) e.push_back({{"id", m.id}, {"file", m.file}, {"sha256", m.sha256}});
        return {{"query", query}, {"n", n}, {"provider", provider}, {"fetched_at", fetched_at}, {"entries", e}};
    }

    static Manifest from_json(const nlohmann::json& j) {
        try {
            Manifest m;
            m.query = j.at("query").get<std::string>();
            m.n = j.at("n").get<int>();
            m.provider = j.at("provider").get<std::string>();
            m.fetched_at = j.at("fetched_at").get<std::string>();
            for (const auto& e : j.at("entries")) {
                m.entries.push_back({e.at("id").get<std::string>(), e.value("file", std::string{}),
                                     e.at("sha256").get<std::string>()});
            }
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ProviderError, std::string("bad manifest: ") + e.what());
        }
    }
};

struct ScrapeResult {
    std::vector<LabeledImage> images;
    Manifest manifest;
};

class ImageProvider {
public:
    virtual ~ImageProvider() = default;
    virtual ScrapeResult fetch(const ScrapeRequest& req) = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline ScrapeResult make_result(const ScrapeRequest& req, std::string provider, std::vector<LabeledImage> images) {
    ScrapeResult out;
    out.manifest.query = req.query.rendered;
    out.manifest.n = req.n;
    out.manifest.provider = std::move(provider);
    out.manifest.fetched_at = iso8601_now();
    std::set<std::string> seen;
    for (auto& li : images) {
        if (!seen.insert(li.id).second) throw Error(Errc::ProviderError, "duplicate image id " + li.id);
        out.manifest.entries.push_back({li.id, {}, content_hash(li.image)});
        out.images.push_back(std::move(li));
    }
    return out;
}

}  // namespace detail

/// Images registered per canonical token-set key, served in registration order.
class FixtureProvider : public ImageProvider {
public:
    void add(const std::string& key, std::vector<LabeledImage> images) { table_[key] = std::move(images); }
    void add(const Query& q, std::vector<LabeledImage> images) { add(canonical_key(q.tokens), std::move(images)); }

    bool has(const std::string& key) const { return table_.contains(key); }
    const std::map<std::string, std::vector<LabeledImage>>& table() const noexcept { return table_; }

    ScrapeResult fetch(const ScrapeRequest& req) override {
        req.validate();
        const auto key = canonical_key(req.query.tokens);
        const auto it = table_.find(key);
        if (it == table_.end() || it->second.empty()) throw Error(Errc::NoResults, "no fixture for '" + key + "'");
        std::vector<LabeledImage> images(it->second.begin(),
                                         it->second.begin() + std::min<std::size_t>(it->second.size(), req.n));
        return detail::make_result(req, name(), std::move(images));
    }

    std::string name() const override { return "fixture"; }

    /// `dir/fixtures.json`: {"queries": [{"key": "man tall", "images": [{"id": .., "file": ..}]}]}.
    static FixtureProvider load(const std::filesystem::path& dir) {
        const auto path = dir / "fixtures.json";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::slurp(path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
        }
        FixtureProvider p;
        for (const auto& q : j.at("queries")) {
            std::vector<LabeledImage> images;
            for (const auto& im : q.at("images")) {
                images.push_back({im.at("id").get<std::string>(), load_gray(dir / im.at("file").get<std::string>())});
            }
            p.add(q.at("key").get<std::string>(), std::move(images));
        }
        return p;
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        nlohmann::ordered_json queries = nlohmann::ordered_json::array();
        int qi = 0;
        for (const auto& [key, images] : table_) {
            nlohmann::ordered_json list = nlohmann::ordered_json::array();
            int ii = 0;
            for (const auto& li : images) {
                char file[32];
                std::snprintf(file, sizeof file, "q%03d_%02d.png", qi, ii++);
                save_png(dir / file, li.image);
                list.push_back({{"id", li.id}, {"file", file}});
            }
            queries.push_back({{"key", key}, {"images", list}});
            ++qi;
        }
        const std::string text = nlohmann::ordered_json{{"queries", queries}}.dump(2) + "\n";
        write_file(dir / "fixtures.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

private:
    std::map<std::string, std::vector<LabeledImage>> table_;
};

/// Read-through disk cache keyed by sha256(rendered query "|" n).
///
/// Layout: <dir>/<key>/manifest.json plus 000.png, 001.png, ... Entries are
/// written into a private temp directory and renamed into place; a concurrent
/// writer for the same key simply replaces the earlier one.
class CachedProvider : public ImageProvider {
public:
    CachedProvider(std::shared_ptr<ImageProvider> inner, std::filesystem::path dir)
        : inner_(std::move(inner)), dir_(std::move(dir)) {}

    static std::string cache_key(const ScrapeRequest& req) {
        return sha256_hex(req.query.rendered + "|" + std::to_string(req.n));
    }

    std::filesystem::path entry_dir(const ScrapeRequest& req) const { return dir_ / cache_key(req); }

    ScrapeResult fetch(const ScrapeRequest& req) override {
        req.validate();
        const auto dir = entry_dir(req);
        {
            std::shared_lock lock(mutex_);
            if (auto hit = read_entry(dir)) return *std::move(hit);
        }
        if (!inner_) throw Error(Errc::NoResults, "cache miss for '" + req.query.rendered + "' and no upstream");
        ++inner_calls_;
        auto fresh = inner_->fetch(req);
        std::unique_lock lock(mutex_);
        write_entry(dir, fresh);
        return fresh;
    }

    std::string name() const override { return inner_ ? "cached(" + inner_->name() + ")" : "cached"; }
    std::size_t inner_calls() const noexcept { return inner_calls_.load(); }
    const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    static std::optional<ScrapeResult> read_entry(const std::filesystem::path& dir) {
        const auto manifest_path = dir / "manifest.json";
        if (!std::filesystem::exists(manifest_path)) return std::nullopt;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::slurp(manifest_path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ProviderError, manifest_path.string() + ": " + e.what());
        }
        ScrapeResult out;
        out.manifest = Manifest::from_json(j);
        for (const auto& e : out.manifest.entries) {
            const auto bytes = read_file(dir / e.file);
            if (sha256_hex(bytes) != e.sha256) throw Error(Errc::ProviderError, "hash mismatch in cache file " + e.file);
            out.images.push_back({e.id, decode_gray(bytes)});
        }
        return out;
    }

    void write_entry(const std::filesystem::path& dir, ScrapeResult& result) {
        namespace fs = std::filesystem;
        fs::create_directories(dir_);
        const fs::path tmp = dir_ / (dir.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(tmp_counter_++));
        fs::create_directories(tmp);
        for (std::size_t i = 0; i < result.images.size(); ++i) {
            char file[16];
            std::snprintf(file, sizeof file, "%03zu.png", i);
            const auto bytes = encode_png(result.images[i].image);
            write_file(tmp / file, bytes);
            result.manifest.entries[i].file = file;
            result.manifest.entries[i].sha256 = sha256_hex(bytes);
        }
        const std::string text = result.manifest.to_json().dump(2) + "\n";
        write_file(tmp / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        std::error_code ec;
        fs::remove_all(dir, ec);
        fs::rename(tmp, dir, ec);
        if (ec) {
            fs::remove_all(tmp, ec);
            throw Error(Errc::IoError, "cannot install cache entry " + dir.string());
        }
    }

    std::shared_ptr<ImageProvider> inner_;
    std::filesystem::path dir_;
    std::shared_mutex mutex_;
    std::atomic<std::size_t> inner_calls_{0};
    std::atomic<std::uint64_t> tmp_counter_{0};
};

inline constexpr double kDefaultDedupeThreshold = 0.95;

/// The canonical "generic" result: the seven tans assembled into a square.
inline ImageBuffer bundled_stop_image() { return synth::render(synth::solved_square(), 300); }

namespace detail {

inline bool near_any(const ImageBuffer& img, std::span<const ImageBuffer> refs, double threshold) {
    for (const auto& ref : refs) {
        const ImageBuffer probe =
            (img.width() == ref.width() && img.height() == ref.height()) ? img : resize(img, ref.width(), ref.height());
        if (similarity(MetricKind::UQI, probe, ref) > threshold) return true;
    }
    return false;
}

}  // namespace detail

/// Drops images whose normalized UQI against any stop image (or, when given,
/// any guarded stimulus) exceeds `threshold`. Survivors keep their order.
inline ScrapeResult dedupe_generic(const ScrapeResult& result, std::span<const ImageBuffer> stop_images,
                                   double threshold = kDefaultDedupeThreshold,
                                   std::span<const ImageBuffer> guard = {}) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(Errc::InvalidArgument, "threshold must lie in (0, 1]");
    ScrapeResult out;
    out.manifest = result.manifest;
    out.manifest.entries.clear();
    for (std::size_t i = 0; i < result.images.size(); ++i) {
        const auto& img = result.images[i].image;
        if (detail::near_any(img, stop_images, threshold) || detail::near_any(img, guard, threshold)) continue;
        out.images.push_back(result.images[i]);
        if (i < result.manifest.entries.size()) out.manifest.entries.push_back(result.manifest.entries[i]);
    }
    return out;
}

}  // namespace entrain
