#pragma once

// Generic image-search REST provider: GET <endpoint>?<query_param>=..&<count_param>=n,
// pull image URLs out of the JSON reply via `results_path`, download and decode.
// HTTPS needs CPPHTTPLIB_OPENSSL_SUPPORT defined before this header.

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "entrain/config.hpp"
#include "entrain/image_source.hpp"

namespace entrain {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // starts with '/', may include a query string
};

inline Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::InvalidConfig, "not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// Walks a dotted path where `name[]` fans out over an array, e.g. "value[].contentUrl".
inline std::vector<std::string> extract_strings(const nlohmann::json& root, const std::string& path) {
    std::vector<const nlohmann::json*> frontier{&root};
    std::size_t pos = 0;
    while (pos <= path.size() && !frontier.empty()) {
        const auto dot = path.find('.', pos);
        std::string seg = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        pos = dot == std::string::npos ? path.size() + 1 : dot + 1;
        if (seg.empty()) continue;
        const bool fan = seg.size() > 2 && seg.ends_with("[]");
        if (fan) seg.resize(seg.size() - 2);
        std::vector<const nlohmann::json*> next;
        for (const auto* node : frontier) {
            if (!node->is_object() || !node->contains(seg)) continue;
            const auto& child = (*node)[seg];
            if (fan) {
                if (!child.is_array()) continue;
                for (const auto& item : child) next.push_back(&item);
            } else {
                next.push_back(&child);
            }
        }
        frontier = std::move(next);
    }
    std::vector<std::string> out;
    for (const auto* node : frontier) {
        if (node->is_string()) out.push_back(node->get<std::string>());
    }
    return out;
}

class HttpProvider : public ImageProvider {
public:
    explicit HttpProvider(HttpSettings s) : s_(std::move(s)) {
        if (s_.endpoint.empty()) throw Error(Errc::InvalidConfig, "http.endpoint is not set");
        if (!(s_.rate_limit_per_sec > 0.0)) throw Error(Errc::InvalidConfig, "http.rate_limit_per_sec must be positive");
        if (s_.retries < 0) throw Error(Errc::InvalidConfig, "http.retries must be >= 0");
        if (!s_.api_key_env.empty()) {
            if (const char* v = std::getenv(s_.api_key_env.c_str())) api_key_ = v;
        }
    }

    ScrapeResult fetch(const ScrapeRequest& req) override {
        req.validate();
        const Url base = split_url(s_.endpoint);
        httplib::Params params{{s_.query_param, req.query.rendered}, {s_.count_param, std::to_string(req.n)}};
        const std::string path = httplib::append_query_params(base.path, params);
        const auto body = get(base.origin, path, true);
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ProviderError, std::string("search reply is not JSON: ") + e.what());
        }
        const auto urls = extract_strings(reply, s_.results_path);
        if (urls.empty()) throw Error(Errc::NoResults, "search returned no results for '" + req.query.rendered + "'");
        std::vector<LabeledImage> images;
        for (const auto& url : urls) {
            if (static_cast<int>(images.size()) >= req.n) break;
            try {
                const Url u = split_url(url);
                const auto bytes = get(u.origin, u.path, false);
                auto img = decode_gray(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
                images.push_back({sha256_hex(url).substr(0, 16), std::move(img)});
            } catch (const Error&) {
                // Undecodable or unreachable result: skip to the next URL.
            }
        }
        if (images.empty()) throw Error(Errc::ProviderError, "no decodable images among " + std::to_string(urls.size()) + " results");
        return detail::make_result(req, name(), std::move(images));
    }

    std::string name() const override { return "http"; }

private:
    void throttle() {
        std::lock_guard lock(mutex_);
        const auto gap = std::chrono::duration<double>(1.0 / s_.rate_limit_per_sec);
        const auto now = std::chrono::steady_clock::now();
        if (last_ && now - *last_ < gap) std::this_thread::sleep_for(gap - (now - *last_));
        last_ = std::chrono::steady_clock::now();
    }

    std::string get(const std::string& origin, const std::string& path, bool with_key) {
        std::string last_error;
        for (int attempt = 0; attempt <= s_.retries; ++attempt) {
            throttle();
            httplib::Client cli(origin);
            cli.set_follow_location(true);
            cli.set_connection_timeout(s_.timeout_sec);
            cli.set_read_timeout(s_.timeout_sec);
            httplib::Headers headers;
            if (with_key && !api_key_.empty()) headers.emplace(s_.api_key_header, api_key_);
            auto res = cli.Get(path, headers);
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) return res->body;
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
        }
        throw Error(Errc::ProviderError, origin + path + ": " + last_error);
    }

    HttpSettings s_;
    std::string api_key_;
    std::mutex mutex_;
    std::optional<std::chrono::steady_clock::time_point> last_;
};

}  // namespace entrain
