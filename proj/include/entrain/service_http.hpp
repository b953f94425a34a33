#pragma once

#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "entrain/service.hpp"

namespace entrain {

inline int http_status(Errc code) {
    switch (code) {
        case Errc::SessionNotFound:
        case Errc::UnknownPack: return 404;
        case Errc::NoOutstandingGuess:
        case Errc::Contradiction: return 409;
        case Errc::EmptyContent:
        case Errc::EmptyQuery:
        case Errc::InvalidArgument: return 400;
        case Errc::NoResults: return 404;
        case Errc::ProviderError: return 502;
        default: return 500;
    }
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

inline nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
        auto j = nlohmann::json::parse(req.body);
        if (!j.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "InvalidArgument", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        }
    };
}

inline std::string required_string(const nlohmann::json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string()) {
        throw Error(Errc::InvalidArgument, std::string("missing string field '") + key + "'");
    }
    return body[key].get<std::string>();
}

}  // namespace detail

/// Registers the session API on `server`.
inline void mount_service(httplib::Server& server, SessionManager& sessions, const std::string& cors_origin = "*") {
    using namespace detail;
    server.set_post_routing_handler([cors_origin](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        const std::string pack = body.value("pack", std::string("default"));
        std::optional<std::uint64_t> seed;
        if (body.contains("seed") && !body["seed"].is_null()) {
            if (!body["seed"].is_number_integer()) throw Error(Errc::InvalidArgument, "seed must be an integer");
            seed = body["seed"].get<std::uint64_t>();
        }
        send_json(res, 201, sessions.create_session(pack, seed));
    }));

    server.Post(R"(/sessions/([^/]+)/utterances)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        send_json(res, 200, sessions.post_utterance(req.matches[1], required_string(body, "text")));
    }));

    server.Post(R"(/sessions/([^/]+)/feedback)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        send_json(res, 200,
                  sessions.post_feedback(req.matches[1], required_string(body, "referent"),
                                         required_string(body, "verdict")));
    }));

    // Reserved: matcher-initiated clarifying questions.
    server.Post(R"(/sessions/([^/]+)/questions)", guarded([](const httplib::Request&, httplib::Response& res) {
        send_error(res, 501, "NotImplemented", "clarifying questions are not implemented");
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, sessions.get_state(req.matches[1]));
    }));

    server.Get(R"(/stimuli/([^/]+)/([^/]+)\.png)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
        const auto& pack = sessions.pack(req.matches[1]);
        const std::string id = req.matches[2];
        for (const auto& s : pack.stimuli) {
            if (s.id != id) continue;
            const auto png = encode_png(s.image);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
            return;
        }
        throw Error(Errc::UnknownPack, "no stimulus '" + id + "' in pack '" + pack.name + "'");
    }));
}

}  // namespace entrain
