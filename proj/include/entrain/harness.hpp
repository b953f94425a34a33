#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrain/common_ground.hpp"
#include "entrain/corpus.hpp"
#include "entrain/pipeline.hpp"

namespace entrain {

// Published reference figures. Table rows are per tangram A-L.
namespace baseline {

inline constexpr double kHumanTop1 = 20.00;         // table value
inline constexpr double kHumanTop1Caption = 0.0;    // caption: no tangram right after one utterance
inline constexpr double kMachineTop1 = 41.66;
inline constexpr double kMachineTop3 = 63.01;
inline constexpr double kMachineTop5 = 83.56;
inline constexpr double kHumanUtterances = 2.73;
inline constexpr double kMachineUtterances = 1.78;
inline constexpr double kHumanTimeMs = 32411.58;
inline constexpr double kMachineTimeMs = 3.9;

struct TangramRow {
    char tangram;
    double human_time_ms;
    double machine_time_ms;
    double human_utterances;
    double machine_utterances;
};

inline constexpr std::array<TangramRow, 12> kTangrams{{
    {'A', 31737, 1.2, 2.5, 1},
    {'B', 21156, 7.8, 3.75, 1},
    {'C', 15311, 3.3, 2.5, 2.3},
    {'D', 27794, 0.4, 2.4, 1},
    {'E', 16614, 2.9, 2.4, 1},
    {'F', 50496, 14.1, 2.5, 2.3},
    {'G', 21756, 2.1, 2.4, 2.5},
    {'H', 26559, 1.8, 2.4, 1},
    {'I', 37634, 2.4, 2.4, 1},
    {'J', 37392, 2.2, 2.4, 2.3},
    {'K', 60380, 2.9, 4.8, 1},
    {'L', 42110, 5.1, 2.3, 5},
}};

inline std::optional<TangramRow> row_for(const std::string& id) {
    if (id.size() != 1) return std::nullopt;
    for (const auto& r : kTangrams) {
        if (r.tangram == id[0]) return r;
    }
    return std::nullopt;
}

}  // namespace baseline

struct ObjectStats {
    ObjectId object;
    int first_utterances = 0;  // (game, object) pairs seen
    int top1 = 0;
    int top3 = 0;
    int top5 = 0;
    int one_shot = 0;  // first utterance's B was exactly {object}
    double margin_sum = 0.0;  // g(target) - best other g on the first utterance
    int utterances = 0;  // director records naming this object
    int entrained = 0;  // (game, object) pairs whose pact landed
    int utterances_to_entrainment = 0;  // summed over entrained pairs
    int correct_guesses = 0;
    double latency_ms_sum = 0.0;
    int latency_samples = 0;

    bool operator==(const ObjectStats&) const = default;
};

struct GameStats {
    std::string game_id;
    int utterances = 0;
    int entrained_objects = 0;
    bool aborted = false;
    std::string abort_reason;
    bool fully_entrained = false;

    bool operator==(const GameStats&) const = default;
};

struct ReplaySummary {
    double top1 = 0.0;  // percent
    double top3 = 0.0;
    double top5 = 0.0;
    double one_shot_rate = 0.0;  // percent
    double mean_margin = 0.0;
    double mean_utterances = 0.0;  // to entrainment, over entrained pairs
    double mean_latency_ms = 0.0;

    bool operator==(const ReplaySummary&) const = default;
};

struct ReplayReport {
    int schema = 1;
    std::string metric;
    bool aligned = true;
    double epsilon = 0.0;
    int n_images = 0;
    int records = 0;
    int empty_content = 0;
    int no_evidence = 0;
    int contradictions = 0;
    int aborted_games = 0;
    std::vector<GameStats> games;
    std::vector<ObjectStats> objects;  // sorted by id
    ReplaySummary summary;

    bool operator==(const ReplayReport&) const = default;
};

inline ReplaySummary summarize(const std::vector<ObjectStats>& objects) {
    int first = 0, t1 = 0, t3 = 0, t5 = 0, shot = 0, ent = 0, utt = 0, lat_n = 0;
    double margin = 0.0, lat = 0.0;
    for (const auto& o : objects) {
        first += o.first_utterances;
        t1 += o.top1;
        t3 += o.top3;
        t5 += o.top5;
        shot += o.one_shot;
        margin += o.margin_sum;
        ent += o.entrained;
        utt += o.utterances_to_entrainment;
        lat += o.latency_ms_sum;
        lat_n += o.latency_samples;
    }
    ReplaySummary s;
    if (first > 0) {
        s.top1 = 100.0 * t1 / first;
        s.top3 = 100.0 * t3 / first;
        s.top5 = 100.0 * t5 / first;
        s.one_shot_rate = 100.0 * shot / first;
        s.mean_margin = margin / first;
    }
    if (ent > 0) s.mean_utterances = static_cast<double>(utt) / ent;
    if (lat_n > 0) s.mean_latency_ms = lat / lat_n;
    return s;
}

namespace detail {

struct FirstTouch {
    bool hit1 = false, hit3 = false, hit5 = false, one_shot = false;
    double margin = 0.0;
};

inline FirstTouch first_utterance_stats(const Scores& scores, const std::set<ObjectId>& b, const ObjectId& target,
                                        double temperature) {
    FirstTouch f;
    if (scores.empty() || !scores.contains(target)) return f;
    const auto dist = softmax_hypotheses(scores, temperature, std::min<std::size_t>(5, scores.size()));
    for (std::size_t i = 0; i < dist.entries.size(); ++i) {
        if (dist.entries[i].object != target) continue;
        f.hit1 = i < 1;
        f.hit3 = i < 3;
        f.hit5 = i < 5;
    }
    f.one_shot = b.size() == 1 && *b.begin() == target;
    double other = -std::numeric_limits<double>::infinity();
    for (const auto& [o, g] : scores) {
        if (o != target) other = std::max(other, g);
    }
    f.margin = std::isfinite(other) ? scores.at(target) - other : 0.0;
    return f;
}

}  // namespace detail

/// Replays director records game by game (sorted by game id, then time).
/// Top-k counts use the first utterance per (game, object); utterances are
/// counted per object until a Gamma pact binds it to the utterance's referent.
inline ReplayReport replay(const std::vector<CorpusRecord>& records, const Pipeline& p) {
    p.config.validate();
    ReplayReport rep;
    rep.metric = std::string(to_string(p.config.scoring.metric));
    rep.aligned = p.config.scoring.align;
    rep.epsilon = p.config.epsilon;
    rep.n_images = p.config.n_images;

    Pipeline local = p;
    if (!local.config.scoring.cache && local.config.scoring.align) {
        local.config.scoring.cache = std::make_shared<ScoringCache>();
    }
    const auto objects = local.object_ids();
    std::map<ObjectId, ObjectStats> stats;
    for (const auto& o : objects) stats[o].object = o;

    std::map<std::string, std::vector<const CorpusRecord*>> games;
    for (const auto& r : records) {
        if (r.speaker == Speaker::Director) games[r.game_id].push_back(&r);
    }
    for (auto& [gid, list] : games) {
        std::stable_sort(list.begin(), list.end(),
                         [](const CorpusRecord* a, const CorpusRecord* b) { return a->timestamp_ms < b->timestamp_ms; });
        GameStats game;
        game.game_id = gid;
        CommonGroundContext ctx(objects);
        std::set<ObjectId> seen, landed;
        std::map<ObjectId, int> count;
        for (const CorpusRecord* rec : list) {
            ++rep.records;
            ++game.utterances;
            const ObjectId& target = rec->intended_target;
            const bool known = objects.contains(target);
            const bool first = known && seen.insert(target).second;
            if (known) {
                ++stats[target].utterances;
                if (!landed.contains(target)) ++count[target];
            }
            if (first) ++stats[target].first_utterances;

            Query q;
            try {
                q = utterance_to_query(rec->utterance(), local.language);
            } catch (const Error& e) {
                if (e.code() != Errc::EmptyContent && e.code() != Errc::EmptyQuery) throw;
                ++rep.empty_content;
                continue;
            }
            ReferentId r = canonical_key(q.tokens);
            const auto t0 = std::chrono::steady_clock::now();
            double fetch_free_ms = 0.0;
            GuessOutcome guess;
            if (auto bound = ctx.bound_object(r)) {
                guess = {*bound, GuessSource::Gamma};
            } else {
                Evidence ev;
                try {
                    ev = gather_evidence(local, q);
                } catch (const Error& e) {
                    if (e.code() != Errc::ProviderError) throw;
                    game.aborted = true;
                    game.abort_reason = e.what();
                    break;
                }
                const auto t1 = std::chrono::steady_clock::now();
                if (ev.scores.empty()) ++rep.no_evidence;
                const auto b = decide(ev, ctx, local.config);
                if (first) {
                    const auto f = detail::first_utterance_stats(ev.scores, b, target, local.config.temperature);
                    auto& s = stats[target];
                    s.top1 += f.hit1;
                    s.top3 += f.hit3;
                    s.top5 += f.hit5;
                    s.one_shot += f.one_shot;
                    s.margin_sum += f.margin;
                }
                UpdateOutcome out;
                try {
                    out = apply_update_with_policy(ctx, r, b, local.config.contradiction);
                } catch (const Error& e) {
                    if (e.code() != Errc::Contradiction) throw;
                    ++rep.contradictions;
                    game.aborted = true;
                    game.abort_reason = e.what();
                    break;
                }
                if (out.contradiction) ++rep.contradictions;
                ctx = std::move(out.context);
                r = out.referent;
                guess = resolve_guess(ctx, r, ev.scores.empty() ? std::nullopt : std::optional<Scores>(ev.scores));
                fetch_free_ms = ev.compute_ms + std::chrono::duration<double, std::milli>(
                                                    std::chrono::steady_clock::now() - t1).count();
            }
            if (local.config.measure_latency && known) {
                if (fetch_free_ms == 0.0) {
                    fetch_free_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                }
                stats[target].latency_ms_sum += fetch_free_ms;
                ++stats[target].latency_samples;
            }
            if (!known) continue;
            if (guess.object && *guess.object == target) ++stats[target].correct_guesses;
            if (!landed.contains(target) && ctx.bound_object(r) == target) {
                landed.insert(target);
                ++stats[target].entrained;
                stats[target].utterances_to_entrainment += count[target];
                ++game.entrained_objects;
            }
        }
        game.fully_entrained = is_entrained(ctx);
        if (game.aborted) ++rep.aborted_games;
        rep.games.push_back(std::move(game));
    }
    for (auto& [o, s] : stats) rep.objects.push_back(s);
    rep.summary = summarize(rep.objects);
    return rep;
}

// --- baseline comparison -------------------------------------------------

struct ComparisonRow {
    std::string measure;
    std::string reference;  // which published figure
    double value = 0.0;     // this run
    double reference_value = 0.0;
    std::optional<double> ratio;  // value / reference, absent when the reference is 0
};

inline std::optional<double> safe_ratio(double a, double b) {
    if (b == 0.0) return std::nullopt;
    return a / b;
}

inline std::vector<ComparisonRow> compare_to_baseline(const ReplaySummary& s) {
    using namespace baseline;
    std::vector<ComparisonRow> rows;
    auto add = [&](std::string m, std::string ref, double v, double rv) {
        rows.push_back({std::move(m), std::move(ref), v, rv, safe_ratio(v, rv)});
    };
    add("top1_percent", "human (table)", s.top1, kHumanTop1);
    add("top1_percent", "human (caption)", s.top1, kHumanTop1Caption);
    add("top1_percent", "published matcher", s.top1, kMachineTop1);
    add("top3_percent", "published matcher", s.top3, kMachineTop3);
    add("top5_percent", "published matcher", s.top5, kMachineTop5);
    add("mean_utterances", "human", s.mean_utterances, kHumanUtterances);
    add("mean_utterances", "published matcher", s.mean_utterances, kMachineUtterances);
    add("mean_latency_ms", "human", s.mean_latency_ms, kHumanTimeMs);
    add("mean_latency_ms", "published matcher", s.mean_latency_ms, kMachineTimeMs);
    return rows;
}

inline std::vector<ComparisonRow> compare_to_baseline(const ReplayReport& r) { return compare_to_baseline(r.summary); }

/// The published matcher against the published human figures.
inline std::vector<ComparisonRow> published_ratios() {
    ReplaySummary s;
    s.top1 = baseline::kMachineTop1;
    s.top3 = baseline::kMachineTop3;
    s.top5 = baseline::kMachineTop5;
    s.mean_utterances = baseline::kMachineUtterances;
    s.mean_latency_ms = baseline::kMachineTimeMs;
    return compare_to_baseline(s);
}

// --- report serialization ------------------------------------------------

enum class ReportFormat { Json, Csv, Text };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "text" || s == "txt") return ReportFormat::Text;
    throw Error(Errc::InvalidArgument, "report format must be json, csv or text");
}

inline nlohmann::ordered_json summary_json(const ReplaySummary& s) {
    return {{"top1", s.top1},
            {"top3", s.top3},
            {"top5", s.top5},
            {"one_shot_rate", s.one_shot_rate},
            {"mean_margin", s.mean_margin},
            {"mean_utterances_to_entrainment", s.mean_utterances},
            {"mean_latency_ms", s.mean_latency_ms}};
}

inline nlohmann::ordered_json report_json(const ReplayReport& r) {
    nlohmann::ordered_json games = nlohmann::ordered_json::array();
    for (const auto& g : r.games) {
        games.push_back({{"game_id", g.game_id},
                         {"utterances", g.utterances},
                         {"entrained_objects", g.entrained_objects},
                         {"fully_entrained", g.fully_entrained},
                         {"aborted", g.aborted},
                         {"abort_reason", g.abort_reason}});
    }
    nlohmann::ordered_json objects = nlohmann::ordered_json::array();
    for (const auto& o : r.objects) {
        objects.push_back({{"object", o.object},
                           {"first_utterances", o.first_utterances},
                           {"top1", o.top1},
                           {"top3", o.top3},
                           {"top5", o.top5},
                           {"one_shot", o.one_shot},
                           {"margin_sum", o.margin_sum},
                           {"utterances", o.utterances},
                           {"entrained", o.entrained},
                           {"utterances_to_entrainment", o.utterances_to_entrainment},
                           {"correct_guesses", o.correct_guesses},
                           {"latency_ms_sum", o.latency_ms_sum},
                           {"latency_samples", o.latency_samples}});
    }
    nlohmann::ordered_json cmp = nlohmann::ordered_json::array();
    for (const auto& c : compare_to_baseline(r)) {
        cmp.push_back({{"measure", c.measure},
                       {"reference", c.reference},
                       {"value", c.value},
                       {"reference_value", c.reference_value},
                       {"ratio", c.ratio ? nlohmann::ordered_json(*c.ratio) : nlohmann::ordered_json(nullptr)}});
    }
    return {{"schema", r.schema},
            {"config", {{"metric", r.metric}, {"aligned", r.aligned}, {"epsilon", r.epsilon}, {"n_images", r.n_images}}},
            {"records", r.records},
            {"empty_content", r.empty_content},
            {"no_evidence", r.no_evidence},
            {"contradictions", r.contradictions},
            {"aborted_games", r.aborted_games},
            {"summary", summary_json(r.summary)},
            {"objects", objects},
            {"games", games},
            {"baseline", cmp}};
}

/// Inverse of report_json; the derived "baseline" block is ignored.
inline ReplayReport report_from_json(const nlohmann::json& j) {
    try {
        ReplayReport r;
        r.schema = j.at("schema").get<int>();
        if (r.schema != 1) throw Error(Errc::InvalidArgument, "unsupported report schema " + std::to_string(r.schema));
        const auto& c = j.at("config");
        r.metric = c.at("metric").get<std::string>();
        r.aligned = c.at("aligned").get<bool>();
        r.epsilon = c.at("epsilon").get<double>();
        r.n_images = c.at("n_images").get<int>();
        r.records = j.at("records").get<int>();
        r.empty_content = j.at("empty_content").get<int>();
        r.no_evidence = j.at("no_evidence").get<int>();
        r.contradictions = j.at("contradictions").get<int>();
        r.aborted_games = j.at("aborted_games").get<int>();
        const auto& s = j.at("summary");
        r.summary = {s.at("top1").get<double>(),          s.at("top3").get<double>(),
                     s.at("top5").get<double>(),          s.at("one_shot_rate").get<double>(),
                     s.at("mean_margin").get<double>(),   s.at("mean_utterances_to_entrainment").get<double>(),
                     s.at("mean_latency_ms").get<double>()};
        for (const auto& o : j.at("objects")) {
            ObjectStats x;
            x.object = o.at("object").get<std::string>();
            x.first_utterances = o.at("first_utterances").get<int>();
            x.top1 = o.at("top1").get<int>();
            x.top3 = o.at("top3").get<int>();
            x.top5 = o.at("top5").get<int>();
            x.one_shot = o.at("one_shot").get<int>();
            x.margin_sum = o.at("margin_sum").get<double>();
            x.utterances = o.at("utterances").get<int>();
            x.entrained = o.at("entrained").get<int>();
            x.utterances_to_entrainment = o.at("utterances_to_entrainment").get<int>();
            x.correct_guesses = o.at("correct_guesses").get<int>();
            x.latency_ms_sum = o.at("latency_ms_sum").get<double>();
            x.latency_samples = o.at("latency_samples").get<int>();
            r.objects.push_back(std::move(x));
        }
        for (const auto& g : j.at("games")) {
            r.games.push_back({g.at("game_id").get<std::string>(), g.at("utterances").get<int>(),
                               g.at("entrained_objects").get<int>(), g.at("aborted").get<bool>(),
                               g.at("abort_reason").get<std::string>(), g.at("fully_entrained").get<bool>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("malformed report: ") + e.what());
    }
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

inline std::string pct(int hits, int total) { return total > 0 ? fixed(100.0 * hits / total) : ""; }

}  // namespace detail

/// One row per object plus an Average row; published per-tangram figures sit
/// alongside when the object id is one of A-L.
inline std::string report_csv(const ReplayReport& r) {
    using detail::fixed;
    std::ostringstream out;
    out << "tangram,first_utterances,top1,top3,top5,mean_utterances_to_entrainment,mean_latency_ms,"
           "published_human_time_ms,published_machine_time_ms,published_human_utterances,"
           "published_machine_utterances\n";
    for (const auto& o : r.objects) {
        out << csv_escape(o.object) << ',' << o.first_utterances << ',' << detail::pct(o.top1, o.first_utterances) << ','
            << detail::pct(o.top3, o.first_utterances) << ',' << detail::pct(o.top5, o.first_utterances) << ','
            << (o.entrained ? fixed(static_cast<double>(o.utterances_to_entrainment) / o.entrained) : "") << ','
            << (o.latency_samples ? fixed(o.latency_ms_sum / o.latency_samples, 3) : "") << ',';
        if (auto b = baseline::row_for(o.object)) {
            out << fixed(b->human_time_ms, 0) << ',' << fixed(b->machine_time_ms, 1) << ',' << b->human_utterances
                << ',' << b->machine_utterances;
        } else {
            out << ",,,";
        }
        out << '\n';
    }
    int first = 0;
    for (const auto& o : r.objects) first += o.first_utterances;
    const auto& s = r.summary;
    out << "Average," << first << ',' << fixed(s.top1) << ',' << fixed(s.top3) << ',' << fixed(s.top5) << ','
        << fixed(s.mean_utterances) << ',' << fixed(s.mean_latency_ms, 3) << ',' << fixed(baseline::kHumanTimeMs)
        << ',' << fixed(baseline::kMachineTimeMs, 1) << ',' << fixed(baseline::kHumanUtterances) << ','
        << fixed(baseline::kMachineUtterances) << '\n';
    return out.str();
}

inline std::string report_text(const ReplayReport& r) {
    using detail::fixed;
    std::ostringstream out;
    const auto& s = r.summary;
    out << "Replay: metric=" << r.metric << " aligned=" << (r.aligned ? "yes" : "no") << " epsilon=" << r.epsilon
        << " n_images=" << r.n_images << "\n";
    out << "records=" << r.records << " games=" << r.games.size() << " aborted=" << r.aborted_games
        << " empty_content=" << r.empty_content << " no_evidence=" << r.no_evidence
        << " contradictions=" << r.contradictions << "\n\n";
    out << "Top-k accuracy, first utterance per object (%)\n";
    out << "                      top-1    top-3    top-5\n";
    out << "  human (table)       " << fixed(baseline::kHumanTop1) << "    N/A      N/A\n";
    out << "  human (caption)     " << fixed(baseline::kHumanTop1Caption) << "     N/A      N/A\n";
    out << "  published matcher   " << fixed(baseline::kMachineTop1) << "    " << fixed(baseline::kMachineTop3)
        << "    " << fixed(baseline::kMachineTop5) << "\n";
    out << "  this run            " << std::setw(6) << fixed(s.top1) << "   " << std::setw(6) << fixed(s.top3) << "   "
        << std::setw(6) << fixed(s.top5) << "\n\n";
    out << "one-shot entrainment " << fixed(s.one_shot_rate) << "%, mean margin " << fixed(s.mean_margin, 4) << "\n";
    out << "mean utterances to entrainment " << fixed(s.mean_utterances) << ", mean latency "
        << fixed(s.mean_latency_ms, 3) << " ms\n\n";
    out << "Per object\n";
    out << "  object  first  top1  top3  top5  entrained  utt/entrain  latency_ms\n";
    for (const auto& o : r.objects) {
        out << "  " << std::left << std::setw(6) << o.object << std::right << std::setw(7) << o.first_utterances
            << std::setw(6) << o.top1 << std::setw(6) << o.top3 << std::setw(6) << o.top5 << std::setw(11)
            << o.entrained << std::setw(13)
            << (o.entrained ? fixed(static_cast<double>(o.utterances_to_entrainment) / o.entrained) : "-")
            << std::setw(12) << (o.latency_samples ? fixed(o.latency_ms_sum / o.latency_samples, 3) : "-") << "\n";
    }
    out << "\nAgainst published figures\n";
    for (const auto& c : compare_to_baseline(r)) {
        out << "  " << std::left << std::setw(17) << c.measure << std::setw(20) << c.reference << std::right
            << std::setw(12) << fixed(c.value, 3) << std::setw(12) << fixed(c.reference_value, 3) << "  ratio "
            << (c.ratio ? fixed(*c.ratio, 3) : "n/a") << "\n";
    }
    return out.str();
}

inline std::string emit_report(const ReplayReport& r, ReportFormat f) {
    switch (f) {
        case ReportFormat::Json: return report_json(r).dump(2) + "\n";
        case ReportFormat::Csv: return report_csv(r);
        case ReportFormat::Text: return report_text(r);
    }
    return {};
}

inline void write_report(const ReplayReport& r, ReportFormat f, const std::filesystem::path& path) {
    const auto text = emit_report(r, f);
    try {
        write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    } catch (const Error& e) {
        throw Error(Errc::IoError, e.what());
    }
}

// --- metric sweep --------------------------------------------------------

struct SweepCell {
    MetricKind metric = MetricKind::UQI;
    bool aligned = true;
    ReplaySummary summary;
    int rank = 0;  // 1 = best
};

struct SweepResult {
    std::vector<SweepCell> cells;  // ranked, best first
    double advantage_abs = 0.0;  // top-1 points of the winner over the runner-up
    std::optional<double> advantage_rel;  // same, relative to the runner-up
};

/// Ranking key: one-shot entrainment, then top-1, top-3, top-5, then margin.
inline bool ranks_before(const SweepCell& a, const SweepCell& b) {
    const auto key = [](const SweepCell& c) {
        return std::tuple{c.summary.one_shot_rate, c.summary.top1, c.summary.top3, c.summary.top5, c.summary.mean_margin};
    };
    return key(a) > key(b);
}

inline SweepResult sweep(const std::vector<CorpusRecord>& records, const Pipeline& base,
                         const std::vector<MetricKind>& metrics = {kAllMetrics.begin(), kAllMetrics.end()},
                         const std::vector<bool>& aligns = {true, false}) {
    Pipeline p = base;
    p.config.measure_latency = false;
    if (!p.config.scoring.cache) p.config.scoring.cache = std::make_shared<ScoringCache>();
    SweepResult out;
    for (MetricKind m : metrics) {
        for (bool a : aligns) {
            p.config.scoring.metric = m;
            p.config.scoring.align = a;
            out.cells.push_back({m, a, replay(records, p).summary, 0});
        }
    }
    std::stable_sort(out.cells.begin(), out.cells.end(), ranks_before);
    for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i].rank = static_cast<int>(i) + 1;
    if (out.cells.size() >= 2) {
        out.advantage_abs = out.cells[0].summary.top1 - out.cells[1].summary.top1;
        out.advantage_rel = safe_ratio(out.advantage_abs, out.cells[1].summary.top1);
    }
    return out;
}

inline std::string sweep_csv(const SweepResult& s) {
    std::ostringstream out;
    out.precision(10);
    out << "rank,metric,aligned,one_shot_rate,top1,top3,top5,mean_margin,mean_utterances\n";
    for (const auto& c : s.cells) {
        out << c.rank << ',' << to_string(c.metric) << ',' << (c.aligned ? "on" : "off") << ','
            << c.summary.one_shot_rate << ',' << c.summary.top1 << ',' << c.summary.top3 << ',' << c.summary.top5 << ','
            << c.summary.mean_margin << ',' << c.summary.mean_utterances << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json sweep_json(const SweepResult& s) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : s.cells) {
        cells.push_back({{"rank", c.rank},
                         {"metric", std::string(to_string(c.metric))},
                         {"aligned", c.aligned},
                         {"summary", summary_json(c.summary)}});
    }
    return {{"schema", 1},
            {"cells", cells},
            {"winner_top1_advantage_abs", s.advantage_abs},
            {"winner_top1_advantage_rel",
             s.advantage_rel ? nlohmann::ordered_json(*s.advantage_rel) : nlohmann::ordered_json(nullptr)}};
}

inline std::string sweep_text(const SweepResult& s) {
    using detail::fixed;
    std::ostringstream out;
    out << "rank  metric  align  one-shot   top-1   top-3   top-5   margin\n";
    for (const auto& c : s.cells) {
        out << std::setw(4) << c.rank << "  " << std::left << std::setw(6) << to_string(c.metric) << "  "
            << std::setw(5) << (c.aligned ? "on" : "off") << std::right << std::setw(9) << fixed(c.summary.one_shot_rate)
            << std::setw(8) << fixed(c.summary.top1) << std::setw(8) << fixed(c.summary.top3) << std::setw(8)
            << fixed(c.summary.top5) << std::setw(9) << fixed(c.summary.mean_margin, 4) << "\n";
    }
    out << "winner top-1 advantage: " << fixed(s.advantage_abs) << " points absolute";
    if (s.advantage_rel) out << ", " << fixed(100.0 * *s.advantage_rel) << "% relative";
    out << "\n";
    return out.str();
}

}  // namespace entrain
