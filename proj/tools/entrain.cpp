#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entrain/config.hpp"
#include "entrain/corpus.hpp"
#include "entrain/debug.hpp"
#include "entrain/fixtures.hpp"
#include "entrain/harness.hpp"
#include "entrain/service_http.hpp"
#include "entrain/setup.hpp"

namespace fs = std::filesystem;
using namespace entrain;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string provider;
    std::string fixtures;
    std::string stimuli;
    std::string cache_dir;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "flat key = value configuration file")->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "override a configuration key (key=value), repeatable");
        app->add_option("--provider", provider, "fixture | cache | http");
        app->add_option("--fixtures", fixtures, "fixture directory containing fixtures.json");
        app->add_option("--stimuli", stimuli, "directory of stimulus PNGs");
        app->add_option("--cache-dir", cache_dir, "scrape cache directory");
    }

    PipelineConfig resolve() const {
        KeyValues kv;
        if (!config.empty()) {
            kv = KeyValues::load(config);
            // Relative paths inside a config file are taken relative to that file.
            const auto base = fs::absolute(config).parent_path();
            for (const char* key : {"fixture_dir", "stimuli", "cache_dir", "stoplist", "lexicon", "service.snapshot"}) {
                if (auto v = kv.get(key); v && !v->empty() && fs::path(*v).is_relative()) {
                    kv.set(key, (base / *v).string());
                }
            }
        }
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw Error(Errc::InvalidConfig, "--set expects key=value, got '" + o + "'");
            kv.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (!provider.empty()) kv.set("provider", provider);
        if (!fixtures.empty()) kv.set("fixture_dir", fixtures);
        if (!stimuli.empty()) kv.set("stimuli", stimuli);
        if (!cache_dir.empty()) kv.set("cache_dir", cache_dir);
        return apply_config(kv);
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ReportFormat format_for(const std::string& explicit_format, const std::string& path) {
    if (!explicit_format.empty()) return report_format_from_string(explicit_format);
    const auto ext = fs::path(path).extension().string();
    if (ext == ".csv") return ReportFormat::Csv;
    if (ext == ".txt") return ReportFormat::Text;
    return ReportFormat::Json;
}

std::vector<CorpusRecord> read_corpus(const std::string& path, const PipelineConfig& c) {
    auto load = load_corpus(path, c.columns, c.strict_corpus);
    for (const auto& msg : load.skipped) std::cerr << "skipped " << msg << "\n";
    return std::move(load.records);
}

int run_replay(const Common& common, const std::string& corpus, const std::string& report, const std::string& format) {
    const auto cfg = common.resolve();
    const auto pipe = make_pipeline(cfg);
    const auto records = read_corpus(corpus, cfg);
    const auto rep = replay(records, pipe);
    if (!report.empty()) write_text(report, emit_report(rep, format_for(format, report)));
    std::cout << emit_report(rep, ReportFormat::Text);
    return rep.aborted_games > 0 ? 3 : 0;
}

int run_match(const Common& common, const std::string& text, const std::string& scores_path,
              const std::string& dump_dir) {
    const auto cfg = common.resolve();
    Pipeline pipe = make_pipeline(cfg);
    const Query q = utterance_to_query({text}, pipe.language);
    std::cout << "query: " << q.rendered << "\n";
    const auto fetched = pipe.provider->fetch({q, cfg.n_images});
    ScrapeResult prepared = fetched;
    for (auto& li : prepared.images) li.image = prepare_scraped(li.image);
    const auto kept = dedupe_generic(prepared, pipe.stop_images, cfg.dedupe_threshold);
    std::cout << "images: " << fetched.images.size() << " fetched, " << kept.images.size() << " after dedupe\n";
    if (kept.images.empty()) {
        std::cout << "no evidence: wait\n";
        return 0;
    }
    ScoringConfig sc = cfg.scoring;
    sc.cache = std::make_shared<ScoringCache>();
    const auto matrix = score_matrix(pipe.stimuli, kept.images, sc);
    const auto g = matrix.aggregate(sc);
    if (!scores_path.empty()) {
        write_text(scores_path, fs::path(scores_path).extension() == ".json" ? matrix.to_json().dump(2) + "\n"
                                                                             : matrix.to_csv());
    }
    CommonGroundContext ctx(pipe.object_ids());
    const auto b = derive_bindings(g, cfg.epsilon, &ctx);
    const auto dist = softmax_hypotheses(g, cfg.temperature, std::min<std::size_t>(cfg.k, g.size()));
    std::cout << "bindings (g > " << cfg.epsilon << "):";
    for (const auto& o : b) std::cout << ' ' << o;
    std::cout << "\ntop-" << dist.entries.size() << ":";
    for (const auto& h : dist.entries) std::cout << ' ' << h.object << '=' << h.probability;
    const auto guess = resolve_guess(apply_update(ctx, canonical_key(q.tokens), b), canonical_key(q.tokens), g);
    std::cout << "\nguess: " << (guess.object ? *guess.object : std::string("wait")) << " ("
              << to_string(guess.source) << ")\n";
    if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        const auto best = dist.top();
        const auto& stim = *std::find_if(pipe.stimuli.begin(), pipe.stimuli.end(),
                                         [&](const LabeledImage& s) { return best && s.id == *best; });
        for (const auto& li : kept.images) {
            const auto src = resize(li.image, stim.image.width(), stim.image.height());
            for (int pol = 0; pol < 2; ++pol) {
                const auto ov = match_overlay(pol ? invert(src) : src, stim.image, cfg.scoring.sift);
                const auto file = fs::path(dump_dir) / (li.id + (pol ? "_inverted" : "") + "_vs_" + stim.id + ".png");
                write_file(file, encode_png_rgb(ov.image));
                std::cout << "  " << file.string() << ": " << ov.matches << " matches, " << ov.inliers << " inliers\n";
            }
        }
    }
    return 0;
}

int run_scrape_cache(const Common& common, const std::string& corpus) {
    auto cfg = common.resolve();
    std::shared_ptr<ImageProvider> upstream;
    if (cfg.provider == "fixture") {
        upstream = std::make_shared<CachedProvider>(make_provider(cfg), cfg.cache_dir);
    } else {
        upstream = make_provider(cfg);
    }
    LanguageModel lm;
    if (!cfg.stoplist.empty()) lm.stoplist = Stoplist::load(cfg.stoplist);
    if (!cfg.lexicon.empty()) lm.lexicon = Lexicon::load(cfg.lexicon);
    lm.cue = cfg.cue;
    std::set<std::string> done;
    int ok = 0, failed = 0, skipped = 0;
    for (const auto& rec : read_corpus(corpus, cfg)) {
        Query q;
        try {
            q = utterance_to_query(rec.utterance(), lm);
        } catch (const Error&) {
            ++skipped;
            continue;
        }
        if (!done.insert(q.rendered).second) continue;
        try {
            upstream->fetch({q, cfg.n_images});
            ++ok;
        } catch (const Error& e) {
            ++failed;
            std::cerr << q.rendered << ": " << e.what() << "\n";
        }
    }
    std::cout << "cached " << ok << " queries, " << failed << " failed, " << skipped << " without content\n";
    return failed > 0 ? 3 : 0;
}

int run_sweep(const Common& common, const std::string& corpus, const std::string& metrics,
              const std::string& aligns, const std::string& out) {
    const auto cfg = common.resolve();
    const auto pipe = make_pipeline(cfg);
    std::vector<MetricKind> ms;
    for (const auto& m : detail::split_list(metrics)) ms.push_back(metric_from_string(m));
    std::vector<bool> as;
    for (const auto& a : detail::split_list(aligns)) as.push_back(detail::to_bool("--align", a));
    const auto result = sweep(read_corpus(corpus, cfg), pipe, ms, as);
    if (!out.empty()) {
        write_text(out, fs::path(out).extension() == ".json" ? sweep_json(result).dump(2) + "\n" : sweep_csv(result));
    }
    std::cout << sweep_text(result);
    return 0;
}

int run_serve(const Common& common, const std::string& host, int port) {
    const auto cfg = common.resolve();
    Pipeline pipe = make_pipeline(cfg);
    std::map<std::string, StimulusPack> packs;
    if (cfg.stimuli_dir.empty()) {
        packs.emplace("default", default_pack());
    } else {
        packs = load_packs(cfg.stimuli_dir);
    }
    ServiceOptions opts;
    opts.ttl = std::chrono::minutes(cfg.session_ttl_minutes);
    if (!cfg.snapshot.empty()) opts.snapshot = cfg.snapshot;
    SessionManager sessions(std::move(pipe), std::move(packs), opts);
    httplib::Server server;
    mount_service(server, sessions, cfg.cors_origin);
    std::cout << "listening on " << host << ":" << port << std::endl;
    if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

int run_make_fixtures(const std::string& out, const std::string& variant) {
    fixtures::Variant v = fixtures::Variant::Oracle;
    if (variant == "adversarial") v = fixtures::Variant::Adversarial;
    else if (variant == "all-removed") v = fixtures::Variant::AllRemoved;
    else if (variant != "oracle") throw Error(Errc::InvalidArgument, "variant must be oracle, adversarial or all-removed");
    const auto world = fixtures::make_world(v);
    fixtures::write_world(world, out);
    std::ofstream conf(fs::path(out) / "entrain.conf");
    conf << "provider = fixture\nfixture_dir = fixtures\nstimuli = stimuli\ncache_dir = cache\nn_images = "
         << world.n_images << "\n";
    std::cout << "wrote " << world.stimuli.size() << " stimuli, " << world.provider->table().size()
              << " fixture queries and " << world.corpus.size() << " corpus rows to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grounds tangram descriptions to stimuli and replays reference-game corpora"};
    app.require_subcommand(1);

    Common c_replay, c_match, c_scrape, c_sweep, c_serve;

    auto* replay_cmd = app.add_subcommand("replay", "replay a corpus CSV and report accuracy");
    c_replay.attach(replay_cmd);
    std::string corpus, report, format;
    replay_cmd->add_option("--corpus", corpus, "corpus CSV")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--report", report, "report path (.json, .csv, .txt or - for stdout)");
    replay_cmd->add_option("--format", format, "json | csv | text (default from the report extension)");

    auto* match_cmd = app.add_subcommand("match", "score one utterance against the stimuli");
    c_match.attach(match_cmd);
    std::string utterance, scores_out, dump_dir;
    match_cmd->add_option("--utterance", utterance, "director utterance")->required();
    match_cmd->add_option("--scores", scores_out, "write the score matrix (.csv or .json)");
    match_cmd->add_option("--dump-matches", dump_dir, "write SIFT match overlays into this directory");

    auto* scrape_cmd = app.add_subcommand("scrape-cache", "pre-warm the scrape cache for a corpus");
    c_scrape.attach(scrape_cmd);
    std::string scrape_corpus;
    scrape_cmd->add_option("--corpus", scrape_corpus, "corpus CSV")->required()->check(CLI::ExistingFile);

    auto* sweep_cmd = app.add_subcommand("sweep", "replay under every metric x alignment setting");
    c_sweep.attach(sweep_cmd);
    std::string sweep_corpus, metrics = "uqi,ssim,mse,mae,psnr", aligns = "on,off", sweep_out;
    sweep_cmd->add_option("--corpus", sweep_corpus, "corpus CSV")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--metrics", metrics, "comma-separated metrics");
    sweep_cmd->add_option("--align", aligns, "comma-separated on/off");
    sweep_cmd->add_option("--out", sweep_out, "grid output (.csv or .json)");

    auto* serve_cmd = app.add_subcommand("serve", "run the live-play HTTP service");
    c_serve.attach(serve_cmd);
    std::string host = "127.0.0.1";
    int port = 8080;
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "port")->check(CLI::Range(1, 65535));

    auto* make_cmd = app.add_subcommand("make-fixtures", "write a synthetic fixture world");
    std::string make_out, variant = "oracle";
    make_cmd->add_option("--out", make_out, "output directory")->required();
    make_cmd->add_option("--variant", variant, "oracle | adversarial | all-removed");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*replay_cmd) return run_replay(c_replay, corpus, report, format);
        if (*match_cmd) return run_match(c_match, utterance, scores_out, dump_dir);
        if (*scrape_cmd) return run_scrape_cache(c_scrape, scrape_corpus);
        if (*sweep_cmd) return run_sweep(c_sweep, sweep_corpus, metrics, aligns, sweep_out);
        if (*serve_cmd) return run_serve(c_serve, host, port);
        if (*make_cmd) return run_make_fixtures(make_out, variant);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
