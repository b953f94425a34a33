// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entrain/common_ground.hpp"
#include "entrain/fixtures.hpp"
#include "entrain/harness.hpp"
#include "entrain/metrics.hpp"
#include "entrain/sift.hpp"
#include "entrain/synth.hpp"

using namespace entrain;

namespace {

// Collects failed checks for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    template <class T>
    void near(double got, double want, double tol, const T& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream s;
            s.precision(12);
            s << what << ": got " << got << ", want " << want << " +- " << tol;
            failures.push_back(s.str());
        }
    }
};

int failed = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        std::ostringstream s;
        s << "runtime " << secs << " s exceeds " << budget_s << " s";
        c.failures.push_back(s.str());
    }
    std::printf("%s %s (%.2f s)\n", c.failures.empty() ? "PASS" : "FAIL", name.c_str(), secs);
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
    if (!c.failures.empty()) ++failed;
}

double direct_q(const ImageBuffer& x, const ImageBuffer& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x.pixels()[i];
        my += y.pixels()[i];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x.pixels()[i] - mx, dy = y.pixels()[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    const double den = (vx + vy) / (n - 1) * (mx * mx + my * my);
    if (den == 0.0) return x == y ? 1.0 : 0.0;
    return 4 * cxy / (n - 1) * mx * my / den;
}

Pipeline fixture_pipeline(const fixtures::World& w) {
    Pipeline p;
    p.stimuli = w.stimuli;
    p.provider = w.provider;
    p.config.n_images = w.n_images;
    p.config.measure_latency = false;
    return p;
}

std::vector<ReplayReport> replays;  // every replay run here, for the top-k inclusion check

void uqi_oracle(Check& c) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto x = synth::noise(1000 + s, 32 + static_cast<int>(s % 7), 24 + static_cast<int>(s % 5));
        c.expect(uqi(x, x) == 1.0, "uqi(x,x) != 1 for seed " + std::to_string(s));
    }
    const ImageBuffer x(2, 2, std::vector<std::uint8_t>{1, 2, 3, 4});
    const ImageBuffer y(2, 2, std::vector<std::uint8_t>{2, 3, 4, 5});
    c.near(uqi(x, y, 2), 0.9459, 1e-4, "hand example");
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto a = synth::noise(5000 + 2 * s, 4, 4), b = synth::noise(5001 + 2 * s, 4, 4);
        c.near(uqi(a, b, 4), direct_q(a, b), 1e-12, "4x4 pair " + std::to_string(s));
    }
}

void sift_properties(Check& c) {
    const auto st = fixtures::stimuli();
    {
        const auto out = sift::align(st[0].image, st[0].image);
        const auto* a = std::get_if<sift::Alignment>(&out);
        c.expect(a != nullptr, "self-alignment failed");
        if (a) {
            const Eigen::Matrix3d d = a->homography.matrix() - Eigen::Matrix3d::Identity();
            c.near(d.cwiseAbs().maxCoeff(), 0.0, 1e-3, "self-alignment deviation from identity");
        }
    }
    for (int t = 0; t < 10; ++t) {
        const auto& img = st[t].image;
        const auto out = sift::align(rotate(img, 90), img);
        const auto* a = std::get_if<sift::Alignment>(&out);
        if (!a) {
            c.expect(false, "90 degree alignment failed on " + st[t].id);
            continue;
        }
        const double n = img.width() - 1;
        for (auto [u, v] : {std::pair{0.0, 0.0}, {n, 0.0}, {0.0, n}, {n, n}}) {
            const auto p = a->homography.apply(u, v);
            c.expect(p.has_value(), "corner maps to infinity on " + st[t].id);
            if (p) c.expect(std::hypot(p->first - v, p->second - (n - u)) <= 2.0, "corner off by > 2 px on " + st[t].id);
        }
    }
    const auto noise = sift::align(synth::noise(11, 128, 128), synth::noise(12, 128, 128));
    c.expect(std::holds_alternative<sift::AlignFailure>(noise), "noise pair aligned");
}

std::set<ObjectId> twelve() {
    std::set<ObjectId> o;
    for (int i = 0; i < 12; ++i) o.insert(fixtures::object_id(i));
    return o;
}

void update_semantics(Check& c) {
    const auto objs = twelve();
    const CommonGroundContext fresh(objs);
    {
        const auto x = apply_update(fresh, "r", {"A"});
        c.expect(x.gamma_size() == 1 && x.xi_size() == 0 && x.omega_size() == 11, "singleton branch");
    }
    {
        const auto x = apply_update(fresh, "r", {});
        c.expect(x.gamma_size() == 0 && x.xi_size() == 0 && x.omega_size() == 12, "empty branch");
    }
    {
        const auto x = apply_update(apply_update(fresh, "r", {"A", "B"}), "r", {"A"});
        c.expect(x.bound_object("r") == std::optional<ObjectId>("A"), "two-step promotion");
    }
    std::mt19937_64 rng(77);
    const std::vector<ObjectId> ids(objs.begin(), objs.end());
    for (int seq = 0; seq < 10000 && c.failures.size() < 5; ++seq) {
        CommonGroundContext ctx(objs);
        for (int step = 0; step < 8; ++step) {
            const ReferentId r = "r" + std::to_string(rng() % 6);
            std::set<ObjectId> b;
            const auto size = rng() % 4;
            while (b.size() < size) b.insert(ids[rng() % ids.size()]);
            try {
                ctx = apply_update(ctx, r, b);
            } catch (const Error& e) {
                c.expect(e.code() == Errc::Contradiction, std::string("unexpected error ") + e.what());
            }
            if (auto v = ctx.violation()) c.expect(false, "sequence " + std::to_string(seq) + ": " + *v);
        }
    }
    CommonGroundContext game(objs);
    int updates = 0;
    for (const auto& o : objs) {
        c.expect(!is_entrained(game), "entrained early");
        game = apply_update(game, "ref-" + o, {o});
        ++updates;
    }
    c.expect(is_entrained(game) && updates == 12, "scripted game did not entrain in 12 updates");
}

void fixture_end_to_end(Check& c) {
    const auto oracle = fixtures::make_world(fixtures::Variant::Oracle);
    for (int t = 0; t < fixtures::kObjects; ++t) {
        c.expect(oracle.provider->table().at(oracle.keys[t]).size() == 7, "oracle list for object " +
                                                                                fixtures::object_id(t) + " is not 7 images");
    }
    // Separate scoring caches so the second run recomputes everything.
    const auto a = replay(oracle.corpus, fixture_pipeline(oracle));
    const auto b = replay(oracle.corpus, fixture_pipeline(oracle));
    replays.push_back(a);
    c.near(a.summary.top1, 100.0, 0.0, "oracle top-1 percent");
    c.near(a.summary.mean_utterances, 1.0, 0.0, "oracle mean utterances per object");
    c.expect(emit_report(a, ReportFormat::Json) == emit_report(b, ReportFormat::Json), "JSON reports differ");
    c.expect(emit_report(a, ReportFormat::Csv) == emit_report(b, ReportFormat::Csv), "CSV reports differ");

    const auto adv = fixtures::make_world(fixtures::Variant::Adversarial);
    const auto r = replay(adv.corpus, fixture_pipeline(adv));
    replays.push_back(r);
    int hits = 0;
    for (const auto& o : r.objects) hits += o.top1;
    c.expect(hits >= 10, "adversarial top-1 " + std::to_string(hits) + "/12");
}

void metric_sweep(Check& c) {
    const auto w = fixtures::make_world(fixtures::Variant::Oracle);
    const auto s = sweep(w.corpus, fixture_pipeline(w));
    c.expect(s.cells.size() == 10, "grid has " + std::to_string(s.cells.size()) + " cells");
    std::set<std::pair<MetricKind, bool>> seen;
    for (const auto& cell : s.cells) seen.emplace(cell.metric, cell.aligned);
    c.expect(seen.size() == 10, "grid cells are not distinct");
    if (!s.cells.empty()) {
        const auto& top = s.cells.front();
        c.expect(top.metric == MetricKind::UQI && top.aligned,
                 std::string("ranked first: ") + std::string(to_string(top.metric)) + (top.aligned ? "+aligned" : "+unaligned"));
    }
    for (const auto& cell : s.cells) {
        ReplayReport rep;
        rep.summary = cell.summary;
        replays.push_back(rep);
    }
    std::printf("%s", sweep_text(s).c_str());
}

void baseline_constants(Check& c) {
    ReplaySummary s;
    s.mean_utterances = 1.78;
    s.top1 = 41.66;
    for (const auto& row : compare_to_baseline(s)) {
        if (row.measure == "mean_utterances" && row.reference == "human") c.near(*row.ratio, 0.652, 1e-3, "1.78/2.73");
        if (row.measure == "top1_percent" && row.reference == "human (table)") c.near(*row.ratio, 2.083, 1e-3, "41.66/20.00");
    }
    const auto published = published_ratios();
    c.expect(published.size() == 9, "published comparison rows");
}

void softmax_topk(Check& c) {
    const Scores hand{{"a", 1.0}, {"b", 0.0}, {"c", -1.0}};
    const auto h = softmax_hypotheses(hand, 1.0, 3);
    c.near(h.entries.at(0).probability, 0.6652, 1e-4, "p(a)");
    c.near(h.entries.at(1).probability, 0.2447, 1e-4, "p(b)");
    c.near(h.entries.at(2).probability, 0.0900, 1e-4, "p(c)");

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Scores sc;
        for (int o = 0; o < 12; ++o) sc[fixtures::object_id(o)] = u(rng);
        const double temp = 0.01 + u(rng);
        double total = 0.0;
        for (const auto& e : softmax_hypotheses(sc, temp, 12).entries) total += e.probability;
        c.near(total, 1.0, 1e-9, "distribution sum");
        std::set<ObjectId> prev;
        for (std::size_t k : {1U, 3U, 5U}) {
            std::set<ObjectId> cur;
            for (const auto& e : softmax_hypotheses(sc, temp, k).entries) cur.insert(e.object);
            c.expect(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()), "top-k sets not nested");
            prev = std::move(cur);
        }
    }
    c.expect(!replays.empty(), "no replays to inspect");
    for (const auto& r : replays) {
        c.expect(r.summary.top1 <= r.summary.top3 && r.summary.top3 <= r.summary.top5, "replay summary not monotone");
        for (const auto& o : r.objects) {
            c.expect(o.top1 <= o.top3 && o.top3 <= o.top5, "per-object top-k not monotone for " + o.object);
        }
    }
}

}  // namespace

int main() {
    criterion("uqi-oracle", 5, uqi_oracle);
    criterion("sift-properties", 60, sift_properties);
    criterion("update-semantics", 10, update_semantics);
    criterion("fixture-end-to-end", 120, fixture_end_to_end);
    criterion("metric-sweep", 600, metric_sweep);
    criterion("baseline-constants", 1, baseline_constants);
    criterion("softmax-topk", 10, softmax_topk);
    std::printf("%s: %d of 7 criteria failed\n", failed ? "FAIL" : "PASS", failed);
    return failed ? 1 : 0;
}
