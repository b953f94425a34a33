#include <gtest/gtest.h>

#include "entrain/fixtures.hpp"
#include "entrain/harness.hpp"
#include "support.hpp"

using namespace entrain;

namespace {

Pipeline pipeline_for(const fixtures::World& w) {
    Pipeline p;
    p.stimuli = w.stimuli;
    p.provider = w.provider;
    p.config.n_images = w.n_images;
    p.config.measure_latency = false;
    return p;
}

ReplaySummary summary_with(double top1, double utterances) {
    ReplaySummary s;
    s.top1 = top1;
    s.mean_utterances = utterances;
    return s;
}

const ComparisonRow& row(const std::vector<ComparisonRow>& rows, const std::string& m, const std::string& ref) {
    for (const auto& r : rows) {
        if (r.measure == m && r.reference == ref) return r;
    }
    throw std::runtime_error("row not found: " + m + " / " + ref);
}

// Built once; the replay dominates this suite's runtime.
const ReplayReport& removed_report() {
    static const ReplayReport r = [] {
        const auto w = fixtures::make_world(fixtures::Variant::AllRemoved);
        return replay(w.corpus, pipeline_for(w));
    }();
    return r;
}

}  // namespace

TEST(Replay, EmptyRecordsGiveEmptyReport) {
    const auto w = fixtures::make_world(fixtures::Variant::Oracle);
    const auto r = replay({}, pipeline_for(w));
    EXPECT_EQ(r.records, 0);
    EXPECT_TRUE(r.games.empty());
    EXPECT_EQ(r.objects.size(), 12U);
    EXPECT_EQ(r.summary, ReplaySummary{});
}

TEST(Replay, MatcherRecordsIgnored) {
    const auto w = fixtures::make_world(fixtures::Variant::Oracle);
    const std::vector<CorpusRecord> recs{{"g", 1, Speaker::Matcher, 1, "which one", "A"}};
    EXPECT_EQ(replay(recs, pipeline_for(w)).records, 0);
}

TEST(Replay, ContentFreeUtteranceIsCounted) {
    const auto w = fixtures::make_world(fixtures::Variant::Oracle);
    const std::vector<CorpusRecord> recs{{"g", 1, Speaker::Director, 1, "um the uh", "A"}};
    const auto r = replay(recs, pipeline_for(w));
    EXPECT_EQ(r.records, 1);
    EXPECT_EQ(r.empty_content, 1);
    EXPECT_EQ(r.objects[0].first_utterances, 1);
    EXPECT_EQ(r.objects[0].top1, 0);
}

TEST(Replay, AllRemovedReferentEndsInOmega) {
    const auto& r = removed_report();
    ASSERT_EQ(r.games.size(), 1U);
    EXPECT_FALSE(r.games[0].aborted);
    EXPECT_EQ(r.games[0].utterances, 12);
    EXPECT_EQ(r.games[0].entrained_objects, 11);
    EXPECT_FALSE(r.games[0].fully_entrained);
    EXPECT_EQ(r.no_evidence, 1);
    const auto& k = r.objects[fixtures::kRemovedTarget];
    EXPECT_EQ(k.object, fixtures::object_id(fixtures::kRemovedTarget));
    EXPECT_EQ(k.entrained, 0);
    EXPECT_EQ(k.top1, 0);
    EXPECT_NEAR(r.summary.top1, 100.0 * 11 / 12, 1e-9);
}

TEST(Replay, TopKMonotone) {
    const auto& r = removed_report();
    EXPECT_LE(r.summary.top1, r.summary.top3);
    EXPECT_LE(r.summary.top3, r.summary.top5);
    for (const auto& o : r.objects) {
        EXPECT_LE(o.top1, o.top3);
        EXPECT_LE(o.top3, o.top5);
    }
}

TEST(Replay, TopKDecisionModeRuns) {
    auto w = fixtures::make_world(fixtures::Variant::Oracle);
    auto p = pipeline_for(w);
    p.config.decision = DecisionMode::TopK;
    p.config.k = 1;
    w.corpus.resize(3);
    const auto r = replay(w.corpus, p);
    EXPECT_EQ(r.records, 3);
    EXPECT_EQ(r.contradictions, 0);
    EXPECT_EQ(r.games[0].entrained_objects, 3);
}

TEST(Baseline, UtteranceRatio) {
    const auto rows = compare_to_baseline(summary_with(0, 1.78));
    EXPECT_NEAR(*row(rows, "mean_utterances", "human").ratio, 0.652, 1e-3);
}

TEST(Baseline, TopOneRatio) {
    const auto rows = compare_to_baseline(summary_with(41.66, 0));
    EXPECT_NEAR(*row(rows, "top1_percent", "human (table)").ratio, 2.083, 1e-3);
    EXPECT_FALSE(row(rows, "top1_percent", "human (caption)").ratio.has_value());
}

TEST(Baseline, HumanEqualGivesOnes) {
    ReplaySummary s = summary_with(baseline::kHumanTop1, baseline::kHumanUtterances);
    s.mean_latency_ms = baseline::kHumanTimeMs;
    const auto rows = compare_to_baseline(s);
    EXPECT_DOUBLE_EQ(*row(rows, "top1_percent", "human (table)").ratio, 1.0);
    EXPECT_DOUBLE_EQ(*row(rows, "mean_utterances", "human").ratio, 1.0);
    EXPECT_DOUBLE_EQ(*row(rows, "mean_latency_ms", "human").ratio, 1.0);
}

TEST(Baseline, PublishedRatios) {
    const auto rows = published_ratios();
    EXPECT_EQ(rows.size(), 9U);
    EXPECT_NEAR(*row(rows, "mean_utterances", "human").ratio, 0.652, 1e-3);
    EXPECT_NEAR(*row(rows, "top1_percent", "human (table)").ratio, 2.083, 1e-3);
    EXPECT_DOUBLE_EQ(*row(rows, "top1_percent", "published matcher").ratio, 1.0);
}

TEST(Report, JsonRoundTrip) {
    const auto& r = removed_report();
    const auto back = report_from_json(nlohmann::json::parse(emit_report(r, ReportFormat::Json)));
    EXPECT_EQ(back.summary, r.summary);
    EXPECT_EQ(back.records, r.records);
    ASSERT_EQ(back.objects.size(), r.objects.size());
    for (std::size_t i = 0; i < r.objects.size(); ++i) {
        EXPECT_EQ(back.objects[i].object, r.objects[i].object);
        EXPECT_EQ(back.objects[i].top5, r.objects[i].top5);
        EXPECT_EQ(back.objects[i].entrained, r.objects[i].entrained);
    }
    EXPECT_EQ(report_json(back).dump(), report_json(r).dump());
    EXPECT_ERRC(report_from_json(nlohmann::json::parse(R"({"schema":1})")), Errc::InvalidArgument);
}

TEST(Report, CsvShape) {
    const auto csv = report_csv(removed_report());
    const auto rows = parse_csv(csv);
    ASSERT_EQ(rows.size(), 14U);
    EXPECT_EQ(rows[0].fields[0], "tangram");
    EXPECT_EQ(rows[1].fields[0], "A");
    EXPECT_EQ(rows[13].fields[0], "Average");
    for (const auto& r : rows) EXPECT_EQ(r.fields.size(), rows[0].fields.size());
    EXPECT_EQ(rows[13].fields[9], "2.73");
}

TEST(Report, TextAndFormats) {
    const auto text = report_text(removed_report());
    EXPECT_NE(text.find("top-1"), std::string::npos);
    EXPECT_NE(text.find("human (caption)"), std::string::npos);
    EXPECT_NE(text.find("published matcher"), std::string::npos);
    EXPECT_EQ(report_format_from_string("csv"), ReportFormat::Csv);
    EXPECT_ERRC(report_format_from_string("xml"), Errc::InvalidArgument);
    testutil::TempDir dir;
    write_report(removed_report(), ReportFormat::Text, dir.path() / "r.txt");
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "r.txt"));
}

TEST(Sweep, RankingAndSerialisation) {
    auto w = fixtures::make_world(fixtures::Variant::Oracle);
    w.corpus.resize(2);
    const auto s = sweep(w.corpus, pipeline_for(w), {MetricKind::UQI, MetricKind::MSE}, {true, false});
    ASSERT_EQ(s.cells.size(), 4U);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.cells[i].rank, static_cast<int>(i) + 1);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_FALSE(ranks_before(s.cells[i], s.cells[i - 1]));
    EXPECT_EQ(parse_csv(sweep_csv(s)).size(), 5U);
    EXPECT_EQ(sweep_json(s)["cells"].size(), 4U);
    EXPECT_NE(sweep_text(s).find("winner"), std::string::npos);
}
