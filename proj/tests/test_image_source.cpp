#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "entrain/fixtures.hpp"
#include "entrain/http_provider.hpp"
#include "entrain/image_source.hpp"
#include "support.hpp"

// After Eigen: resolv.h defines _res, which Eigen uses as a parameter name.
#include <httplib.h>

using namespace entrain;

namespace {

Query tall_man() { return build_query({"tall", "man"}); }

std::vector<LabeledImage> seven(std::uint64_t seed) {
    std::vector<LabeledImage> out;
    for (int i = 0; i < 7; ++i) out.push_back({"img" + std::to_string(i), synth::noise(seed + i, 40, 30)});
    return out;
}

// Counts calls and forwards to a fixture table.
class CountingProvider : public ImageProvider {
public:
    explicit CountingProvider(FixtureProvider f) : f_(std::move(f)) {}
    ScrapeResult fetch(const ScrapeRequest& r) override {
        ++calls;
        return f_.fetch(r);
    }
    std::string name() const override { return "counting"; }
    int calls = 0;

private:
    FixtureProvider f_;
};

}  // namespace

TEST(Request, Validation) {
    EXPECT_ERRC((ScrapeRequest{tall_man(), 0}.validate()), Errc::InvalidArgument);
    EXPECT_ERRC((ScrapeRequest{tall_man(), 51}.validate()), Errc::InvalidArgument);
    EXPECT_ERRC((ScrapeRequest{Query{}, 7}.validate()), Errc::EmptyQuery);
    EXPECT_EQ(ScrapeRequest{}.n, 7);
}

TEST(Fixture, RegisteredOrderAndTruncation) {
    FixtureProvider p;
    const auto imgs = seven(1);
    p.add(tall_man(), imgs);
    const auto r = p.fetch({build_query({"man", "tall"}), 7});
    ASSERT_EQ(r.images.size(), 7U);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(r.images[i].id, imgs[i].id);
        EXPECT_EQ(r.images[i].image, imgs[i].image);
        EXPECT_EQ(r.manifest.entries[i].sha256, content_hash(imgs[i].image));
    }
    EXPECT_EQ(r.manifest.query, "tangram figure man tall");
    EXPECT_EQ(r.manifest.provider, "fixture");
    EXPECT_EQ(p.fetch({tall_man(), 3}).images.size(), 3U);
}

TEST(Fixture, UnknownKeyIsNoResults) {
    FixtureProvider p;
    p.add(tall_man(), seven(1));
    EXPECT_ERRC(p.fetch({build_query({"swan"}), 7}), Errc::NoResults);
}

TEST(Fixture, SaveLoadRoundTrip) {
    testutil::TempDir dir;
    FixtureProvider p;
    p.add(tall_man(), seven(2));
    p.add(build_query({"swan"}), seven(9));
    p.save(dir.path());
    auto q = FixtureProvider::load(dir.path());
    for (const auto& [key, imgs] : p.table()) {
        ASSERT_TRUE(q.has(key));
        const auto& other = q.table().at(key);
        ASSERT_EQ(other.size(), imgs.size());
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            EXPECT_EQ(other[i].id, imgs[i].id);
            EXPECT_EQ(other[i].image, imgs[i].image);
        }
    }
}

TEST(Fixture, DuplicateIdsAreProviderError) {
    FixtureProvider p;
    p.add(tall_man(), {{"x", ImageBuffer(4, 4)}, {"x", ImageBuffer(4, 4, 9)}});
    EXPECT_ERRC(p.fetch({tall_man(), 7}), Errc::ProviderError);
}

TEST(Cache, SecondFetchIsByteIdenticalWithoutUpstream) {
    testutil::TempDir dir;
    FixtureProvider f;
    f.add(tall_man(), seven(3));
    auto inner = std::make_shared<CountingProvider>(f);
    CachedProvider cache(inner, dir.path());
    const ScrapeRequest req{tall_man(), 7};
    const auto first = cache.fetch(req);
    EXPECT_EQ(inner->calls, 1);
    const auto entry = cache.entry_dir(req);
    ASSERT_TRUE(std::filesystem::exists(entry / "manifest.json"));

    CachedProvider reopened(inner, dir.path());
    const auto second = reopened.fetch(req);
    EXPECT_EQ(inner->calls, 1);
    EXPECT_EQ(reopened.inner_calls(), 0U);
    ASSERT_EQ(second.images.size(), first.images.size());
    for (std::size_t i = 0; i < first.images.size(); ++i) {
        EXPECT_EQ(second.images[i].id, first.images[i].id);
        EXPECT_EQ(second.images[i].image, first.images[i].image);
        EXPECT_EQ(content_hash(second.images[i].image), first.manifest.entries[i].sha256);
        EXPECT_EQ(sha256_hex(read_file(entry / second.manifest.entries[i].file)), second.manifest.entries[i].sha256);
    }
}

TEST(Cache, KeyCoversCount) {
    EXPECT_NE(CachedProvider::cache_key({tall_man(), 7}), CachedProvider::cache_key({tall_man(), 6}));
    EXPECT_EQ(CachedProvider::cache_key({tall_man(), 7}), sha256_hex(std::string("tangram figure tall man|7")));
}

TEST(Cache, ManifestLayout) {
    testutil::TempDir dir;
    FixtureProvider f;
    f.add(tall_man(), seven(4));
    CachedProvider cache(std::make_shared<FixtureProvider>(f), dir.path());
    const ScrapeRequest req{tall_man(), 7};
    cache.fetch(req);
    const auto j = nlohmann::json::parse(std::string(
        [&] { auto b = read_file(cache.entry_dir(req) / "manifest.json"); return std::string(b.begin(), b.end()); }()));
    EXPECT_EQ(j["query"], "tangram figure tall man");
    EXPECT_EQ(j["n"], 7);
    EXPECT_EQ(j["provider"], "fixture");
    EXPECT_TRUE(j["fetched_at"].get<std::string>().ends_with("Z"));
    EXPECT_EQ(j["entries"].size(), 7U);
    EXPECT_TRUE(j["entries"][0].contains("sha256"));
}

TEST(Cache, TamperedEntryIsRejected) {
    testutil::TempDir dir;
    FixtureProvider f;
    f.add(tall_man(), seven(5));
    auto inner = std::make_shared<CountingProvider>(f);
    CachedProvider cache(inner, dir.path());
    const ScrapeRequest req{tall_man(), 7};
    const auto first = cache.fetch(req);
    save_png(cache.entry_dir(req) / first.manifest.entries[0].file, ImageBuffer(40, 30, 1));
    EXPECT_ERRC(cache.fetch(req), Errc::ProviderError);
    EXPECT_EQ(inner->calls, 1);
}

TEST(Cache, OfflineMissIsNoResults) {
    testutil::TempDir dir;
    CachedProvider cache(nullptr, dir.path());
    EXPECT_ERRC(cache.fetch({tall_man(), 7}), Errc::NoResults);
}

TEST(Dedupe, ExactStopCopyRemoved) {
    const std::vector<ImageBuffer> stops{bundled_stop_image()};
    ScrapeResult r;
    r.images = {{"a", synth::smooth_texture(1)}, {"stop", bundled_stop_image()}, {"b", synth::blob_scene(2)}};
    const auto out = dedupe_generic(r, stops);
    ASSERT_EQ(out.images.size(), 2U);
    EXPECT_EQ(out.images[0].id, "a");
    EXPECT_EQ(out.images[1].id, "b");
}

TEST(Dedupe, UnrelatedImagesUnchanged) {
    const std::vector<ImageBuffer> stops{bundled_stop_image()};
    ScrapeResult r;
    r.images = fixtures::oracle_images(3);
    const auto out = dedupe_generic(r, stops);
    ASSERT_EQ(out.images.size(), r.images.size());
    for (std::size_t i = 0; i < r.images.size(); ++i) EXPECT_EQ(out.images[i].id, r.images[i].id);
}

TEST(Dedupe, ThreeNearDuplicatesOfSeven) {
    const std::vector<ImageBuffer> stops{bundled_stop_image()};
    ScrapeResult r;
    auto base = fixtures::oracle_images(6);
    base.resize(4);
    r.images = {{"n0", fixtures::stop_near_duplicate(1)}, base[0], base[1], {"n1", fixtures::stop_near_duplicate(2)},
                base[2], base[3], {"n2", fixtures::stop_near_duplicate(3)}};
    const auto out = dedupe_generic(r, stops);
    ASSERT_EQ(out.images.size(), 4U);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.images[i].id, base[i].id);
}

TEST(Dedupe, GuardListRemovesStimulusCopies) {
    const auto st = fixtures::stimuli();
    ScrapeResult r;
    r.images = {{"copy", st[2].image}, {"tex", synth::smooth_texture(8)}};
    const std::vector<ImageBuffer> guard{st[2].image};
    EXPECT_EQ(dedupe_generic(r, {}, 0.95, guard).images.size(), 1U);
    EXPECT_ERRC(dedupe_generic(r, {}, 0.0), Errc::InvalidArgument);
}

TEST(Http, ExtractStringsWalksArrays) {
    const auto j = nlohmann::json::parse(R"({"value":[{"contentUrl":"u1"},{"x":1},{"contentUrl":"u2"}]})");
    EXPECT_EQ(extract_strings(j, "value[].contentUrl"), (std::vector<std::string>{"u1", "u2"}));
    EXPECT_TRUE(extract_strings(j, "missing[].contentUrl").empty());
    EXPECT_EQ(split_url("http://h:1/a/b?c=d").origin, "http://h:1");
    EXPECT_EQ(split_url("http://h:1/a/b?c=d").path, "/a/b?c=d");
}

class HttpProviderTest : public ::testing::Test {
protected:
    void SetUp() override {
        png_ = [] { auto b = encode_png(synth::noise(77, 32, 24)); return std::string(b.begin(), b.end()); }();
        server_.Get("/search", [this](const httplib::Request& req, httplib::Response& res) {
            last_key_ = req.get_header_value("X-Api-Key");
            last_q_ = req.get_param_value("q");
            last_count_ = req.get_param_value("count");
            if (last_q_.find("nothing") != std::string::npos) {
                res.set_content(R"({"value":[]})", "application/json");
                return;
            }
            if (last_q_.find("broken") != std::string::npos) {
                res.status = 500;
                return;
            }
            const std::string base = "http://127.0.0.1:" + std::to_string(port_);
            nlohmann::json v = nlohmann::json::array();
            v.push_back({{"contentUrl", base + "/img/junk.png"}});
            for (int i = 0; i < 3; ++i) v.push_back({{"contentUrl", base + "/img/" + std::to_string(i) + ".png"}});
            res.set_content(nlohmann::json{{"value", v}}.dump(), "application/json");
        });
        server_.Get(R"(/img/(\w+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
            if (req.matches[1] == "junk") {
                res.set_content("not an image", "image/png");
            } else {
                res.set_content(png_, "image/png");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        ::setenv("ENTRAIN_TEST_KEY", "secret", 1);
        settings_.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/search";
        settings_.api_key_env = "ENTRAIN_TEST_KEY";
        settings_.rate_limit_per_sec = 1000;
        settings_.retries = 1;
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::string png_, last_key_, last_q_, last_count_;
    HttpSettings settings_;
};

TEST_F(HttpProviderTest, DecodesResultsAndSkipsJunk) {
    HttpProvider p(settings_);
    const auto r = p.fetch({tall_man(), 2});
    EXPECT_EQ(last_key_, "secret");
    EXPECT_EQ(last_q_, "tangram figure tall man");
    EXPECT_EQ(last_count_, "2");
    ASSERT_EQ(r.images.size(), 2U);
    EXPECT_EQ(r.images[0].image, synth::noise(77, 32, 24));
    EXPECT_EQ(r.images[0].id.size(), 16U);
    EXPECT_NE(r.images[0].id, r.images[1].id);
    EXPECT_EQ(r.manifest.provider, "http");
}

TEST_F(HttpProviderTest, EmptyReplyIsNoResults) {
    HttpProvider p(settings_);
    EXPECT_ERRC(p.fetch({build_query({"nothing"}), 7}), Errc::NoResults);
}

TEST_F(HttpProviderTest, ServerErrorIsProviderError) {
    HttpProvider p(settings_);
    EXPECT_ERRC(p.fetch({build_query({"broken"}), 7}), Errc::ProviderError);
}

TEST_F(HttpProviderTest, CachedWrapperStoresHttpResults) {
    testutil::TempDir dir;
    CachedProvider cache(std::make_shared<HttpProvider>(settings_), dir.path());
    const auto a = cache.fetch({tall_man(), 3});
    server_.stop();
    const auto b = cache.fetch({tall_man(), 3});
    EXPECT_EQ(cache.inner_calls(), 1U);
    ASSERT_EQ(a.images.size(), b.images.size());
    for (std::size_t i = 0; i < a.images.size(); ++i) EXPECT_EQ(a.images[i].image, b.images[i].image);
}

TEST(Http, MissingEndpointIsInvalidConfig) {
    EXPECT_ERRC(HttpProvider(HttpSettings{}), Errc::InvalidConfig);
}
