#include <chrono>
#include <filesystem>

#include "doctest.h"
#include "great/audit.hpp"
#include "great/mock_server.hpp"

using namespace great;

namespace {

EndpointConfig endpoint_for(const MockServer& server) {
    EndpointConfig cfg;
    cfg.url = server.url();
    cfg.timeout_ms = 5000;
    cfg.max_in_flight = 4;
    cfg.rate_limit_per_s = 500.0;
    cfg.max_retries = 3;
    cfg.backoff_base_ms = 40;
    return cfg;
}

std::vector<AuditPayload> simple_batch(std::size_t n) {
    std::vector<AuditPayload> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"item" + std::to_string(i), {static_cast<double>(i), 0.5}});
    return out;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("great_audit_" + std::to_string(std::chrono::steady_clock::now()
                                                    .time_since_epoch()
                                                    .count()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("echo fixture returns the scripted prediction") {
    MockServer::Options opt;
    opt.constant_probs = {0.9, 0.1};
    MockServer server(opt);
    server.start();

    const auto results = query_predictions(endpoint_for(server), simple_batch(1));
    REQUIRE(results.size() == 1);
    REQUIRE(results[0].prediction.has_value());
    CHECK((*results[0].prediction)[0] == 0.9);
    CHECK((*results[0].prediction)[1] == 0.1);
    CHECK(results[0].attempts == 1);
    server.stop();
}

TEST_CASE("cache replay performs zero network calls") {
    TempDir dir;
    MockServer::Options opt;
    opt.constant_probs = {0.8, 0.2};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.cache_dir = dir.path.string();

    const auto batch = simple_batch(5);
    const auto first = query_predictions(cfg, batch);
    const std::size_t hits_after_first = server.hit_count();
    CHECK(hits_after_first == 5);

    const auto second = query_predictions(cfg, batch);
    CHECK(server.hit_count() == hits_after_first);  // cache short-circuits
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(second[i].from_cache);
        CHECK(second[i].attempts == 0);
        CHECK((*second[i].prediction)[0] == (*first[i].prediction)[0]);
    }

    // Renamed duplicate payload still hits (content-addressed key).
    std::vector<AuditPayload> renamed = {{"renamed", batch[0].input}};
    const auto third = query_predictions(cfg, renamed);
    CHECK(server.hit_count() == hits_after_first);
    CHECK(third[0].from_cache);
    server.stop();
}

TEST_CASE("two 429s then success, with exponential backoff") {
    MockServer::Options opt;
    opt.status_schedule = {429, 429, 200};
    opt.constant_probs = {0.7, 0.3};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_in_flight = 1;
    cfg.backoff_base_ms = 50;

    const auto results = query_predictions(cfg, simple_batch(1));
    REQUIRE(results[0].prediction.has_value());
    CHECK(results[0].attempts == 3);

    const auto times = server.hit_times_ms();
    REQUIRE(times.size() == 3);
    // Delay after attempt a is at least base * 2^a.
    CHECK(times[1] - times[0] >= 50.0 * 0.95);
    CHECK(times[2] - times[1] >= 100.0 * 0.95);
    server.stop();
}

TEST_CASE("retries exhausted yields a per-item error, not a drop") {
    MockServer::Options opt;
    opt.status_schedule = {500, 500, 500, 500, 500, 500, 500, 500};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_retries = 2;
    cfg.backoff_base_ms = 1;

    const auto results = query_predictions(cfg, simple_batch(2));
    REQUIRE(results.size() == 2);
    for (const auto& r : results) {
        CHECK_FALSE(r.prediction.has_value());
        CHECK(r.error.find("retries exhausted") != std::string::npos);
        CHECK(r.attempts == 3);
    }
    server.stop();
}

TEST_CASE("permanent 4xx fails immediately per item") {
    MockServer::Options opt;
    opt.status_schedule = {404};
    opt.constant_probs = {0.6, 0.4};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_in_flight = 1;
    const auto results = query_predictions(cfg, simple_batch(2));
    CHECK_FALSE(results[0].prediction.has_value());
    CHECK(results[0].error.find("HTTP 404") != std::string::npos);
    CHECK(results[0].attempts == 1);
    CHECK(results[1].prediction.has_value());  // later item unaffected
    server.stop();
}

TEST_CASE("order is preserved under shuffled completion") {
    MockServer::Options opt;
    opt.random_latency_ms = 30;
    opt.probs_by_id = {
        {"item0", {0.90, 0.10}}, {"item1", {0.80, 0.20}}, {"item2", {0.70, 0.30}},
        {"item3", {0.60, 0.40}}, {"item4", {0.55, 0.45}}, {"item5", {0.52, 0.48}},
        {"item6", {0.51, 0.49}}, {"item7", {0.50, 0.50}},
    };
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_in_flight = 8;
    const auto results = query_predictions(cfg, simple_batch(8));
    for (std::size_t i = 0; i < 8; ++i) {
        REQUIRE(results[i].prediction.has_value());
        CHECK((*results[i].prediction)[0] == opt.probs_by_id["item" + std::to_string(i)][0]);
    }
    server.stop();
}

TEST_CASE("request rate never exceeds the token bucket by more than one") {
    MockServer::Options opt;
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.rate_limit_per_s = 100.0;
    cfg.max_in_flight = 8;

    query_predictions(cfg, simple_batch(12));

    const auto times = server.hit_times_ms();
    REQUIRE(times.size() == 12);
    // Over any window, arrivals <= rate * window + 1 token.
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = i + 1; j < times.size(); ++j) {
            const double window_s = (times[j] - times[i]) / 1000.0;
            const double allowed = cfg.rate_limit_per_s * window_s + 1.0 + 0.5;  // timing slop
            CHECK(static_cast<double>(j - i + 1) <= allowed);
        }
    server.stop();
}

TEST_CASE("malformed responses raise protocol errors naming the item") {
    MockServer::Options wrong;
    wrong.out_of_range_probs = true;
    MockServer bad_probs(wrong);
    bad_probs.start();
    CHECK_THROWS_AS(query_predictions(endpoint_for(bad_probs), simple_batch(1)), ProtocolError);
    bad_probs.stop();

    MockServer::Options mangled;
    mangled.wrong_id = true;
    MockServer bad_id(mangled);
    bad_id.start();
    try {
        query_predictions(endpoint_for(bad_id), simple_batch(1));
        FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("item0") != std::string::npos);
    }
    bad_id.stop();
}

TEST_CASE("inconsistent K across responses is a protocol error") {
    MockServer::Options opt;
    opt.probs_by_id = {{"item0", {0.9, 0.1}}, {"item1", {0.5, 0.3, 0.2}}};
    MockServer server(opt);
    server.start();
    EndpointConfig cfg = endpoint_for(server);
    cfg.max_in_flight = 1;
    CHECK_THROWS_AS(query_predictions(cfg, simple_batch(2)), ProtocolError);
    server.stop();
}

TEST_CASE("named-class adapter maps through the manifest") {
    MockServer::Options opt;
    opt.named_classes = {"Male", "Female"};
    opt.constant_probs = {0.85, 0.15};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    SUBCASE("without a manifest the response is rejected") {
        CHECK_THROWS_AS(query_predictions(cfg, simple_batch(1)), ProtocolError);
    }
    SUBCASE("manifest ordering applies") {
        cfg.class_manifest = {"Female", "Male"};
        const auto results = query_predictions(cfg, simple_batch(1));
        CHECK((*results[0].prediction)[0] == 0.15);
        CHECK((*results[0].prediction)[1] == 0.85);
    }
    server.stop();
}

TEST_CASE("renormalization switch rescales named probabilities") {
    MockServer::Options opt;
    opt.named_classes = {"Male", "Female"};
    opt.constant_probs = {0.6, 0.2};  // does not sum to 1
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.class_manifest = {"Male", "Female"};
    const auto raw = query_predictions(cfg, simple_batch(1));
    CHECK((*raw[0].prediction)[0] == 0.6);  // passed through unchanged

    cfg.renormalize = true;
    const auto scaled = query_predictions(cfg, simple_batch(1));
    CHECK((*scaled[0].prediction)[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK((*scaled[0].prediction)[1] == doctest::Approx(0.25).epsilon(1e-15));
    server.stop();
}

TEST_CASE("auth header is forwarded") {
    MockServer::Options opt;
    opt.required_auth = "Bearer sesame";
    opt.constant_probs = {0.9, 0.1};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_retries = 0;
    const auto denied = query_predictions(cfg, simple_batch(1));
    CHECK_FALSE(denied[0].prediction.has_value());

    cfg.auth_header = "Bearer sesame";
    const auto allowed = query_predictions(cfg, simple_batch(1));
    CHECK(allowed[0].prediction.has_value());
    server.stop();
}

TEST_CASE("group report means match hand-computed fixtures") {
    MockServer::Options opt;
    opt.constant_probs = {0.975, 0.025};
    MockServer server(opt);
    server.start();

    AuditGroup old_group{"Old", {}};
    for (int i = 0; i < 4; ++i)
        old_group.samples.push_back({"old" + std::to_string(i), {0.1, 0.2}, 0});

    const GroupReport report = audit_groups(endpoint_for(server), {old_group});
    // sqrt(pi/2) * 0.95, from 60-digit arithmetic.
    CHECK(report.groups[0].estimate.mean ==
          doctest::Approx(1.1906484304497252).epsilon(1e-15));
    CHECK(report.groups[0].estimate.count == 4);
    CHECK(report.overall.mean == report.groups[0].estimate.mean);
    server.stop();
}

TEST_CASE("overall mean is the weighted mean of disjoint groups") {
    MockServer::Options opt;
    // one sample scoring sqrt(pi/2)*0.8..., actually script exact gaps:
    // group A single sample with probs giving score 1.0 is awkward; instead
    // verify the weighted-mean identity on raw means.
    opt.probs_by_id = {
        {"a0", {1.0, 0.0}},  // gap 1.0
        {"b0", {0.75, 0.25}},
        {"b1", {0.75, 0.25}},
        {"b2", {0.75, 0.25}},
    };
    MockServer server(opt);
    server.start();

    AuditGroup a{"A", {{"a0", {0.0}, 0}}};
    AuditGroup b{"B", {{"b0", {0.0}, 0}, {"b1", {0.0}, 0}, {"b2", {0.0}, 0}}};
    const GroupReport report = audit_groups(endpoint_for(server), {a, b});
    const double weighted = (1.0 * report.groups[0].estimate.mean +
                             3.0 * report.groups[1].estimate.mean) / 4.0;
    CHECK(report.overall.mean == doctest::Approx(weighted).epsilon(1e-15));
    server.stop();
}

TEST_CASE("a group whose samples all fail is marked invalid") {
    MockServer::Options opt;
    opt.status_schedule = {404, 404};  // first group's two samples fail
    opt.constant_probs = {0.9, 0.1};
    MockServer server(opt);
    server.start();

    EndpointConfig cfg = endpoint_for(server);
    cfg.max_in_flight = 1;
    cfg.max_retries = 0;

    AuditGroup dead{"Dead", {{"d0", {0.0}, 0}, {"d1", {0.0}, 0}}};
    AuditGroup live{"Live", {{"l0", {0.0}, 0}}};
    const GroupReport report = audit_groups(cfg, {dead, live});
    CHECK_FALSE(report.groups[0].valid);
    CHECK(report.groups[0].failures == 2);
    CHECK(report.groups[1].valid);
    CHECK(report.total_failures == 2);
    server.stop();
}

TEST_CASE("audit rejects duplicate ids within a group") {
    EndpointConfig cfg;
    cfg.url = "http://127.0.0.1:1/predict";
    AuditGroup g{"G", {{"x", {0.0}, 0}, {"x", {1.0}, 0}}};
    CHECK_THROWS_AS(audit_groups(cfg, {g}), InvalidInput);
}
