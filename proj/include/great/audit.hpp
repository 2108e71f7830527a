#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "great/model.hpp"
#include "great/types.hpp"

namespace great {

struct EndpointConfig {
    std::string url;                      // e.g. http://127.0.0.1:8080/predict
    std::optional<std::string> auth_header;  // sent verbatim as Authorization
    int timeout_ms = 10000;
    int max_in_flight = 4;
    double rate_limit_per_s = 50.0;
    int max_retries = 3;
    std::optional<std::string> cache_dir;
    int backoff_base_ms = 100;  // retry r waits base * 2^r

    // Optional adapter for third-party response schemas: when the response
    // carries named class probabilities, this ordering maps them into a
    // vector. renormalize divides by the sum when it is positive.
    std::vector<std::string> class_manifest;
    bool renormalize = false;

    void validate() const;
};

// One payload for the wire protocol: {"id": ..., "input": [...]}.
struct AuditPayload {
    std::string id;
    std::vector<double> input;
};

struct QueryResult {
    std::optional<PredictionVector> prediction;
    std::string error;     // non-empty iff prediction is absent
    int attempts = 0;      // network attempts made (0 on cache hit)
    bool from_cache = false;
};

// Sends one request per payload (instances array of length 1), preserving
// input order in the result, with token-bucket rate limiting, exponential
// backoff on 429/5xx/timeouts, and a content-addressed response cache.
std::vector<QueryResult> query_predictions(const EndpointConfig& endpoint,
                                           const std::vector<AuditPayload>& batch);

struct AuditGroup {
    std::string name;
    std::vector<SamplePoint> samples;
};

struct GroupResult {
    std::string name;
    bool valid = false;  // false when every sample in the group failed
    GlobalEstimate estimate;
    std::size_t failures = 0;
};

struct GroupReport {
    std::vector<GroupResult> groups;
    GlobalEstimate overall;  // over all succeeded samples, in input order
    std::size_t total_failures = 0;
};

// Scores each group from endpoint confidences: per-sample local score, then
// the compensated mean. Failed samples are excluded from means and counted.
GroupReport audit_groups(const EndpointConfig& endpoint, const std::vector<AuditGroup>& groups);

}  // namespace great
