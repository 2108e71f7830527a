#include "great/audit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "great/score.hpp"
#include "great/sum.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace great {

namespace {

struct ParsedUrl {
    std::string host;
    int port = 80;
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0)
        throw InvalidInput("endpoint url must start with http://, got: " + url);
    std::string rest = url.substr(prefix.size());
    ParsedUrl out;
    const auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = hostport.find(':');
    if (colon == std::string::npos) {
        out.host = hostport;
    } else {
        out.host = hostport.substr(0, colon);
        try {
            out.port = std::stoi(hostport.substr(colon + 1));
        } catch (...) {
            throw InvalidInput("bad port in endpoint url: " + url);
        }
    }
    if (out.host.empty()) throw InvalidInput("endpoint url has no host: " + url);
    return out;
}

std::uint64_t fnv1a64(const std::string& data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Content hash of (url, payload body); renamed duplicates still hit.
std::string cache_key(const std::string& url, const std::string& body) {
    const std::string joined = url + "\n" + body;
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(fnv1a64(joined, 0xcbf29ce484222325ULL)),
                  static_cast<unsigned long long>(fnv1a64(joined, 0x811c9dc5a54b21edULL)));
    return buf;
}

// Serialized instance body; note the id is NOT part of the cache key input,
// only the input payload content and the url are.
std::string instance_body(const AuditPayload& p, const std::string& id_override) {
    nlohmann::ordered_json inst;
    inst["id"] = id_override;
    inst["input"] = p.input;
    nlohmann::ordered_json body;
    body["instances"] = nlohmann::ordered_json::array({inst});
    return body.dump();
}

std::string payload_content(const AuditPayload& p) {
    nlohmann::json j = p.input;
    return j.dump();
}

class TokenBucket {
public:
    explicit TokenBucket(double rate_per_s) : rate_(rate_per_s), tokens_(1.0),
        last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const double missing = 1.0 - tokens_;
            const auto wait = std::chrono::duration<double>(missing / rate_);
            cv_.wait_for(lock, wait);
        }
    }

private:
    void refill() {
        const auto now = std::chrono::steady_clock::now();
        const double dt = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(1.0, tokens_ + dt * rate_);  // capacity one token
    }

    double rate_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

PredictionVector parse_probs(const nlohmann::json& probs, const EndpointConfig& endpoint,
                             const std::string& id) {
    std::vector<double> values;
    if (probs.is_array()) {
        for (const auto& v : probs) {
            if (!v.is_number()) throw ProtocolError("non-numeric confidence for item '" + id + "'");
            values.push_back(v.get<double>());
        }
    } else if (probs.is_object()) {
        if (endpoint.class_manifest.empty())
            throw ProtocolError("named-class response for item '" + id +
                                "' but no class manifest configured");
        for (const auto& name : endpoint.class_manifest) {
            if (!probs.contains(name))
                throw ProtocolError("response for item '" + id + "' is missing class '" + name + "'");
            values.push_back(probs.at(name).get<double>());
        }
    } else {
        throw ProtocolError("response for item '" + id + "' has no usable probs field");
    }
    if (endpoint.renormalize) {
        double total = 0.0;
        for (double v : values) total += v;
        if (total > 0.0)
            for (auto& v : values) v /= total;
    }
    try {
        return PredictionVector(values);
    } catch (const InvalidInput& e) {
        throw ProtocolError("item '" + id + "': " + e.what());
    }
}

// check_id is off for cache hits: entries are keyed by payload content, so a
// renamed duplicate may replay a response recorded under another id.
PredictionVector parse_response_item(const std::string& body, const EndpointConfig& endpoint,
                                     const std::string& id, bool check_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError("unparseable response for item '" + id + "': " + e.what());
    }
    if (!j.contains("predictions") || !j["predictions"].is_array() || j["predictions"].size() != 1)
        throw ProtocolError("response for item '" + id + "' lacks a single-entry predictions array");
    const auto& item = j["predictions"][0];
    if (check_id && (!item.contains("id") || !item["id"].is_string() ||
                     item["id"].get<std::string>() != id))
        throw ProtocolError("response id mismatch for item '" + id + "'");
    if (!item.contains("probs"))
        throw ProtocolError("response for item '" + id + "' has no probs");
    return parse_probs(item["probs"], endpoint, id);
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

void EndpointConfig::validate() const {
    parse_url(url);
    if (timeout_ms <= 0) throw InvalidInput("timeout_ms must be positive");
    if (max_in_flight < 1) throw InvalidInput("max_in_flight must be >= 1");
    if (!(rate_limit_per_s > 0.0)) throw InvalidInput("rate_limit_per_s must be positive");
    if (max_retries < 0) throw InvalidInput("max_retries must be >= 0");
    if (backoff_base_ms < 0) throw InvalidInput("backoff_base_ms must be >= 0");
}

std::vector<QueryResult> query_predictions(const EndpointConfig& endpoint,
                                           const std::vector<AuditPayload>& batch) {
    endpoint.validate();
    if (batch.empty()) throw InvalidInput("empty payload batch");
    const ParsedUrl url = parse_url(endpoint.url);

    const bool use_cache = endpoint.cache_dir.has_value();
    if (use_cache) std::filesystem::create_directories(*endpoint.cache_dir);

    std::vector<QueryResult> results(batch.size());
    TokenBucket bucket(endpoint.rate_limit_per_s);
    std::atomic<std::size_t> next{0};
    std::atomic<long> expected_k{-1};
    std::mutex error_mutex;
    std::exception_ptr protocol_failure;

    auto worker = [&]() {
        httplib::Client client(url.host, url.port);
        client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
        client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
        client.set_write_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (endpoint.auth_header) headers.emplace("Authorization", *endpoint.auth_header);

        for (;;) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (protocol_failure) return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= batch.size()) return;
            QueryResult& out = results[i];
            try {
                const std::string key = cache_key(endpoint.url, payload_content(batch[i]));
                const std::filesystem::path cache_file =
                    use_cache ? std::filesystem::path(*endpoint.cache_dir) / (key + ".json")
                              : std::filesystem::path();
                std::string body;
                if (use_cache && std::filesystem::exists(cache_file)) {
                    std::ifstream in(cache_file);
                    body.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
                    out.from_cache = true;
                } else {
                    const std::string request = instance_body(batch[i], batch[i].id);
                    int attempt = 0;
                    for (;;) {
                        bucket.acquire();
                        ++out.attempts;
                        auto res = client.Post(url.path, headers, request, "application/json");
                        if (res && res->status == 200) {
                            body = res->body;
                            break;
                        }
                        const bool transient = !res || transient_status(res->status);
                        if (!transient) {
                            out.error = "HTTP " + std::to_string(res->status) + " for item '" +
                                        batch[i].id + "'";
                            break;
                        }
                        if (attempt >= endpoint.max_retries) {
                            out.error = res ? "retries exhausted (last HTTP " +
                                                  std::to_string(res->status) + ") for item '" +
                                                  batch[i].id + "'"
                                            : "retries exhausted (transport error) for item '" +
                                                  batch[i].id + "'";
                            break;
                        }
                        std::this_thread::sleep_for(std::chrono::milliseconds(
                            endpoint.backoff_base_ms * (1L << attempt)));
                        ++attempt;
                    }
                    if (!out.error.empty()) continue;
                    if (use_cache) {
                        // Single writer per key; identical content, so
                        // last-write-wins via atomic rename is safe.
                        const auto tmp = cache_file.string() + ".tmp." +
                                         std::to_string(std::hash<std::thread::id>{}(
                                             std::this_thread::get_id()));
                        {
                            std::ofstream f(tmp, std::ios::binary);
                            f << body;
                        }
                        std::filesystem::rename(tmp, cache_file);
                    }
                }
                PredictionVector pred =
                    parse_response_item(body, endpoint, batch[i].id, !out.from_cache);
                long k = static_cast<long>(pred.num_classes());
                long prev = -1;
                if (!expected_k.compare_exchange_strong(prev, k) && prev != k)
                    throw ProtocolError("item '" + batch[i].id + "' returned K=" + std::to_string(k) +
                                        " but the endpoint serves K=" + std::to_string(prev));
                out.prediction = std::move(pred);
            } catch (const ProtocolError&) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!protocol_failure) protocol_failure = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::min<int>(endpoint.max_in_flight, static_cast<int>(batch.size()));
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (protocol_failure) std::rethrow_exception(protocol_failure);
    return results;
}

GroupReport audit_groups(const EndpointConfig& endpoint, const std::vector<AuditGroup>& groups) {
    if (groups.empty()) throw InvalidInput("no audit groups given");
    for (const auto& g : groups) {
        if (g.samples.empty()) throw InvalidInput("group '" + g.name + "' is empty");
        std::vector<std::string> ids;
        for (const auto& s : g.samples) ids.push_back(s.id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw InvalidInput("group '" + g.name + "' has duplicate sample ids");
    }

    std::vector<AuditPayload> batch;
    for (const auto& g : groups)
        for (const auto& s : g.samples) batch.push_back({s.id, s.x});
    const std::vector<QueryResult> responses = query_predictions(endpoint, batch);

    GroupReport report;
    CompensatedSum overall_sum;
    std::uint64_t overall_count = 0;
    std::size_t cursor = 0;
    for (const auto& g : groups) {
        GroupResult gr;
        gr.name = g.name;
        CompensatedSum sum;
        std::uint64_t count = 0;
        for (const auto& s : g.samples) {
            const QueryResult& qr = responses[cursor++];
            if (!qr.prediction) {
                ++gr.failures;
                continue;
            }
            const double v = local_great_score(*qr.prediction, s.label).value;
            sum.add(v);
            overall_sum.add(v);
            ++count;
            ++overall_count;
        }
        if (count > 0) {
            gr.valid = true;
            gr.estimate.mean = sum.value() / static_cast<double>(count);
            gr.estimate.count = count;
        }
        report.total_failures += gr.failures;
        report.groups.push_back(std::move(gr));
    }
    if (overall_count == 0) throw EndpointError("every sample failed", 0);
    report.overall.mean = overall_sum.value() / static_cast<double>(overall_count);
    report.overall.count = overall_count;
    return report;
}

}  // namespace great
