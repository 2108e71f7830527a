#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace great {

// In-process prediction endpoint speaking the audit wire protocol, with
// scriptable latency and failure schedules. Used by the test suites and the
// bundled mock-server tool.
class MockServer {
public:
    struct Options {
        // Status code per request arrival order; requests beyond the schedule
        // get 200.
        std::vector<int> status_schedule;
        int latency_ms = 0;
        // Adds uniform extra latency in [0, random_latency_ms) per request, so
        // concurrent completions come back out of order.
        int random_latency_ms = 0;
        std::uint64_t seed = 1;
        // Response content: per-id script first, then the constant fallback.
        std::map<std::string, std::vector<double>> probs_by_id;
        std::vector<double> constant_probs{0.9, 0.1};
        // When set, respond with named-class objects instead of arrays.
        std::vector<std::string> named_classes;
        // Fault injection for protocol tests.
        bool wrong_id = false;
        bool out_of_range_probs = false;
        std::string required_auth;  // when set, mismatching Authorization -> 401
    };

    explicit MockServer(Options options);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds to an ephemeral 127.0.0.1 port and serves until stop().
    void start();
    void stop();

    int port() const;
    std::string url() const;  // http://127.0.0.1:<port>/predict

    // Observability for the tests.
    std::size_t hit_count() const;
    // Arrival times in milliseconds since start(), in arrival order.
    std::vector<double> hit_times_ms() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace great
