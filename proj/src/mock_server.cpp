#include "great/mock_server.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "great/rng.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace great {

struct MockServer::Impl {
    Options options;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<std::size_t> hits{0};
    std::chrono::steady_clock::time_point started;
    mutable std::mutex times_mutex;
    std::vector<double> times_ms;
};

MockServer::MockServer(Options options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
}

MockServer::~MockServer() { stop(); }

void MockServer::start() {
    Impl* impl = impl_.get();
    impl->server.Post("/predict", [impl](const httplib::Request& req, httplib::Response& res) {
        const std::size_t n = impl->hits.fetch_add(1);
        {
            std::lock_guard<std::mutex> lock(impl->times_mutex);
            impl->times_ms.push_back(std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - impl->started).count());
        }
        const Options& opt = impl->options;

        int latency = opt.latency_ms;
        if (opt.random_latency_ms > 0) {
            RandomStream stream(child_seed(opt.seed, n));
            latency += static_cast<int>(stream.uniform_int(opt.random_latency_ms));
        }
        if (latency > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency));

        if (!opt.required_auth.empty() && req.get_header_value("Authorization") != opt.required_auth) {
            res.status = 401;
            return;
        }
        if (n < opt.status_schedule.size() && opt.status_schedule[n] != 200) {
            res.status = opt.status_schedule[n];
            return;
        }

        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (...) {
            res.status = 400;
            return;
        }
        if (!body.contains("instances") || !body["instances"].is_array()) {
            res.status = 400;
            return;
        }
        nlohmann::ordered_json predictions = nlohmann::ordered_json::array();
        for (const auto& inst : body["instances"]) {
            const std::string id = inst.value("id", "");
            std::vector<double> probs = opt.constant_probs;
            if (auto it = opt.probs_by_id.find(id); it != opt.probs_by_id.end()) probs = it->second;
            if (opt.out_of_range_probs) probs = {1.7, -0.2};

            nlohmann::ordered_json item;
            item["id"] = opt.wrong_id ? id + "-mangled" : id;
            if (!opt.named_classes.empty()) {
                nlohmann::ordered_json named;
                for (std::size_t k = 0; k < opt.named_classes.size() && k < probs.size(); ++k)
                    named[opt.named_classes[k]] = probs[k];
                item["probs"] = named;
            } else {
                item["probs"] = probs;
            }
            predictions.push_back(item);
        }
        nlohmann::ordered_json out;
        out["predictions"] = predictions;
        res.set_content(out.dump(), "application/json");
    });

    impl->port = impl->server.bind_to_any_port("127.0.0.1");
    if (impl->port <= 0) throw std::runtime_error("mock server failed to bind");
    impl->started = std::chrono::steady_clock::now();
    impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
}

void MockServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port) + "/predict";
}

std::size_t MockServer::hit_count() const { return impl_->hits.load(); }

std::vector<double> MockServer::hit_times_ms() const {
    std::lock_guard<std::mutex> lock(impl_->times_mutex);
    return impl_->times_ms;
}

}  // namespace great
