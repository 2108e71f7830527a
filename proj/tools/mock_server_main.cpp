#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "great/mock_server.hpp"
#include "nlohmann/json.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

great::MockServer::Options options_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto j = nlohmann::json::parse(ss.str());

    great::MockServer::Options opt;
    if (j.contains("status_schedule"))
        opt.status_schedule = j["status_schedule"].get<std::vector<int>>();
    opt.latency_ms = j.value("latency_ms", 0);
    opt.random_latency_ms = j.value("random_latency_ms", 0);
    opt.seed = j.value("seed", 1ULL);
    if (j.contains("constant_probs"))
        opt.constant_probs = j["constant_probs"].get<std::vector<double>>();
    if (j.contains("probs_by_id"))
        for (const auto& [id, probs] : j["probs_by_id"].items())
            opt.probs_by_id[id] = probs.get<std::vector<double>>();
    if (j.contains("named_classes"))
        opt.named_classes = j["named_classes"].get<std::vector<std::string>>();
    opt.required_auth = j.value("required_auth", std::string());
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scriptable mock prediction endpoint for audit tests"};
    std::string config_path;
    app.add_option("--config", config_path, "Behavior script JSON");
    CLI11_PARSE(app, argc, argv);

    try {
        great::MockServer server(config_path.empty() ? great::MockServer::Options{}
                                                     : options_from_json(config_path));
        server.start();
        std::cout << server.url() << std::endl;  // callers scrape the bound port

        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "mock server error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
