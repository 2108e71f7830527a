#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "great/audit.hpp"
#include "great/calibrate.hpp"
#include "great/io.hpp"
#include "great/lab.hpp"
#include "great/report.hpp"
#include "great/score.hpp"
#include "great/verify.hpp"
#include "nlohmann/json.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitEndpoint = 3;
constexpr int kExitInvariant = 4;
constexpr const char* kVersion = "0.1.0";

struct GlobalFlags {
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string out;
    std::string transform;
    double t1 = 1.0;
    double t2 = 1.0;
    unsigned jobs = 1;
    std::string timing_out;
};

struct EndpointFlags {
    std::string url;
    std::string auth_header;
    int timeout_ms = 10000;
    int max_in_flight = 4;
    double rate_limit = 50.0;
    int max_retries = 3;
    std::string cache_dir;
    int backoff_base_ms = 100;
    std::string class_manifest;
    bool renormalize = false;

    great::EndpointConfig build() const {
        great::EndpointConfig cfg;
        cfg.url = url;
        // Environment override for the auth header only.
        if (const char* env = std::getenv("GREATSCORE_AUTH_HEADER"); env && *env)
            cfg.auth_header = std::string(env);
        else if (!auth_header.empty())
            cfg.auth_header = auth_header;
        cfg.timeout_ms = timeout_ms;
        cfg.max_in_flight = max_in_flight;
        cfg.rate_limit_per_s = rate_limit;
        cfg.max_retries = max_retries;
        if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
        cfg.backoff_base_ms = backoff_base_ms;
        if (!class_manifest.empty()) {
            std::istringstream in(great::read_file(class_manifest));
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (!line.empty()) cfg.class_manifest.push_back(line);
            }
        }
        cfg.renormalize = renormalize;
        return cfg;
    }
};

void add_endpoint_flags(CLI::App* cmd, EndpointFlags& flags, bool required) {
    auto* url = cmd->add_option("--endpoint", flags.url, "Prediction endpoint url (http://...)");
    if (required) url->required();
    cmd->add_option("--auth-header", flags.auth_header,
                    "Authorization header value (env GREATSCORE_AUTH_HEADER overrides)");
    cmd->add_option("--timeout-ms", flags.timeout_ms, "Per-request timeout");
    cmd->add_option("--max-in-flight", flags.max_in_flight, "Concurrent requests");
    cmd->add_option("--rate-limit", flags.rate_limit, "Requests per second");
    cmd->add_option("--max-retries", flags.max_retries, "Retries for 429/5xx/timeouts");
    cmd->add_option("--cache-dir", flags.cache_dir, "Content-addressed response cache directory");
    cmd->add_option("--backoff-base-ms", flags.backoff_base_ms, "Base retry delay");
    cmd->add_option("--class-manifest", flags.class_manifest,
                    "File listing class names, one per line, for named-probability responses");
    cmd->add_flag("--renormalize", flags.renormalize,
                  "Divide named probabilities by their sum when positive");
}

std::optional<great::TransformConfig> transform_from_flags(const GlobalFlags& flags) {
    if (flags.transform.empty()) return std::nullopt;
    great::TransformConfig cfg;
    cfg.mode = great::transform_mode_from_string(flags.transform);
    cfg.t1 = flags.t1;
    cfg.t2 = flags.t2;
    cfg.validate();
    return cfg;
}

// Deterministic provenance record written next to each --out artifact.
void write_manifest(const std::string& command, const GlobalFlags& flags,
                    const std::vector<std::string>& inputs,
                    const nlohmann::ordered_json& config) {
    if (flags.out.empty()) return;
    nlohmann::ordered_json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = flags.seed;
    m["format"] = flags.format;
    m["jobs"] = flags.jobs;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = nlohmann::ordered_json::array({flags.out});
    great::write_report(m.dump(2) + "\n", flags.out + ".manifest.json");
}

void emit(const std::string& content, const GlobalFlags& flags) {
    if (flags.out.empty())
        std::cout << content;
    else
        great::write_report(content, flags.out);
}

void emit_timing(const GlobalFlags& flags, const std::string& operation, std::uint64_t samples,
                 double total_s) {
    if (flags.timing_out.empty()) return;
    great::TimingRecord record{operation, samples, total_s,
                               samples ? total_s / static_cast<double>(samples) : 0.0};
    great::write_report(
        great::render_timing({record}, great::report_format_from_string(flags.format)),
        flags.timing_out);
}

std::vector<great::LocalScore> scores_from_predictions(
    const std::vector<great::LabeledPrediction>& predictions) {
    std::vector<great::LocalScore> scores;
    scores.reserve(predictions.size());
    for (const auto& p : predictions)
        scores.push_back(great::local_great_score(p.prediction, p.label));
    return scores;
}

std::vector<great::LocalScore> scores_from_endpoint(const great::EndpointConfig& endpoint,
                                                    const std::vector<great::SamplePoint>& samples) {
    std::vector<great::AuditPayload> batch;
    batch.reserve(samples.size());
    for (const auto& s : samples) batch.push_back({s.id, s.x});
    const auto results = great::query_predictions(endpoint, batch);
    std::vector<great::LocalScore> scores;
    scores.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!results[i].prediction)
            throw great::EndpointError(results[i].error, scores.size());
        scores.push_back(great::local_great_score(*results[i].prediction, samples[i].label));
    }
    return scores;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Certified global robustness scoring from classifier confidences.\n"
        "Exit codes: 0 success, 1 usage, 2 input validation, 3 endpoint failure,\n"
        "4 invariant violation (verify)."};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalFlags flags;
    app.add_option("--seed", flags.seed, "Random seed (default 0)");
    app.add_option("--format", flags.format, "Output format: json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", flags.out, "Write the artifact here (stdout otherwise)");
    app.add_option("--transform", flags.transform,
                   "Output transform: identity-clip, sigmoid-T, softmax-T, "
                   "sigmoid-after-softmax, softmax-after-sigmoid");
    app.add_option("--t1", flags.t1, "Sigmoid temperature");
    app.add_option("--t2", flags.t2, "Softmax temperature");
    app.add_option("--jobs", flags.jobs, "Worker threads (never changes numerical output)");
    app.add_option("--timing", flags.timing_out, "Also write a wall-clock timing record here");

    // score
    auto* score = app.add_subcommand("score", "Global score from predictions, a generator run, or an endpoint");
    std::string score_predictions, score_generator, score_model, score_samples, score_sweep;
    std::uint64_t score_n = 500;
    std::uint64_t score_repeats = 20;
    double score_epsilon = 0.0, score_delta = 0.0;
    EndpointFlags score_endpoint;
    score->add_option("--predictions", score_predictions, "Predictions JSONL (id, label, probs|logits)");
    score->add_option("--generator", score_generator, "Generator spec JSON");
    score->add_option("--model", score_model, "Affine model JSON (with --generator)");
    score->add_option("-n,--samples-count", score_n, "Samples to draw from the generator");
    score->add_option("--samples", score_samples, "Samples JSONL for endpoint scoring");
    score->add_option("--sweep", score_sweep, "Stability sweep: comma-separated n values");
    score->add_option("--repeats", score_repeats, "Runs per sweep point");
    score->add_option("--epsilon", score_epsilon, "Attach an (epsilon, delta) guarantee");
    score->add_option("--delta", score_delta, "Attach an (epsilon, delta) guarantee");
    bool score_stratified = false;
    score->add_flag("--stratified", score_stratified,
                    "Round-robin class labels instead of uniform draws");
    add_endpoint_flags(score, score_endpoint, false);

    // plan
    auto* plan = app.add_subcommand("plan", "Sample-size plan for an (epsilon, delta) guarantee");
    double plan_epsilon = 0.0, plan_delta = 0.0;
    bool plan_radius_units = false;
    plan->add_option("--epsilon", plan_epsilon, "Tolerance (normalized gap units)")->required();
    plan->add_option("--delta", plan_delta, "Outage probability in (0,1)")->required();
    plan->add_flag("--radius-units", plan_radius_units,
                   "Interpret epsilon in L2-radius units (divides by sqrt(pi/2))");

    // curve
    auto* curve = app.add_subcommand("curve", "Cumulative certified robust-accuracy curve");
    std::string curve_predictions, curve_generator, curve_model;
    std::uint64_t curve_n = 500;
    double rmin = 0.0, rmax = 1.0, rstep = 0.05;
    curve->add_option("--predictions", curve_predictions, "Predictions JSONL");
    curve->add_option("--generator", curve_generator, "Generator spec JSON");
    curve->add_option("--model", curve_model, "Affine model JSON");
    curve->add_option("-n,--samples-count", curve_n, "Samples to draw from the generator");
    curve->add_option("--rmin", rmin, "Smallest radius");
    curve->add_option("--rmax", rmax, "Largest radius");
    curve->add_option("--rstep", rstep, "Radius increment");

    // calibrate
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Temperature grid search against reference distortions");
    std::string cal_logits, cal_reference, cal_mode = "softmax-after-sigmoid";
    great::TemperatureGrid grid;
    std::size_t trace_stride = 1;
    calibrate_cmd->add_option("--logits", cal_logits, "Logits bundle JSONL (model, id, label, logits)")->required();
    calibrate_cmd->add_option("--reference", cal_reference, "Reference CSV (model,distortion)")->required();
    calibrate_cmd->add_option("--mode", cal_mode, "Transform mode to calibrate");
    calibrate_cmd->add_option("--grid-lo", grid.lo, "Grid lower endpoint");
    calibrate_cmd->add_option("--grid-hi", grid.hi, "Grid upper endpoint");
    calibrate_cmd->add_option("--grid-step", grid.step, "Grid step");
    calibrate_cmd->add_option("--trace-stride", trace_stride, "Thin the emitted trace");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Run the theory property suites");
    std::string suite = "all";
    verify_cmd->add_option("--suite", suite,
                           "certificate|sandwich|lipschitz|concentration|curve|planner|all");

    // audit
    auto* audit_cmd = app.add_subcommand("audit", "Group-wise endpoint audit");
    std::string groups_file;
    EndpointFlags audit_endpoint;
    audit_cmd->add_option("--groups", groups_file, "Groups manifest JSON")->required();
    add_endpoint_flags(audit_cmd, audit_endpoint, true);

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Pairwise Spearman matrix over a metric table");
    std::string metrics_file;
    rank_cmd->add_option("--metrics", metrics_file, "CSV: name,<metric>,<metric>,...")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    const auto format = [&] { return great::report_format_from_string(flags.format); };

    try {
        if (score->parsed()) {
            const int modes = (!score_predictions.empty() ? 1 : 0) +
                              (!score_generator.empty() ? 1 : 0) +
                              (!score_endpoint.url.empty() ? 1 : 0);
            if (modes != 1)
                throw great::InvalidInput(
                    "score needs exactly one of --predictions, --generator, --endpoint");

            const auto started = std::chrono::steady_clock::now();
            nlohmann::ordered_json config;
            std::vector<std::string> inputs;
            std::string content;
            std::uint64_t processed = 0;

            if (!score_sweep.empty()) {
                if (score_generator.empty() || score_model.empty())
                    throw great::InvalidInput("--sweep needs --generator and --model");
                const auto gen = great::load_generator(score_generator);
                const auto model = great::load_affine_model(score_model);
                const auto transform = transform_from_flags(flags).value_or(model.transform);
                std::vector<std::uint64_t> n_values;
                std::stringstream ss(score_sweep);
                std::string tok;
                while (std::getline(ss, tok, ',')) n_values.push_back(std::stoull(tok));
                great::RunOptions opts;
                opts.seed = flags.seed;
                opts.jobs = flags.jobs;
                const auto rows = great::score_stability_sweep(
                    gen, model.logit_classifier(), transform, n_values, score_repeats, opts);
                content = great::render_stability(rows, format());
                for (auto n : n_values) processed += n * score_repeats;
                config["sweep"] = score_sweep;
                config["repeats"] = score_repeats;
                inputs = {score_generator, score_model};
            } else if (!score_predictions.empty()) {
                const auto predictions =
                    great::load_predictions_jsonl(score_predictions, transform_from_flags(flags));
                const auto estimate = great::great_score_mean(scores_from_predictions(predictions));
                content = great::render_estimate(estimate, format());
                processed = estimate.count;
                inputs = {score_predictions};
            } else if (!score_generator.empty()) {
                if (score_model.empty())
                    throw great::InvalidInput("--generator needs --model");
                const auto gen = great::load_generator(score_generator);
                const auto model = great::load_affine_model(score_model);
                const auto transform = transform_from_flags(flags).value_or(model.transform);
                great::RunOptions opts;
                opts.seed = flags.seed;
                opts.jobs = flags.jobs;
                opts.stratified_labels = score_stratified;
                auto estimate =
                    great::run_great_score(gen, model.logit_classifier(), transform, score_n, opts);
                if (score_epsilon > 0.0) {
                    const auto required = great::sample_complexity(score_epsilon, score_delta);
                    if (estimate.count < required.n)
                        throw great::InvalidInput(
                            "guarantee needs n >= " + std::to_string(required.n) + ", got " +
                            std::to_string(estimate.count));
                    estimate.guarantee = great::Guarantee{score_epsilon, score_delta};
                }
                content = great::render_estimate(estimate, format());
                processed = estimate.count;
                config["n"] = score_n;
                config["stratified"] = score_stratified;
                inputs = {score_generator, score_model};
            } else {
                if (score_samples.empty())
                    throw great::InvalidInput("--endpoint needs --samples");
                const auto samples = great::load_samples_jsonl(score_samples);
                const auto endpoint = score_endpoint.build();
                const auto estimate =
                    great::great_score_mean(scores_from_endpoint(endpoint, samples));
                content = great::render_estimate(estimate, format());
                processed = estimate.count;
                config["endpoint"] = score_endpoint.url;
                inputs = {score_samples};
            }
            emit(content, flags);
            write_manifest("score", flags, inputs, config);
            emit_timing(flags, "score", processed,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                            .count());
        } else if (plan->parsed()) {
            const auto result = plan_radius_units
                                    ? great::sample_complexity_radius(plan_epsilon, plan_delta)
                                    : great::sample_complexity(plan_epsilon, plan_delta);
            emit(great::render_plan(result, format()), flags);
            nlohmann::ordered_json config;
            config["epsilon"] = plan_epsilon;
            config["delta"] = plan_delta;
            config["radius_units"] = plan_radius_units;
            write_manifest("plan", flags, {}, config);
        } else if (curve->parsed()) {
            std::vector<great::LocalScore> scores;
            std::vector<std::string> inputs;
            if (!curve_predictions.empty()) {
                scores = scores_from_predictions(
                    great::load_predictions_jsonl(curve_predictions, transform_from_flags(flags)));
                inputs = {curve_predictions};
            } else if (!curve_generator.empty() && !curve_model.empty()) {
                const auto gen = great::load_generator(curve_generator);
                const auto model = great::load_affine_model(curve_model);
                const auto transform = transform_from_flags(flags).value_or(model.transform);
                great::RunOptions opts;
                opts.seed = flags.seed;
                opts.jobs = flags.jobs;
                scores = great::run_local_scores(gen, model.logit_classifier(), transform, curve_n, opts);
                inputs = {curve_generator, curve_model};
            } else {
                throw great::InvalidInput("curve needs --predictions or --generator/--model");
            }
            if (!(rstep > 0.0) || rmax < rmin) throw great::InvalidInput("bad radius range");
            std::vector<double> radii;
            for (double r = rmin; r <= rmax + rstep * 1e-9; r += rstep) radii.push_back(r);
            emit(great::render_curve(great::cumulative_certified_ra(scores, radii), format()), flags);
            nlohmann::ordered_json config;
            config["rmin"] = rmin;
            config["rmax"] = rmax;
            config["rstep"] = rstep;
            write_manifest("curve", flags, inputs, config);
        } else if (calibrate_cmd->parsed()) {
            const auto models = great::load_logits_bundle(cal_logits);
            const auto reference = great::load_reference_csv(cal_reference);
            const auto mode = great::transform_mode_from_string(cal_mode);
            const auto result = great::calibrate(models, reference, mode, grid, flags.jobs);
            emit(great::render_calibration(result, format(), trace_stride), flags);
            nlohmann::ordered_json config;
            config["mode"] = cal_mode;
            config["grid_lo"] = grid.lo;
            config["grid_hi"] = grid.hi;
            config["grid_step"] = grid.step;
            config["trace_stride"] = trace_stride;
            write_manifest("calibrate", flags, {cal_logits, cal_reference}, config);
        } else if (verify_cmd->parsed()) {
            const auto checks = great::verify_suite(suite, flags.seed, flags.jobs);
            bool all_passed = true;
            std::string lines;
            for (const auto& c : checks) {
                all_passed = all_passed && c.passed;
                lines += std::string(c.passed ? "[PASS] " : "[FAIL] ") + c.suite + ": " + c.name +
                         " (" + c.detail + ")\n";
            }
            std::cout << lines;
            if (!flags.out.empty()) {
                std::string artifact = "suite,name,passed\n";
                for (const auto& c : checks)
                    artifact += c.suite + "," + c.name + "," + (c.passed ? "1" : "0") + "\n";
                great::write_report(artifact, flags.out);
                nlohmann::ordered_json config;
                config["suite"] = suite;
                write_manifest("verify", flags, {}, config);
            }
            if (!all_passed) return kExitInvariant;
        } else if (audit_cmd->parsed()) {
            const auto groups = great::load_groups_manifest(groups_file);
            const auto endpoint = audit_endpoint.build();
            const auto report = great::audit_groups(endpoint, groups);
            emit(great::render_group_report(report, format()), flags);
            nlohmann::ordered_json config;
            config["endpoint"] = audit_endpoint.url;
            write_manifest("audit", flags, {groups_file}, config);
        } else if (rank_cmd->parsed()) {
            std::vector<std::string> names;
            std::vector<great::RankSeries> series;
            great::load_metric_table(metrics_file, names, series);
            emit(great::render_rank_matrix(great::rank_report(names, series), format()), flags);
            write_manifest("rank", flags, {metrics_file}, nlohmann::ordered_json::object());
        }
    } catch (const great::ProtocolError& e) {
        std::cerr << "endpoint protocol error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const great::EndpointError& e) {
        std::cerr << "endpoint failure after " << e.completed()
                  << " completed samples: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const great::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
