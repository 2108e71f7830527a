#include "great/transform.hpp"

#include <algorithm>
#include <cmath>

#include "nlohmann/json.hpp"

namespace great {

namespace {

std::vector<double> sigmoid_vec(const std::vector<double>& logits, double t) {
    std::vector<double> out(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k)
        out[k] = 1.0 / (1.0 + std::exp(-logits[k] / t));
    return out;
}

std::vector<double> softmax_vec(const std::vector<double>& logits, double t) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double denom = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp((logits[k] - m) / t);
        denom += out[k];
    }
    for (auto& v : out) v /= denom;
    return out;
}

}  // namespace

void TransformConfig::validate() const {
    if (!(std::isfinite(t1) && t1 > 0.0))
        throw InvalidInput("sigmoid temperature t1 must be positive, got " + std::to_string(t1));
    if (!(std::isfinite(t2) && t2 > 0.0))
        throw InvalidInput("softmax temperature t2 must be positive, got " + std::to_string(t2));
}

const char* to_string(TransformMode mode) {
    switch (mode) {
        case TransformMode::IdentityClip: return "identity-clip";
        case TransformMode::SigmoidT: return "sigmoid-T";
        case TransformMode::SoftmaxT: return "softmax-T";
        case TransformMode::SigmoidAfterSoftmax: return "sigmoid-after-softmax";
        case TransformMode::SoftmaxAfterSigmoid: return "softmax-after-sigmoid";
    }
    return "?";
}

TransformMode transform_mode_from_string(const std::string& name) {
    if (name == "identity-clip") return TransformMode::IdentityClip;
    if (name == "sigmoid-T") return TransformMode::SigmoidT;
    if (name == "softmax-T") return TransformMode::SoftmaxT;
    if (name == "sigmoid-after-softmax") return TransformMode::SigmoidAfterSoftmax;
    if (name == "softmax-after-sigmoid") return TransformMode::SoftmaxAfterSigmoid;
    throw InvalidInput("unknown transform mode: " + name);
}

std::string transform_to_json(const TransformConfig& config) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(config.mode);
    j["t1"] = config.t1;
    j["t2"] = config.t2;
    return j.dump();
}

TransformConfig transform_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("bad transform JSON: ") + e.what());
    }
    TransformConfig cfg;
    cfg.mode = transform_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("t1")) cfg.t1 = j.at("t1").get<double>();
    if (j.contains("t2")) cfg.t2 = j.at("t2").get<double>();
    cfg.validate();
    return cfg;
}

PredictionVector apply_transform(const std::vector<double>& logits, const TransformConfig& config) {
    config.validate();
    if (logits.size() < 2)
        throw InvalidInput("need at least 2 logits, got " + std::to_string(logits.size()));
    for (std::size_t k = 0; k < logits.size(); ++k)
        if (!std::isfinite(logits[k]))
            throw InvalidInput("logit [" + std::to_string(k) + "] is not finite");

    std::vector<double> out;
    switch (config.mode) {
        case TransformMode::IdentityClip:
            out = logits;
            for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
            break;
        case TransformMode::SigmoidT:
            out = sigmoid_vec(logits, config.t1);
            break;
        case TransformMode::SoftmaxT:
            out = softmax_vec(logits, config.t2);
            break;
        case TransformMode::SigmoidAfterSoftmax:
            out = sigmoid_vec(softmax_vec(logits, 1.0), config.t1);
            break;
        case TransformMode::SoftmaxAfterSigmoid:
            out = softmax_vec(sigmoid_vec(logits, 1.0), config.t2);
            break;
    }
    return PredictionVector(std::move(out));
}

}  // namespace great
