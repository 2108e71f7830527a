#pragma once

#include <string>
#include <vector>

#include "great/types.hpp"

namespace great {

// Output-layer designs mapping raw logits into [0,1]^K confidences.
// identity-clip just clamps (for models whose outputs are already
// confidence-like); the other four are the temperature calibration variants.
// Composite modes run the inner map at temperature 1.
enum class TransformMode {
    IdentityClip,
    SigmoidT,
    SoftmaxT,
    SigmoidAfterSoftmax,
    SoftmaxAfterSigmoid,
};

// Smallest temperature the calibration grid may propose (one grid step).
inline constexpr double kMinTemperature = 1e-5;

struct TransformConfig {
    TransformMode mode = TransformMode::SoftmaxAfterSigmoid;
    double t1 = 1.0;  // sigmoid temperature
    double t2 = 1.0;  // softmax temperature

    void validate() const;
};

const char* to_string(TransformMode mode);
TransformMode transform_mode_from_string(const std::string& name);

// Serialized form: {"mode": <string>, "t1": <number>, "t2": <number>}.
std::string transform_to_json(const TransformConfig& config);
TransformConfig transform_from_json(const std::string& json_text);

// Maps finite logits into [0,1]^K. Softmax uses max-subtraction, so even
// |logit| = 1e4 stays finite. Every mode preserves the argmax.
PredictionVector apply_transform(const std::vector<double>& logits, const TransformConfig& config);

}  // namespace great
