#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace great {

// sqrt(pi/2): scale between a confidence gap and a certified L2 radius.
inline constexpr double kGapToRadius = 1.2533141373155003;
// sqrt(2/pi): global Lipschitz constant of a [0,1]-valued function smoothed
// by a unit Gaussian.
inline constexpr double kSmoothedLipschitz = 0.7978845608028654;

// Rejected input (bad confidences, out-of-range labels, malformed files, ...).
// The CLI maps this to exit code 2.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Remote endpoint failure after retries. `completed` carries partial progress
// so an aborted run can report how far it got. CLI exit code 3.
class EndpointError : public std::runtime_error {
public:
    EndpointError(const std::string& what, std::size_t completed = 0)
        : std::runtime_error(what), completed_(completed) {}
    std::size_t completed() const { return completed_; }

private:
    std::size_t completed_;
};

// Response violated the wire protocol (wrong K, confidence outside [0,1], ...).
class ProtocolError : public EndpointError {
public:
    explicit ProtocolError(const std::string& what) : EndpointError(what) {}
};

// K class confidences, each finite and in [0,1]. Sigmoid outputs are fine:
// no sum-to-one requirement.
class PredictionVector {
public:
    explicit PredictionVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2)
            throw InvalidInput("prediction vector needs at least 2 classes, got " +
                               std::to_string(values_.size()));
        for (std::size_t k = 0; k < values_.size(); ++k) {
            const double v = values_[k];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw InvalidInput("confidence [" + std::to_string(k) + "] = " +
                                   std::to_string(v) + " is outside [0,1]");
        }
    }

    std::size_t num_classes() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

struct LabeledPrediction {
    std::string id;
    std::size_t label;
    PredictionVector prediction;

    LabeledPrediction(std::string id_, std::size_t label_, PredictionVector pred)
        : id(std::move(id_)), label(label_), prediction(std::move(pred)) {
        if (label >= prediction.num_classes())
            throw InvalidInput("label " + std::to_string(label) + " out of range for K=" +
                               std::to_string(prediction.num_classes()));
    }
};

// Certified per-sample radius, in L2 units. Bounded by sqrt(pi/2) whenever
// the confidences lie in [0,1].
struct LocalScore {
    double value = 0.0;
};

struct Guarantee {
    double epsilon = 0.0;  // > 0
    double delta = 0.0;    // in (0,1)
};

struct GlobalEstimate {
    double mean = 0.0;
    std::uint64_t count = 0;
    std::optional<Guarantee> guarantee;
};

struct SamplePlan {
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t n = 0;
};

struct RadiusPoint {
    double radius = 0.0;
    double certified_fraction = 0.0;
};

// Radii strictly increasing, certified fraction non-increasing.
struct RadiusCurve {
    std::vector<RadiusPoint> points;
};

}  // namespace great
