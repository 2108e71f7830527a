#pragma once

#include <limits>
#include <string>
#include <vector>

#include "great/transform.hpp"
#include "great/types.hpp"

namespace great {

// A named sequence of reals, one entry per model, for rank statistics.
struct RankSeries {
    std::vector<std::string> keys;
    std::vector<double> values;
};

// Spearman's rank correlation with fractional (average) ranks on ties.
// Constant series have no defined correlation and are rejected.
double spearman(const RankSeries& a, const RankSeries& b);

struct RankMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rho;  // symmetric, diagonal 1.0
};

// Pairwise Spearman coefficients over >= 2 named series with matching keys.
RankMatrix rank_report(const std::vector<std::string>& names,
                       const std::vector<RankSeries>& series);

// One model's logits over the common sample set.
struct ModelLogits {
    struct Sample {
        std::string id;
        std::size_t label = 0;
        std::vector<double> logits;
    };
    std::string name;
    std::vector<Sample> samples;
};

struct TemperatureGrid {
    double lo = 0.0;
    double hi = 2.0;
    double step = 0.00001;
};

// Sentinel recorded in the trace when the score series is constant at some
// temperature (correlation undefined there); never selected as the best.
inline constexpr double kDegenerateRho = -std::numeric_limits<double>::infinity();

struct TracePoint {
    double temperature = 0.0;
    double rho = 0.0;
};

struct CalibrationResult {
    TransformConfig best_config;
    double best_rho = 0.0;
    std::vector<TracePoint> trace;  // in grid order
};

// Grid search for the outer temperature of `mode` maximizing Spearman
// correlation between per-model mean scores and the reference series.
// Endpoints inclusive; T = 0 is replaced by the minimum admissible
// temperature; ties go to the smallest temperature. Deterministic for any
// jobs value (trace assembled in grid order).
CalibrationResult calibrate(const std::vector<ModelLogits>& models, const RankSeries& reference,
                            TransformMode mode, const TemperatureGrid& grid, unsigned jobs = 1);

}  // namespace great
