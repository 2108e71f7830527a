#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "great/model.hpp"
#include "great/types.hpp"

namespace great {

// Certified local robustness score: sqrt(pi/2) * max{f_label - best other, 0}.
// Zero whenever the label is not the strict top-1 class (ties included).
LocalScore local_great_score(const PredictionVector& prediction, std::size_t label);

// Arithmetic mean under the fixed summation order (ascending index,
// compensated). Empty input is an error, not a silent zero.
GlobalEstimate great_score_mean(const std::vector<LocalScore>& scores);

// Sample planner for the mean-estimate guarantee: smallest n with
// 2*exp(-eps^2 n / 32e) <= delta. epsilon is in normalized gap units
// (classifier outputs in [0,1], the sqrt(pi/2) factor dropped); see
// sample_complexity_radius for radius units.
SamplePlan sample_complexity(double epsilon, double delta);

// Same planner with epsilon interpreted in L2-radius units: the tolerance is
// divided by sqrt(pi/2) before planning.
SamplePlan sample_complexity_radius(double epsilon_radius, double delta);

// Fraction of samples whose score strictly exceeds each radius. Radii must be
// strictly increasing; ties at a radius count as not certified.
RadiusCurve cumulative_certified_ra(const std::vector<LocalScore>& scores,
                                    const std::vector<double>& radii);

struct RunOptions {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    // Round-robin label draw (i mod K) instead of the default uniform one,
    // for exact per-class balance at small n.
    bool stratified_labels = false;
    // When set, sample i uses labels[i % labels.size()] instead of a class
    // draw (replay mode). Takes precedence over stratified_labels.
    std::optional<std::vector<std::size_t>> fixed_labels;
};

// Monte-Carlo score over a generator/classifier pair: per sample, draw a
// class uniformly, draw z, generate, classify + transform, score; then the
// compensated mean. Bit-identical for identical (seed, n, inputs), for any
// jobs value.
GlobalEstimate run_great_score(const GeneratorSpec& generator, const ClassifierHandle& classifier,
                               const TransformConfig& transform, std::uint64_t n,
                               const RunOptions& options);

// Per-sample scores behind run_great_score, in sample order. Shared by the
// estimate, the curve command, and the lab's paired-draw oracles.
std::vector<LocalScore> run_local_scores(const GeneratorSpec& generator,
                                         const ClassifierHandle& classifier,
                                         const TransformConfig& transform, std::uint64_t n,
                                         const RunOptions& options);

struct StabilityRow {
    std::uint64_t n = 0;
    double mean_of_means = 0.0;
    double std_of_means = 0.0;  // sample standard deviation over the repeats
};

// Repeats the estimate at each n with derived seeds and reports the spread.
std::vector<StabilityRow> score_stability_sweep(const GeneratorSpec& generator,
                                                const ClassifierHandle& classifier,
                                                const TransformConfig& transform,
                                                const std::vector<std::uint64_t>& n_values,
                                                std::uint64_t repeats, const RunOptions& options);

}  // namespace great
