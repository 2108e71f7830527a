#include "great/score.hpp"

#include <algorithm>
#include <cmath>

#include "great/parallel.hpp"
#include "great/sum.hpp"

namespace great {

LocalScore local_great_score(const PredictionVector& prediction, std::size_t label) {
    const std::size_t k_classes = prediction.num_classes();
    if (label >= k_classes)
        throw InvalidInput("label " + std::to_string(label) + " out of range for K=" +
                           std::to_string(k_classes));
    double best_other = -1.0;
    for (std::size_t k = 0; k < k_classes; ++k) {
        if (k == label) continue;
        if (prediction[k] > best_other) best_other = prediction[k];
    }
    const double gap = prediction[label] - best_other;
    return LocalScore{gap > 0.0 ? kGapToRadius * gap : 0.0};
}

GlobalEstimate great_score_mean(const std::vector<LocalScore>& scores) {
    if (scores.empty()) throw InvalidInput("empty sample set");
    CompensatedSum sum;
    for (const auto& s : scores) {
        if (!(std::isfinite(s.value) && s.value >= 0.0))
            throw InvalidInput("local scores must be finite and non-negative");
        sum.add(s.value);
    }
    GlobalEstimate est;
    est.mean = sum.value() / static_cast<double>(scores.size());
    est.count = scores.size();
    return est;
}

namespace {

double outage_bound(double epsilon, double delta, double n) {
    (void)delta;
    return 2.0 * std::exp(-(epsilon * epsilon) * n / (32.0 * 2.718281828459045));
}

}  // namespace

SamplePlan sample_complexity(double epsilon, double delta) {
    if (!(std::isfinite(epsilon) && epsilon > 0.0))
        throw InvalidInput("epsilon must be positive");
    if (!(std::isfinite(delta) && delta > 0.0 && delta < 1.0))
        throw InvalidInput("delta must be in (0,1)");
    const double e = 2.718281828459045;
    const double raw = 32.0 * e * std::log(2.0 / delta) / (epsilon * epsilon);
    if (raw > 9.0e18) throw InvalidInput("sample plan overflows: tolerance too tight");
    std::uint64_t n = static_cast<std::uint64_t>(std::ceil(raw));
    if (n == 0) n = 1;
    // Tight ceiling: nudge so that n satisfies the bound and n-1 does not.
    while (outage_bound(epsilon, delta, static_cast<double>(n)) > delta) ++n;
    while (n > 1 && outage_bound(epsilon, delta, static_cast<double>(n - 1)) <= delta) --n;
    return SamplePlan{epsilon, delta, n};
}

SamplePlan sample_complexity_radius(double epsilon_radius, double delta) {
    if (!(std::isfinite(epsilon_radius) && epsilon_radius > 0.0))
        throw InvalidInput("epsilon must be positive");
    SamplePlan plan = sample_complexity(epsilon_radius / kGapToRadius, delta);
    plan.epsilon = epsilon_radius;
    return plan;
}

RadiusCurve cumulative_certified_ra(const std::vector<LocalScore>& scores,
                                    const std::vector<double>& radii) {
    if (scores.empty()) throw InvalidInput("empty sample set");
    if (radii.empty()) throw InvalidInput("empty radius list");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(std::isfinite(radii[i]) && radii[i] >= 0.0))
            throw InvalidInput("radii must be finite and >= 0");
        if (i > 0 && !(radii[i] > radii[i - 1]))
            throw InvalidInput("radii must be strictly increasing");
    }
    RadiusCurve curve;
    curve.points.reserve(radii.size());
    const double n = static_cast<double>(scores.size());
    for (double r : radii) {
        std::size_t above = 0;
        for (const auto& s : scores)
            if (s.value > r) ++above;
        curve.points.push_back({r, static_cast<double>(above) / n});
    }
    return curve;
}

std::vector<LocalScore> run_local_scores(const GeneratorSpec& generator,
                                         const ClassifierHandle& classifier,
                                         const TransformConfig& transform, std::uint64_t n,
                                         const RunOptions& options) {
    generator.validate();
    transform.validate();
    if (n == 0) throw InvalidInput("need n >= 1 samples");
    if (!classifier.evaluate) throw InvalidInput("classifier handle is empty");
    const std::size_t k_classes = generator.num_classes();
    if (classifier.num_classes != 0 && classifier.num_classes != k_classes)
        throw InvalidInput("generator has " + std::to_string(k_classes) + " classes but classifier has " +
                           std::to_string(classifier.num_classes));
    if (options.fixed_labels && options.fixed_labels->empty())
        throw InvalidInput("fixed label sequence is empty");

    std::vector<LocalScore> scores(n);
    parallel_for(static_cast<std::size_t>(n), options.jobs, [&](std::size_t i) {
        RandomStream stream(child_seed(options.seed, i));
        std::size_t label;
        if (options.fixed_labels) {
            label = (*options.fixed_labels)[i % options.fixed_labels->size()];
            if (label >= k_classes) throw InvalidInput("fixed label out of range");
        } else if (options.stratified_labels) {
            label = i % k_classes;
        } else {
            label = static_cast<std::size_t>(stream.uniform_int(k_classes));
        }
        SamplePoint sample = generate_with_stream(generator, label, stream);
        const std::vector<double> raw = classifier.evaluate(sample.x);
        if (raw.size() != k_classes)
            throw InvalidInput("classifier returned " + std::to_string(raw.size()) +
                               " outputs, expected " + std::to_string(k_classes));
        scores[i] = local_great_score(apply_transform(raw, transform), label);
    });
    return scores;
}

GlobalEstimate run_great_score(const GeneratorSpec& generator, const ClassifierHandle& classifier,
                               const TransformConfig& transform, std::uint64_t n,
                               const RunOptions& options) {
    return great_score_mean(run_local_scores(generator, classifier, transform, n, options));
}

std::vector<StabilityRow> score_stability_sweep(const GeneratorSpec& generator,
                                                const ClassifierHandle& classifier,
                                                const TransformConfig& transform,
                                                const std::vector<std::uint64_t>& n_values,
                                                std::uint64_t repeats, const RunOptions& options) {
    if (repeats < 2) throw InvalidInput("stability sweep needs repeats >= 2");
    if (n_values.empty()) throw InvalidInput("no sample counts given");

    std::vector<StabilityRow> rows;
    rows.reserve(n_values.size());
    for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        const std::uint64_t run_seed_base = child_seed(options.seed, ni);
        std::vector<double> means(repeats);
        for (std::uint64_t r = 0; r < repeats; ++r) {
            RunOptions rep = options;
            rep.seed = child_seed(run_seed_base, r);
            means[r] = run_great_score(generator, classifier, transform, n_values[ni], rep).mean;
        }
        CompensatedSum sum;
        for (double m : means) sum.add(m);
        const double mean = sum.value() / static_cast<double>(repeats);
        double stddev = 0.0;
        // Identical repeats have zero spread by definition; the two-pass
        // formula below would otherwise pick up the rounding of `mean`.
        if (std::any_of(means.begin(), means.end(), [&](double m) { return m != means[0]; })) {
            CompensatedSum sq, lin;
            for (double m : means) {
                sq.add((m - mean) * (m - mean));
                lin.add(m - mean);
            }
            const double correction = lin.value() * lin.value() / static_cast<double>(repeats);
            const double var =
                std::max(0.0, sq.value() - correction) / static_cast<double>(repeats - 1);
            stddev = std::sqrt(var);
        }
        rows.push_back({n_values[ni], mean, stddev});
    }
    return rows;
}

}  // namespace great
