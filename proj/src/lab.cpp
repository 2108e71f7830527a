#include "great/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "great/parallel.hpp"
#include "great/sum.hpp"

namespace great {

namespace {

// Strict top-1: the label beats every other class. Returns the best other
// class index through `runner_up`.
bool strictly_top1(const std::vector<double>& outputs, std::size_t label, std::size_t& runner_up) {
    runner_up = label == 0 ? 1 : 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        if (k == label) continue;
        if (outputs[k] > best) {
            best = outputs[k];
            runner_up = k;
        }
    }
    return outputs[label] > best;
}

double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

MinPerturbationResult exact_min_perturbation(const AffineModel& model, const SamplePoint& x) {
    model.validate();
    if (x.label >= model.num_classes()) throw InvalidInput("sample label out of range");
    const std::vector<double> z = model.logits(x.x);

    std::size_t runner_up;
    if (!strictly_top1(z, x.label, runner_up))
        return {0.0, runner_up, MinPerturbationKind::Exact};

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = x.label;
    const auto& wc = model.W[x.label];
    for (std::size_t k = 0; k < model.num_classes(); ++k) {
        if (k == x.label) continue;
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < wc.size(); ++j) {
            const double d = wc[j] - model.W[k][j];
            norm_sq += d * d;
        }
        if (norm_sq == 0.0) continue;  // parallel rows: class k can never overtake
        const double dist = (z[x.label] - z[k]) / std::sqrt(norm_sq);
        if (dist < best) {
            best = dist;
            best_k = k;
        }
    }
    if (best_k == x.label)
        return {std::numeric_limits<double>::infinity(), x.label, MinPerturbationKind::Unbounded};
    return {best, best_k, MinPerturbationKind::Exact};
}

double certified_radius_from_lipschitz(double gap, double lipschitz) {
    if (!(std::isfinite(gap) && gap >= 0.0)) throw InvalidInput("gap must be >= 0");
    if (!(std::isfinite(lipschitz) && lipschitz > 0.0))
        throw InvalidInput("Lipschitz constant must be positive");
    return gap / lipschitz;
}

double max_row_difference_norm(const AffineModel& model) {
    double max_norm = 0.0;
    for (std::size_t c = 0; c < model.num_classes(); ++c)
        for (std::size_t k = c + 1; k < model.num_classes(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < model.input_dim(); ++j) {
                const double d = model.W[c][j] - model.W[k][j];
                acc += d * d;
            }
            max_norm = std::max(max_norm, std::sqrt(acc));
        }
    return max_norm;
}

AffineModel make_lipschitz_bounded(const AffineModel& model) {
    model.validate();
    const double current = max_row_difference_norm(model);
    if (current == 0.0) throw InvalidInput("all rows identical: model has no decision boundary");

    AffineModel out = model;
    out.transform = TransformConfig{TransformMode::IdentityClip, 1.0, 1.0};
    if (current <= kSmoothedLipschitz) return out;  // already compliant

    const double scale = kSmoothedLipschitz / current;
    for (auto& row : out.W)
        for (auto& v : row) v *= scale;
    for (auto& v : out.b) v = 0.5 + scale * (v - 0.5);
    return out;
}

double smoothed_value(const ScalarFunction& h, const std::vector<double>& x, double sigma,
                      std::uint64_t mc_samples, std::uint64_t seed) {
    if (!(std::isfinite(sigma) && sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (mc_samples < 1) throw InvalidInput("need mc_samples >= 1");
    RandomStream stream(seed);
    std::vector<double> probe(x.size());
    CompensatedSum sum;
    for (std::uint64_t i = 0; i < mc_samples; ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) probe[j] = x[j] + sigma * stream.normal();
        const double v = h(probe);
        if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0))
            throw InvalidInput("function value " + std::to_string(v) + " outside [0,1]");
        sum.add(v);
    }
    return sum.value() / static_cast<double>(mc_samples);
}

SteinGradient stein_gradient(const ScalarFunction& h, const std::vector<double>& x, double sigma,
                             std::uint64_t mc_samples, std::uint64_t seed) {
    if (!(std::isfinite(sigma) && sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (mc_samples < 2) throw InvalidInput("need mc_samples >= 2");
    const std::size_t d = x.size();
    RandomStream stream(seed);
    std::vector<double> delta(d), probe(d);
    std::vector<CompensatedSum> sum(d), sum_sq(d);
    for (std::uint64_t i = 0; i < mc_samples; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            delta[j] = sigma * stream.normal();
            probe[j] = x[j] + delta[j];
        }
        const double v = h(probe);
        if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0))
            throw InvalidInput("function value outside [0,1]");
        for (std::size_t j = 0; j < d; ++j) {
            const double term = delta[j] * v / (sigma * sigma);
            sum[j].add(term);
            sum_sq[j].add(term * term);
        }
    }
    SteinGradient out;
    out.gradient.resize(d);
    out.std_error.resize(d);
    const double n = static_cast<double>(mc_samples);
    for (std::size_t j = 0; j < d; ++j) {
        const double mean = sum[j].value() / n;
        const double var = std::max(0.0, sum_sq[j].value() / n - mean * mean) * n / (n - 1.0);
        out.gradient[j] = mean;
        out.std_error[j] = std::sqrt(var / n);
    }
    return out;
}

LipschitzCheckReport lipschitz_mc_check(
    const ScalarFunction& h, double sigma,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& probe_pairs,
    std::uint64_t mc_samples, std::uint64_t seed) {
    if (!(std::isfinite(sigma) && sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (mc_samples < 2) throw InvalidInput("need mc_samples >= 2");
    if (probe_pairs.empty()) throw InvalidInput("no probe pairs given");

    LipschitzCheckReport report;
    report.bound = kSmoothedLipschitz / sigma;
    report.pairs_tested = probe_pairs.size();
    report.mc_samples = mc_samples;

    for (std::size_t p = 0; p < probe_pairs.size(); ++p) {
        const auto& [a, b] = probe_pairs[p];
        if (a.size() != b.size()) throw InvalidInput("probe pair dimensions differ");
        std::vector<double> diff(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) diff[j] = a[j] - b[j];
        const double dist = l2_norm(diff);
        if (dist == 0.0) throw InvalidInput("coincident probe pair " + std::to_string(p));

        // Common random numbers: identical noise at both end points.
        RandomStream stream(child_seed(seed, p));
        std::vector<double> pa(a.size()), pb(a.size());
        CompensatedSum sum, sum_sq;
        for (std::uint64_t i = 0; i < mc_samples; ++i) {
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double noise = sigma * stream.normal();
                pa[j] = a[j] + noise;
                pb[j] = b[j] + noise;
            }
            const double va = h(pa);
            const double vb = h(pb);
            if (!(std::isfinite(va) && va >= 0.0 && va <= 1.0) ||
                !(std::isfinite(vb) && vb >= 0.0 && vb <= 1.0))
                throw InvalidInput("function value outside [0,1]");
            const double dv = va - vb;
            sum.add(dv);
            sum_sq.add(dv * dv);
        }
        const double n = static_cast<double>(mc_samples);
        const double mean = sum.value() / n;
        const double var = std::max(0.0, sum_sq.value() / n - mean * mean) * n / (n - 1.0);
        const double se = std::sqrt(var / n);
        report.max_observed_ratio = std::max(report.max_observed_ratio, std::abs(mean) / dist);
        report.slack = std::max(report.slack, 3.0 * se / dist);
    }
    return report;
}

namespace {

// A flip only counts when some other class strictly exceeds the label, so it
// is provable under any argmax tie-breaking rule. Clip saturation can tie
// confidences exactly; a tie is not a verified flip.
bool verified_flip(const ClassifierHandle& f, const std::vector<double>& x, std::size_t label) {
    const std::vector<double> out = f.evaluate(x);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k == label) continue;
        if (out[k] > best) best = out[k];
    }
    return best > out[label];
}

std::vector<double> point_at(const std::vector<double>& x, const std::vector<double>& unit,
                             double t) {
    std::vector<double> p(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) p[j] = x[j] + t * unit[j];
    return p;
}

}  // namespace

MinPerturbationResult attack_min_perturbation(
    const ClassifierHandle& classifier, const SamplePoint& x, const AttackBudget& budget,
    std::uint64_t seed, const std::vector<std::vector<double>>& candidate_directions) {
    if (!classifier.evaluate) throw InvalidInput("classifier handle is empty");
    const std::vector<double> base = classifier.evaluate(x.x);
    if (x.label >= base.size()) throw InvalidInput("sample label out of range");

    // Provably misclassified already (strict overtake): nothing to perturb.
    std::size_t runner_up;
    const bool strict_top = strictly_top1(base, x.label, runner_up);
    if (!strict_top && base[runner_up] > base[x.label])
        return {0.0, runner_up, MinPerturbationKind::AttackUpperBound};

    const std::size_t d = x.x.size();
    std::vector<std::vector<double>> directions;
    for (const auto& dir : candidate_directions) {
        if (dir.size() != d) throw InvalidInput("candidate direction has wrong dimension");
        const double norm = l2_norm(dir);
        if (norm == 0.0) continue;
        std::vector<double> unit(d);
        for (std::size_t j = 0; j < d; ++j) unit[j] = dir[j] / norm;
        directions.push_back(std::move(unit));
    }
    RandomStream stream(seed);
    for (std::size_t r = 0; r < budget.directions; ++r) {
        std::vector<double> dir(d);
        for (std::size_t j = 0; j < d; ++j) dir[j] = stream.normal();
        const double norm = l2_norm(dir);
        if (norm == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) dir[j] /= norm;
        directions.push_back(std::move(dir));
    }

    double best = std::numeric_limits<double>::infinity();
    double largest_tried = 0.0;
    for (const auto& unit : directions) {
        // Exponential scan out to the budget radius (or the best flip so far).
        const double limit = std::min(budget.max_radius, best);
        double lo = 0.0;
        double hi = -1.0;
        for (double t = std::min(1.0 / 64.0, limit); t <= limit; t *= 2.0) {
            largest_tried = std::max(largest_tried, t);
            if (verified_flip(classifier, point_at(x.x, unit, t), x.label)) {
                hi = t;
                break;
            }
            lo = t;
        }
        if (hi < 0.0 && limit == budget.max_radius) {
            largest_tried = std::max(largest_tried, budget.max_radius);
            if (verified_flip(classifier, point_at(x.x, unit, budget.max_radius), x.label))
                hi = budget.max_radius;
        }
        if (hi < 0.0) continue;
        // Shrink the verified flip radius; hi stays a verified flip throughout.
        for (std::size_t step = 0; step < budget.bisection_steps && hi - lo > 1e-12 * hi; ++step) {
            const double mid = 0.5 * (lo + hi);
            if (verified_flip(classifier, point_at(x.x, unit, mid), x.label))
                hi = mid;
            else
                lo = mid;
        }
        best = std::min(best, hi);
    }

    if (!std::isfinite(best))
        return {largest_tried, x.label, MinPerturbationKind::NoFlipFound};
    return {best, runner_up, MinPerturbationKind::AttackUpperBound};
}

MinPerturbationResult attack_min_perturbation(const AffineModel& model, const SamplePoint& x,
                                              const AttackBudget& budget, std::uint64_t seed) {
    model.validate();
    std::vector<std::vector<double>> dirs;
    const auto& wc = model.W[x.label];
    for (std::size_t k = 0; k < model.num_classes(); ++k) {
        if (k == x.label) continue;
        std::vector<double> dir(model.input_dim());
        for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = model.W[k][j] - wc[j];
        dirs.push_back(std::move(dir));
    }
    return attack_min_perturbation(model.prediction_classifier(), x, budget, seed, dirs);
}

BoundComparison compare_bounds(const ClassifierHandle& classifier, const TransformConfig& transform,
                               const std::vector<SamplePoint>& samples, const AttackBudget& budget,
                               std::uint64_t seed) {
    if (!classifier.evaluate) throw InvalidInput("classifier handle is empty");
    if (samples.empty()) throw InvalidInput("no samples given");
    transform.validate();

    const ClassifierHandle transformed{
        [classifier, transform](const std::vector<double>& x) {
            return apply_transform(classifier.evaluate(x), transform).values();
        },
        classifier.num_classes};

    BoundComparison out;
    out.rows.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SamplePoint& s = samples[i];
        const PredictionVector prediction = apply_transform(classifier.evaluate(s.x), transform);
        const MinPerturbationResult attack =
            attack_min_perturbation(transformed, s, budget, child_seed(seed, i));
        out.rows.push_back({s.id, local_great_score(prediction, s.label).value, attack.delta_min,
                            attack.kind});
    }
    return out;
}

GlobalEstimate true_global_robustness_oracle(const GeneratorSpec& generator,
                                             const AffineModel& model, std::uint64_t n,
                                             const RunOptions& options) {
    generator.validate();
    model.validate();
    if (n == 0) throw InvalidInput("need n >= 1 samples");
    if (model.num_classes() != generator.num_classes())
        throw InvalidInput("generator and model class counts differ");

    std::vector<double> deltas(n);
    parallel_for(static_cast<std::size_t>(n), options.jobs, [&](std::size_t i) {
        RandomStream stream(child_seed(options.seed, i));
        std::size_t label;
        if (options.fixed_labels) {
            label = (*options.fixed_labels)[i % options.fixed_labels->size()];
        } else if (options.stratified_labels) {
            label = i % generator.num_classes();
        } else {
            label = static_cast<std::size_t>(stream.uniform_int(generator.num_classes()));
        }
        const SamplePoint sample = generate_with_stream(generator, label, stream);
        const MinPerturbationResult r = exact_min_perturbation(model, sample);
        if (r.kind == MinPerturbationKind::Unbounded)
            throw InvalidInput("oracle hit an unbounded sample: no decision boundary reachable");
        deltas[i] = r.delta_min;
    });
    CompensatedSum sum;
    for (double v : deltas) sum.add(v);
    GlobalEstimate est;
    est.mean = sum.value() / static_cast<double>(n);
    est.count = n;
    return est;
}

double concentration_trial(const GeneratorSpec& generator, const AffineModel& model,
                           const TransformConfig& transform, double epsilon, double delta,
                           std::uint64_t trials, const RunOptions& options) {
    if (trials < 50) throw InvalidInput("need at least 50 trials");
    const SamplePlan plan = sample_complexity(epsilon, delta);
    const ClassifierHandle classifier = model.logit_classifier();

    RunOptions ref_opts = options;
    ref_opts.seed = child_seed(options.seed, 0);
    const double reference =
        run_great_score(generator, classifier, transform, plan.n * 64, ref_opts).mean / kGapToRadius;

    std::uint64_t outages = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        RunOptions trial_opts = options;
        trial_opts.seed = child_seed(options.seed, t + 1);
        const double mean =
            run_great_score(generator, classifier, transform, plan.n, trial_opts).mean / kGapToRadius;
        if (std::abs(mean - reference) > epsilon) ++outages;
    }
    return static_cast<double>(outages) / static_cast<double>(trials);
}

}  // namespace great
