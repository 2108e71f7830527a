#include "great/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "great/parallel.hpp"
#include "great/score.hpp"
#include "great/sum.hpp"

namespace great {

namespace {

// Fractional ranks: ties share the average of the positions they occupy.
std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw InvalidInput("correlation undefined for a constant series");
    const double rho = sab / std::sqrt(saa * sbb);
    return std::clamp(rho, -1.0, 1.0);
}

void check_unique_keys(const RankSeries& s) {
    if (s.keys.empty()) return;
    std::vector<std::string> keys = s.keys;
    std::sort(keys.begin(), keys.end());
    const auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end()) throw InvalidInput("duplicate series key '" + *dup + "'");
}

void check_matching_keys(const RankSeries& a, const RankSeries& b) {
    if (a.values.size() != b.values.size())
        throw InvalidInput("series lengths differ: " + std::to_string(a.values.size()) + " vs " +
                           std::to_string(b.values.size()));
    if (a.values.size() < 2) throw InvalidInput("need at least 2 entries for a correlation");
    if (!a.keys.empty() && !b.keys.empty() && a.keys != b.keys)
        throw InvalidInput("series keys do not match");
    check_unique_keys(a);
    check_unique_keys(b);
}

}  // namespace

double spearman(const RankSeries& a, const RankSeries& b) {
    check_matching_keys(a, b);
    for (double v : a.values)
        if (!std::isfinite(v)) throw InvalidInput("series contains a non-finite value");
    for (double v : b.values)
        if (!std::isfinite(v)) throw InvalidInput("series contains a non-finite value");
    return pearson(fractional_ranks(a.values), fractional_ranks(b.values));
}

RankMatrix rank_report(const std::vector<std::string>& names,
                       const std::vector<RankSeries>& series) {
    if (series.size() < 2) throw InvalidInput("rank report needs at least 2 series");
    if (names.size() != series.size()) throw InvalidInput("one name per series required");
    RankMatrix m;
    m.names = names;
    m.rho.assign(series.size(), std::vector<double>(series.size(), 1.0));
    for (std::size_t i = 0; i < series.size(); ++i)
        for (std::size_t j = i + 1; j < series.size(); ++j) {
            const double rho = spearman(series[i], series[j]);
            m.rho[i][j] = rho;
            m.rho[j][i] = rho;
        }
    return m;
}

namespace {

TransformConfig config_at(TransformMode mode, double t) {
    TransformConfig cfg;
    cfg.mode = mode;
    cfg.t1 = 1.0;
    cfg.t2 = 1.0;
    switch (mode) {
        case TransformMode::SigmoidT:
        case TransformMode::SigmoidAfterSoftmax:
            cfg.t1 = t;
            break;
        case TransformMode::SoftmaxT:
        case TransformMode::SoftmaxAfterSigmoid:
            cfg.t2 = t;
            break;
        case TransformMode::IdentityClip:
            break;
    }
    return cfg;
}

}  // namespace

CalibrationResult calibrate(const std::vector<ModelLogits>& models, const RankSeries& reference,
                            TransformMode mode, const TemperatureGrid& grid, unsigned jobs) {
    if (models.size() < 2) throw InvalidInput("calibration needs at least 2 models");
    if (!(std::isfinite(grid.step) && grid.step > 0.0)) throw InvalidInput("grid step must be positive");
    if (!(grid.lo <= grid.hi)) throw InvalidInput("empty temperature grid");
    if (grid.lo < 0.0) throw InvalidInput("temperatures cannot be negative");

    // Every model must cover the same sample set.
    const std::size_t n_samples = models.front().samples.size();
    if (n_samples == 0) throw InvalidInput("model '" + models.front().name + "' has no samples");
    std::multiset<std::string> ref_ids;
    for (const auto& s : models.front().samples) ref_ids.insert(s.id);
    for (const auto& model : models) {
        if (model.samples.size() != n_samples)
            throw InvalidInput("model '" + model.name + "' covers a different sample count");
        std::multiset<std::string> ids;
        for (const auto& s : model.samples) ids.insert(s.id);
        if (ids != ref_ids)
            throw InvalidInput("model '" + model.name + "' covers a different sample set");
    }

    // Reference distortions keyed by model name.
    RankSeries ref_ordered;
    for (const auto& model : models) {
        bool found = false;
        for (std::size_t i = 0; i < reference.keys.size(); ++i) {
            if (reference.keys[i] == model.name) {
                ref_ordered.keys.push_back(reference.keys[i]);
                ref_ordered.values.push_back(reference.values[i]);
                found = true;
                break;
            }
        }
        if (!found) throw InvalidInput("reference has no entry for model '" + model.name + "'");
    }

    const std::size_t count = static_cast<std::size_t>(
        std::llround(std::floor((grid.hi - grid.lo) / grid.step + 0.5))) + 1;
    std::vector<TracePoint> trace(count);

    parallel_for(count, jobs, [&](std::size_t i) {
        double t = grid.lo + static_cast<double>(i) * grid.step;
        if (t > grid.hi) t = grid.hi;
        if (t < kMinTemperature) t = kMinTemperature;
        const TransformConfig cfg = config_at(mode, t);

        RankSeries means;
        means.keys = ref_ordered.keys;
        means.values.reserve(models.size());
        for (const auto& model : models) {
            CompensatedSum sum;
            for (const auto& s : model.samples)
                sum.add(local_great_score(apply_transform(s.logits, cfg), s.label).value);
            means.values.push_back(sum.value() / static_cast<double>(n_samples));
        }
        double rho;
        try {
            rho = spearman(means, ref_ordered);
        } catch (const InvalidInput&) {
            rho = kDegenerateRho;  // constant score series at this temperature
        }
        trace[i] = TracePoint{t, rho};
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].rho > trace[best].rho) best = i;  // strict: smallest T wins ties
    if (trace[best].rho == kDegenerateRho)
        throw InvalidInput("score series is constant at every grid temperature");

    CalibrationResult result;
    result.best_config = config_at(mode, trace[best].temperature);
    result.best_rho = trace[best].rho;
    result.trace = std::move(trace);
    return result;
}

}  // namespace great
