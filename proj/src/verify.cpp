#include "great/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "great/score.hpp"
#include "great/sum.hpp"

namespace great {

AffineModel random_bounded_model(RandomStream& rng, std::size_t num_classes, std::size_t dim) {
    AffineModel model;
    model.W.resize(num_classes, std::vector<double>(dim));
    model.b.resize(num_classes);
    const double row_scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t k = 0; k < num_classes; ++k) {
        for (std::size_t j = 0; j < dim; ++j) model.W[k][j] = rng.normal() * row_scale;
        model.b[k] = 0.5 + 0.1 * rng.normal();
    }
    model.transform = TransformConfig{TransformMode::IdentityClip, 1.0, 1.0};
    return make_lipschitz_bounded(model);
}

GeneratorSpec random_affine_generator(RandomStream& rng, std::size_t num_classes, std::size_t dim,
                                      std::size_t latent_dim) {
    GeneratorSpec gen;
    gen.classes.resize(num_classes);
    const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim * dim));
    for (auto& c : gen.classes) {
        c.A.assign(dim, std::vector<double>(latent_dim));
        c.mu.resize(dim);
        for (auto& row : c.A)
            for (auto& v : row) v = rng.normal() * scale;
        for (auto& v : c.mu) v = 0.5 * rng.normal();
    }
    return gen;
}

ScalarFunction random_unit_interval_function(RandomStream& rng, std::size_t dim) {
    std::vector<double> a(dim);
    for (auto& v : a) v = rng.normal();
    const double b = rng.normal();
    const std::size_t kind = static_cast<std::size_t>(rng.uniform_int(4));
    auto ridge = [a, b](const std::vector<double>& x) {
        double acc = b;
        for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * x[j];
        return acc;
    };
    switch (kind) {
        case 0:
            return [ridge](const std::vector<double>& x) {
                return 1.0 / (1.0 + std::exp(-ridge(x)));
            };
        case 1:
            return [ridge](const std::vector<double>& x) { return ridge(x) > 0.0 ? 1.0 : 0.0; };
        case 2:
            return [ridge](const std::vector<double>& x) {
                return 0.5 + 0.5 * std::sin(ridge(x));
            };
        default:
            return [ridge](const std::vector<double>& x) {
                return std::clamp(std::abs(ridge(x)), 0.0, 1.0);
            };
    }
}

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

SamplePoint random_point(RandomStream& rng, std::size_t dim, std::size_t num_classes) {
    SamplePoint p;
    p.x.resize(dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& v : p.x) v = rng.normal() * scale;
    p.label = static_cast<std::size_t>(rng.uniform_int(num_classes));
    return p;
}

void check_certificate(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    // Per-sample: score <= exact minimal perturbation on the bounded family.
    const std::size_t dims[] = {2, 10, 50};
    std::size_t violations = 0;
    std::size_t tested = 0;
    double worst_margin = 1.0;
    RandomStream rng(child_seed(seed, 1));
    for (std::size_t dim : dims) {
        for (std::size_t i = 0; i < 2000; ++i) {
            const std::size_t k_classes = 2 + static_cast<std::size_t>(rng.uniform_int(4));
            const AffineModel model = random_bounded_model(rng, k_classes, dim);
            const SamplePoint x = random_point(rng, dim, k_classes);
            const double score = local_great_score(model.predict(x.x), x.label).value;
            const MinPerturbationResult oracle = exact_min_perturbation(model, x);
            ++tested;
            if (score > oracle.delta_min + 1e-9) ++violations;
            worst_margin = std::min(worst_margin, oracle.delta_min - score);
        }
    }
    out.push_back({"certificate", "local score <= exact delta_min",
                   violations == 0,
                   std::to_string(tested) + " pairs, " + std::to_string(violations) +
                       " violations, tightest margin " + fmt(worst_margin)});

    // Global: sample-mean score <= oracle mean on identical draws.
    RandomStream setup(child_seed(seed, 2));
    const AffineModel model = random_bounded_model(setup, 3, 10);
    const GeneratorSpec gen = random_affine_generator(setup, 3, 10, 6);
    bool global_ok = true;
    std::string detail;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        RunOptions opts;
        opts.seed = child_seed(seed, 100 + s);
        opts.jobs = jobs;
        const double mean_score =
            run_great_score(gen, model.logit_classifier(), model.transform, 500, opts).mean;
        const double mean_oracle = true_global_robustness_oracle(gen, model, 500, opts).mean;
        if (!(mean_score <= mean_oracle)) {
            global_ok = false;
            detail = "seed " + std::to_string(s) + ": " + fmt(mean_score) + " > " + fmt(mean_oracle);
            break;
        }
    }
    out.push_back({"certificate", "global estimate <= oracle mean (20 seeds)", global_ok,
                   global_ok ? "n=500 per seed" : detail});
}

void check_sandwich(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    (void)jobs;
    RandomStream rng(child_seed(seed, 3));
    std::size_t violations = 0;
    std::size_t no_flip = 0;
    const std::size_t dims[] = {2, 10};
    AttackBudget budget;
    budget.directions = 8;
    for (std::size_t dim : dims) {
        for (std::size_t i = 0; i < 100; ++i) {
            const std::size_t k_classes = 2 + static_cast<std::size_t>(rng.uniform_int(2));
            const AffineModel model = random_bounded_model(rng, k_classes, dim);
            const SamplePoint x = random_point(rng, dim, k_classes);
            const double score = local_great_score(model.predict(x.x), x.label).value;
            const MinPerturbationResult oracle = exact_min_perturbation(model, x);
            const MinPerturbationResult attack =
                attack_min_perturbation(model, x, budget, rng.next_u64());
            if (attack.kind == MinPerturbationKind::NoFlipFound) ++no_flip;
            if (score > oracle.delta_min + 1e-9 || oracle.delta_min > attack.delta_min + 1e-4)
                ++violations;
        }
    }
    out.push_back({"sandwich", "score <= exact <= attack (200 samples)", violations == 0,
                   std::to_string(violations) + " violations, " + std::to_string(no_flip) +
                       " attack no-flips"});
}

void check_lipschitz(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    (void)jobs;
    RandomStream rng(child_seed(seed, 4));
    const std::size_t dim = 4;
    const std::uint64_t mc = 40000;
    bool ok = true;
    double headroom = std::numeric_limits<double>::infinity();
    std::string detail;
    for (std::size_t f = 0; f < 8 && ok; ++f) {
        const ScalarFunction h = random_unit_interval_function(rng, dim);
        std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
        for (std::size_t p = 0; p < 6; ++p) {
            std::vector<double> x(dim), y(dim);
            for (auto& v : x) v = rng.normal();
            double r = 0.05 + 1.5 * rng.uniform01();
            std::vector<double> u(dim);
            double norm = 0.0;
            for (auto& v : u) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < dim; ++j) y[j] = x[j] + r * u[j] / norm;
            pairs.emplace_back(x, y);
        }
        const LipschitzCheckReport report =
            lipschitz_mc_check(h, 1.0, pairs, mc, child_seed(seed, 40 + f));
        headroom = std::min(headroom, report.bound + report.slack - report.max_observed_ratio);
        if (report.max_observed_ratio > report.bound + report.slack) {
            ok = false;
            detail = "function " + std::to_string(f) + ": ratio " + fmt(report.max_observed_ratio) +
                     " > bound " + fmt(report.bound) + " + slack " + fmt(report.slack);
        }
    }
    out.push_back({"lipschitz", "smoothed ratio <= sqrt(2/pi) + slack (8 functions)", ok,
                   ok ? "smallest headroom " + fmt(headroom) : detail});

    // Step-function worst case probed across the boundary.
    const ScalarFunction step = [](const std::vector<double>& x) { return x[0] > 0.0 ? 1.0 : 0.0; };
    std::vector<double> lo(dim, 0.0), hi(dim, 0.0);
    lo[0] = -0.01;
    hi[0] = 0.01;
    const LipschitzCheckReport report =
        lipschitz_mc_check(step, 1.0, {{hi, lo}}, 100000, child_seed(seed, 5));
    const bool step_ok = report.max_observed_ratio >= 0.37 && report.max_observed_ratio <= 0.42 &&
                         report.max_observed_ratio <= report.bound + report.slack;
    out.push_back({"lipschitz", "step function slope near 1/sqrt(2*pi)", step_ok,
                   "observed " + fmt(report.max_observed_ratio) + ", analytic 0.398942"});

    // Stein identity cross-check on a smooth function: finite difference of
    // the smoothed value vs the Gaussian-weighted gradient, common noise.
    const ScalarFunction smooth = [](const std::vector<double>& x) {
        return 1.0 / (1.0 + std::exp(-x[0]));
    };
    const std::uint64_t mc_grad = 200000;
    RandomStream noise(child_seed(seed, 6));
    const double fd_step = 1e-3;
    CompensatedSum diff_sum, diff_sq;
    std::vector<double> probe(dim, 0.0);
    for (std::uint64_t i = 0; i < mc_grad; ++i) {
        double z0 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double z = noise.normal();
            if (j == 0) z0 = z;
            probe[j] = (j == 0 ? 0.3 : 0.0) + z;
        }
        const double stein_term = z0 * smooth(probe);
        std::vector<double> up = probe, down = probe;
        up[0] += fd_step;
        down[0] -= fd_step;
        const double fd_term = (smooth(up) - smooth(down)) / (2.0 * fd_step);
        const double d = stein_term - fd_term;
        diff_sum.add(d);
        diff_sq.add(d * d);
    }
    const double n = static_cast<double>(mc_grad);
    const double mean = diff_sum.value() / n;
    const double var = std::max(0.0, diff_sq.value() / n - mean * mean) * n / (n - 1.0);
    const double se = std::sqrt(var / n);
    const bool stein_ok = std::abs(mean) <= 3.0 * se + 1e-6;
    out.push_back({"lipschitz", "gradient identity vs finite difference", stein_ok,
                   "|mean diff| " + fmt(std::abs(mean)) + " vs 3se " + fmt(3.0 * se)});
}

void check_concentration(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    RandomStream setup(child_seed(seed, 7));
    const AffineModel model = random_bounded_model(setup, 2, 3);
    const GeneratorSpec gen = random_affine_generator(setup, 2, 3, 3);
    const double epsilon = 0.25;
    const double delta = 0.2;
    const std::uint64_t trials = 60;
    RunOptions opts;
    opts.seed = child_seed(seed, 8);
    opts.jobs = jobs;
    const double outage = concentration_trial(gen, model, model.transform, epsilon, delta, trials, opts);
    const double allowance = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
    out.push_back({"concentration", "empirical outage within guarantee", outage <= allowance,
                   "outage " + fmt(outage) + " <= " + fmt(allowance)});
}

void check_curve(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    (void)jobs;
    RandomStream rng(child_seed(seed, 9));
    bool ok = true;
    std::string detail = "1000 random score sets";
    for (std::size_t i = 0; i < 1000 && ok; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(50));
        std::vector<LocalScore> scores(n);
        std::size_t positive = 0;
        for (auto& s : scores) {
            s.value = rng.uniform01() < 0.2 ? 0.0 : kGapToRadius * rng.uniform01();
            if (s.value > 0.0) ++positive;
        }
        std::vector<double> radii;
        double r = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            radii.push_back(r);
            r += 0.01 + 0.3 * rng.uniform01();
        }
        const RadiusCurve curve = cumulative_certified_ra(scores, radii);
        for (std::size_t j = 1; j < curve.points.size(); ++j)
            if (curve.points[j].certified_fraction > curve.points[j - 1].certified_fraction) {
                ok = false;
                detail = "curve increased at radius " + fmt(curve.points[j].radius);
            }
        const double expected = static_cast<double>(positive) / static_cast<double>(n);
        if (curve.points.front().certified_fraction != expected) {
            ok = false;
            detail = "value at r=0 is not the positive-margin fraction";
        }
    }
    out.push_back({"curve", "non-increasing; r=0 equals positive fraction", ok, detail});
}

void check_planner(std::vector<SuiteCheck>& out, std::uint64_t seed, unsigned jobs) {
    (void)jobs;
    bool pinned = true;
    std::string detail;
    const struct { double eps, delta; std::uint64_t n; } cases[] = {
        {0.1, 0.05, 32088}, {0.05, 0.05, 128351}, {1.0, 2.0 / 2.718281828459045, 87}};
    for (const auto& c : cases) {
        const SamplePlan plan = sample_complexity(c.eps, c.delta);
        if (plan.n != c.n) {
            pinned = false;
            detail += "eps=" + fmt(c.eps) + " gave n=" + std::to_string(plan.n) + " expected " +
                      std::to_string(c.n) + "; ";
        }
    }
    out.push_back({"planner", "pinned sample plans", pinned, pinned ? "32088/128351/87" : detail});

    RandomStream rng(child_seed(seed, 10));
    bool tight = true;
    std::string tight_detail = "1000 random (eps, delta)";
    const double e = 2.718281828459045;
    for (std::size_t i = 0; i < 1000 && tight; ++i) {
        const double eps = 0.02 + 1.98 * rng.uniform01();
        const double delta = 0.001 + 0.998 * rng.uniform01();
        const SamplePlan plan = sample_complexity(eps, delta);
        const auto bound = [&](double n) {
            return 2.0 * std::exp(-(eps * eps) * n / (32.0 * e));
        };
        if (bound(static_cast<double>(plan.n)) > delta ||
            (plan.n > 1 && bound(static_cast<double>(plan.n - 1)) <= delta)) {
            tight = false;
            tight_detail = "ceiling not tight at eps=" + fmt(eps) + " delta=" + fmt(delta);
        }
    }
    out.push_back({"planner", "tight ceiling", tight, tight_detail});
}

}  // namespace

std::vector<SuiteCheck> verify_suite(const std::string& suite, std::uint64_t seed, unsigned jobs) {
    const bool all = suite == "all";
    std::vector<SuiteCheck> out;
    if (all || suite == "certificate") check_certificate(out, seed, jobs);
    if (all || suite == "sandwich") check_sandwich(out, seed, jobs);
    if (all || suite == "lipschitz") check_lipschitz(out, seed, jobs);
    if (all || suite == "concentration") check_concentration(out, seed, jobs);
    if (all || suite == "curve") check_curve(out, seed, jobs);
    if (all || suite == "planner") check_planner(out, seed, jobs);
    if (out.empty())
        throw InvalidInput("unknown suite: " + suite +
                           " (certificate|sandwich|lipschitz|concentration|curve|planner|all)");
    return out;
}

}  // namespace great
