#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "great/calibrate.hpp"
#include "great/lab.hpp"
#include "great/score.hpp"
#include "great/transform.hpp"

namespace py = pybind11;
using namespace great;

namespace {

TransformConfig make_config(const std::string& mode, double t1, double t2) {
    TransformConfig cfg;
    cfg.mode = transform_mode_from_string(mode);
    cfg.t1 = t1;
    cfg.t2 = t2;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Certified global robustness scoring (C++ core)";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

    m.def(
        "local_great_score",
        [](const std::vector<double>& confidences, std::size_t label) {
            return local_great_score(PredictionVector(confidences), label).value;
        },
        py::arg("confidences"), py::arg("label"),
        "Certified local score sqrt(pi/2) * max{gap, 0}.");

    m.def(
        "great_score_mean",
        [](const std::vector<double>& scores) {
            std::vector<LocalScore> wrapped;
            wrapped.reserve(scores.size());
            for (double s : scores) wrapped.push_back(LocalScore{s});
            const GlobalEstimate est = great_score_mean(wrapped);
            return py::make_tuple(est.mean, est.count);
        },
        py::arg("scores"), "Compensated mean; returns (mean, count).");

    m.def(
        "sample_complexity",
        [](double epsilon, double delta) { return sample_complexity(epsilon, delta).n; },
        py::arg("epsilon"), py::arg("delta"),
        "Smallest n with 2*exp(-eps^2 n / 32e) <= delta.");

    m.def(
        "apply_transform",
        [](const std::vector<double>& logits, const std::string& mode, double t1, double t2) {
            return apply_transform(logits, make_config(mode, t1, t2)).values();
        },
        py::arg("logits"), py::arg("mode") = "softmax-after-sigmoid", py::arg("t1") = 1.0,
        py::arg("t2") = 1.0, "Map logits into [0,1]^K under an output-layer mode.");

    m.def(
        "cumulative_certified_ra",
        [](const std::vector<double>& scores, const std::vector<double>& radii) {
            std::vector<LocalScore> wrapped;
            wrapped.reserve(scores.size());
            for (double s : scores) wrapped.push_back(LocalScore{s});
            const RadiusCurve curve = cumulative_certified_ra(wrapped, radii);
            std::vector<std::pair<double, double>> out;
            for (const auto& p : curve.points) out.emplace_back(p.radius, p.certified_fraction);
            return out;
        },
        py::arg("scores"), py::arg("radii"),
        "Fraction of scores strictly above each radius, as (radius, fraction) pairs.");

    m.def(
        "spearman",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return spearman(RankSeries{{}, a}, RankSeries{{}, b});
        },
        py::arg("a"), py::arg("b"), "Spearman rank correlation with average-rank ties.");

    m.def(
        "certified_radius_from_lipschitz", &certified_radius_from_lipschitz, py::arg("gap"),
        py::arg("lipschitz"), "gap / L.");

    m.attr("GAP_TO_RADIUS") = kGapToRadius;
    m.attr("SMOOTHED_LIPSCHITZ") = kSmoothedLipschitz;
    m.attr("__version__") = "0.1.0";
}
