#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "great/rng.hpp"
#include "great/transform.hpp"
#include "great/types.hpp"

namespace great {

// A generated data point: flattened input of dimension d plus its class.
struct SamplePoint {
    std::string id;
    std::vector<double> x;
    std::size_t label = 0;
};

// Per-class affine generator: sample = A_y * z + mu_y, z ~ N(0, I_m).
// A desk-scale stand-in for a conditional generative model with the same
// latent sampling distribution.
struct GeneratorSpec {
    struct ClassMap {
        std::vector<std::vector<double>> A;  // d rows of m columns
        std::vector<double> mu;              // d entries
    };
    std::vector<ClassMap> classes;

    std::size_t num_classes() const { return classes.size(); }
    std::size_t output_dim() const { return classes.empty() ? 0 : classes.front().mu.size(); }
    std::size_t latent_dim() const {
        return (classes.empty() || classes.front().A.empty()) ? 0 : classes.front().A.front().size();
    }

    void validate() const;
};

// Identity generator in d dimensions for every one of K classes: x = z.
GeneratorSpec identity_generator(std::size_t num_classes, std::size_t dim);

// Black-box classifier surface: maps an input to raw per-class outputs
// (logits for local models, confidences for remote ones). num_classes may be
// 0, meaning "infer from the first evaluation and enforce afterwards".
struct ClassifierHandle {
    std::function<std::vector<double>(const std::vector<double>&)> evaluate;
    std::size_t num_classes = 0;
};

// Linear classifier: logits = W x + b, with an output transform attached.
// Its pairwise row-difference norms are what bound the margin-to-radius
// conversion, so the lab can certify it in closed form.
struct AffineModel {
    std::vector<std::vector<double>> W;  // K rows of d columns
    std::vector<double> b;               // K entries
    TransformConfig transform;

    std::size_t num_classes() const { return W.size(); }
    std::size_t input_dim() const { return W.empty() ? 0 : W.front().size(); }

    void validate() const;
    std::vector<double> logits(const std::vector<double>& x) const;
    PredictionVector predict(const std::vector<double>& x) const;

    // Raw-logit view, for pairing with an explicit TransformConfig.
    ClassifierHandle logit_classifier() const;
    // Post-transform view: what a black-box caller of this model would see.
    ClassifierHandle prediction_classifier() const;
};

// Draws z from the stream and produces A_label * z + mu_label. Draw order:
// one normal per latent coordinate, ascending.
SamplePoint generate_with_stream(const GeneratorSpec& gen, std::size_t label, RandomStream& stream,
                                 std::string id = {});

// Same, seeding a fresh stream; with A = I this reproduces the raw z draw of
// RandomStream(seed) exactly.
SamplePoint generate_sample(const GeneratorSpec& gen, std::size_t label, std::uint64_t seed);

}  // namespace great
