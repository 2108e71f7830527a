#include "great/model.hpp"

#include <cmath>

namespace great {

void GeneratorSpec::validate() const {
    if (classes.size() < 2)
        throw InvalidInput("generator needs at least 2 classes");
    const std::size_t d = output_dim();
    const std::size_t m = latent_dim();
    for (std::size_t y = 0; y < classes.size(); ++y) {
        const auto& c = classes[y];
        if (c.mu.size() != d || c.A.size() != d)
            throw InvalidInput("generator class " + std::to_string(y) + " has inconsistent output dim");
        for (const auto& row : c.A)
            if (row.size() != m)
                throw InvalidInput("generator class " + std::to_string(y) + " has ragged A");
        for (const auto& row : c.A)
            for (double v : row)
                if (!std::isfinite(v)) throw InvalidInput("generator A entry not finite");
        for (double v : c.mu)
            if (!std::isfinite(v)) throw InvalidInput("generator mu entry not finite");
    }
}

GeneratorSpec identity_generator(std::size_t num_classes, std::size_t dim) {
    GeneratorSpec gen;
    gen.classes.resize(num_classes);
    for (auto& c : gen.classes) {
        c.mu.assign(dim, 0.0);
        c.A.assign(dim, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < dim; ++i) c.A[i][i] = 1.0;
    }
    return gen;
}

void AffineModel::validate() const {
    if (W.size() < 2) throw InvalidInput("affine model needs K >= 2 rows");
    if (b.size() != W.size()) throw InvalidInput("bias length does not match row count");
    const std::size_t d = input_dim();
    for (const auto& row : W) {
        if (row.size() != d) throw InvalidInput("affine model has ragged W");
        for (double v : row)
            if (!std::isfinite(v)) throw InvalidInput("affine model weight not finite");
    }
    for (double v : b)
        if (!std::isfinite(v)) throw InvalidInput("affine model bias not finite");
    transform.validate();
}

std::vector<double> AffineModel::logits(const std::vector<double>& x) const {
    if (x.size() != input_dim())
        throw InvalidInput("input dim " + std::to_string(x.size()) + " does not match model dim " +
                           std::to_string(input_dim()));
    std::vector<double> out(W.size());
    for (std::size_t k = 0; k < W.size(); ++k) {
        double acc = b[k];
        const auto& row = W[k];
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
        out[k] = acc;
    }
    return out;
}

PredictionVector AffineModel::predict(const std::vector<double>& x) const {
    return apply_transform(logits(x), transform);
}

ClassifierHandle AffineModel::logit_classifier() const {
    AffineModel copy = *this;
    return ClassifierHandle{[copy](const std::vector<double>& x) { return copy.logits(x); },
                            copy.num_classes()};
}

ClassifierHandle AffineModel::prediction_classifier() const {
    AffineModel copy = *this;
    return ClassifierHandle{
        [copy](const std::vector<double>& x) { return copy.predict(x).values(); },
        copy.num_classes()};
}

SamplePoint generate_with_stream(const GeneratorSpec& gen, std::size_t label, RandomStream& stream,
                                 std::string id) {
    if (label >= gen.num_classes())
        throw InvalidInput("label " + std::to_string(label) + " out of range for generator with " +
                           std::to_string(gen.num_classes()) + " classes");
    const auto& cls = gen.classes[label];
    const std::size_t m = gen.latent_dim();
    std::vector<double> z(m);
    for (std::size_t j = 0; j < m; ++j) z[j] = stream.normal();

    SamplePoint p;
    p.id = std::move(id);
    p.label = label;
    p.x = cls.mu;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        double acc = p.x[i];
        const auto& row = cls.A[i];
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * z[j];
        p.x[i] = acc;
    }
    return p;
}

SamplePoint generate_sample(const GeneratorSpec& gen, std::size_t label, std::uint64_t seed) {
    RandomStream stream(seed);
    return generate_with_stream(gen, label, stream);
}

}  // namespace great
