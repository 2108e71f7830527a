#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "great/lab.hpp"
#include "great/model.hpp"
#include "great/rng.hpp"

namespace great {

struct SuiteCheck {
    std::string suite;
    std::string name;
    bool passed = false;
    std::string detail;
};

// Property suites over the lab's constructed families. Suites: certificate,
// sandwich, lipschitz, concentration, curve, planner, or all. A failed check
// is an invariant violation (CLI exit code 4).
std::vector<SuiteCheck> verify_suite(const std::string& suite, std::uint64_t seed, unsigned jobs);

// Random-instance builders shared by the suites and the test binaries.

// Affine model with distinct rows, biases near 0.5, passed through
// make_lipschitz_bounded (identity-clip transform, row-diff norms <= sqrt(2/pi)).
AffineModel random_bounded_model(RandomStream& rng, std::size_t num_classes, std::size_t dim);

// Per-class affine generator with modest spread; latent dim m.
GeneratorSpec random_affine_generator(RandomStream& rng, std::size_t num_classes, std::size_t dim,
                                      std::size_t latent_dim);

// Random measurable function into [0,1]; cycles through logistic ridges,
// half-space indicators, clipped sines, and clipped absolute ridges.
ScalarFunction random_unit_interval_function(RandomStream& rng, std::size_t dim);

}  // namespace great
