#pragma once

#include <optional>
#include <string>
#include <vector>

#include "great/audit.hpp"
#include "great/calibrate.hpp"
#include "great/model.hpp"
#include "great/types.hpp"

namespace great {

// Predictions JSONL: one object per line with `id`, `label`, and exactly one
// of `probs` or `logits`. Lines with logits require a transform; mixing is
// allowed per line but each line must have exactly one of the two.
std::vector<LabeledPrediction> load_predictions_jsonl(
    const std::string& path, const std::optional<TransformConfig>& transform);

// Samples JSONL for endpoint scoring and groups: `id`, `label`, `input`.
std::vector<SamplePoint> load_samples_jsonl(const std::string& path);

// Logits bundle JSONL: `model`, `id`, `label`, `logits`; grouped by model in
// first-appearance order.
std::vector<ModelLogits> load_logits_bundle(const std::string& path);

// Reference CSV: header `model,distortion`.
RankSeries load_reference_csv(const std::string& path);

// Metric table CSV: header `name,<metric...>`, one row per model. Each metric
// column becomes a RankSeries keyed by the name column.
void load_metric_table(const std::string& path, std::vector<std::string>& metric_names,
                       std::vector<RankSeries>& series);

// {"W": [[...]], "b": [...], "transform": {...}}
AffineModel load_affine_model(const std::string& path);
std::string affine_model_to_json(const AffineModel& model);

// {"classes": [{"A": [[...]], "mu": [...]}, ...]}
GeneratorSpec load_generator(const std::string& path);
std::string generator_to_json(const GeneratorSpec& gen);

// Groups manifest JSON: {"groups": [{"name": ..., "samples": [...]} |
// {"name": ..., "samples_file": "g.jsonl"}]}. Paths resolve relative to the
// manifest.
std::vector<AuditGroup> load_groups_manifest(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace great
