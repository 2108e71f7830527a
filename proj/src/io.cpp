#include "great/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace great {

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    return in;
}

nlohmann::json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
}

std::vector<double> number_array(const nlohmann::json& j, const std::string& context) {
    if (!j.is_array() || j.empty()) throw InvalidInput(context + " must be a non-empty array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw InvalidInput(context + " must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace

std::string read_file(const std::string& path) {
    auto in = open_or_throw(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<LabeledPrediction> load_predictions_jsonl(
    const std::string& path, const std::optional<TransformConfig>& transform) {
    auto in = open_or_throw(path);
    std::vector<LabeledPrediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = parse_line(line, path, lineno);
        const std::string where = path + ":" + std::to_string(lineno);
        if (!j.contains("id") || !j["id"].is_string())
            throw InvalidInput(where + ": missing string field 'id'");
        if (!j.contains("label") || !j["label"].is_number_integer())
            throw InvalidInput(where + ": missing integer field 'label'");
        const long long label = j["label"].get<long long>();
        if (label < 0) throw InvalidInput(where + ": label must be >= 0");
        const bool has_probs = j.contains("probs");
        const bool has_logits = j.contains("logits");
        if (has_probs == has_logits)
            throw InvalidInput(where + ": need exactly one of 'probs' or 'logits'");
        try {
            if (has_probs) {
                out.emplace_back(j["id"].get<std::string>(), static_cast<std::size_t>(label),
                                 PredictionVector(number_array(j["probs"], "probs")));
            } else {
                if (!transform)
                    throw InvalidInput("line has 'logits' but no transform was configured");
                out.emplace_back(j["id"].get<std::string>(), static_cast<std::size_t>(label),
                                 apply_transform(number_array(j["logits"], "logits"), *transform));
            }
        } catch (const InvalidInput& e) {
            throw InvalidInput(where + ": " + e.what());
        }
    }
    if (out.empty()) throw InvalidInput(path + ": no predictions found");
    return out;
}

std::vector<SamplePoint> load_samples_jsonl(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<SamplePoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = parse_line(line, path, lineno);
        const std::string where = path + ":" + std::to_string(lineno);
        if (!j.contains("id") || !j.contains("label") || !j.contains("input"))
            throw InvalidInput(where + ": need 'id', 'label', and 'input'");
        SamplePoint p;
        p.id = j["id"].get<std::string>();
        const long long label = j["label"].get<long long>();
        if (label < 0) throw InvalidInput(where + ": label must be >= 0");
        p.label = static_cast<std::size_t>(label);
        p.x = number_array(j["input"], where + ": input");
        out.push_back(std::move(p));
    }
    if (out.empty()) throw InvalidInput(path + ": no samples found");
    return out;
}

std::vector<ModelLogits> load_logits_bundle(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<ModelLogits> models;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = parse_line(line, path, lineno);
        const std::string where = path + ":" + std::to_string(lineno);
        if (!j.contains("model") || !j.contains("id") || !j.contains("label") || !j.contains("logits"))
            throw InvalidInput(where + ": need 'model', 'id', 'label', and 'logits'");
        const std::string name = j["model"].get<std::string>();
        ModelLogits* slot = nullptr;
        for (auto& m : models)
            if (m.name == name) slot = &m;
        if (!slot) {
            models.push_back(ModelLogits{name, {}});
            slot = &models.back();
        }
        ModelLogits::Sample s;
        s.id = j["id"].get<std::string>();
        const long long label = j["label"].get<long long>();
        if (label < 0) throw InvalidInput(where + ": label must be >= 0");
        s.label = static_cast<std::size_t>(label);
        s.logits = number_array(j["logits"], where + ": logits");
        slot->samples.push_back(std::move(s));
    }
    if (models.empty()) throw InvalidInput(path + ": no logit records found");
    return models;
}

RankSeries load_reference_csv(const std::string& path) {
    auto in = open_or_throw(path);
    RankSeries series;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (lineno == 1) {
            if (fields.size() != 2 || fields[0] != "model" || fields[1] != "distortion")
                throw InvalidInput(path + ": expected header 'model,distortion'");
            continue;
        }
        if (fields.size() != 2)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        series.keys.push_back(fields[0]);
        try {
            series.values.push_back(std::stod(fields[1]));
        } catch (...) {
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": bad number '" + fields[1] + "'");
        }
    }
    if (series.keys.empty()) throw InvalidInput(path + ": no reference rows found");
    std::vector<std::string> keys = series.keys;
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw InvalidInput(path + ": duplicate model rows");
    return series;
}

void load_metric_table(const std::string& path, std::vector<std::string>& metric_names,
                       std::vector<RankSeries>& series) {
    auto in = open_or_throw(path);
    metric_names.clear();
    series.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (metric_names.empty()) {
            if (fields.size() < 3 || fields[0] != "name")
                throw InvalidInput(path + ": expected header 'name,<metric>,<metric>,...'");
            metric_names.assign(fields.begin() + 1, fields.end());
            series.resize(metric_names.size());
            continue;
        }
        if (fields.size() != metric_names.size() + 1)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": wrong field count");
        for (std::size_t m = 0; m < metric_names.size(); ++m) {
            series[m].keys.push_back(fields[0]);
            try {
                series[m].values.push_back(std::stod(fields[m + 1]));
            } catch (...) {
                throw InvalidInput(path + ":" + std::to_string(lineno) + ": bad number '" +
                                   fields[m + 1] + "'");
            }
        }
    }
    if (metric_names.empty()) throw InvalidInput(path + ": no header found");
    if (series.front().keys.empty()) throw InvalidInput(path + ": no data rows found");
}

AffineModel load_affine_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": bad JSON: " + e.what());
    }
    AffineModel model;
    if (!j.contains("W") || !j["W"].is_array()) throw InvalidInput(path + ": missing matrix 'W'");
    for (const auto& row : j["W"]) model.W.push_back(number_array(row, "W row"));
    model.b = number_array(j.at("b"), "b");
    if (j.contains("transform")) model.transform = transform_from_json(j["transform"].dump());
    model.validate();
    return model;
}

std::string affine_model_to_json(const AffineModel& model) {
    nlohmann::ordered_json j;
    j["W"] = model.W;
    j["b"] = model.b;
    j["transform"] = nlohmann::ordered_json::parse(transform_to_json(model.transform));
    return j.dump();
}

GeneratorSpec load_generator(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": bad JSON: " + e.what());
    }
    GeneratorSpec gen;
    if (!j.contains("classes") || !j["classes"].is_array())
        throw InvalidInput(path + ": missing 'classes' array");
    for (const auto& c : j["classes"]) {
        GeneratorSpec::ClassMap map;
        if (!c.contains("A") || !c["A"].is_array()) throw InvalidInput(path + ": class missing 'A'");
        for (const auto& row : c["A"]) map.A.push_back(number_array(row, "A row"));
        map.mu = number_array(c.at("mu"), "mu");
        gen.classes.push_back(std::move(map));
    }
    gen.validate();
    return gen;
}

std::string generator_to_json(const GeneratorSpec& gen) {
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (const auto& c : gen.classes) {
        nlohmann::ordered_json jc;
        jc["A"] = c.A;
        jc["mu"] = c.mu;
        classes.push_back(jc);
    }
    nlohmann::ordered_json j;
    j["classes"] = classes;
    return j.dump();
}

std::vector<AuditGroup> load_groups_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": bad JSON: " + e.what());
    }
    if (!j.contains("groups") || !j["groups"].is_array() || j["groups"].empty())
        throw InvalidInput(path + ": missing non-empty 'groups' array");
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<AuditGroup> groups;
    for (const auto& g : j["groups"]) {
        AuditGroup group;
        group.name = g.value("name", "");
        if (group.name.empty()) throw InvalidInput(path + ": group without a name");
        if (g.contains("samples_file")) {
            const auto file = base / g["samples_file"].get<std::string>();
            group.samples = load_samples_jsonl(file.string());
        } else if (g.contains("samples") && g["samples"].is_array()) {
            for (const auto& s : g["samples"]) {
                SamplePoint p;
                p.id = s.at("id").get<std::string>();
                p.label = s.at("label").get<std::size_t>();
                p.x = number_array(s.at("input"), "input");
                group.samples.push_back(std::move(p));
            }
        } else {
            throw InvalidInput(path + ": group '" + group.name +
                               "' needs 'samples' or 'samples_file'");
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

}  // namespace great
