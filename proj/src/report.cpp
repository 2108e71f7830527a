#include "great/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace great {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    throw InvalidInput("unknown format: " + name + " (expected json or csv)");
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string quoted(const std::string& s) { return "\"" + json_escape(s) + "\""; }

// CSV fields are plain here (names come from config files); quote only when
// needed.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string estimate_json_body(const GlobalEstimate& est) {
    std::string out = "{\"mean\":" + format_real(est.mean) +
                      ",\"count\":" + std::to_string(est.count) + ",\"guarantee\":";
    if (est.guarantee) {
        out += "{\"epsilon\":" + format_real(est.guarantee->epsilon) +
               ",\"delta\":" + format_real(est.guarantee->delta) + "}";
    } else {
        out += "null";
    }
    out += "}";
    return out;
}

std::string estimate_csv_row(const GlobalEstimate& est, const std::string& name) {
    std::string row = csv_field(name) + "," + format_real(est.mean) + "," +
                      std::to_string(est.count) + ",";
    row += est.guarantee ? format_real(est.guarantee->epsilon) : "";
    row += ",";
    row += est.guarantee ? format_real(est.guarantee->delta) : "";
    return row;
}

}  // namespace

std::string render_estimate(const GlobalEstimate& est, ReportFormat format,
                            const std::string& name) {
    if (format == ReportFormat::Json) return estimate_json_body(est) + "\n";
    return "name,mean,count,epsilon,delta\n" + estimate_csv_row(est, name) + "\n";
}

std::string render_curve(const RadiusCurve& curve, ReportFormat format) {
    if (format == ReportFormat::Json) {
        std::string out = "{\"curve\":[";
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            if (i) out += ",";
            out += "{\"radius\":" + format_real(curve.points[i].radius) +
                   ",\"certified_fraction\":" + format_real(curve.points[i].certified_fraction) + "}";
        }
        return out + "]}\n";
    }
    std::string out = "radius,certified_fraction\n";
    for (const auto& p : curve.points)
        out += format_real(p.radius) + "," + format_real(p.certified_fraction) + "\n";
    return out;
}

std::string render_plan(const SamplePlan& plan, ReportFormat format) {
    if (format == ReportFormat::Json)
        return "{\"epsilon\":" + format_real(plan.epsilon) + ",\"delta\":" + format_real(plan.delta) +
               ",\"n\":" + std::to_string(plan.n) + "}\n";
    return "epsilon,delta,n\n" + format_real(plan.epsilon) + "," + format_real(plan.delta) + "," +
           std::to_string(plan.n) + "\n";
}

namespace {

std::string rho_json(double rho) {
    return std::isinf(rho) ? std::string("null") : format_real(rho);
}

}  // namespace

std::string render_calibration(const CalibrationResult& result, ReportFormat format,
                               std::size_t trace_stride) {
    if (trace_stride == 0) throw InvalidInput("trace stride must be >= 1");
    if (format == ReportFormat::Json) {
        std::string out = "{\"best_config\":{\"mode\":" + quoted(to_string(result.best_config.mode)) +
                          ",\"t1\":" + format_real(result.best_config.t1) +
                          ",\"t2\":" + format_real(result.best_config.t2) + "}";
        out += ",\"best_rho\":" + format_real(result.best_rho) + ",\"trace\":[";
        bool first = true;
        for (std::size_t i = 0; i < result.trace.size(); i += trace_stride) {
            if (!first) out += ",";
            first = false;
            out += "{\"temperature\":" + format_real(result.trace[i].temperature) +
                   ",\"rho\":" + rho_json(result.trace[i].rho) + "}";
        }
        return out + "]}\n";
    }
    std::string out = "temperature,rho\n";
    for (std::size_t i = 0; i < result.trace.size(); i += trace_stride)
        out += format_real(result.trace[i].temperature) + "," +
               format_real(result.trace[i].rho) + "\n";
    return out;
}

std::string render_rank_matrix(const RankMatrix& matrix, ReportFormat format) {
    if (format == ReportFormat::Json) {
        std::string out = "{\"names\":[";
        for (std::size_t i = 0; i < matrix.names.size(); ++i) {
            if (i) out += ",";
            out += quoted(matrix.names[i]);
        }
        out += "],\"rho\":[";
        for (std::size_t i = 0; i < matrix.rho.size(); ++i) {
            if (i) out += ",";
            out += "[";
            for (std::size_t j = 0; j < matrix.rho[i].size(); ++j) {
                if (j) out += ",";
                out += format_real(matrix.rho[i][j]);
            }
            out += "]";
        }
        return out + "]}\n";
    }
    std::string out = "name";
    for (const auto& n : matrix.names) out += "," + csv_field(n);
    out += "\n";
    for (std::size_t i = 0; i < matrix.names.size(); ++i) {
        out += csv_field(matrix.names[i]);
        for (std::size_t j = 0; j < matrix.rho[i].size(); ++j) out += "," + format_real(matrix.rho[i][j]);
        out += "\n";
    }
    return out;
}

std::string render_group_report(const GroupReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        std::string out = "{\"groups\":[";
        for (std::size_t i = 0; i < report.groups.size(); ++i) {
            const auto& g = report.groups[i];
            if (i) out += ",";
            out += "{\"name\":" + quoted(g.name) + ",\"valid\":" + (g.valid ? "true" : "false");
            if (g.valid)
                out += ",\"mean\":" + format_real(g.estimate.mean) +
                       ",\"count\":" + std::to_string(g.estimate.count);
            else
                out += ",\"mean\":null,\"count\":0";
            out += ",\"failures\":" + std::to_string(g.failures) + "}";
        }
        out += "],\"overall\":" + estimate_json_body(report.overall) +
               ",\"total_failures\":" + std::to_string(report.total_failures) + "}";
        return out + "\n";
    }
    std::string out = "name,mean,count,epsilon,delta\n";
    for (const auto& g : report.groups) {
        if (g.valid)
            out += estimate_csv_row(g.estimate, g.name) + "\n";
        else
            out += csv_field(g.name) + ",,0,,\n";
    }
    out += estimate_csv_row(report.overall, "overall") + "\n";
    return out;
}

std::string render_timing(const std::vector<TimingRecord>& records, ReportFormat format) {
    if (format == ReportFormat::Json) {
        std::string out = "{\"timing\":[";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (i) out += ",";
            out += "{\"operation\":" + quoted(r.operation) + ",\"samples\":" +
                   std::to_string(r.samples) + ",\"total_s\":" + format_real(r.total_s) +
                   ",\"per_sample_s\":" + format_real(r.per_sample_s) + "}";
        }
        return out + "]}\n";
    }
    std::string out = "operation,samples,total_s,per_sample_s\n";
    for (const auto& r : records)
        out += csv_field(r.operation) + "," + std::to_string(r.samples) + "," +
               format_real(r.total_s) + "," + format_real(r.per_sample_s) + "\n";
    return out;
}

std::string render_stability(const std::vector<StabilityRow>& rows, ReportFormat format) {
    if (format == ReportFormat::Json) {
        std::string out = "{\"stability\":[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i) out += ",";
            out += "{\"n\":" + std::to_string(rows[i].n) +
                   ",\"mean_of_means\":" + format_real(rows[i].mean_of_means) +
                   ",\"std_of_means\":" + format_real(rows[i].std_of_means) + "}";
        }
        return out + "]}\n";
    }
    std::string out = "n,mean_of_means,std_of_means\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + "," + format_real(r.mean_of_means) + "," +
               format_real(r.std_of_means) + "\n";
    return out;
}

GlobalEstimate parse_estimate_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GlobalEstimate est;
    est.mean = j.at("mean").get<double>();
    est.count = j.at("count").get<std::uint64_t>();
    if (j.contains("guarantee") && !j["guarantee"].is_null())
        est.guarantee = Guarantee{j["guarantee"].at("epsilon").get<double>(),
                                  j["guarantee"].at("delta").get<double>()};
    return est;
}

RadiusCurve parse_curve_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RadiusCurve curve;
    for (const auto& p : j.at("curve"))
        curve.points.push_back({p.at("radius").get<double>(),
                                p.at("certified_fraction").get<double>()});
    return curve;
}

CalibrationResult parse_calibration_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    CalibrationResult result;
    result.best_config.mode = transform_mode_from_string(j.at("best_config").at("mode"));
    result.best_config.t1 = j.at("best_config").at("t1").get<double>();
    result.best_config.t2 = j.at("best_config").at("t2").get<double>();
    result.best_rho = j.at("best_rho").get<double>();
    for (const auto& p : j.at("trace")) {
        TracePoint tp;
        tp.temperature = p.at("temperature").get<double>();
        tp.rho = p.at("rho").is_null() ? kDegenerateRho : p.at("rho").get<double>();
        result.trace.push_back(tp);
    }
    return result;
}

RankMatrix parse_rank_matrix_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RankMatrix m;
    for (const auto& n : j.at("names")) m.names.push_back(n.get<std::string>());
    for (const auto& row : j.at("rho")) m.rho.push_back(row.get<std::vector<double>>());
    return m;
}

GroupReport parse_group_report_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GroupReport report;
    for (const auto& g : j.at("groups")) {
        GroupResult gr;
        gr.name = g.at("name").get<std::string>();
        gr.valid = g.at("valid").get<bool>();
        if (gr.valid) {
            gr.estimate.mean = g.at("mean").get<double>();
            gr.estimate.count = g.at("count").get<std::uint64_t>();
        }
        gr.failures = g.at("failures").get<std::size_t>();
        report.groups.push_back(std::move(gr));
    }
    report.overall = parse_estimate_json(j.at("overall").dump());
    report.total_failures = j.at("total_failures").get<std::size_t>();
    return report;
}

std::vector<TimingRecord> parse_timing_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<TimingRecord> out;
    for (const auto& r : j.at("timing"))
        out.push_back({r.at("operation").get<std::string>(), r.at("samples").get<std::uint64_t>(),
                       r.at("total_s").get<double>(), r.at("per_sample_s").get<double>()});
    return out;
}

std::vector<StabilityRow> parse_stability_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<StabilityRow> out;
    for (const auto& r : j.at("stability"))
        out.push_back({r.at("n").get<std::uint64_t>(), r.at("mean_of_means").get<double>(),
                       r.at("std_of_means").get<double>()});
    return out;
}

std::string write_report(const std::string& content, const std::string& destination) {
    const std::filesystem::path path(destination);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write to " + destination);
    out << content;
    if (!out) throw InvalidInput("write failed for " + destination);
    return destination;
}

}  // namespace great
