#pragma once

#include <string>
#include <vector>

#include "great/audit.hpp"
#include "great/calibrate.hpp"
#include "great/lab.hpp"
#include "great/score.hpp"
#include "great/types.hpp"

namespace great {

enum class ReportFormat { Json, Csv };

ReportFormat report_format_from_string(const std::string& name);

struct TimingRecord {
    std::string operation;
    std::uint64_t samples = 0;
    double total_s = 0.0;
    double per_sample_s = 0.0;  // total_s / samples
};

// Every writer below produces byte-identical output for identical input:
// fixed key order, reals printed with 17 significant digits (%.17g), '\n'
// line ends. The calibration trace maps the -inf sentinel to null in JSON
// and "-inf" in CSV.
std::string render_estimate(const GlobalEstimate& est, ReportFormat format,
                            const std::string& name = "estimate");
std::string render_curve(const RadiusCurve& curve, ReportFormat format);
std::string render_plan(const SamplePlan& plan, ReportFormat format);
std::string render_calibration(const CalibrationResult& result, ReportFormat format,
                               std::size_t trace_stride = 1);
std::string render_rank_matrix(const RankMatrix& matrix, ReportFormat format);
std::string render_group_report(const GroupReport& report, ReportFormat format);
std::string render_timing(const std::vector<TimingRecord>& records, ReportFormat format);
std::string render_stability(const std::vector<StabilityRow>& rows, ReportFormat format);
std::string render_bound_comparison(const BoundComparison& comparison, ReportFormat format);

// Parsers for the JSON artifacts (round-trip contract).
GlobalEstimate parse_estimate_json(const std::string& text);
RadiusCurve parse_curve_json(const std::string& text);
CalibrationResult parse_calibration_json(const std::string& text);
RankMatrix parse_rank_matrix_json(const std::string& text);
GroupReport parse_group_report_json(const std::string& text);
std::vector<TimingRecord> parse_timing_json(const std::string& text);
std::vector<StabilityRow> parse_stability_json(const std::string& text);

// Writes content to destination, creating parent directories. Returns the
// destination path.
std::string write_report(const std::string& content, const std::string& destination);

// %.17g, the formatting used by every artifact writer.
std::string format_real(double v);

}  // namespace great
