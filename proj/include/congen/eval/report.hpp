#pragma once

#include <string>

#include "congen/eval/harness.hpp"

namespace congen::eval {

enum class ReportFormat { markdown, csv, json };

ReportFormat report_format_from_string(const std::string & name);
std::string to_string(ReportFormat fmt);

// Every emitted report carries this banner so machine metrics are never
// mistaken for human-judged quality scores.
extern const char * kProvenanceBanner;

// "1", "0.88", "0.1": two decimals, trailing zeros stripped.
std::string format_rate(double v);

std::string render_report(const EvalReport & report, ReportFormat fmt);
void emit_report(const EvalReport & report, ReportFormat fmt, const std::string & path);

// Rebuilds rows, quarantines, and orderings from a report.json, enough to
// re-render any format without re-running the grid.
EvalReport report_from_json(const std::string & json_text);

// One JSON object per record; error records carry {"prompt", "error"} only.
std::string output_records_jsonl(const std::vector<OutputRecord> & records);

// Persists a run directory: manifest.json, outputs/<method>/<task>.jsonl,
// report.md, report.csv, report.json. Refuses to reuse an existing directory.
void write_run(const EvalReport & report, const std::string & run_dir);

} // namespace congen::eval
