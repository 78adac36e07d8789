#include "congen/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace congen::eval {

using nlohmann::ordered_json;

const char * kProvenanceBanner =
    "Provenance: success_rate and mean_scorer are machine metrics computed by automatic "
    "constraint checkers and scorer functions. fluency_proxy is a reference-model "
    "log-likelihood proxy and is not comparable to human fluency judgments. Human-judged "
    "quality scores are out of scope for this harness and are not reproduced here.";

ReportFormat report_format_from_string(const std::string & name) {
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw ConfigError("unknown report format: " + name);
}

std::string to_string(ReportFormat fmt) {
    switch (fmt) {
        case ReportFormat::markdown: return "markdown";
        case ReportFormat::csv: return "csv";
        case ReportFormat::json: return "json";
    }
    return "markdown";
}

std::string format_rate(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

namespace {

std::string format_fixed(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string number_repr(double v) { return nlohmann::json(v).dump(); }

const RowResult * find_row(const EvalReport & report, const std::string & method,
                           const std::string & task) {
    for (const auto & row : report.rows) {
        if (row.method == method && row.task == task) return &row;
    }
    return nullptr;
}

std::string render_markdown(const EvalReport & report) {
    std::ostringstream out;
    out << "# Constrained generation report\n\n";
    out << "> " << kProvenanceBanner << "\n\n";

    out << "## Success rates\n\n";
    out << "| Success Rate |";
    for (const auto & method : report.method_order) out << " " << method << " |";
    out << "\n|";
    for (std::size_t i = 0; i < report.method_order.size() + 1; ++i) out << " --- |";
    out << "\n";
    for (const auto & [task_id, display] : report.task_order) {
        std::vector<const RowResult *> cells;
        double max_rate = -1.0;
        for (const auto & method : report.method_order) {
            const auto * row = find_row(report, method, task_id);
            cells.push_back(row);
            if (row) max_rate = std::max(max_rate, row->success_rate);
        }
        const std::string best = max_rate >= 0.0 ? format_rate(max_rate) : "";
        bool all_tie = true;
        for (const auto * c : cells) {
            if (c && format_rate(c->success_rate) != best) all_tie = false;
        }
        out << "| " << display << " |";
        for (const auto * c : cells) {
            if (!c) {
                out << " - |";
            } else {
                const auto formatted = format_rate(c->success_rate);
                const bool bold = !all_tie && formatted == best;
                out << " " << (bold ? "**" + formatted + "**" : formatted) << " |";
            }
        }
        out << "\n";
    }

    out << "\n## Method detail\n\n";
    out << "| Method | Task | Success rate | Mean scorer | Fluency proxy | Fallbacks | "
           "Completed |\n";
    out << "| --- | --- | --- | --- | --- | --- | --- |\n";
    for (const auto & row : report.rows) {
        out << "| " << row.method << " | " << row.task << " | " << format_rate(row.success_rate)
            << " | " << (row.mean_scorer ? format_fixed(*row.mean_scorer) : "-") << " | "
            << (row.fluency_proxy ? format_fixed(*row.fluency_proxy) : "-") << " | "
            << row.fallback_events << " | " << row.completed << "/" << row.requested << " |\n";
    }

    if (!report.quarantines.empty()) {
        out << "\n## Quarantined cells\n\n";
        out << "| Method | Task | Cause |\n";
        out << "| --- | --- | --- |\n";
        for (const auto & q : report.quarantines) {
            out << "| " << q.method << " | " << q.task << " | " << q.cause << " |\n";
        }
    }
    return out.str();
}

std::string render_csv(const EvalReport & report) {
    std::ostringstream out;
    out << "# " << kProvenanceBanner << "\n";
    out << "method,task,success_rate,mean_scorer,fluency_proxy,fallback_events,completed,"
           "requested\n";
    for (const auto & row : report.rows) {
        out << row.method << "," << row.task << "," << number_repr(row.success_rate) << ","
            << (row.mean_scorer ? number_repr(*row.mean_scorer) : "") << ","
            << (row.fluency_proxy ? number_repr(*row.fluency_proxy) : "") << ","
            << row.fallback_events << "," << row.completed << "," << row.requested << "\n";
    }
    return out.str();
}

std::string render_json(const EvalReport & report) {
    ordered_json doc;
    doc["schema"] = 1;
    doc["banner"] = kProvenanceBanner;
    doc["method_order"] = report.method_order;
    auto task_order = ordered_json::array();
    for (const auto & [id, display] : report.task_order) {
        task_order.push_back(ordered_json{{"id", id}, {"display", display}});
    }
    doc["task_order"] = task_order;
    auto rows = ordered_json::array();
    for (const auto & row : report.rows) {
        ordered_json r;
        r["method"] = row.method;
        r["task"] = row.task;
        r["task_display"] = row.task_display;
        r["success_rate"] = row.success_rate;
        r["mean_scorer"] = row.mean_scorer ? ordered_json(*row.mean_scorer) : ordered_json(nullptr);
        r["fluency_proxy"] =
            row.fluency_proxy ? ordered_json(*row.fluency_proxy) : ordered_json(nullptr);
        r["fallback_events"] = row.fallback_events;
        r["completed"] = row.completed;
        r["requested"] = row.requested;
        rows.push_back(r);
    }
    doc["rows"] = rows;
    auto quarantines = ordered_json::array();
    for (const auto & q : report.quarantines) {
        quarantines.push_back(ordered_json{{"method", q.method}, {"task", q.task}, {"cause", q.cause}});
    }
    doc["quarantines"] = quarantines;
    return doc.dump(2) + "\n";
}

void write_file(const std::string & path, const std::string & content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

} // namespace

EvalReport report_from_json(const std::string & json_text) {
    EvalReport report;
    try {
        const auto doc = nlohmann::json::parse(json_text);
        if (doc.at("schema").get<int>() != 1) {
            throw FormatError("unsupported report schema");
        }
        for (const auto & m : doc.at("method_order")) {
            report.method_order.push_back(m.get<std::string>());
        }
        for (const auto & t : doc.at("task_order")) {
            report.task_order.emplace_back(t.at("id").get<std::string>(),
                                           t.at("display").get<std::string>());
        }
        for (const auto & r : doc.at("rows")) {
            RowResult row;
            row.method = r.at("method").get<std::string>();
            row.task = r.at("task").get<std::string>();
            row.task_display = r.at("task_display").get<std::string>();
            row.success_rate = r.at("success_rate").get<double>();
            if (!r.at("mean_scorer").is_null()) row.mean_scorer = r["mean_scorer"].get<double>();
            if (!r.at("fluency_proxy").is_null()) {
                row.fluency_proxy = r["fluency_proxy"].get<double>();
            }
            row.fallback_events = r.at("fallback_events").get<int>();
            row.completed = r.at("completed").get<int>();
            row.requested = r.at("requested").get<int>();
            report.rows.push_back(std::move(row));
        }
        for (const auto & q : doc.at("quarantines")) {
            report.quarantines.push_back({q.at("method").get<std::string>(),
                                          q.at("task").get<std::string>(),
                                          q.at("cause").get<std::string>()});
        }
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("bad report json: ") + e.what());
    }
    return report;
}

std::string render_report(const EvalReport & report, ReportFormat fmt) {
    switch (fmt) {
        case ReportFormat::markdown: return render_markdown(report);
        case ReportFormat::csv: return render_csv(report);
        case ReportFormat::json: return render_json(report);
    }
    throw Error("unknown report format");
}

void emit_report(const EvalReport & report, ReportFormat fmt, const std::string & path) {
    write_file(path, render_report(report, fmt));
}

std::string output_records_jsonl(const std::vector<OutputRecord> & records) {
    std::string out;
    for (const auto & rec : records) {
        ordered_json line;
        line["prompt"] = rec.prompt;
        if (!rec.error.empty()) {
            line["error"] = rec.error;
        } else {
            line["output"] = rec.output;
            line["satisfied"] = rec.satisfied;
            if (rec.count) line["count"] = *rec.count;
            if (rec.score) line["score"] = *rec.score;
            line["fallbacks"] = rec.fallbacks;
        }
        out += line.dump() + "\n";
    }
    return out;
}

void write_run(const EvalReport & report, const std::string & run_dir) {
    namespace fs = std::filesystem;
    if (fs::exists(run_dir)) throw IoError("run directory already exists: " + run_dir);
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create run directory " + run_dir + ": " + ec.message());
    write_file(run_dir + "/manifest.json", report.manifest_json + "\n");
    for (const auto & cell : report.outputs) {
        const std::string dir = run_dir + "/outputs/" + cell.method;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
        write_file(dir + "/" + cell.task + ".jsonl", output_records_jsonl(cell.records));
    }
    emit_report(report, ReportFormat::markdown, run_dir + "/report.md");
    emit_report(report, ReportFormat::csv, run_dir + "/report.csv");
    emit_report(report, ReportFormat::json, run_dir + "/report.json");
}

} // namespace congen::eval
