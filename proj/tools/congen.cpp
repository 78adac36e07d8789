#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "congen/cli/config.hpp"
#include "congen/cli/ingest.hpp"
#include "congen/constraints/constraint.hpp"
#include "congen/constraints/pos_tagger.hpp"
#include "congen/errors.hpp"
#include "congen/eval/harness.hpp"
#include "congen/eval/report.hpp"
#include "congen/lm/remote_backend.hpp"
#include "congen/lm/toy_backend.hpp"
#include "congen/synthlabel/synthlabel.hpp"

namespace {

namespace fs = std::filesystem;
namespace cli = congen::cli;
namespace ev = congen::eval;
namespace lm = congen::lm;
namespace synth = congen::synth;
using congen::ConfigError;
using congen::Error;

std::string error_name(const Error & e) {
    if (dynamic_cast<const congen::BackendUnavailable *>(&e)) return "BackendUnavailable";
    if (dynamic_cast<const congen::CapabilityError *>(&e)) return "CapabilityError";
    if (dynamic_cast<const congen::EncodingError *>(&e)) return "EncodingError";
    if (dynamic_cast<const congen::TaggerUnavailable *>(&e)) return "TaggerUnavailable";
    if (dynamic_cast<const congen::DegenerateDistribution *>(&e)) return "DegenerateDistribution";
    if (dynamic_cast<const congen::VocabMismatch *>(&e)) return "VocabMismatch";
    if (dynamic_cast<const congen::MissingPlaceholder *>(&e)) return "MissingPlaceholder";
    if (dynamic_cast<const congen::UnparseableLabel *>(&e)) return "UnparseableLabel";
    if (dynamic_cast<const congen::LabelRateError *>(&e)) return "LabelRateError";
    if (dynamic_cast<const congen::SchemaError *>(&e)) return "SchemaError";
    if (dynamic_cast<const congen::FormatError *>(&e)) return "FormatError";
    if (dynamic_cast<const congen::ConfigError *>(&e)) return "ConfigError";
    if (dynamic_cast<const congen::IoError *>(&e)) return "IoError";
    return "Error";
}

std::string read_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw congen::IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string & path, const std::string & content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw congen::IoError("cannot write " + path);
    out << content;
    if (!out) throw congen::IoError("failed writing " + path);
}

std::string utc_stamp(const char * fmt) {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

std::string new_run_dir(const std::string & base, const std::string & command) {
    const std::string stem = base + "/" + utc_stamp("%Y%m%dT%H%M%SZ") + "-" + command;
    std::string dir = stem;
    for (int n = 2; fs::exists(dir); ++n) dir = stem + "-" + std::to_string(n);
    return dir;
}

// Append-only invocation journal under the runs root; run directories
// themselves are never touched again.
void append_journal(const std::string & runs_dir, const nlohmann::ordered_json & entry) {
    std::error_code ec;
    fs::create_directories(runs_dir, ec);
    if (ec) throw congen::IoError("cannot create " + runs_dir + ": " + ec.message());
    const std::string path = runs_dir + "/manifest.jsonl";
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw congen::IoError("cannot append to " + path);
    out << entry.dump() << "\n";
}

std::string path_stem(const std::string & path) { return fs::path(path).stem().string(); }

cli::RunConfig load_config(const std::string & path) {
    if (path.empty()) {
        cli::RunConfig cfg;
        cli::apply_env_overrides(cfg);
        return cfg;
    }
    return cli::load_run_config(path);
}

std::shared_ptr<lm::Backend> make_backend(const cli::RunConfig::BackendSection & b) {
    if (b.name == "toy") {
        if (b.spec.empty()) throw ConfigError("backend.spec is required for the toy backend");
        return std::make_shared<lm::ToyBackend>(lm::ToyBackend::from_json_file(b.spec));
    }
    if (b.url.empty()) throw ConfigError("backend.url is required for the remote backend");
    lm::RemoteBackend::Options opt;
    opt.base_url = b.url;
    return std::make_shared<lm::RemoteBackend>(std::move(opt));
}

std::shared_ptr<const lm::Backend> toy_from_path(const std::string & path) {
    if (path.empty()) return nullptr;
    return std::make_shared<lm::ToyBackend>(lm::ToyBackend::from_json_file(path));
}

std::optional<congen::constraints::StructuralConstraint> benchmark_setting(const std::string & id) {
    for (const auto & c : congen::constraints::benchmark_task_settings()) {
        if (ev::task_id_for(c) == id) return c;
    }
    return std::nullopt;
}

// "benchmark" expands to the 13 settings; otherwise an entry is a benchmark
// task id or a constraint spec path.
std::vector<ev::TaskSpec> resolve_tasks(const std::vector<std::string> & entries,
                                        const std::vector<std::string> & prompts, int n_prompts) {
    std::vector<ev::TaskSpec> tasks;
    auto push = [&](ev::TaskSpec task) {
        task.prompts = prompts;
        task.n_prompts = n_prompts;
        tasks.push_back(std::move(task));
    };
    for (const auto & entry : entries) {
        if (entry == "benchmark") {
            for (const auto & setting : congen::constraints::benchmark_task_settings()) {
                ev::TaskSpec task;
                task.id = ev::task_id_for(setting);
                task.constraint.kind = "structural";
                task.constraint.structural = setting;
                push(std::move(task));
            }
            continue;
        }
        if (const auto setting = benchmark_setting(entry)) {
            ev::TaskSpec task;
            task.id = entry;
            task.constraint.kind = "structural";
            task.constraint.structural = *setting;
            push(std::move(task));
            continue;
        }
        if (!fs::exists(entry)) {
            throw ConfigError("unknown task: " + entry +
                              " (not a benchmark id or a constraint spec file)");
        }
        ev::TaskSpec task;
        task.constraint = congen::constraints::load_constraint_spec(entry);
        task.id = task.constraint.kind == "structural"
                      ? ev::task_id_for(*task.constraint.structural)
                      : path_stem(entry);
        push(std::move(task));
    }
    return tasks;
}

struct GridSetup {
    std::shared_ptr<lm::Backend> backend;
    std::unique_ptr<congen::decoding::TemplateStore> store;
    ev::GridConfig gcfg;
};

GridSetup make_grid_setup(const cli::RunConfig & cfg, const std::vector<ev::Method> & methods) {
    GridSetup s;
    s.backend = make_backend(cfg.backend);
    s.gcfg.expert = toy_from_path(cfg.eval.expert);
    s.gcfg.antiexpert = toy_from_path(cfg.eval.antiexpert);
    s.gcfg.reference = toy_from_path(cfg.eval.reference);
    for (const auto m : methods) {
        if (m == ev::Method::zeroshot || m == ev::Method::fewshot) {
            s.store = std::make_unique<congen::decoding::TemplateStore>(cfg.eval.templates);
            s.gcfg.templates = s.store.get();
            break;
        }
    }
    s.gcfg.template_id = cfg.eval.template_id;
    s.gcfg.fewshot_truncate = cfg.eval.fewshot_truncate;
    s.gcfg.satisfaction_stop = cfg.decoder.satisfaction_stop;
    s.gcfg.decoder = cfg.decoder.cfg;
    s.gcfg.params = cfg.params;
    s.gcfg.tagger = std::make_shared<congen::constraints::RuleTagger>();
    return s;
}

void print_summary(const ev::EvalReport & report) {
    for (const auto & row : report.rows) {
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", row.wall_time_s);
        std::cout << "  " << row.method << "/" << row.task
                  << ": success=" << ev::format_rate(row.success_rate) << " completed="
                  << row.completed << "/" << row.requested << " fallbacks=" << row.fallback_events
                  << " (" << timing << ")\n";
    }
    for (const auto & q : report.quarantines) {
        std::cout << "  " << q.method << "/" << q.task << ": quarantined (" << q.cause << ")\n";
    }
}

ev::ReportFormat format_for_path(const std::string & path, ev::ReportFormat fallback) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".md" || ext == ".markdown") return ev::ReportFormat::markdown;
    if (ext == ".csv") return ev::ReportFormat::csv;
    if (ext == ".json") return ev::ReportFormat::json;
    return fallback;
}

void cmd_ingest(const std::string & input, const std::string & kind_name, const std::string & name,
                const std::string & out_dir, bool no_splits, std::uint64_t seed,
                std::vector<std::string> & outputs) {
    const auto kind = cli::ingest_kind_from_string(kind_name);
    const auto result = cli::ingest(input, kind, name, !no_splits, seed);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw congen::IoError("cannot create " + out_dir + ": " + ec.message());
    const std::string base = out_dir + "/" + name + "_";
    synth::save_prompts_jsonl(result.train, base + "train.jsonl");
    synth::save_prompts_jsonl(result.val, base + "val.jsonl");
    synth::save_prompts_jsonl(result.test, base + "test.jsonl");
    outputs = {base + "train.jsonl", base + "val.jsonl", base + "test.jsonl"};
    std::cout << "ingested " << name << ": train=" << result.train.prompts.size()
              << " val=" << result.val.prompts.size() << " test=" << result.test.prompts.size()
              << "\n";
}

void cmd_generate(const std::string & config_path, const std::string & prompts_path,
                  const std::string & out, std::vector<std::string> & outputs) {
    auto cfg = load_config(config_path);
    cfg.validate();
    const std::string source = prompts_path.empty() ? cfg.task.dataset : prompts_path;
    const auto ds = synth::load_prompts_jsonl(source, path_stem(source), synth::Split::train);
    const auto backend = make_backend(cfg.backend);
    const auto pairs =
        synth::generate_corpus(ds, *backend, cfg.label.n_per_prompt, cfg.params, out);
    synth::save_pairs_jsonl(pairs, out);
    outputs = {out};
    std::cout << "generated " << pairs.size() << " pairs from " << ds.prompts.size()
              << " prompts -> " << out << "\n";
}

void cmd_label(const std::string & config_path, const std::string & pairs_path,
               const std::string & out, std::vector<std::string> & outputs) {
    auto cfg = load_config(config_path);
    cfg.validate();
    if (cfg.label.constraint.empty()) throw ConfigError("label.constraint is required");
    synth::LabelingConfig lcfg;
    lcfg.constraint_description = cfg.label.constraint;
    lcfg.question_form = cfg.label.question.empty() ? cfg.label.constraint : cfg.label.question;
    lcfg.n_per_prompt = cfg.label.n_per_prompt;
    lcfg.unparseable_threshold = cfg.label.threshold;
    lcfg.checkpoint_every = cfg.label.checkpoint_every;
    if (!cfg.label.template_path.empty()) lcfg.template_text = read_file(cfg.label.template_path);
    lcfg.validate();
    const auto pairs = synth::load_pairs_jsonl(pairs_path);
    const auto backend = make_backend(cfg.backend);
    const std::string checkpoint = out + ".ckpt";
    const auto records = synth::label_corpus(pairs, *backend, lcfg, checkpoint);
    synth::export_dataset(records, out, cfg.label.constraint);
    std::error_code ec;
    fs::remove(checkpoint, ec);
    outputs = {out};
    std::cout << synth::dataset_stats(records).to_json() << "\n";
}

void cmd_stats(const std::string & input, std::optional<double> reference_rate) {
    const auto records = synth::import_dataset(input);
    std::cout << synth::dataset_stats(records, reference_rate).to_json() << "\n";
}

void cmd_decode(const std::string & config_path, const std::string & method_override,
                const std::string & task_override, const std::string & backend_override,
                const std::vector<std::string> & prompt_args, const std::string & out,
                const std::string & runs_dir, std::vector<std::string> & outputs) {
    auto cfg = load_config(config_path);
    if (!method_override.empty()) cfg.decoder.method = method_override;
    if (!backend_override.empty()) cfg.backend.name = backend_override;
    cfg.validate();
    const auto method = ev::method_from_string(cfg.decoder.method);
    const std::string entry = task_override.empty() ? cfg.task.constraint : task_override;
    std::vector<std::string> prompts = prompt_args;
    if (prompts.empty()) {
        prompts = synth::load_prompts_jsonl(cfg.task.dataset, path_stem(cfg.task.dataset),
                                            synth::Split::test)
                      .prompts;
    }
    const int n_prompts =
        prompt_args.empty() ? cfg.task.n_prompts : static_cast<int>(prompt_args.size());
    const auto tasks = resolve_tasks({entry}, prompts, n_prompts);
    auto setup = make_grid_setup(cfg, {method});
    const auto report = ev::run_grid({method}, tasks, *setup.backend, setup.gcfg);
    if (!report.quarantines.empty()) {
        const auto & q = report.quarantines.front();
        throw Error(q.method + "/" + q.task + ": " + q.cause);
    }
    const std::string run_dir = new_run_dir(runs_dir, "decode");
    ev::write_run(report, run_dir);
    outputs.push_back(run_dir);
    if (!out.empty()) {
        if (report.outputs.size() != 1) throw ConfigError("--out needs a single task");
        write_file(out, ev::output_records_jsonl(report.outputs.front().records));
        outputs.push_back(out);
    }
    std::cout << "run: " << run_dir << "\n";
    print_summary(report);
}

void cmd_eval(const std::string & config_path, const std::string & replay_path,
              const std::string & out, const std::string & runs_dir,
              std::vector<std::string> & outputs) {
    ev::EvalReport report;
    ev::ReportFormat fallback = ev::ReportFormat::markdown;
    if (!replay_path.empty()) {
        report = ev::replay_run(read_file(replay_path));
    } else {
        auto cfg = load_config(config_path);
        cfg.validate();
        std::vector<ev::Method> methods;
        for (const auto & m : cfg.eval.methods) methods.push_back(ev::method_from_string(m));
        const auto ds = synth::load_prompts_jsonl(cfg.task.dataset, path_stem(cfg.task.dataset),
                                                  synth::Split::test);
        const auto tasks = resolve_tasks(cfg.eval.tasks, ds.prompts, cfg.task.n_prompts);
        auto setup = make_grid_setup(cfg, methods);
        report = ev::run_grid(methods, tasks, *setup.backend, setup.gcfg);
        if (!cfg.eval.formats.empty()) {
            fallback = ev::report_format_from_string(cfg.eval.formats.front());
        }
    }
    const std::string run_dir = new_run_dir(runs_dir, "eval");
    ev::write_run(report, run_dir);
    outputs.push_back(run_dir);
    if (!out.empty()) {
        ev::emit_report(report, format_for_path(out, fallback), out);
        outputs.push_back(out);
    }
    std::cout << "run: " << run_dir << "\n";
    print_summary(report);
}

void cmd_report(const std::string & input, const std::string & format, const std::string & out,
                std::vector<std::string> & outputs) {
    const auto report = ev::report_from_json(read_file(input));
    const auto fmt = ev::report_format_from_string(format);
    const auto text = ev::render_report(report, fmt);
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file(out, text);
        outputs = {out};
    }
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"Constrained text generation engine and benchmark harness"};
    app.require_subcommand(1);

    std::string runs_dir = "runs";
    app.add_option("--runs", runs_dir, "Run directory root")->capture_default_str();

    auto * ingest_cmd = app.add_subcommand("ingest", "Build prompt datasets from a source file");
    std::string in_input;
    std::string in_kind = "prompts-jsonl";
    std::string in_name;
    std::string in_outdir = "data/prompts";
    bool in_nosplits = false;
    std::uint64_t in_seed = 0;
    ingest_cmd->add_option("--input", in_input, "Source JSONL file")->required();
    ingest_cmd
        ->add_option("--kind", in_kind,
                     "prompts-jsonl | summarization-articles | five-sentence-stories")
        ->capture_default_str();
    ingest_cmd->add_option("--name", in_name, "Dataset name")->required();
    ingest_cmd->add_option("--out-dir", in_outdir, "Output directory")->capture_default_str();
    ingest_cmd->add_flag("--no-splits", in_nosplits, "Load everything into train and test");
    ingest_cmd->add_option("--seed", in_seed, "Split shuffle seed");

    auto * generate_cmd =
        app.add_subcommand("generate", "Sample continuations for a prompt dataset");
    std::string g_config;
    std::string g_prompts;
    std::string g_out = "pairs.jsonl";
    generate_cmd->add_option("--config", g_config, "Run config file");
    generate_cmd->add_option("--prompts", g_prompts, "Prompts JSONL (default: task.dataset)");
    generate_cmd->add_option("--out", g_out, "Pair file, doubles as the resume checkpoint")
        ->capture_default_str();

    auto * label_cmd =
        app.add_subcommand("label", "Label generated pairs into a synthetic dataset");
    std::string l_config;
    std::string l_pairs;
    std::string l_out = "dataset.jsonl";
    label_cmd->add_option("--config", l_config, "Run config file");
    label_cmd->add_option("--pairs", l_pairs, "Generated pair file")->required();
    label_cmd->add_option("--out", l_out, "Dataset JSONL")->capture_default_str();

    auto * stats_cmd = app.add_subcommand("stats", "Print dataset statistics as JSON");
    std::string s_input;
    std::optional<double> s_reference;
    stats_cmd->add_option("--input", s_input, "Dataset JSONL")->required();
    stats_cmd->add_option("--reference-rate", s_reference, "Comparison positive rate");

    auto * decode_cmd = app.add_subcommand("decode", "Run one decoding method on one task");
    std::string d_config;
    std::string d_method;
    std::string d_task;
    std::string d_backend;
    std::string d_out;
    std::vector<std::string> d_prompts;
    decode_cmd->add_option("--config", d_config, "Run config file");
    decode_cmd->add_option("--method", d_method, "Decoding method (default: decoder.method)");
    decode_cmd->add_option("--task", d_task, "Benchmark task id or constraint spec path");
    decode_cmd->add_option("--backend", d_backend, "Backend name override");
    decode_cmd->add_option("--prompt", d_prompts,
                           "Literal prompt, repeatable (default: the task dataset)");
    decode_cmd->add_option("--out", d_out, "Also write the output records here");

    auto * eval_cmd = app.add_subcommand("eval", "Run the method x task grid");
    std::string e_config;
    std::string e_replay;
    std::string e_out;
    eval_cmd->add_option("--config", e_config, "Run config file");
    eval_cmd->add_option("--replay", e_replay, "Re-run from a run manifest instead");
    eval_cmd->add_option("--out", e_out, "Extra report copy (format by extension)");

    auto * report_cmd = app.add_subcommand("report", "Re-render a report.json");
    std::string r_input;
    std::string r_format = "markdown";
    std::string r_out;
    report_cmd->add_option("--input", r_input, "report.json from a run directory")->required();
    report_cmd->add_option("--format", r_format, "markdown | csv | json")->capture_default_str();
    report_cmd->add_option("--out", r_out, "Output file (default: stdout)");

    for (auto * sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        nlohmann::ordered_json err;
        err["error"]["type"] = "UsageError";
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 2;
    }

    nlohmann::ordered_json entry;
    entry["schema"] = 1;
    entry["command"] = app.get_subcommands().front()->get_name();
    auto args = nlohmann::ordered_json::array();
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    entry["argv"] = args;
    entry["started"] = utc_stamp("%Y-%m-%dT%H:%M:%SZ");

    std::vector<std::string> outputs;
    try {
        if (ingest_cmd->parsed()) {
            cmd_ingest(in_input, in_kind, in_name, in_outdir, in_nosplits, in_seed, outputs);
        } else if (generate_cmd->parsed()) {
            cmd_generate(g_config, g_prompts, g_out, outputs);
        } else if (label_cmd->parsed()) {
            cmd_label(l_config, l_pairs, l_out, outputs);
        } else if (stats_cmd->parsed()) {
            cmd_stats(s_input, s_reference);
        } else if (decode_cmd->parsed()) {
            cmd_decode(d_config, d_method, d_task, d_backend, d_prompts, d_out, runs_dir, outputs);
        } else if (eval_cmd->parsed()) {
            cmd_eval(e_config, e_replay, e_out, runs_dir, outputs);
        } else if (report_cmd->parsed()) {
            cmd_report(r_input, r_format, r_out, outputs);
        }
    } catch (const Error & e) {
        entry["status"] = "error";
        entry["error"]["type"] = error_name(e);
        entry["error"]["message"] = e.what();
        entry["finished"] = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
        try {
            append_journal(runs_dir, entry);
        } catch (const Error &) {
        }
        nlohmann::ordered_json err;
        err["error"]["type"] = error_name(e);
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return dynamic_cast<const ConfigError *>(&e) ? 2 : 1;
    } catch (const std::exception & e) {
        nlohmann::ordered_json err;
        err["error"]["type"] = "Internal";
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }

    entry["status"] = "ok";
    entry["outputs"] = outputs;
    entry["finished"] = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
    append_journal(runs_dir, entry);
    return 0;
}
