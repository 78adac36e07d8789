#pragma once

#include <string>
#include <vector>

#include "congen/decoding/decoder.hpp"
#include "congen/lm/types.hpp"

namespace congen::cli {

// Declarative run configuration. File format is a TOML subset: [section]
// headers, key = value lines, quoted strings, integers, floats, booleans,
// single-line arrays of strings, and # comments. Unknown sections or keys
// raise ConfigError naming them. Environment variables named
// CONGEN_<SECTION>_<KEY> override file values; secrets (CONGEN_API_KEY) are
// read by the backends directly and never live in config files.
struct RunConfig {
    struct BackendSection {
        std::string name = "toy";                  // "toy" | "remote"
        std::string spec = "data/toy/backend.json"; // toy: transition-table json path
        std::string url;                            // remote: base URL
    } backend;

    lm::GenerationParams params;

    struct DecoderSection {
        std::string method = "greedy";
        decoding::DecoderConfig cfg; // stop_constraint and tagger are set per task
        bool satisfaction_stop = true;
    } decoder;

    struct TaskSection {
        std::string dataset = "data/toy/prompts.jsonl"; // prompts jsonl path
        std::string constraint = "words_1_5"; // benchmark task id or constraint spec path
        int n_prompts = 50;
    } task;

    struct LabelSection {
        std::string constraint; // constraint description
        std::string question;   // question form; empty = the description itself
        int n_per_prompt = 1;
        double threshold = 0.02;
        int checkpoint_every = 500;
        std::string template_path; // empty = built-in classification template
    } label;

    struct EvalSection {
        std::vector<std::string> methods{"greedy"};
        std::vector<std::string> tasks{"benchmark"}; // ids, paths, or "benchmark"
        std::vector<std::string> formats{"markdown", "csv", "json"};
        int fewshot_truncate = 0;
        std::string reference;  // toy spec path for the fluency proxy
        std::string expert;     // toy spec path
        std::string antiexpert; // toy spec path
        std::string template_id = "structural";
        std::string templates = "data/templates";
    } eval;

    // Cross-field checks: parameter ranges potential backends would reject,
    // method and format names, bounds on counts.
    void validate() const;
};

RunConfig parse_run_config(const std::string & text, const std::string & context);

// Parse file, apply CONGEN_ overrides, validate.
RunConfig load_run_config(const std::string & path);

void apply_env_overrides(RunConfig & cfg);

} // namespace congen::cli
