#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "congen/lm/backend.hpp"

namespace congen::synth {

enum class Split { train, val, test };
enum class TaskKind { continuation, story_writing };

std::string to_string(Split split);
Split split_from_string(const std::string & name);

struct PromptDataset {
    std::string name;
    Split split = Split::train;
    std::vector<std::string> prompts;
    TaskKind task = TaskKind::continuation;
};

// Prompt-continuation pair with the seed that produced it.
struct GeneratedPair {
    std::string p;
    std::string o;
    std::uint64_t seed = 0;
    std::string backend;
};

struct SyntheticRecord {
    std::string p;
    std::string o;
    std::optional<double> y_hat; // binary 0/1 or scalar in [0,1]; absent when unparsed
    std::string raw_label_text;
    std::uint64_t seed = 0;
    std::string backend;

    friend bool operator==(const SyntheticRecord &, const SyntheticRecord &) = default;
};

struct LabelingConfig {
    std::string constraint_description;               // e.g. "is the text toxic?"
    std::string question_form;                        // embeds the description
    std::vector<std::pair<std::string, bool>> fewshot_pairs;
    int n_per_prompt = 1;
    double unparseable_threshold = 0.02;
    int checkpoint_every = 500;
    std::string template_text;                        // empty = built-in default

    void validate() const;
};

// The built-in classification template. Placeholders <TEXT> and <CONSTRAINT>.
const std::string & default_label_template();

// Continuations for every prompt of a training-split dataset. Seeds derive
// from params.seed plus the pair index and are recorded for replay. With a
// checkpoint path, finished pairs are flushed periodically and a rerun
// resumes after the last flushed pair.
std::vector<GeneratedPair> generate_corpus(const PromptDataset & ds, const lm::Backend & backend,
                                           int n_per_prompt, const lm::GenerationParams & params,
                                           const std::string & checkpoint_path = "");

// Byte-exact instantiation of the classification template. Few-shot pairs
// render as the same template applied to the pair text, followed by the
// answer word and a newline, all before the query.
std::string build_label_prompt(const LabelingConfig & cfg, const std::string & o);

struct AnswerProbs {
    double p_true = 0.0;
    double p_false = 0.0;
};

// First "true"/"false" word of raw decides the binary label; with answer
// probabilities, the scalar P(True)/(P(True)+P(False)) is returned instead.
// Throws UnparseableLabel when neither word occurs.
double parse_label(const std::string & raw, const std::optional<AnswerProbs> & probs = {});

// Labels every pair in corpus order. Checkpoints every cfg.checkpoint_every
// records; a rerun with the same checkpoint path resumes after the last
// flushed record. Throws LabelRateError when the unparseable fraction
// exceeds cfg.unparseable_threshold (the checkpoint survives).
std::vector<SyntheticRecord> label_corpus(const std::vector<GeneratedPair> & corpus,
                                          const lm::Backend & labeling_backend,
                                          const LabelingConfig & cfg,
                                          const std::string & checkpoint_path = "");

struct DatasetStats {
    std::size_t total = 0;
    std::size_t labeled = 0;
    std::size_t unparseable = 0;
    std::size_t positive = 0; // y_hat >= 0.5
    double positive_rate = 0.0;
    double unparseable_rate = 0.0;
    std::array<std::size_t, 10> histogram{}; // y_hat deciles, final bin closed
    double duplication_rate = 0.0;           // duplicate (p, o) pairs / total
    std::optional<double> reference_rate;    // supplied comparison rate

    std::string to_json() const;
};

DatasetStats dataset_stats(const std::vector<SyntheticRecord> & records,
                           std::optional<double> reference_rate = {});

struct DatasetHeader {
    int schema = 1;
    std::string constraint;
    std::string created; // iso8601
};

// JSONL with a header line. Empty `created` stamps the current UTC time.
void export_dataset(const std::vector<SyntheticRecord> & records, const std::string & path,
                    const std::string & constraint, const std::string & created = "");

std::vector<SyntheticRecord> import_dataset(const std::string & path,
                                            DatasetHeader * header = nullptr);

// Prompt files: one JSON value per line, either a bare string or an object
// with a "prompt" field.
PromptDataset load_prompts_jsonl(const std::string & path, const std::string & name,
                                 Split split);
void save_prompts_jsonl(const PromptDataset & ds, const std::string & path);

// Generated-pair files: one {"p", "o", "seed", "backend"} object per line,
// the same layout generate_corpus checkpoints use.
std::vector<GeneratedPair> load_pairs_jsonl(const std::string & path);
void save_pairs_jsonl(const std::vector<GeneratedPair> & pairs, const std::string & path);

} // namespace congen::synth
