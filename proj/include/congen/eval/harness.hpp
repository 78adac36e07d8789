#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "congen/constraints/constraint.hpp"
#include "congen/decoding/decoder.hpp"
#include "congen/decoding/templates.hpp"
#include "congen/lm/backend.hpp"

namespace congen::eval {

enum class Method { greedy, rerank, fudge, neurologic, dexperts, air, zeroshot, fewshot };

std::string to_string(Method m);
Method method_from_string(const std::string & name);

// One benchmark cell column: a prompt set plus the constraint every output
// is checked against. Prompts are used head-first in split order.
struct TaskSpec {
    std::string id; // "words_1_5", "pos_noun_1_1", "toxicity"
    constraints::ConstraintSpec constraint;
    std::vector<std::string> prompts;
    int n_prompts = 50;

    void validate() const;
    std::string display_name() const; // "Words 1-5" or the id
};

// "words_1_5", "sentences_2_2", "pos_pronoun_0_0"; unbounded -> "words_5_plus"
std::string task_id_for(const constraints::StructuralConstraint & c);

struct GridConfig {
    std::shared_ptr<const lm::Backend> expert;     // dexperts / air
    std::shared_ptr<const lm::Backend> antiexpert; // dexperts / air
    std::shared_ptr<const lm::Backend> reference;  // fluency proxy; token-level
    const decoding::TemplateStore * templates = nullptr; // zeroshot / fewshot
    std::string template_id = "structural";
    int fewshot_truncate = 0; // keep the first N exemplars; 0 = all
    bool satisfaction_stop = true;
    decoding::DecoderConfig decoder;
    lm::GenerationParams params;
    constraints::TaggerPtr tagger;
};

struct OutputRecord {
    std::string prompt;
    std::string output;
    bool satisfied = false;
    std::optional<long long> count; // structural unit count
    std::optional<double> score;    // stylistic scorer value
    int fallbacks = 0;
    std::string error; // non-empty: the prompt failed and is excluded from rates
};

struct RowResult {
    std::string method;
    std::string task;
    std::string task_display;
    double success_rate = 0.0;
    std::optional<double> mean_scorer;   // stylistic tasks only
    std::optional<double> fluency_proxy; // needs a token-level reference
    int fallback_events = 0;
    int completed = 0; // prompts that produced an output
    int requested = 0;
    double wall_time_s = 0.0; // console diagnostics only, never serialized
};

struct Quarantine {
    std::string method;
    std::string task;
    std::string cause;
};

struct CellOutputs {
    std::string method;
    std::string task;
    std::vector<OutputRecord> records;
};

struct EvalReport {
    std::vector<RowResult> rows; // (method, task) order, quarantined cells absent
    std::vector<Quarantine> quarantines;
    std::vector<CellOutputs> outputs;
    std::vector<std::string> method_order;
    std::vector<std::pair<std::string, std::string>> task_order; // id, display
    std::string manifest_json; // replayable run snapshot
};

// Fraction of outputs satisfying the constraint: check_structural for
// structural specs, scorer >= 0.5 for stylistic ones.
double success_rate(const std::vector<std::string> & outputs,
                    const constraints::ConstraintSpec & constraint,
                    const constraints::PosTagger * tagger = nullptr);

// Mean per-token log-likelihood of the continuations under the reference
// backend, conditioned on their prompts. Continuation tokens only; empty
// continuations are skipped; nullopt when nothing is scorable. Reported as a
// proxy: not comparable to human fluency judgments.
std::optional<double>
fluency_proxy(const std::vector<std::pair<std::string, std::string>> & prompt_output_pairs,
              const lm::Backend & reference);

// Rebinds scorers named in constraint spec files: "lexicon{a,b}" scores word
// presence, "clean{a,b}" scores word absence.
constraints::SequenceScorer scorer_from_descriptor(const std::string & descriptor);

EvalReport run_grid(const std::vector<Method> & methods, const std::vector<TaskSpec> & tasks,
                    const lm::Backend & backend, const GridConfig & cfg);

// Rebuilds backends, tasks, and templates from a run_grid manifest and reruns
// the grid. Only manifests with embedded (toy) backends replay.
EvalReport replay_run(const std::string & manifest_json);

} // namespace congen::eval
