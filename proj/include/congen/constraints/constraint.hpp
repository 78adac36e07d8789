#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "congen/constraints/pos_tagger.hpp"
#include "congen/constraints/text_units.hpp"
#include "congen/errors.hpp"

namespace congen::constraints {

enum class UnitKind { words, sentences, pos };

struct Unit {
    UnitKind kind = UnitKind::words;
    PosTag tag = PosTag::noun; // meaningful only for UnitKind::pos

    static Unit words() { return {UnitKind::words, PosTag::noun}; }
    static Unit sentences() { return {UnitKind::sentences, PosTag::noun}; }
    static Unit pos(PosTag tag) { return {UnitKind::pos, tag}; }

    // "words", "sentences", "nouns", "verbs", "pronouns"
    std::string plural_name() const;
    // config/file form: "words", "sentences", "pos:noun", ...
    std::string id() const;
    static Unit from_id(const std::string & id);

    friend bool operator==(const Unit & a, const Unit & b) {
        return a.kind == b.kind && (a.kind != UnitKind::pos || a.tag == b.tag);
    }
};

struct StructuralConstraint {
    Unit unit;
    int lower = 0;
    std::optional<int> upper; // nullopt = unbounded above

    void validate() const;
    // Constraint clause for prompt templates: "between 1 and 5 words".
    std::string constraint_text() const;
    // Report row label: "Words 1-5", "Sentences 2", "Pronouns 0".
    std::string display_name() const;
};

struct SequenceScorer {
    std::string descriptor;
    std::function<double(const std::string &)> fn;

    double operator()(const std::string & text) const;
    explicit operator bool() const { return static_cast<bool>(fn); }
};

struct PrefixScorer {
    std::string descriptor;
    std::function<double(const std::string &, const std::string &)> fn;

    double operator()(const std::string & prefix, const std::string & candidate) const;
    explicit operator bool() const { return static_cast<bool>(fn); }
};

struct StylisticConstraint {
    std::string description; // natural-language constraint, non-empty
    std::optional<std::string> definition;
    std::vector<std::pair<std::string, int>> fewshot_examples; // labels in {0,1}
    SequenceScorer scorer;

    void validate() const;
};

std::size_t count_units(const std::string & text, const Unit & unit,
                        const PosTagger * tagger = nullptr);

bool check_structural(const std::string & text, const StructuralConstraint & c,
                      const PosTagger * tagger = nullptr);

// 0 iff no extension of the prefix can satisfy c (the count, monotone
// non-decreasing under extension, already exceeds the upper bound); else 1.
double prefix_feasibility(const std::string & prefix, const StructuralConstraint & c,
                          const PosTagger * tagger = nullptr);

// Scores 1 if any word of the set occurs as a whole word, case-insensitive.
SequenceScorer lexicon_scorer(const std::set<std::string> & word_set);

// The 13 benchmark task settings.
std::vector<StructuralConstraint> benchmark_task_settings();

// Constraint spec files: {"kind": "structural"|"stylistic", "unit", "lower",
// "upper", "description", "fewshot", "scorer"}. A stylistic spec may name its
// scorer by descriptor (e.g. "lexicon{a,b}"); otherwise it loads unbound and
// the caller attaches one.
struct ConstraintSpec {
    std::string kind;
    std::optional<StructuralConstraint> structural;
    std::optional<StylisticConstraint> stylistic;
};

ConstraintSpec load_constraint_spec(const std::string & path);
void save_constraint_spec(const ConstraintSpec & spec, const std::string & path);

// Same schema as the spec files, as a JSON string (for run manifests).
std::string constraint_spec_to_json(const ConstraintSpec & spec);
ConstraintSpec constraint_spec_from_json(const std::string & json_text);

} // namespace congen::constraints
