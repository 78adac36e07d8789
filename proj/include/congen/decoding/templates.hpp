#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace congen::decoding {

// One few-shot demonstration: the exemplar prompt, its instruction line
// verbatim (some shipped blocks differ in spacing), and the answer.
struct Exemplar {
    std::string q;
    std::string inst;
    std::string a;
};

enum class PromptMode { zero, few };

// Loads prompt templates from a directory: zero_<id>.txt, few_<id>.txt, and
// exemplars_<id>.json (a list of {"q", "inst", "a"} records). File bytes are
// used as-is; placeholders are the literal tokens <PROMPT>, <CONSTRAINT>,
// <EXEMPLARS>.
class TemplateStore {
  public:
    explicit TemplateStore(std::string dir);

    // Directory-free store, e.g. rebuilt from a run manifest.
    static TemplateStore in_memory(std::map<std::string, std::string> files,
                                   std::map<std::string, std::vector<Exemplar>> exemplars = {});

    bool has(const std::string & file_id) const;
    const std::string & get(const std::string & file_id) const; // e.g. "zero_toxicity"
    std::vector<Exemplar> exemplars(const std::string & task_id) const;

    const std::string & dir() const { return dir_; }

  private:
    TemplateStore() = default;

    std::string dir_;
    bool memory_only_ = false;
    mutable std::map<std::string, std::string> cache_;
    std::map<std::string, std::vector<Exemplar>> exemplars_;
};

// Single-pass placeholder substitution: each slot's occurrences in the
// original template are replaced; substituted values are never rescanned.
std::string substitute_slots(const std::string & tmpl,
                             const std::vector<std::pair<std::string, std::string>> & slots);

// "[Q]{q}\n{inst}\n[A]{a}\n" per exemplar, in order.
std::string render_exemplar_blocks(const std::vector<Exemplar> & exemplars);

// Instantiates zero_<template_id> or few_<template_id>. Missing placeholders
// for supplied content (and an empty exemplar list in few mode) raise
// MissingPlaceholder.
std::string assemble_prompt(const TemplateStore & store, const std::string & task_prompt,
                            const std::string & template_id, PromptMode mode,
                            const std::string & constraint_text = "",
                            const std::vector<Exemplar> & exemplars = {});

} // namespace congen::decoding
