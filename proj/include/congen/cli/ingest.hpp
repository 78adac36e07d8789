#pragma once

#include <cstdint>
#include <string>

#include "congen/synthlabel/synthlabel.hpp"

namespace congen::cli {

enum class IngestKind { prompts_jsonl, summarization_articles, five_sentence_stories };

IngestKind ingest_kind_from_string(const std::string & name);
std::string to_string(IngestKind kind);

struct IngestResult {
    synth::PromptDataset train;
    synth::PromptDataset val;
    synth::PromptDataset test;
};

// Builds prompt datasets from a source JSONL file. Articles keep their first
// 3 sentence segments as the prompt (the whole article when it has 3 or
// fewer); five-sentence stories keep the first 4. Records carrying a "split"
// field fix the splits; otherwise a seeded 0.8/0.1/0.1 shuffle makes them.
// With make_splits false the whole set lands in both train and test, the
// convention for the 20-prompt dataset.
IngestResult ingest(const std::string & dataset_path, IngestKind kind, const std::string & name,
                    bool make_splits = true, std::uint64_t seed = 0);

} // namespace congen::cli
