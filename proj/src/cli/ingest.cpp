#include "congen/cli/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "congen/constraints/text_units.hpp"

namespace congen::cli {

IngestKind ingest_kind_from_string(const std::string & name) {
    if (name == "prompts-jsonl") return IngestKind::prompts_jsonl;
    if (name == "summarization-articles") return IngestKind::summarization_articles;
    if (name == "five-sentence-stories") return IngestKind::five_sentence_stories;
    throw ConfigError("unknown ingest kind: " + name);
}

std::string to_string(IngestKind kind) {
    switch (kind) {
        case IngestKind::prompts_jsonl: return "prompts-jsonl";
        case IngestKind::summarization_articles: return "summarization-articles";
        case IngestKind::five_sentence_stories: return "five-sentence-stories";
    }
    return "prompts-jsonl";
}

namespace {

std::string join_segments(const std::vector<std::string> & segments, std::size_t keep) {
    std::string out;
    for (std::size_t i = 0; i < segments.size() && i < keep; ++i) {
        if (!out.empty()) out += " ";
        out += segments[i];
    }
    return out;
}

} // namespace

IngestResult ingest(const std::string & dataset_path, IngestKind kind, const std::string & name,
                    bool make_splits, std::uint64_t seed) {
    std::ifstream in(dataset_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + dataset_path);

    const constraints::SentenceSplitter splitter;
    std::vector<std::string> prompts;
    std::vector<std::optional<synth::Split>> splits;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fail = [&](const std::string & msg) {
            return FormatError(dataset_path + " line " + std::to_string(line_no) + ": " + msg);
        };
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw fail("invalid JSON");

        std::string text;
        std::vector<std::string> sentences;
        std::optional<synth::Split> split;
        try {
            if (j.is_string()) {
                text = j.get<std::string>();
            } else if (j.is_object()) {
                if (j.contains("split")) {
                    split = synth::split_from_string(j["split"].get<std::string>());
                }
                const char * field = kind == IngestKind::prompts_jsonl ? "prompt"
                                     : kind == IngestKind::summarization_articles ? "article"
                                                                                  : "story";
                if (j.contains(field)) {
                    text = j[field].get<std::string>();
                } else if (kind == IngestKind::five_sentence_stories && j.contains("sentences")) {
                    sentences = j["sentences"].get<std::vector<std::string>>();
                } else {
                    throw fail(std::string("missing \"") + field + "\" field");
                }
            } else {
                throw fail("record must be a string or an object");
            }
        } catch (const nlohmann::json::exception & e) {
            throw fail(e.what());
        }

        std::string prompt;
        switch (kind) {
            case IngestKind::prompts_jsonl: prompt = text; break;
            case IngestKind::summarization_articles:
                prompt = join_segments(splitter.split(text), 3);
                break;
            case IngestKind::five_sentence_stories:
                prompt = sentences.empty() ? join_segments(splitter.split(text), 4)
                                           : join_segments(sentences, 4);
                break;
        }
        if (prompt.empty()) throw fail("empty prompt");
        prompts.push_back(std::move(prompt));
        splits.push_back(split);
    }
    if (prompts.empty()) throw FormatError(dataset_path + ": no records");

    const bool any_split =
        std::any_of(splits.begin(), splits.end(), [](const auto & s) { return s.has_value(); });
    const bool all_split =
        std::all_of(splits.begin(), splits.end(), [](const auto & s) { return s.has_value(); });
    if (any_split && !all_split) {
        throw FormatError(dataset_path + ": some records carry a \"split\" field and some do not");
    }

    IngestResult out;
    const auto task = kind == IngestKind::five_sentence_stories ? synth::TaskKind::story_writing
                                                                : synth::TaskKind::continuation;
    for (auto * ds : {&out.train, &out.val, &out.test}) {
        ds->name = name;
        ds->task = task;
    }
    out.train.split = synth::Split::train;
    out.val.split = synth::Split::val;
    out.test.split = synth::Split::test;

    if (any_split) {
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            switch (*splits[i]) {
                case synth::Split::train: out.train.prompts.push_back(prompts[i]); break;
                case synth::Split::val: out.val.prompts.push_back(prompts[i]); break;
                case synth::Split::test: out.test.prompts.push_back(prompts[i]); break;
            }
        }
    } else if (!make_splits) {
        out.train.prompts = prompts;
        out.test.prompts = prompts;
    } else {
        std::vector<std::size_t> order(prompts.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t n = prompts.size();
        const std::size_t n_train = n * 8 / 10;
        const std::size_t n_val = n / 10;
        for (std::size_t i = 0; i < n; ++i) {
            auto & target = i < n_train            ? out.train
                            : i < n_train + n_val ? out.val
                                                  : out.test;
            target.prompts.push_back(prompts[order[i]]);
        }
    }
    return out;
}

} // namespace congen::cli
