#include "congen/synthlabel/synthlabel.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "congen/constraints/text_units.hpp"
#include "congen/decoding/templates.hpp"
#include "congen/errors.hpp"

namespace congen::synth {

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string & name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw FormatError("unknown split: " + name);
}

void LabelingConfig::validate() const {
    if (constraint_description.empty()) throw Error("labeling needs a constraint description");
    if (question_form.empty()) throw Error("labeling needs a question form");
    if (question_form.find(constraint_description) == std::string::npos) {
        throw Error("question form must embed the constraint description");
    }
    if (n_per_prompt < 1) throw Error("n_per_prompt must be >= 1");
    if (unparseable_threshold < 0 || unparseable_threshold > 1) {
        throw Error("unparseable threshold must be in [0,1]");
    }
    if (checkpoint_every < 1) throw Error("checkpoint_every must be >= 1");
}

const std::string & default_label_template() {
    static const std::string tmpl =
        "[INST]Given the following text <TEXT> answer with either 'False' or 'True' "
        "<CONSTRAINT>[/INST]";
    return tmpl;
}

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void atomic_write(const std::string & path, const std::string & content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write: " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot move " + tmp + " into place");
    }
}

nlohmann::ordered_json pair_to_json(const GeneratedPair & pair) {
    nlohmann::ordered_json j;
    j["p"] = pair.p;
    j["o"] = pair.o;
    j["seed"] = pair.seed;
    j["backend"] = pair.backend;
    return j;
}

std::vector<GeneratedPair> load_pair_checkpoint(const std::string & path) {
    std::vector<GeneratedPair> pairs;
    std::ifstream in(path);
    if (!in) return pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw FormatError("corrupt checkpoint line in " + path);
        pairs.push_back({j.at("p").get<std::string>(), j.at("o").get<std::string>(),
                         j.at("seed").get<std::uint64_t>(),
                         j.value("backend", std::string())});
    }
    return pairs;
}

nlohmann::ordered_json record_to_json(const SyntheticRecord & rec) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["p"] = rec.p;
    j["o"] = rec.o;
    if (rec.y_hat) {
        j["y_hat"] = *rec.y_hat;
    } else {
        j["y_hat"] = nullptr;
    }
    j["raw_label_text"] = rec.raw_label_text;
    j["seed"] = rec.seed;
    j["backend"] = rec.backend;
    return j;
}

SyntheticRecord record_from_json(const nlohmann::json & j, std::size_t line_no) {
    static const std::set<std::string> known = {"schema", "p",    "o",
                                                "y_hat",  "raw_label_text", "seed", "backend"};
    if (!j.is_object()) throw SchemaError("line " + std::to_string(line_no) + ": not an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw SchemaError("line " + std::to_string(line_no) + ": unknown field \"" +
                              it.key() + "\"");
        }
    }
    if (j.value("schema", -1) != 1) {
        throw SchemaError("line " + std::to_string(line_no) + ": unsupported record schema");
    }
    SyntheticRecord rec;
    try {
        rec.p = j.at("p").get<std::string>();
        rec.o = j.at("o").get<std::string>();
        if (!j.at("y_hat").is_null()) rec.y_hat = j.at("y_hat").get<double>();
        rec.raw_label_text = j.at("raw_label_text").get<std::string>();
        rec.seed = j.at("seed").get<std::uint64_t>();
        rec.backend = j.at("backend").get<std::string>();
    } catch (const nlohmann::json::exception & e) {
        throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    return rec;
}

std::string records_to_jsonl(const std::vector<SyntheticRecord> & records,
                             const std::string & constraint, const std::string & created) {
    nlohmann::ordered_json header;
    header["schema"] = 1;
    header["constraint"] = constraint;
    header["created"] = created;
    std::string out = header.dump() + "\n";
    for (const auto & rec : records) {
        out += record_to_json(rec).dump() + "\n";
    }
    return out;
}

} // namespace

std::vector<GeneratedPair> generate_corpus(const PromptDataset & ds, const lm::Backend & backend,
                                           int n_per_prompt, const lm::GenerationParams & params,
                                           const std::string & checkpoint_path) {
    if (ds.split != Split::train) {
        throw Error("corpus generation uses the training split");
    }
    if (n_per_prompt < 1) throw Error("n_per_prompt must be >= 1");
    params.validate();

    std::vector<GeneratedPair> pairs;
    if (!checkpoint_path.empty()) {
        pairs = load_pair_checkpoint(checkpoint_path);
    }
    const std::size_t resume_from = pairs.size();
    const std::string backend_name = backend.descriptor().name;
    const std::uint64_t base_seed = params.seed.value_or(0);

    const auto flush = [&] {
        if (checkpoint_path.empty()) return;
        std::string content;
        for (const auto & pair : pairs) content += pair_to_json(pair).dump() + "\n";
        atomic_write(checkpoint_path, content);
    };

    std::size_t index = 0;
    for (const auto & prompt : ds.prompts) {
        for (int rep = 0; rep < n_per_prompt; ++rep, ++index) {
            if (index < resume_from) continue;
            lm::GenerationParams local = params;
            local.seed = base_seed + index;
            lm::Completion c;
            try {
                c = backend.complete(prompt, local);
            } catch (...) {
                flush();
                throw;
            }
            pairs.push_back({prompt, c.text, *local.seed, backend_name});
            if (pairs.size() % 500 == 0) flush();
        }
    }
    flush();
    return pairs;
}

std::string build_label_prompt(const LabelingConfig & cfg, const std::string & o) {
    cfg.validate();
    const std::string & tmpl =
        cfg.template_text.empty() ? default_label_template() : cfg.template_text;
    if (tmpl.find("<TEXT>") == std::string::npos) {
        throw MissingPlaceholder("label template lacks <TEXT>");
    }
    if (tmpl.find("<CONSTRAINT>") == std::string::npos) {
        throw MissingPlaceholder("label template lacks <CONSTRAINT>");
    }
    std::string out;
    for (const auto & [text, label] : cfg.fewshot_pairs) {
        out += decoding::substitute_slots(
            tmpl, {{"<TEXT>", text}, {"<CONSTRAINT>", cfg.question_form}});
        out += label ? "True" : "False";
        out += "\n";
    }
    out += decoding::substitute_slots(tmpl,
                                      {{"<TEXT>", o}, {"<CONSTRAINT>", cfg.question_form}});
    return out;
}

double parse_label(const std::string & raw, const std::optional<AnswerProbs> & probs) {
    std::optional<bool> binary;
    for (const auto & token : constraints::word_tokens(raw)) {
        std::string w = token;
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (w == "true") {
            binary = true;
            break;
        }
        if (w == "false") {
            binary = false;
            break;
        }
    }
    if (!binary) throw UnparseableLabel("no true/false answer in: " + raw);
    if (probs && probs->p_true + probs->p_false > 0.0) {
        return probs->p_true / (probs->p_true + probs->p_false);
    }
    return *binary ? 1.0 : 0.0;
}

std::vector<SyntheticRecord> label_corpus(const std::vector<GeneratedPair> & corpus,
                                          const lm::Backend & labeling_backend,
                                          const LabelingConfig & cfg,
                                          const std::string & checkpoint_path) {
    if (corpus.empty()) throw Error("label_corpus needs a non-empty corpus");
    cfg.validate();

    std::vector<SyntheticRecord> records;
    if (!checkpoint_path.empty()) {
        std::ifstream probe(checkpoint_path);
        if (probe.good()) records = import_dataset(checkpoint_path);
    }
    if (records.size() > corpus.size()) {
        throw Error("checkpoint longer than corpus: " + checkpoint_path);
    }

    lm::GenerationParams label_params;
    label_params.temperature = 0.0;
    label_params.max_new_tokens = 8;

    const auto flush = [&] {
        if (checkpoint_path.empty()) return;
        atomic_write(checkpoint_path,
                     records_to_jsonl(records, cfg.constraint_description, now_iso8601()));
    };

    std::size_t unparseable = 0;
    for (const auto & rec : records) {
        if (!rec.y_hat) ++unparseable;
    }
    for (std::size_t i = records.size(); i < corpus.size(); ++i) {
        const auto & pair = corpus[i];
        const std::string prompt = build_label_prompt(cfg, pair.o);
        lm::Completion c;
        try {
            c = labeling_backend.complete(prompt, label_params);
        } catch (...) {
            flush(); // keep finished records resumable before surfacing the failure
            throw;
        }

        std::optional<AnswerProbs> probs;
        if (const auto choice =
                labeling_backend.choice_probabilities(prompt, {"True", "False"})) {
            probs = AnswerProbs{(*choice)[0], (*choice)[1]};
        }
        SyntheticRecord rec;
        rec.p = pair.p;
        rec.o = pair.o;
        rec.raw_label_text = c.text;
        rec.seed = pair.seed;
        rec.backend = pair.backend;
        try {
            rec.y_hat = parse_label(c.text, probs);
        } catch (const UnparseableLabel &) {
            ++unparseable;
        }
        records.push_back(std::move(rec));
        if (records.size() % static_cast<std::size_t>(cfg.checkpoint_every) == 0) flush();
    }
    flush();

    const double rate = static_cast<double>(unparseable) / static_cast<double>(records.size());
    if (rate > cfg.unparseable_threshold) {
        std::ostringstream msg;
        msg << "unparseable label rate " << rate << " exceeds threshold "
            << cfg.unparseable_threshold;
        throw LabelRateError(msg.str());
    }
    return records;
}

DatasetStats dataset_stats(const std::vector<SyntheticRecord> & records,
                           std::optional<double> reference_rate) {
    DatasetStats stats;
    stats.total = records.size();
    stats.reference_rate = reference_rate;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (const auto & rec : records) {
        ++seen[{rec.p, rec.o}];
        if (!rec.y_hat) {
            ++stats.unparseable;
            continue;
        }
        ++stats.labeled;
        const double y = *rec.y_hat;
        if (y >= 0.5) ++stats.positive;
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(y * 10.0));
        ++stats.histogram[bin];
    }
    std::size_t duplicates = 0;
    for (const auto & [key, n] : seen) {
        (void)key;
        duplicates += n - 1;
    }
    if (stats.total > 0) {
        stats.positive_rate = static_cast<double>(stats.positive) /
                              static_cast<double>(stats.labeled ? stats.labeled : 1);
        stats.unparseable_rate =
            static_cast<double>(stats.unparseable) / static_cast<double>(stats.total);
        stats.duplication_rate =
            static_cast<double>(duplicates) / static_cast<double>(stats.total);
    }
    return stats;
}

std::string DatasetStats::to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total;
    j["labeled"] = labeled;
    j["unparseable"] = unparseable;
    j["positive"] = positive;
    j["positive_rate"] = positive_rate;
    j["unparseable_rate"] = unparseable_rate;
    j["histogram"] = histogram;
    j["duplication_rate"] = duplication_rate;
    if (reference_rate) {
        j["reference_rate"] = *reference_rate;
        j["reference_delta"] = positive_rate - *reference_rate;
    }
    return j.dump(2);
}

void export_dataset(const std::vector<SyntheticRecord> & records, const std::string & path,
                    const std::string & constraint, const std::string & created) {
    atomic_write(path, records_to_jsonl(records, constraint,
                                        created.empty() ? now_iso8601() : created));
}

std::vector<SyntheticRecord> import_dataset(const std::string & path, DatasetHeader * header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<SyntheticRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw SchemaError("line " + std::to_string(line_no) + ": invalid JSON");
        }
        if (line_no == 1) {
            if (!j.is_object() || !j.contains("constraint")) {
                throw SchemaError("line 1: missing dataset header");
            }
            if (j.value("schema", -1) != 1) {
                throw SchemaError("line 1: unsupported dataset schema");
            }
            if (header) {
                header->schema = j["schema"].get<int>();
                header->constraint = j["constraint"].get<std::string>();
                header->created = j.value("created", std::string());
            }
            continue;
        }
        records.push_back(record_from_json(j, line_no));
    }
    if (line_no == 0) throw SchemaError("line 1: missing dataset header");
    return records;
}

PromptDataset load_prompts_jsonl(const std::string & path, const std::string & name,
                                 Split split) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prompt file: " + path);
    PromptDataset ds;
    ds.name = name;
    ds.split = split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw FormatError(path + " line " + std::to_string(line_no) + ": invalid JSON");
        }
        std::string prompt;
        if (j.is_string()) {
            prompt = j.get<std::string>();
        } else if (j.is_object() && j.contains("prompt")) {
            prompt = j["prompt"].get<std::string>();
        } else {
            throw FormatError(path + " line " + std::to_string(line_no) +
                              ": expected a string or an object with \"prompt\"");
        }
        if (prompt.empty()) {
            throw FormatError(path + " line " + std::to_string(line_no) + ": empty prompt");
        }
        ds.prompts.push_back(std::move(prompt));
    }
    return ds;
}

void save_prompts_jsonl(const PromptDataset & ds, const std::string & path) {
    std::string content;
    for (const auto & prompt : ds.prompts) {
        nlohmann::ordered_json j;
        j["prompt"] = prompt;
        content += j.dump() + "\n";
    }
    atomic_write(path, content);
}

std::vector<GeneratedPair> load_pairs_jsonl(const std::string & path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pair file: " + path);
    return load_pair_checkpoint(path);
}

void save_pairs_jsonl(const std::vector<GeneratedPair> & pairs, const std::string & path) {
    std::string content;
    for (const auto & pair : pairs) content += pair_to_json(pair).dump() + "\n";
    atomic_write(path, content);
}

} // namespace congen::synth
