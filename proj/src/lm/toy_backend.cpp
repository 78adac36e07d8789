#include "congen/lm/toy_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace congen::lm {

namespace {

std::string trim_lower(const std::string & s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    std::string out = s.substr(b, e - b);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void check_distribution(const std::map<int, double> & row, int vocab_size, const std::string & what) {
    double sum = 0.0;
    for (const auto & [id, p] : row) {
        if (id < 0 || id >= vocab_size) {
            throw Error("toy table: " + what + " references token id " + std::to_string(id) +
                        " outside vocab");
        }
        if (p < 0.0) {
            throw Error("toy table: " + what + " has negative probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error("toy table: " + what + " does not sum to 1 (got " + std::to_string(sum) + ")");
    }
}

} // namespace

ToyBackend::ToyBackend(Spec spec) : spec_(std::move(spec)) {
    if (spec_.vocab.empty()) {
        throw Error("toy table: empty vocabulary");
    }
    if (spec_.vocab.size() > 50) {
        throw Error("toy table: vocabulary larger than 50");
    }
    if (spec_.eos_id >= vocab_size()) {
        throw Error("toy table: eos id outside vocab");
    }
    for (size_t i = 0; i < spec_.vocab.size(); ++i) {
        if (spec_.vocab[i].empty() && static_cast<int>(i) != spec_.eos_id) {
            throw Error("toy table: empty piece for non-eos token " + std::to_string(i));
        }
        for (size_t j = i + 1; j < spec_.vocab.size(); ++j) {
            if (!spec_.vocab[i].empty() && spec_.vocab[i] == spec_.vocab[j]) {
                throw Error("toy table: duplicate piece \"" + spec_.vocab[i] + "\"");
            }
        }
    }
    if (!spec_.start.empty()) {
        check_distribution(spec_.start, vocab_size(), "start row");
        start_logrow_ = log_row(spec_.start);
    }
    for (const auto & [id, row] : spec_.rows) {
        if (id < 0 || id >= vocab_size()) {
            throw Error("toy table: row keyed by token id outside vocab");
        }
        check_distribution(row, vocab_size(), "row " + std::to_string(id));
        log_rows_[id] = log_row(row);
    }
}

std::vector<double> ToyBackend::log_row(const std::map<int, double> & sparse) const {
    std::vector<double> out(spec_.vocab.size(), NEG_INF);
    double sum = 0.0;
    for (const auto & [id, p] : sparse) {
        sum += p;
    }
    for (const auto & [id, p] : sparse) {
        if (p > 0.0) {
            out[id] = std::log(p / sum);
        }
    }
    return out;
}

BackendDescriptor ToyBackend::descriptor() const {
    return {spec_.name, BackendKind::token_level, true};
}

const std::string & ToyBackend::piece(int token_id) const {
    if (token_id < 0 || token_id >= vocab_size()) {
        throw EncodingError("token id " + std::to_string(token_id) + " outside vocab");
    }
    return spec_.vocab[token_id];
}

TokenSequence ToyBackend::tokenize(const std::string & text) const {
    TokenSequence seq;
    seq.vocab_size = vocab_size();
    size_t pos = 0;
    while (pos < text.size()) {
        int best = -1;
        size_t best_len = 0;
        for (int id = 0; id < vocab_size(); ++id) {
            const std::string & p = spec_.vocab[id];
            if (p.empty() || p.size() <= best_len) {
                continue;
            }
            if (text.compare(pos, p.size(), p) == 0) {
                best = id;
                best_len = p.size();
            }
        }
        if (best < 0) {
            ++pos; // unmatched byte dropped (declared normalization)
            continue;
        }
        seq.token_ids.push_back(best);
        seq.text += spec_.vocab[best];
        pos += best_len;
    }
    return seq;
}

std::string ToyBackend::detokenize(const TokenSequence & seq) const {
    std::string out;
    for (int id : seq.token_ids) {
        out += piece(id);
    }
    return out;
}

std::string ToyBackend::normalize(const std::string & text) const {
    return tokenize(text).text;
}

NextTokenDistribution ToyBackend::next_token_logits(const TokenSequence & prefix,
                                                    const GenerationParams & params) const {
    (void)params;
    NextTokenDistribution dist;
    dist.prefix_len = static_cast<int>(prefix.size());
    if (prefix.empty()) {
        if (start_logrow_.empty()) {
            throw Error("toy backend \"" + spec_.name + "\" forbids empty prefixes");
        }
        dist.logprobs = start_logrow_;
        return dist;
    }
    prefix.validate();
    const int last = prefix.token_ids.back();
    if (last == spec_.eos_id) {
        throw Error("toy backend: no distribution past end-of-sequence");
    }
    const auto it = log_rows_.find(last);
    if (it == log_rows_.end()) {
        throw Error("toy backend: no transition row for token " + std::to_string(last) +
                    " (\"" + spec_.vocab[last] + "\")");
    }
    dist.logprobs = it->second;
    return dist;
}

Completion ToyBackend::complete(const std::string & prompt, const GenerationParams & params) const {
    return run_completion(*this, prompt, params);
}

std::optional<int> ToyBackend::eos_token() const {
    if (spec_.eos_id < 0) {
        return std::nullopt;
    }
    return spec_.eos_id;
}

std::optional<std::vector<double>>
ToyBackend::choice_probabilities(const std::string & prompt,
                                 const std::vector<std::string> & choices) const {
    const TokenSequence seq = tokenize(prompt);
    const NextTokenDistribution dist = next_token_logits(seq, {});
    std::vector<double> probs(choices.size(), 0.0);
    double total = 0.0;
    for (size_t c = 0; c < choices.size(); ++c) {
        const std::string want = trim_lower(choices[c]);
        for (int id = 0; id < vocab_size(); ++id) {
            if (dist.logprobs[id] == NEG_INF) {
                continue;
            }
            if (trim_lower(spec_.vocab[id]) == want) {
                probs[c] += std::exp(dist.logprobs[id]);
            }
        }
        total += probs[c];
    }
    if (total <= 0.0) {
        return std::nullopt;
    }
    return probs;
}

ToyBackend ToyBackend::from_json(const std::string & json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("toy table: invalid JSON: ") + e.what());
    }
    Spec spec;
    try {
        spec.name = j.value("name", std::string("toy"));
        spec.vocab = j.at("vocab").get<std::vector<std::string>>();
        spec.eos_id = j.value("eos", -1);
        const auto parse_sparse = [](const nlohmann::json & obj) {
            std::map<int, double> row;
            for (auto it = obj.begin(); it != obj.end(); ++it) {
                row[std::stoi(it.key())] = it.value().get<double>();
            }
            return row;
        };
        if (j.contains("start")) {
            spec.start = parse_sparse(j.at("start"));
        }
        if (j.contains("rows")) {
            for (auto it = j.at("rows").begin(); it != j.at("rows").end(); ++it) {
                spec.rows[std::stoi(it.key())] = parse_sparse(it.value());
            }
        }
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("toy table: bad field: ") + e.what());
    }
    return ToyBackend(std::move(spec));
}

ToyBackend ToyBackend::from_json_file(const std::string & path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open toy table file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string ToyBackend::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = spec_.name;
    j["vocab"] = spec_.vocab;
    if (spec_.eos_id >= 0) {
        j["eos"] = spec_.eos_id;
    }
    const auto sparse = [](const std::map<int, double> & row) {
        nlohmann::ordered_json obj;
        for (const auto & [id, p] : row) {
            obj[std::to_string(id)] = p;
        }
        return obj;
    };
    if (!spec_.start.empty()) {
        j["start"] = sparse(spec_.start);
    }
    nlohmann::ordered_json rows;
    for (const auto & [id, row] : spec_.rows) {
        rows[std::to_string(id)] = sparse(row);
    }
    j["rows"] = rows;
    return j.dump();
}

} // namespace congen::lm
