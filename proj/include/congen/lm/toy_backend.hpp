#pragma once

#include <map>
#include <string>
#include <vector>

#include "congen/lm/backend.hpp"

namespace congen::lm {

// Deterministic in-process backend driven by an explicit first-order
// transition table. Small enough to verify by hand (vocab <= 50); it is the
// oracle every decoding test builds on.
//
// Tokenizer: greedy longest-match over vocabulary pieces. Declared
// normalization: characters not covered by any piece are dropped, so
// detokenize(tokenize(s)) == normalize(s) for all s.
class ToyBackend : public Backend {
  public:
    struct Spec {
        std::string name = "toy";
        std::vector<std::string> vocab;          // piece text per token id
        int eos_id = -1;                         // -1 = no end-of-sequence token
        std::map<int, double> start;             // distribution over the first token; empty = empty prefixes forbidden
        std::map<int, std::map<int, double>> rows; // last token id -> next-token distribution
    };

    explicit ToyBackend(Spec spec);

    static ToyBackend from_json_file(const std::string & path);
    static ToyBackend from_json(const std::string & json_text);
    std::string to_json() const;

    BackendDescriptor descriptor() const override;
    TokenSequence tokenize(const std::string & text) const override;
    std::string detokenize(const TokenSequence & seq) const override;
    std::string normalize(const std::string & text) const override;
    NextTokenDistribution next_token_logits(const TokenSequence & prefix,
                                            const GenerationParams & params) const override;
    Completion complete(const std::string & prompt, const GenerationParams & params) const override;
    std::optional<int> eos_token() const override;
    std::optional<std::vector<double>>
    choice_probabilities(const std::string & prompt,
                         const std::vector<std::string> & choices) const override;

    int vocab_size() const { return static_cast<int>(spec_.vocab.size()); }
    const std::string & piece(int token_id) const;

  private:
    // Row in normalized natural-log space, dense over the vocabulary.
    std::vector<double> log_row(const std::map<int, double> & sparse) const;

    Spec spec_;
    std::vector<double> start_logrow_;               // empty when empty prefixes are forbidden
    std::map<int, std::vector<double>> log_rows_;
};

} // namespace congen::lm
