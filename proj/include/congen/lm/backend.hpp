#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "congen/lm/types.hpp"

namespace congen::lm {

// Uniform abstraction over autoregressive language models.
//
// Token-level backends expose next_token_logits; completion-only backends
// (remote APIs) raise CapabilityError there and serve complete() only.
// Implementations must be safe for concurrent read-only inference calls;
// adapters that are not internally safe serialize behind an internal queue.
// All returned values are immutable copies.
class Backend {
  public:
    virtual ~Backend() = default;

    virtual BackendDescriptor descriptor() const = 0;

    // Inverse pair under the backend's declared normalization:
    // detokenize(tokenize(s)) == normalize(s).
    virtual TokenSequence tokenize(const std::string & text) const = 0;
    virtual std::string detokenize(const TokenSequence & seq) const = 0;

    // The published normalization rule. Identity by default.
    virtual std::string normalize(const std::string & text) const { return text; }

    // Full-vocabulary log-probability vector for position |prefix|+1.
    // Pure function of (prefix, model weights). Throws CapabilityError on
    // completion-only backends.
    virtual NextTokenDistribution next_token_logits(const TokenSequence & prefix,
                                                    const GenerationParams & params) const = 0;

    // Free-form continuation of `prompt` (prompt not echoed). Deterministic at
    // temperature 0. Stops at max_new_tokens or the first stop_sequence.
    virtual Completion complete(const std::string & prompt,
                                const GenerationParams & params) const = 0;

    // End-of-sequence token id, when the backend has one.
    virtual std::optional<int> eos_token() const { return std::nullopt; }

    // Probability of each choice string being the next emitted answer, when
    // the backend can expose it (token-level backends whose vocabulary carries
    // the choice pieces). Used by the labeling pipeline for scalar labels.
    virtual std::optional<std::vector<double>>
    choice_probabilities(const std::string & prompt, const std::vector<std::string> & choices) const {
        (void)prompt;
        (void)choices;
        return std::nullopt;
    }
};

using BackendPtr = std::shared_ptr<Backend>;

// Shared autoregressive completion loop used by token-level backends.
// Selection at temperature 0 is argmax with ties broken by lowest token id.
Completion run_completion(const Backend & backend, const std::string & prompt,
                          const GenerationParams & params);

// Earliest stop-sequence occurrence; ties at the same start take the shortest
// match. Returns the cut position one past the stop text, or npos.
std::size_t find_stop_cut(const std::string & text, const std::vector<std::string> & stops);

} // namespace congen::lm
