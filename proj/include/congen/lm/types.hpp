#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "congen/errors.hpp"

namespace congen::lm {

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

// A tokenized prefix: vocabulary indices plus the detokenized string.
// Round-trips through the owning backend's tokenizer up to that backend's
// declared normalization.
struct TokenSequence {
    std::vector<int> token_ids;
    std::string text;
    int vocab_size = 0;

    size_t size() const { return token_ids.size(); }
    bool empty() const { return token_ids.empty(); }

    // Every id must lie in [0, vocab_size).
    void validate() const {
        for (int id : token_ids) {
            if (id < 0 || id >= vocab_size) {
                throw EncodingError("token id " + std::to_string(id) +
                                    " out of range [0, " + std::to_string(vocab_size) + ")");
            }
        }
    }
};

// Full-vocabulary next-token distribution in natural-log space.
// Invariant: logsumexp(logprobs) == 0 within 1e-6; entries may be -inf but
// never NaN.
struct NextTokenDistribution {
    std::vector<double> logprobs;
    int prefix_len = 0;

    int vocab_size() const { return static_cast<int>(logprobs.size()); }

    double logsumexp() const {
        double mx = NEG_INF;
        for (double lp : logprobs) {
            mx = std::max(mx, lp);
        }
        if (mx == NEG_INF) {
            return NEG_INF;
        }
        double sum = 0.0;
        for (double lp : logprobs) {
            sum += std::exp(lp - mx);
        }
        return mx + std::log(sum);
    }

    void validate(double tol = 1e-6) const {
        for (double lp : logprobs) {
            if (std::isnan(lp)) {
                throw Error("NextTokenDistribution contains NaN");
            }
        }
        if (std::abs(logsumexp()) > tol) {
            throw Error("NextTokenDistribution not normalized: |logsumexp| = " +
                        std::to_string(std::abs(logsumexp())));
        }
    }
};

struct GenerationParams {
    int max_new_tokens = 64;
    double temperature = 1.0; // 0 selects the argmax, ties broken by lowest token id
    double top_p = 1.0;       // nucleus mass in (0, 1]
    int top_k = 0;            // 0 disables top-k filtering
    std::optional<uint64_t> seed;
    std::vector<std::string> stop_sequences;

    void validate() const {
        if (max_new_tokens < 0) {
            throw Error("max_new_tokens must be >= 0");
        }
        if (temperature < 0.0) {
            throw Error("temperature must be >= 0");
        }
        if (!(top_p > 0.0 && top_p <= 1.0)) {
            throw Error("top_p must lie in (0, 1]");
        }
        if (top_k < 0) {
            throw Error("top_k must be >= 0");
        }
    }
};

enum class BackendKind {
    token_level,
    completion_only,
};

inline const char * to_string(BackendKind k) {
    return k == BackendKind::token_level ? "token-level" : "completion-only";
}

struct BackendDescriptor {
    std::string name;
    BackendKind kind = BackendKind::token_level;
    bool supports_logprobs = false;
};

// Result of complete(): the continuation only (prompt never echoed).
// `truncated` is set when max_new_tokens was exhausted without a natural stop
// (end-of-sequence or a stop sequence).
struct Completion {
    std::string text;
    bool truncated = false;
    std::optional<std::vector<double>> token_logprobs;
};

} // namespace congen::lm
