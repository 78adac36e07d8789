#pragma once

#include <string>

#include "congen/lm/backend.hpp"

namespace congen::lm {

// Completion-only adapter for an HTTP completion service.
//
// Wire format: POST <base_url>/v1/complete with
//   {"prompt", "max_new_tokens", "temperature", "top_p", "stop", "logprobs"}
// expecting {"text": str, "token_logprobs": [float] (optional),
// "truncated": bool (optional)}.
//
// CONGEN_API_KEY, when set, is sent as a Bearer token. Transient transport
// failures retry with exponential backoff before BackendUnavailable.
// next_token_logits raises CapabilityError; tokenize is a whitespace-block
// stand-in good enough for length accounting, not model-faithful.
class RemoteBackend : public Backend {
  public:
    struct Options {
        std::string base_url;          // e.g. "http://localhost:8080"
        std::string name = "remote";
        int attempts = 3;
        int connect_timeout_s = 10;
        int read_timeout_s = 120;
        int backoff_initial_ms = 250;  // doubles per retry
    };

    explicit RemoteBackend(Options options);

    BackendDescriptor descriptor() const override;
    TokenSequence tokenize(const std::string & text) const override;
    std::string detokenize(const TokenSequence & seq) const override;
    NextTokenDistribution next_token_logits(const TokenSequence & prefix,
                                            const GenerationParams & params) const override;
    Completion complete(const std::string & prompt, const GenerationParams & params) const override;

  private:
    Options options_;
    std::string host_;
    int port_ = 80;
    std::string path_prefix_;
};

} // namespace congen::lm
