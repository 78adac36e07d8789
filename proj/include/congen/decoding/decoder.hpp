#pragma once

#include <optional>
#include <string>
#include <vector>

#include "congen/constraints/constraint.hpp"
#include "congen/lm/backend.hpp"

namespace congen::decoding {

struct DecoderConfig {
    double alpha = 1.0;          // reweighting exponent
    int candidate_top_k = 50;    // tokens rescored per step
    int rollout_len = 8;         // lookahead depth
    int beam_width = 10;
    int beam_groups = 5;
    double diversity_penalty = 1.0;

    // When set, guided decoders stop as soon as the output's unit count
    // reaches the constraint's upper bound: satisfied, and one more unit
    // would break it. Unguided decoders ignore it.
    std::optional<constraints::StructuralConstraint> stop_constraint;
    constraints::TaggerPtr tagger; // for pos-unit stop constraints

    void validate() const;
};

struct Candidate {
    lm::TokenSequence sequence; // generated continuation (ids + text)
    double base_logprob = 0.0;  // cumulative log-likelihood, unpenalized
    double constraint_score = 0.0;
};

struct FallbackEvent {
    int step = 0;
    std::string reason;
};

struct DecodeResult {
    std::string text; // continuation only, prompt not echoed
    std::vector<FallbackEvent> fallback_events;
    bool truncated = false;
};

// Top k token ids of `base` by logprob, ties broken by lower id.
std::vector<int> top_candidates(const lm::NextTokenDistribution & base, int k);

// P'(x_i) proportional to exp(base_i) * scores_i^alpha over the candidate
// set; everything else gets probability zero. Convention 0^0 = 1. Throws
// DegenerateDistribution when every candidate weight is zero.
lm::NextTokenDistribution reweight_distribution(const lm::NextTokenDistribution & base,
                                                const std::vector<int> & candidates,
                                                const std::vector<double> & scores,
                                                double alpha);

// Argmax token each step, no constraint awareness. Equals complete() at
// temperature 0 on the same backend.
DecodeResult greedy_decode(const lm::Backend & backend, const std::string & prompt,
                           const lm::GenerationParams & params);

// Diverse beam search (beam_groups groups; later groups pay
// diversity_penalty per token already chosen by earlier groups at the same
// step, selection only), then argmax by scorer over the completed
// candidates; ties by higher base_logprob, then lexicographically smaller
// text. The scorer sees candidate continuation text.
DecodeResult rerank_decode(const lm::Backend & backend, const std::string & prompt,
                           const constraints::SequenceScorer & scorer, const DecoderConfig & cfg,
                           const lm::GenerationParams & params);

// Per step: rescore the top candidate_top_k tokens with
// pscorer(continuation so far, candidate piece), reweight, then select per
// params. A degenerate step falls back to the base distribution and records
// a FallbackEvent.
DecodeResult fudge_decode(const lm::Backend & backend, const std::string & prompt,
                          const constraints::PrefixScorer & pscorer, const DecoderConfig & cfg,
                          const lm::GenerationParams & params);

// Like fudge_decode, but each candidate is scored by greedily rolling out
// rollout_len further tokens and applying sscorer to
// continuation + candidate + rollout.
DecodeResult neurologic_decode(const lm::Backend & backend, const std::string & prompt,
                               const constraints::SequenceScorer & sscorer,
                               const DecoderConfig & cfg, const lm::GenerationParams & params);

inline constexpr double kRatioFloor = 1e-4;
inline constexpr double kRatioCap = 1e4;

// Candidate scores are expert/antiexpert probability ratios clamped to
// [kRatioFloor, kRatioCap] and rescaled into [0,1] by dividing by the cap.
// A 0/0 ratio is neutral (1); expert mass against zero antiexpert mass
// clamps to the cap. Throws VocabMismatch when vocabulary sizes differ.
DecodeResult dexperts_decode(const lm::Backend & backend, const lm::Backend & expert,
                             const lm::Backend & antiexpert, const std::string & prompt,
                             const DecoderConfig & cfg, const lm::GenerationParams & params);

// dexperts_decode with ratios renormalized to mean 1 over the candidate set
// before clamping. Stand-in reconstruction, reported as `air-approx`.
DecodeResult air_decode(const lm::Backend & backend, const lm::Backend & expert,
                        const lm::Backend & antiexpert, const std::string & prompt,
                        const DecoderConfig & cfg, const lm::GenerationParams & params);

} // namespace congen::decoding
