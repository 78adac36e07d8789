#pragma once

#include <random>

#include "congen/lm/types.hpp"

namespace congen::lm {

// Applies temperature, top-k and top-p to a normalized log distribution and
// returns the filtered, renormalized result. temperature 0 is handled by
// select_token (pure argmax), not here.
NextTokenDistribution apply_sampling_filters(const NextTokenDistribution & dist,
                                             const GenerationParams & params);

// Argmax over the distribution; ties broken by lowest token id.
int argmax_token(const NextTokenDistribution & dist);

// Selects the next token. temperature 0 -> argmax (ties by lowest id),
// otherwise samples from the filtered distribution with the given RNG.
int select_token(const NextTokenDistribution & dist, const GenerationParams & params,
                 std::mt19937_64 & rng);

inline std::mt19937_64 make_rng(const GenerationParams & params) {
    return std::mt19937_64(params.seed.value_or(0));
}

} // namespace congen::lm
