#include "congen/lm/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace congen::lm {

namespace {

void renormalize(std::vector<double> & logprobs) {
    double mx = NEG_INF;
    for (double lp : logprobs) {
        mx = std::max(mx, lp);
    }
    double sum = 0.0;
    for (double lp : logprobs) {
        sum += std::exp(lp - mx);
    }
    const double lse = mx + std::log(sum);
    for (double & lp : logprobs) {
        if (lp != NEG_INF) {
            lp -= lse;
        }
    }
}

// Token ids ordered by (logprob desc, id asc).
std::vector<int> order_desc(const std::vector<double> & logprobs) {
    std::vector<int> ids(logprobs.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (logprobs[a] != logprobs[b]) {
            return logprobs[a] > logprobs[b];
        }
        return a < b;
    });
    return ids;
}

} // namespace

NextTokenDistribution apply_sampling_filters(const NextTokenDistribution & dist,
                                             const GenerationParams & params) {
    NextTokenDistribution out = dist;

    if (params.temperature > 0.0 && params.temperature != 1.0) {
        for (double & lp : out.logprobs) {
            if (lp != NEG_INF) {
                lp /= params.temperature;
            }
        }
        renormalize(out.logprobs);
    }

    if (params.top_k > 0 && params.top_k < static_cast<int>(out.logprobs.size())) {
        auto ids = order_desc(out.logprobs);
        for (size_t i = params.top_k; i < ids.size(); ++i) {
            out.logprobs[ids[i]] = NEG_INF;
        }
        renormalize(out.logprobs);
    }

    if (params.top_p < 1.0) {
        auto ids = order_desc(out.logprobs);
        double cum = 0.0;
        size_t keep = 0;
        while (keep < ids.size() && out.logprobs[ids[keep]] != NEG_INF) {
            cum += std::exp(out.logprobs[ids[keep]]);
            ++keep;
            if (cum >= params.top_p) {
                break; // the crossing token is kept
            }
        }
        for (size_t i = keep; i < ids.size(); ++i) {
            out.logprobs[ids[i]] = NEG_INF;
        }
        renormalize(out.logprobs);
    }

    return out;
}

int argmax_token(const NextTokenDistribution & dist) {
    int best = -1;
    double best_lp = NEG_INF;
    for (int i = 0; i < dist.vocab_size(); ++i) {
        if (dist.logprobs[i] > best_lp) {
            best_lp = dist.logprobs[i];
            best = i;
        }
    }
    if (best < 0) {
        throw Error("argmax over an all -inf distribution");
    }
    return best;
}

int select_token(const NextTokenDistribution & dist, const GenerationParams & params,
                 std::mt19937_64 & rng) {
    if (params.temperature == 0.0) {
        return argmax_token(dist);
    }
    const NextTokenDistribution filtered = apply_sampling_filters(dist, params);

    // Inverse-CDF draw in token-id order; bit-level reproducible for a seed.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cum = 0.0;
    int last_finite = -1;
    for (int i = 0; i < filtered.vocab_size(); ++i) {
        if (filtered.logprobs[i] == NEG_INF) {
            continue;
        }
        last_finite = i;
        cum += std::exp(filtered.logprobs[i]);
        if (u < cum) {
            return i;
        }
    }
    if (last_finite < 0) {
        throw Error("sampling from an all -inf distribution");
    }
    return last_finite; // float round-off at the tail
}

} // namespace congen::lm
