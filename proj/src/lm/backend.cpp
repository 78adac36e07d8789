#include "congen/lm/backend.hpp"

#include "congen/lm/sampling.hpp"

namespace congen::lm {

size_t find_stop_cut(const std::string & text, const std::vector<std::string> & stops) {
    size_t best_start = std::string::npos;
    size_t best_end = std::string::npos;
    for (const auto & stop : stops) {
        if (stop.empty()) {
            continue;
        }
        const size_t pos = text.find(stop);
        if (pos == std::string::npos) {
            continue;
        }
        const size_t end = pos + stop.size();
        if (pos < best_start || (pos == best_start && end < best_end)) {
            best_start = pos;
            best_end = end;
        }
    }
    return best_end;
}

Completion run_completion(const Backend & backend, const std::string & prompt,
                          const GenerationParams & params) {
    params.validate();

    Completion out;
    out.token_logprobs.emplace();
    if (params.max_new_tokens == 0) {
        out.truncated = true;
        return out;
    }

    TokenSequence seq = backend.tokenize(prompt);
    const std::optional<int> eos = backend.eos_token();
    auto rng = make_rng(params);

    for (int step = 0; step < params.max_new_tokens; ++step) {
        const NextTokenDistribution dist = backend.next_token_logits(seq, params);
        const int tok = select_token(dist, params, rng);
        if (eos && tok == *eos) {
            return out;
        }
        const TokenSequence piece{{tok}, "", dist.vocab_size()};
        const std::string piece_text = backend.detokenize(piece);
        seq.token_ids.push_back(tok);
        seq.text += piece_text;
        out.text += piece_text;
        out.token_logprobs->push_back(dist.logprobs[tok]);

        const size_t cut = find_stop_cut(out.text, params.stop_sequences);
        if (cut != std::string::npos) {
            out.text.resize(cut);
            return out;
        }
    }
    out.truncated = true;
    return out;
}

} // namespace congen::lm
