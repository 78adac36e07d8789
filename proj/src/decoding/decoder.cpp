#include "congen/decoding/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "congen/lm/sampling.hpp"

namespace congen::decoding {

using lm::Backend;
using lm::GenerationParams;
using lm::NextTokenDistribution;
using lm::TokenSequence;

void DecoderConfig::validate() const {
    if (alpha < 0) throw Error("decoder alpha must be >= 0");
    if (candidate_top_k < 1) throw Error("candidate_top_k must be >= 1");
    if (rollout_len < 0) throw Error("rollout_len must be >= 0");
    if (beam_width < 1) throw Error("beam_width must be >= 1");
    if (beam_groups < 1) throw Error("beam_groups must be >= 1");
    if (beam_width % beam_groups != 0) throw Error("beam_groups must divide beam_width");
    if (diversity_penalty < 0) throw Error("diversity_penalty must be >= 0");
    if (stop_constraint) stop_constraint->validate();
}

std::vector<int> top_candidates(const NextTokenDistribution & base, int k) {
    std::vector<int> ids(base.logprobs.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (base.logprobs[a] != base.logprobs[b]) return base.logprobs[a] > base.logprobs[b];
        return a < b;
    });
    if (k < static_cast<int>(ids.size())) ids.resize(k);
    return ids;
}

NextTokenDistribution reweight_distribution(const NextTokenDistribution & base,
                                            const std::vector<int> & candidates,
                                            const std::vector<double> & scores, double alpha) {
    if (candidates.size() != scores.size()) {
        throw Error("reweight: candidate/score length mismatch");
    }
    std::vector<double> weights(candidates.size());
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double s = scores[i];
        if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
            throw Error("reweight: score outside [0,1]");
        }
        const double powed = alpha == 0.0 ? 1.0 : std::pow(s, alpha);
        weights[i] = std::exp(base.logprobs[candidates[i]]) * powed;
        total += weights[i];
    }
    if (total <= 0.0) {
        throw DegenerateDistribution("all candidate weights are zero");
    }
    NextTokenDistribution out;
    out.prefix_len = base.prefix_len;
    out.logprobs.assign(base.logprobs.size(), lm::NEG_INF);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (weights[i] > 0.0) {
            out.logprobs[candidates[i]] = std::log(weights[i] / total);
        }
    }
    return out;
}

namespace {

// Scores for the candidate set given the continuation generated so far, the
// full token prefix (prompt included), and the base distribution.
using StepScorer = std::function<std::vector<double>(
    const std::string & generated, const TokenSequence & tokens,
    const NextTokenDistribution & base, const std::vector<int> & candidates)>;

bool satisfied_at_upper(const std::string & generated, const DecoderConfig & cfg) {
    if (!cfg.stop_constraint || !cfg.stop_constraint->upper || *cfg.stop_constraint->upper == 0) {
        return false;
    }
    const auto n = constraints::count_units(generated, cfg.stop_constraint->unit, cfg.tagger.get());
    return static_cast<int>(n) >= *cfg.stop_constraint->upper;
}

DecodeResult guided_decode(const Backend & backend, const std::string & prompt,
                           const DecoderConfig & cfg, const GenerationParams & params,
                           const StepScorer & score_step) {
    params.validate();
    cfg.validate();

    DecodeResult out;
    if (params.max_new_tokens == 0) {
        out.truncated = true;
        return out;
    }

    TokenSequence tokens = backend.tokenize(prompt);
    const std::optional<int> eos = backend.eos_token();
    auto rng = lm::make_rng(params);

    for (int step = 0; step < params.max_new_tokens; ++step) {
        const NextTokenDistribution base = backend.next_token_logits(tokens, params);
        const std::vector<int> candidates = top_candidates(base, cfg.candidate_top_k);
        const std::vector<double> scores = score_step(out.text, tokens, base, candidates);

        NextTokenDistribution effective;
        try {
            effective = reweight_distribution(base, candidates, scores, cfg.alpha);
        } catch (const DegenerateDistribution &) {
            effective = base;
            out.fallback_events.push_back({step, "all candidate scores zero"});
        }

        const int tok = lm::select_token(effective, params, rng);
        if (eos && tok == *eos) return out;

        const TokenSequence piece{{tok}, "", base.vocab_size()};
        tokens.token_ids.push_back(tok);
        const std::string piece_text = backend.detokenize(piece);
        tokens.text += piece_text;
        out.text += piece_text;

        const std::size_t cut = lm::find_stop_cut(out.text, params.stop_sequences);
        if (cut != std::string::npos) {
            out.text.resize(cut);
            return out;
        }
        if (satisfied_at_upper(out.text, cfg)) return out;
    }
    out.truncated = true;
    return out;
}

// Greedy continuation of `tokens` for up to `len` steps, honoring eos and
// the satisfaction stop. Returns appended text.
std::string greedy_rollout(const Backend & backend, TokenSequence tokens, std::string generated,
                           int len, const DecoderConfig & cfg, const GenerationParams & params) {
    const std::optional<int> eos = backend.eos_token();
    const std::size_t base_len = generated.size();
    for (int i = 0; i < len; ++i) {
        if (satisfied_at_upper(generated, cfg)) break;
        const NextTokenDistribution dist = backend.next_token_logits(tokens, params);
        const int tok = lm::argmax_token(dist);
        if (eos && tok == *eos) break;
        const TokenSequence piece{{tok}, "", dist.vocab_size()};
        tokens.token_ids.push_back(tok);
        const std::string piece_text = backend.detokenize(piece);
        tokens.text += piece_text;
        generated += piece_text;
    }
    return generated.substr(base_len);
}

std::vector<double> expert_ratio_scores(const NextTokenDistribution & expert_dist,
                                        const NextTokenDistribution & anti_dist,
                                        const std::vector<int> & candidates, bool mean_one) {
    std::vector<double> ratios(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double pe = std::exp(expert_dist.logprobs[candidates[i]]);
        const double pa = std::exp(anti_dist.logprobs[candidates[i]]);
        if (pa == 0.0) {
            ratios[i] = pe == 0.0 ? 1.0 : kRatioCap;
        } else {
            ratios[i] = pe / pa;
        }
    }
    if (mean_one) {
        double sum = 0.0;
        for (double r : ratios) sum += r;
        if (sum > 0.0) {
            const double scale = static_cast<double>(ratios.size()) / sum;
            for (double & r : ratios) r *= scale;
        }
    }
    std::vector<double> scores(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        scores[i] = std::clamp(ratios[i], kRatioFloor, kRatioCap) / kRatioCap;
    }
    return scores;
}

DecodeResult mixture_decode(const Backend & backend, const Backend & expert,
                            const Backend & antiexpert, const std::string & prompt,
                            const DecoderConfig & cfg, const GenerationParams & params,
                            bool mean_one) {
    return guided_decode(
        backend, prompt, cfg, params,
        [&](const std::string &, const TokenSequence & tokens, const NextTokenDistribution & base,
            const std::vector<int> & candidates) {
            const NextTokenDistribution expert_dist = expert.next_token_logits(tokens, params);
            const NextTokenDistribution anti_dist = antiexpert.next_token_logits(tokens, params);
            if (expert_dist.logprobs.size() != base.logprobs.size() ||
                anti_dist.logprobs.size() != base.logprobs.size()) {
                throw VocabMismatch("expert/antiexpert vocabulary differs from the base backend");
            }
            return expert_ratio_scores(expert_dist, anti_dist, candidates, mean_one);
        });
}

} // namespace

DecodeResult greedy_decode(const Backend & backend, const std::string & prompt,
                           const GenerationParams & params) {
    GenerationParams greedy = params;
    greedy.temperature = 0.0;
    const lm::Completion c = backend.complete(prompt, greedy);
    DecodeResult out;
    out.text = c.text;
    out.truncated = c.truncated;
    return out;
}

DecodeResult fudge_decode(const Backend & backend, const std::string & prompt,
                          const constraints::PrefixScorer & pscorer, const DecoderConfig & cfg,
                          const GenerationParams & params) {
    return guided_decode(
        backend, prompt, cfg, params,
        [&](const std::string & generated, const TokenSequence &, const NextTokenDistribution &,
            const std::vector<int> & candidates) {
            std::vector<double> scores(candidates.size());
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const TokenSequence piece{{candidates[i]}, "", 0};
                scores[i] = pscorer(generated, backend.detokenize(piece));
            }
            return scores;
        });
}

DecodeResult neurologic_decode(const Backend & backend, const std::string & prompt,
                               const constraints::SequenceScorer & sscorer,
                               const DecoderConfig & cfg, const GenerationParams & params) {
    return guided_decode(
        backend, prompt, cfg, params,
        [&](const std::string & generated, const TokenSequence & tokens,
            const NextTokenDistribution & base, const std::vector<int> & candidates) {
            std::vector<double> scores(candidates.size());
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (backend.eos_token() && candidates[i] == *backend.eos_token()) {
                    scores[i] = sscorer(generated);
                    continue;
                }
                if (base.logprobs[candidates[i]] == lm::NEG_INF) {
                    scores[i] = 0.0; // unreachable candidate, rollout undefined
                    continue;
                }
                TokenSequence extended = tokens;
                extended.token_ids.push_back(candidates[i]);
                const TokenSequence piece{{candidates[i]}, "", 0};
                const std::string piece_text = backend.detokenize(piece);
                extended.text += piece_text;
                const std::string rollout = greedy_rollout(
                    backend, extended, generated + piece_text, cfg.rollout_len, cfg, params);
                scores[i] = sscorer(generated + piece_text + rollout);
            }
            return scores;
        });
}

DecodeResult dexperts_decode(const Backend & backend, const Backend & expert,
                             const Backend & antiexpert, const std::string & prompt,
                             const DecoderConfig & cfg, const GenerationParams & params) {
    return mixture_decode(backend, expert, antiexpert, prompt, cfg, params, false);
}

DecodeResult air_decode(const Backend & backend, const Backend & expert,
                        const Backend & antiexpert, const std::string & prompt,
                        const DecoderConfig & cfg, const GenerationParams & params) {
    return mixture_decode(backend, expert, antiexpert, prompt, cfg, params, true);
}

DecodeResult rerank_decode(const Backend & backend, const std::string & prompt,
                           const constraints::SequenceScorer & scorer, const DecoderConfig & cfg,
                           const GenerationParams & params) {
    params.validate();
    cfg.validate();

    struct Beam {
        std::vector<int> ids; // generated ids
        std::string text;
        double logprob = 0.0;
        bool done = false;
        bool truncated = false;
    };

    DecodeResult out;
    if (params.max_new_tokens == 0) {
        out.truncated = true;
        return out;
    }

    const TokenSequence prompt_tokens = backend.tokenize(prompt);
    const std::optional<int> eos = backend.eos_token();
    const int group_size = cfg.beam_width / cfg.beam_groups;

    // Each group starts from the bare prompt; groups diverge through the
    // per-step diversity penalty.
    std::vector<std::vector<Beam>> groups(cfg.beam_groups, std::vector<Beam>{Beam{}});

    const auto all_done = [&] {
        for (const auto & group : groups) {
            for (const auto & beam : group) {
                if (!beam.done) return false;
            }
        }
        return true;
    };

    for (int step = 0; step < params.max_new_tokens && !all_done(); ++step) {
        std::map<int, int> used_at_step; // token -> count over earlier groups
        for (auto & group : groups) {
            struct Entry {
                int parent;
                int token;
                double ext_lp;
                double selection; // penalized
            };
            std::vector<Entry> entries;
            std::vector<Beam> finished;
            for (std::size_t b = 0; b < group.size(); ++b) {
                if (group[b].done) {
                    finished.push_back(group[b]);
                    continue;
                }
                TokenSequence seq = prompt_tokens;
                seq.token_ids.insert(seq.token_ids.end(), group[b].ids.begin(),
                                     group[b].ids.end());
                seq.text += group[b].text;
                const NextTokenDistribution dist = backend.next_token_logits(seq, params);
                for (int tok : top_candidates(dist, cfg.candidate_top_k)) {
                    const double lp = dist.logprobs[tok];
                    if (lp == lm::NEG_INF) continue;
                    double penalty = 0.0;
                    if (const auto it = used_at_step.find(tok); it != used_at_step.end()) {
                        penalty = cfg.diversity_penalty * it->second;
                    }
                    entries.push_back(
                        {static_cast<int>(b), tok, lp, group[b].logprob + lp - penalty});
                }
            }
            std::stable_sort(entries.begin(), entries.end(), [](const Entry & a, const Entry & b) {
                if (a.selection != b.selection) return a.selection > b.selection;
                if (a.token != b.token) return a.token < b.token;
                return a.parent < b.parent;
            });

            std::vector<Beam> next = std::move(finished);
            for (const Entry & e : entries) {
                if (static_cast<int>(next.size()) >= group_size) break;
                Beam beam = group[e.parent];
                beam.logprob += e.ext_lp;
                ++used_at_step[e.token];
                if (eos && e.token == *eos) {
                    beam.done = true;
                    next.push_back(std::move(beam));
                    continue;
                }
                beam.ids.push_back(e.token);
                const TokenSequence piece{{e.token}, "", 0};
                beam.text += backend.detokenize(piece);
                const std::size_t cut = lm::find_stop_cut(beam.text, params.stop_sequences);
                if (cut != std::string::npos) {
                    beam.text.resize(cut);
                    beam.done = true;
                } else if (step + 1 >= params.max_new_tokens) {
                    beam.done = true;
                    beam.truncated = true;
                }
                next.push_back(std::move(beam));
            }
            group = std::move(next);
        }
    }

    const Beam * best = nullptr;
    double best_score = -1.0;
    for (const auto & group : groups) {
        for (const auto & beam : group) {
            const double score = scorer(beam.text);
            const bool better =
                !best || score > best_score ||
                (score == best_score &&
                 (beam.logprob > best->logprob ||
                  (beam.logprob == best->logprob && beam.text < best->text)));
            if (better) {
                best = &beam;
                best_score = score;
            }
        }
    }
    if (!best) throw Error("rerank produced no candidates");
    out.text = best->text;
    out.truncated = best->truncated;
    return out;
}

} // namespace congen::decoding
