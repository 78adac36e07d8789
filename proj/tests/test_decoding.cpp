#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "congen/decoding/decoder.hpp"
#include "congen/lm/sampling.hpp"
#include "congen/lm/toy_backend.hpp"
#include "toy_fixtures.hpp"

using namespace congen;
using namespace congen::lm;
using namespace congen::decoding;

namespace {

NextTokenDistribution dist3(double a, double b, double c) {
    NextTokenDistribution d;
    d.logprobs = {std::log(a), std::log(b), std::log(c)};
    return d;
}

GenerationParams greedy_params(int max_tokens) {
    GenerationParams p;
    p.temperature = 0.0;
    p.max_new_tokens = max_tokens;
    return p;
}

constraints::SequenceScorer constant_scorer(double v) {
    return {"constant", [v](const std::string &) { return v; }};
}

constraints::SequenceScorer check_scorer(const constraints::StructuralConstraint & c) {
    return {"check", [c](const std::string & text) {
                return constraints::check_structural(text, c) ? 1.0 : 0.0;
            }};
}

constraints::StructuralConstraint bounds(constraints::Unit unit, int lo, int hi) {
    constraints::StructuralConstraint c;
    c.unit = unit;
    c.lower = lo;
    c.upper = hi;
    return c;
}

} // namespace

TEST_CASE("top_candidates orders by logprob with lower-id ties") {
    NextTokenDistribution d;
    d.logprobs = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)};
    CHECK(top_candidates(d, 2) == std::vector<int>{0, 1});
    CHECK(top_candidates(d, 9).size() == 4); // k clamps to the vocabulary

    const auto ranked = top_candidates(dist3(0.2, 0.5, 0.3), 3);
    CHECK(ranked == std::vector<int>{1, 2, 0});
}

TEST_CASE("reweighting multiplies base probability by score^alpha") {
    const auto base = dist3(0.5, 0.3, 0.2);

    const auto w1 = reweight_distribution(base, {0, 1}, {1.0, 0.5}, 1.0);
    CHECK(std::exp(w1.logprobs[0]) == doctest::Approx(10.0 / 13).epsilon(1e-12));
    CHECK(std::exp(w1.logprobs[1]) == doctest::Approx(3.0 / 13).epsilon(1e-12));
    CHECK(w1.logprobs[2] == NEG_INF); // outside the candidate set
    CHECK(std::abs(w1.logsumexp()) <= 1e-6);

    const auto w2 = reweight_distribution(base, {0, 1}, {1.0, 0.5}, 2.0);
    CHECK(std::exp(w2.logprobs[0]) == doctest::Approx(20.0 / 23).epsilon(1e-12));
    CHECK(std::exp(w2.logprobs[1]) == doctest::Approx(3.0 / 23).epsilon(1e-12));
}

TEST_CASE("alpha zero ignores scores entirely, including zeros") {
    const auto base = dist3(0.5, 0.3, 0.2);
    const auto w = reweight_distribution(base, {0, 1}, {0.0, 0.7}, 0.0); // 0^0 = 1
    CHECK(std::exp(w.logprobs[0]) == doctest::Approx(5.0 / 8).epsilon(1e-12));
    CHECK(std::exp(w.logprobs[1]) == doctest::Approx(3.0 / 8).epsilon(1e-12));
}

TEST_CASE("all-zero candidate weight is degenerate") {
    const auto base = dist3(0.5, 0.3, 0.2);
    CHECK_THROWS_AS((void)reweight_distribution(base, {0, 1}, {0.0, 0.0}, 1.0),
                    DegenerateDistribution);
    // zero base mass on every candidate degenerates the same way
    NextTokenDistribution gapped;
    gapped.logprobs = {std::log(1.0), NEG_INF, NEG_INF};
    CHECK_THROWS_AS((void)reweight_distribution(gapped, {1, 2}, {1.0, 1.0}, 1.0),
                    DegenerateDistribution);
}

TEST_CASE("greedy decode equals temperature-0 complete") {
    ToyBackend branchy(fixtures::branchy());
    const auto params = greedy_params(16);
    const auto decoded = greedy_decode(branchy, "a", params);
    CHECK(decoded.text == " x y");
    CHECK(decoded.text == branchy.complete("a", params).text);
    CHECK_FALSE(decoded.truncated);

    ToyBackend chain(fixtures::sentence_chain());
    const auto capped = greedy_params(6);
    const auto rambling = greedy_decode(chain, "Hi", capped);
    CHECK(rambling.text == " there. Ok. Ok.");
    CHECK(rambling.truncated);
    CHECK(rambling.text == chain.complete("Hi", capped).text);
}

TEST_CASE("greedy ties resolve to the lowest token id") {
    ToyBackend toy(fixtures::uniform3());
    const auto out = greedy_decode(toy, "b", greedy_params(4));
    CHECK(out.text == "aaaa");
    CHECK(out.truncated); // no end-of-sequence token in this table
}

TEST_CASE("fudge with a constant prefix scorer reduces to greedy") {
    ToyBackend chain(fixtures::sentence_chain());
    DecoderConfig cfg;
    constraints::PrefixScorer flat{"flat",
                                   [](const std::string &, const std::string &) { return 1.0; }};
    const auto params = greedy_params(6);
    const auto out = fudge_decode(chain, "Hi", flat, cfg, params);
    CHECK(out.text == greedy_decode(chain, "Hi", params).text);
    CHECK(out.fallback_events.empty());
}

TEST_CASE("fudge guided by prefix feasibility respects the upper bound") {
    ToyBackend words(fixtures::word_chain());
    const auto c = bounds(constraints::Unit::words(), 1, 2);
    constraints::PrefixScorer feas{"feasibility",
                                   [c](const std::string & generated, const std::string & piece) {
                                       return constraints::prefix_feasibility(generated + piece, c);
                                   }};
    DecoderConfig cfg;
    const auto out = fudge_decode(words, "One", feas, cfg, greedy_params(24));
    CHECK(constraints::count_words(out.text) <= 2);
    CHECK(out.fallback_events.empty());
    CHECK(out.text == " two three"); // argmax path dies at eos once full
}

TEST_CASE("neurologic lookahead finds the single-sentence stop") {
    // Greedy rambles past every sentence boundary; the rollout scorer sees
    // that only end-of-sequence keeps the count at one. The first two steps
    // are forced single-token rows whose lookahead fails, so they fall back.
    ToyBackend chain(fixtures::sentence_chain());
    DecoderConfig cfg;
    cfg.rollout_len = 8;
    const auto scorer = check_scorer(bounds(constraints::Unit::sentences(), 1, 1));
    const auto out = neurologic_decode(chain, "Hi", scorer, cfg, greedy_params(16));
    CHECK(out.text == " there.");
    CHECK_FALSE(out.truncated);
    CHECK(out.fallback_events.size() == 2);
    CHECK(out.fallback_events[0].step == 0);
    CHECK(out.fallback_events[1].step == 1);
}

TEST_CASE("neurologic with rollout 0 and a constant scorer reduces to greedy") {
    ToyBackend chain(fixtures::sentence_chain());
    DecoderConfig cfg;
    cfg.rollout_len = 0;
    const auto params = greedy_params(6);
    const auto out = neurologic_decode(chain, "Hi", constant_scorer(1.0), cfg, params);
    CHECK(out.text == greedy_decode(chain, "Hi", params).text);
}

TEST_CASE("satisfaction stop ends decoding exactly at the upper bound") {
    ToyBackend words(fixtures::word_chain());
    DecoderConfig cfg;
    cfg.stop_constraint = bounds(constraints::Unit::words(), 1, 2);
    constraints::PrefixScorer flat{"flat",
                                   [](const std::string &, const std::string &) { return 1.0; }};
    const auto out = fudge_decode(words, "One", flat, cfg, greedy_params(24));
    CHECK(out.text == " two three");
    CHECK(constraints::count_words(out.text) == 2);
    CHECK_FALSE(out.truncated);
}

TEST_CASE("neurologic with a satisfaction stop lands on the exact count") {
    ToyBackend chain(fixtures::sentence_chain());
    DecoderConfig cfg;
    cfg.rollout_len = 8;
    cfg.stop_constraint = bounds(constraints::Unit::sentences(), 2, 2);
    const auto scorer = check_scorer(*cfg.stop_constraint);
    const auto out = neurologic_decode(chain, "Hi", scorer, cfg, greedy_params(16));
    CHECK(out.text == " there. Ok");
    CHECK(constraints::check_structural(out.text, *cfg.stop_constraint));
    CHECK(out.fallback_events.empty());
}

TEST_CASE("rerank with beam width 1 reduces to greedy") {
    ToyBackend branchy(fixtures::branchy());
    DecoderConfig cfg;
    cfg.beam_width = 1;
    cfg.beam_groups = 1;
    const auto params = greedy_params(16);
    const auto out = rerank_decode(branchy, "a", constant_scorer(1.0), cfg, params);
    CHECK(out.text == greedy_decode(branchy, "a", params).text);
}

TEST_CASE("rerank picks the scorer argmax over diverse candidates") {
    ToyBackend branchy(fixtures::branchy());
    DecoderConfig cfg;
    cfg.beam_width = 4;
    cfg.beam_groups = 2;
    constraints::SequenceScorer wants_y{
        "wants-y", [](const std::string & text) { return text == " y" ? 1.0 : 0.0; }};
    const auto out = rerank_decode(branchy, "a", wants_y, cfg, greedy_params(16));
    CHECK(out.text == " y");
}

TEST_CASE("rerank ties break by base logprob, then by text") {
    ToyBackend branchy(fixtures::branchy());
    DecoderConfig cfg;
    cfg.beam_width = 4;
    cfg.beam_groups = 2;
    // constant scorer: every candidate ties, the most likely completion wins
    const auto best = rerank_decode(branchy, "a", constant_scorer(1.0), cfg, greedy_params(16));
    CHECK(best.text == " x y");

    // equal scores and equal logprobs: lexicographically smallest text
    ToyBackend uniform(fixtures::uniform3());
    DecoderConfig flat_cfg;
    flat_cfg.beam_width = 3;
    flat_cfg.beam_groups = 1;
    const auto lex = rerank_decode(uniform, "c", constant_scorer(1.0), flat_cfg, greedy_params(1));
    CHECK(lex.text == "a");
    CHECK(lex.truncated);
}

TEST_CASE("dexperts sharpens toward the expert and clamps ratios") {
    ToyBackend base(fixtures::pair_base());
    ToyBackend expert(fixtures::pair_expert());
    ToyBackend anti(fixtures::pair_antiexpert());
    DecoderConfig cfg;
    const auto out = dexperts_decode(base, expert, anti, "a", cfg, greedy_params(3));
    CHECK(out.text == "aaa"); // ratio 4.0 for "a" vs 0.25 for "b"
    CHECK(out.truncated);
}

TEST_CASE("expert equal to antiexpert reduces both mixtures to greedy") {
    ToyBackend base(fixtures::pair_base());
    ToyBackend expert(fixtures::pair_expert());
    DecoderConfig cfg;
    const auto params = greedy_params(3);
    const auto plain = greedy_decode(base, "a", params);
    CHECK(dexperts_decode(base, expert, expert, "a", cfg, params).text == plain.text);
    CHECK(air_decode(base, expert, expert, "a", cfg, params).text == plain.text);
}

TEST_CASE("air renormalizes ratios to mean one before clamping") {
    ToyBackend base(fixtures::pair_base());
    ToyBackend expert(fixtures::pair_expert());
    ToyBackend anti(fixtures::pair_antiexpert());
    DecoderConfig cfg;
    // ratios {4, 0.25} have mean 2.125; rescaled they stay ordered the same
    const auto out = air_decode(base, expert, anti, "a", cfg, greedy_params(3));
    CHECK(out.text == "aaa");
}

TEST_CASE("mismatched expert vocabulary raises VocabMismatch") {
    ToyBackend base(fixtures::pair_base());
    ToyBackend expert(fixtures::pair_expert());
    ToyBackend other(fixtures::uniform3());
    DecoderConfig cfg;
    CHECK_THROWS_AS((void)dexperts_decode(base, expert, other, "a", cfg, greedy_params(2)),
                    VocabMismatch);
}

TEST_CASE("decoder config validation") {
    DecoderConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.beam_width = 4;
    cfg.beam_groups = 3;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.beam_groups = 2;
    cfg.rollout_len = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.rollout_len = 0;
    cfg.candidate_top_k = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("zero token budget is reported as truncation everywhere") {
    ToyBackend branchy(fixtures::branchy());
    DecoderConfig cfg;
    const auto params = greedy_params(0);
    CHECK(greedy_decode(branchy, "a", params).truncated);
    CHECK(fudge_decode(branchy, "a",
                       {"flat", [](const std::string &, const std::string &) { return 1.0; }}, cfg,
                       params)
              .truncated);
    CHECK(rerank_decode(branchy, "a", constant_scorer(1.0), cfg, params).truncated);
}
