#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "congen/lm/sampling.hpp"
#include "congen/lm/toy_backend.hpp"
#include "toy_fixtures.hpp"

using namespace congen;
using namespace congen::lm;

TEST_CASE("uniform 3-token table gives ln(1/3) everywhere") {
    ToyBackend toy(fixtures::uniform3());
    for (const std::string prefix : {"a", "b", "ab", "cba"}) {
        const auto dist = toy.next_token_logits(toy.tokenize(prefix), {});
        REQUIRE(dist.vocab_size() == 3);
        for (double lp : dist.logprobs) {
            CHECK(lp == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-12));
        }
        dist.validate();
    }
}

TEST_CASE("explicit transition table is reproduced exactly") {
    ToyBackend toy(fixtures::branchy());
    const auto dist = toy.next_token_logits(toy.tokenize("a"), {});
    CHECK(std::exp(dist.logprobs[2]) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(std::exp(dist.logprobs[3]) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(std::exp(dist.logprobs[0]) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dist.logprobs[1] == NEG_INF);
    dist.validate();
}

TEST_CASE("temperature-0 determinism across calls") {
    ToyBackend toy(fixtures::sentence_chain());
    const auto prefix = toy.tokenize("Hi there");
    const auto a = toy.next_token_logits(prefix, {});
    const auto b = toy.next_token_logits(prefix, {});
    CHECK(a.logprobs == b.logprobs);
}

TEST_CASE("empty prefix forbidden unless a start row exists") {
    ToyBackend no_start(fixtures::hello_world());
    CHECK_THROWS_AS((void)no_start.next_token_logits(no_start.tokenize(""), {}), Error);

    ToyBackend with_start(fixtures::branchy());
    const auto dist = with_start.next_token_logits(with_start.tokenize(""), {});
    CHECK(std::exp(dist.logprobs[1]) == doctest::Approx(1.0));
}

TEST_CASE("complete follows the only path") {
    ToyBackend toy(fixtures::hello_world());
    GenerationParams params;
    params.temperature = 0.0;
    const auto out = toy.complete("hello", params);
    CHECK(out.text == " world");
    CHECK_FALSE(out.truncated);
}

TEST_CASE("complete with zero budget returns empty text flagged truncated") {
    ToyBackend toy(fixtures::hello_world());
    GenerationParams params;
    params.max_new_tokens = 0;
    const auto out = toy.complete("hello", params);
    CHECK(out.text == "");
    CHECK(out.truncated);
}

TEST_CASE("stop sequence cuts at first occurrence inclusive") {
    // Chain emits "ok. more"; stop "." keeps "ok.".
    ToyBackend toy(fixtures::stop_chain());
    GenerationParams params;
    params.temperature = 0.0;
    params.stop_sequences = {"."};
    const auto out = toy.complete("go", params);
    CHECK(out.text == "ok.");
    CHECK_FALSE(out.truncated);

    GenerationParams no_stop;
    no_stop.temperature = 0.0;
    CHECK(toy.complete("go", no_stop).text == "ok. more");
}

TEST_CASE("tokenize/detokenize round-trip under declared normalization") {
    ToyBackend toy(fixtures::sentence_chain());
    const std::vector<std::string> corpus = {
        "Hi there.",
        "Hi there. Ok.",
        " Bye now!",
        "Hi",
        "",
    };
    for (const auto & s : corpus) {
        const auto seq = toy.tokenize(s);
        CHECK(toy.detokenize(seq) == s);
        CHECK(toy.detokenize(seq) == toy.normalize(s));
    }
    // Unknown characters are dropped by the declared normalization.
    const auto seq = toy.tokenize("Hi# there?.");
    CHECK(toy.detokenize(seq) == "Hi there.");
    CHECK(toy.normalize("Hi# there?.") == "Hi there.");
    // Normalization is idempotent.
    CHECK(toy.normalize(toy.normalize("Hi# there?.")) == toy.normalize("Hi# there?."));
}

TEST_CASE("out-of-range token id raises EncodingError") {
    ToyBackend toy(fixtures::uniform3());
    TokenSequence bad{{7}, "", 3};
    CHECK_THROWS_AS((void)toy.detokenize(bad), EncodingError);
    CHECK_THROWS_AS(bad.validate(), EncodingError);
}

TEST_CASE("table loads from JSON") {
    const std::string json = R"({
        "name": "toy-json",
        "vocab": ["", "hello", " world"],
        "eos": 0,
        "rows": {"1": {"2": 1.0}, "2": {"0": 1.0}}
    })";
    ToyBackend toy = ToyBackend::from_json(json);
    GenerationParams params;
    params.temperature = 0.0;
    CHECK(toy.complete("hello", params).text == " world");
    CHECK(toy.descriptor().name == "toy-json");
    CHECK(toy.descriptor().kind == BackendKind::token_level);
}

TEST_CASE("malformed tables are rejected") {
    ToyBackend::Spec bad = fixtures::uniform3();
    bad.rows[0] = {{0, 0.5}, {1, 0.2}}; // sums to 0.7
    CHECK_THROWS_AS(ToyBackend{bad}, Error);

    ToyBackend::Spec dup = fixtures::uniform3();
    dup.vocab = {"a", "a", "c"};
    CHECK_THROWS_AS(ToyBackend{dup}, Error);

    CHECK_THROWS_AS(ToyBackend::from_json("{not json"), FormatError);
}

TEST_CASE("sampling with a seed is reproducible and respects filters") {
    ToyBackend toy(fixtures::uniform3());
    GenerationParams params;
    params.temperature = 1.0;
    params.max_new_tokens = 20;
    params.seed = 1234;
    const auto a = toy.complete("a", params);
    const auto b = toy.complete("a", params);
    CHECK(a.text == b.text);

    params.seed = 99;
    params.top_k = 1; // only the argmax (lowest id on ties) survives
    const auto c = toy.complete("a", params);
    CHECK(c.text == std::string(20, 'a'));
}

TEST_CASE("top-p keeps the smallest nucleus covering the mass") {
    ToyBackend toy(fixtures::branchy());
    NextTokenDistribution dist = toy.next_token_logits(toy.tokenize("a"), {});
    GenerationParams params;
    params.top_p = 0.6; // row(a) = {x:0.6, y:0.3, eos:0.1} -> keep exactly x
    const auto filtered = apply_sampling_filters(dist, params);
    CHECK(std::exp(filtered.logprobs[2]) == doctest::Approx(1.0));
    CHECK(filtered.logprobs[3] == NEG_INF);
    CHECK(filtered.logprobs[0] == NEG_INF);
    filtered.validate();
}

TEST_CASE("argmax ties break toward the lowest token id") {
    NextTokenDistribution dist;
    dist.logprobs = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)};
    CHECK(argmax_token(dist) == 0);
}

TEST_CASE("distribution normalization invariant") {
    ToyBackend toy(fixtures::word_chain());
    const std::vector<std::string> prefixes = {"One", "One two", "One two three", "One go"};
    for (const auto & p : prefixes) {
        const auto dist = toy.next_token_logits(toy.tokenize(p), {});
        CHECK(std::abs(dist.logsumexp()) <= 1e-6);
    }
}
