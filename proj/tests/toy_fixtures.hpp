#pragma once

// Hand-written transition tables shared across test suites. Each table is
// small enough to walk on paper; expected values in the tests are derived
// from these rows, not from the code under test.

#include "congen/lm/toy_backend.hpp"

namespace fixtures {

using congen::lm::ToyBackend;

// Three tokens, uniform transitions everywhere.
inline ToyBackend::Spec uniform3() {
    ToyBackend::Spec s;
    s.name = "toy-uniform3";
    s.vocab = {"a", "b", "c"};
    const std::map<int, double> u = {{0, 1.0 / 3}, {1, 1.0 / 3}, {2, 1.0 / 3}};
    s.start = u;
    s.rows = {{0, u}, {1, u}, {2, u}};
    return s;
}

// The only continuation of "hello" is " world".
inline ToyBackend::Spec hello_world() {
    ToyBackend::Spec s;
    s.name = "toy-hello";
    s.vocab = {"", "hello", " world"};
    s.eos_id = 0;
    s.rows = {{1, {{2, 1.0}}}, {2, {{0, 1.0}}}};
    return s;
}

// Deterministic chain "go" -> "ok" -> "." -> " more" -> eos.
inline ToyBackend::Spec stop_chain() {
    ToyBackend::Spec s;
    s.name = "toy-stopchain";
    s.vocab = {"", "go", "ok", ".", " more"};
    s.eos_id = 0;
    s.rows = {{1, {{2, 1.0}}}, {2, {{3, 1.0}}}, {3, {{4, 1.0}}}, {4, {{0, 1.0}}}};
    return s;
}

// Branching table with an explicit argmax path. Used for greedy/table-walk
// oracles. From "a": argmax chain a -> x -> y -> eos.
//   row(a):  x 0.6, y 0.3, eos 0.1
//   row(x):  y 0.7, x 0.2, eos 0.1
//   row(y):  eos 0.8, x 0.2
inline ToyBackend::Spec branchy() {
    ToyBackend::Spec s;
    s.name = "toy-branchy";
    s.vocab = {"", "a", " x", " y"};
    s.eos_id = 0;
    s.start = {{1, 1.0}};
    s.rows = {
        {1, {{2, 0.6}, {3, 0.3}, {0, 0.1}}},
        {2, {{3, 0.7}, {2, 0.2}, {0, 0.1}}},
        {3, {{0, 0.8}, {2, 0.2}}},
    };
    return s;
}

// Sentence-structured chain. Greedy from "Hi" rambles "Hi there. Ok. Ok. ..."
// until the token budget runs out; end-of-sequence branches exist after every
// sentence so beams can stop at 1, 2 or 3 sentences.
//   ids: 0 eos, 1 "Hi", 2 " there", 3 ".", 4 " Ok", 5 " Bye", 6 " now", 7 "!"
inline ToyBackend::Spec sentence_chain() {
    ToyBackend::Spec s;
    s.name = "toy-sentences";
    s.vocab = {"", "Hi", " there", ".", " Ok", " Bye", " now", "!"};
    s.eos_id = 0;
    s.start = {{1, 1.0}};
    s.rows = {
        {1, {{2, 1.0}}},
        {2, {{3, 1.0}}},
        {3, {{4, 0.5}, {0, 0.3}, {5, 0.2}}},
        {4, {{3, 0.6}, {6, 0.4}}},
        {5, {{6, 1.0}}},
        {6, {{7, 1.0}}},
        {7, {{0, 0.6}, {4, 0.4}}},
    };
    return s;
}

// Word-per-token chain where end-of-sequence has positive probability in
// every row. The feasibility-guided walk always has a non-violating
// candidate, so word-bound guarantees are checkable exhaustively.
//   ids: 0 eos, 1 "One", 2 " two", 3 " three", 4 " four", 5 "...", 6 " go"
inline ToyBackend::Spec word_chain() {
    ToyBackend::Spec s;
    s.name = "toy-words";
    s.vocab = {"", "One", " two", " three", " four", "...", " go"};
    s.eos_id = 0;
    s.start = {{1, 1.0}};
    s.rows = {
        {1, {{2, 0.7}, {6, 0.2}, {0, 0.1}}},
        {2, {{3, 0.6}, {2, 0.2}, {5, 0.1}, {0, 0.1}}},
        {3, {{4, 0.5}, {2, 0.3}, {0, 0.2}}},
        {4, {{6, 0.4}, {2, 0.3}, {5, 0.2}, {0, 0.1}}},
        {5, {{0, 0.6}, {2, 0.4}}},
        {6, {{2, 0.5}, {5, 0.3}, {0, 0.2}}},
    };
    return s;
}

// Every row's argmax probability is 0.6 and all alternatives are strictly
// smaller, so the greedy continuation maximizes mean per-token likelihood.
inline ToyBackend::Spec fluency_chain() {
    ToyBackend::Spec s;
    s.name = "toy-fluency";
    s.vocab = {"", "a", " b", " c"};
    s.eos_id = 0;
    s.start = {{1, 1.0}};
    s.rows = {
        {1, {{2, 0.6}, {3, 0.4}}},
        {2, {{3, 0.6}, {2, 0.3}, {0, 0.1}}},
        {3, {{0, 0.6}, {2, 0.4}}},
    };
    return s;
}

// Two-token vocabularies with identical token sets for expert mixing tests.
inline ToyBackend::Spec pair_base() {
    ToyBackend::Spec s;
    s.name = "toy-pair-base";
    s.vocab = {"a", "b"};
    const std::map<int, double> u = {{0, 0.5}, {1, 0.5}};
    s.start = u;
    s.rows = {{0, u}, {1, u}};
    return s;
}

inline ToyBackend::Spec pair_expert() {
    ToyBackend::Spec s = pair_base();
    s.name = "toy-pair-expert";
    const std::map<int, double> r = {{0, 0.8}, {1, 0.2}};
    s.start = r;
    s.rows = {{0, r}, {1, r}};
    return s;
}

inline ToyBackend::Spec pair_antiexpert() {
    ToyBackend::Spec s = pair_base();
    s.name = "toy-pair-antiexpert";
    const std::map<int, double> r = {{0, 0.2}, {1, 0.8}};
    s.start = r;
    s.rows = {{0, r}, {1, r}};
    return s;
}

} // namespace fixtures
