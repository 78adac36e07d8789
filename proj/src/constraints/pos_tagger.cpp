#include "congen/constraints/pos_tagger.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "congen/constraints/text_units.hpp"
#include "congen/errors.hpp"

namespace congen::constraints {

std::string to_string(PosTag tag) {
    switch (tag) {
        case PosTag::noun: return "noun";
        case PosTag::verb: return "verb";
        case PosTag::pronoun: return "pronoun";
        case PosTag::other: return "other";
    }
    return "other";
}

PosTag pos_tag_from_string(const std::string & name) {
    if (name == "noun") return PosTag::noun;
    if (name == "verb") return PosTag::verb;
    if (name == "pronoun") return PosTag::pronoun;
    if (name == "other") return PosTag::other;
    throw FormatError("unknown pos tag: " + name);
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

const std::set<std::string> & pronouns() {
    static const std::set<std::string> words = {
        "i",       "me",      "my",       "mine",    "myself",    "we",
        "us",      "our",     "ours",     "ourselves", "you",     "your",
        "yours",   "yourself", "yourselves", "he",    "him",      "his",
        "himself", "she",     "her",      "hers",    "herself",   "it",
        "its",     "itself",  "they",     "them",    "their",     "theirs",
        "themselves", "this", "that",     "these",   "those",     "who",
        "whom",    "whose",   "which",    "what",    "somebody",  "someone",
        "something", "anybody", "anyone", "anything", "everybody", "everyone",
        "everything", "nobody", "nothing", "none",
    };
    return words;
}

const std::set<std::string> & verb_bases() {
    static const std::set<std::string> words = {
        "be",    "am",    "is",     "are",   "was",   "were",  "been",  "being",
        "have",  "has",   "had",    "do",    "does",  "did",   "go",    "went",
        "gone",  "get",   "got",    "make",  "made",  "take",  "took",  "come",
        "came",  "see",   "saw",    "seen",  "know",  "knew",  "known", "think",
        "thought", "say", "said",   "run",   "ran",   "walk",  "jump",  "sit",
        "sat",   "stand", "stood",  "eat",   "ate",   "sleep", "slept", "speak",
        "spoke", "talk",  "look",   "want",  "like",  "love",  "hate",  "need",
        "help",  "play",  "work",   "write", "wrote", "read",  "move",  "stop",
        "start", "stay",  "leave",  "left",  "find",  "found", "give",  "gave",
        "keep",  "kept",  "let",    "put",   "tell",  "told",  "ask",   "feel",
        "felt",  "become", "became", "call", "try",   "use",   "turn",  "seem",
        "show",  "hear",  "heard",  "bark",  "meow",  "bring", "brought",
        "buy",   "bought", "catch", "caught", "teach", "taught", "fight",
        "fought", "fly",  "flew",   "grow",  "grew",  "fall",  "fell",  "hold",
        "held",  "win",   "won",    "lose",  "lost",  "meet",  "met",   "pay",
        "paid",  "send",  "sent",   "sing",  "sang",  "swim",  "swam",  "throw",
        "threw", "wear",  "wore",   "drive", "drove", "ride",  "rode",  "rise",
        "rose",  "choose", "chose", "break", "broke", "wait",  "watch", "open",
        "close", "live",  "die",    "cry",   "laugh", "smile", "dance", "cook",
        "clean", "wash",  "push",   "pull",  "carry", "drop",  "build", "built",
    };
    return words;
}

const std::set<std::string> & function_words() {
    static const std::set<std::string> words = {
        "the",   "a",      "an",     "and",    "or",      "but",    "if",
        "then",  "else",   "not",    "no",     "yes",     "very",   "too",
        "also",  "just",   "only",   "now",    "soon",    "here",   "there",
        "when",  "where",  "why",    "how",    "again",   "once",   "of",
        "in",    "on",     "at",     "to",     "from",    "with",   "for",
        "by",    "about",  "into",   "over",   "under",   "after",  "before",
        "between", "during", "through", "up",  "down",    "out",    "off",
        "as",    "than",   "so",     "because", "while",  "until",  "never",
        "always", "often", "sometimes", "quite", "rather", "really", "still",
        "yet",   "even",   "both",   "each",   "every",   "all",    "some",
        "any",   "few",    "many",   "much",   "more",    "most",   "less",
        "least", "other",  "another", "such",  "own",     "same",
    };
    return words;
}

bool has_suffix(const std::string & s, const std::string & suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_verb(const std::string & w) {
    const auto & bases = verb_bases();
    if (bases.count(w)) return true;
    auto base_ok = [&](const std::string & b) { return !b.empty() && bases.count(b) > 0; };
    if (has_suffix(w, "ies") && w.size() > 4) {
        if (base_ok(w.substr(0, w.size() - 3) + "y")) return true;
    }
    if (has_suffix(w, "es") && w.size() > 3) {
        if (base_ok(w.substr(0, w.size() - 2))) return true;
    }
    if (has_suffix(w, "s") && w.size() > 2) {
        if (base_ok(w.substr(0, w.size() - 1))) return true;
    }
    if (has_suffix(w, "ing") && w.size() > 4) {
        const std::string stem = w.substr(0, w.size() - 3);
        if (base_ok(stem) || base_ok(stem + "e")) return true;
        if (stem.size() > 1 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
            base_ok(stem.substr(0, stem.size() - 1)))
            return true;
    }
    if (has_suffix(w, "ed") && w.size() > 3) {
        const std::string stem = w.substr(0, w.size() - 2);
        if (base_ok(stem) || base_ok(stem + "e")) return true;
        if (stem.size() > 1 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
            base_ok(stem.substr(0, stem.size() - 1)))
            return true;
        if (has_suffix(stem, "i") && base_ok(stem.substr(0, stem.size() - 1) + "y"))
            return true;
    }
    return false;
}

} // namespace

std::vector<std::pair<std::string, PosTag>> RuleTagger::tag(const std::string & text) const {
    std::vector<std::pair<std::string, PosTag>> result;
    for (const auto & token : word_tokens(text)) {
        const std::string w = lower(token);
        PosTag tag = PosTag::noun;
        if (pronouns().count(w)) {
            tag = PosTag::pronoun;
        } else if (is_verb(w)) {
            tag = PosTag::verb;
        } else if (function_words().count(w) || has_suffix(w, "ly")) {
            tag = PosTag::other;
        } else if (!std::isalpha(static_cast<unsigned char>(w[0]))) {
            tag = PosTag::other;
        }
        result.emplace_back(token, tag);
    }
    return result;
}

} // namespace congen::constraints
