#include "congen/constraints/text_units.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "congen/errors.hpp"

namespace congen::constraints {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closing(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Built-in abbreviation list; data/abbreviations.txt ships the same entries.
const std::set<std::string> & default_abbreviations() {
    static const std::set<std::string> abbrs = {
        "mr",   "mrs", "ms",   "dr",   "prof", "st",   "mt",  "jr",
        "sr",   "vs",  "e.g",  "i.e",  "etc",  "inc",  "ltd", "co",
        "corp", "fig", "vol",  "dept", "univ", "gen",  "col", "sgt",
        "capt", "lt",  "maj",  "rev",  "hon",  "gov",  "sen", "rep",
        "approx", "est",
    };
    return abbrs;
}

// Word immediately before position `end`, lowercased, leading punctuation
// stripped. Used to test abbreviation suppression for a period at `end`.
std::string word_before(const std::string & text, std::size_t end) {
    std::size_t start = end;
    while (start > 0 && !is_space(text[start - 1])) --start;
    while (start < end && is_punct(text[start]) && text[start] != '.') ++start;
    return lower(text.substr(start, end - start));
}

} // namespace

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::set<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

SentenceSplitter SentenceSplitter::from_file(const std::string & path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open abbreviation list: " + path);
    std::set<std::string> abbrs;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '.')) line.pop_back();
        if (!line.empty() && line[0] != '#') abbrs.insert(lower(line));
    }
    return SentenceSplitter(std::move(abbrs));
}

std::vector<std::string> SentenceSplitter::split(const std::string & text) const {
    std::vector<std::string> segments;
    std::size_t seg_start = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto emit = [&](std::size_t end) {
        std::size_t a = seg_start;
        while (a < end && is_space(text[a])) ++a;
        std::size_t b = end;
        while (b > a && is_space(text[b - 1])) --b;
        if (b > a) segments.push_back(text.substr(a, b - a));
        seg_start = end;
    };

    while (i < n) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        const std::size_t run_start = i;
        while (i < n && is_terminal(text[i])) ++i;
        const std::size_t run_end = i;
        std::size_t after = run_end;
        while (after < n && is_closing(text[after])) ++after;
        if (after < n && !is_space(text[after])) continue;

        // A lone period after an abbreviation or a single-letter initial
        // does not end the sentence.
        if (run_end - run_start == 1 && text[run_start] == '.') {
            const std::string prev = word_before(text, run_start);
            const bool initial =
                prev.size() == 1 && std::isalpha(static_cast<unsigned char>(prev[0]));
            if (initial || abbreviations_.count(prev)) continue;
        }
        emit(after);
        i = after;
    }
    emit(n);
    return segments;
}

std::size_t SentenceSplitter::count(const std::string & text) const {
    return split(text).size();
}

std::vector<std::string> word_tokens(const std::string & text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < n && !is_space(text[j])) ++j;
        std::size_t a = i;
        std::size_t b = j;
        while (a < b && is_punct(text[a])) ++a;
        while (b > a && is_punct(text[b - 1])) --b;
        if (b > a) tokens.push_back(text.substr(a, b - a));
        i = j;
    }
    return tokens;
}

std::size_t count_words(const std::string & text) { return word_tokens(text).size(); }

} // namespace congen::constraints
