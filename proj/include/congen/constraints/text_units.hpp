#pragma once

#include <set>
#include <string>
#include <vector>

namespace congen::constraints {

// Splits text into sentence segments. Boundaries are runs of . ! ? followed by
// optional closing quotes/brackets and then whitespace or end of text. A period
// does not end a sentence when the word before it is a known abbreviation. A
// non-empty trailing fragment without terminal punctuation counts as a segment.
class SentenceSplitter {
  public:
    SentenceSplitter();
    explicit SentenceSplitter(std::set<std::string> abbreviations);

    static SentenceSplitter from_file(const std::string & path);

    std::vector<std::string> split(const std::string & text) const;
    std::size_t count(const std::string & text) const;

    const std::set<std::string> & abbreviations() const { return abbreviations_; }

  private:
    std::set<std::string> abbreviations_; // lowercase, no trailing period
};

// Tokens after whitespace split, leading/trailing punctuation stripped,
// empties dropped.
std::size_t count_words(const std::string & text);

// Same tokenization as count_words, returning the stripped tokens.
std::vector<std::string> word_tokens(const std::string & text);

} // namespace congen::constraints
