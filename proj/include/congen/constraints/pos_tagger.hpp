#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace congen::constraints {

// Coarse tagset. Everything that is not a noun, verb, or pronoun is "other".
enum class PosTag { noun, verb, pronoun, other };

std::string to_string(PosTag tag);
PosTag pos_tag_from_string(const std::string & name);

class PosTagger {
  public:
    virtual ~PosTagger() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::pair<std::string, PosTag>> tag(const std::string & text) const = 0;
};

// Deterministic rule tagger. Word tokens are matched in order against:
// a closed pronoun list; a closed verb lexicon (base forms, plus -s/-es,
// -ing, -ed inflections of those bases); a closed function-word list tagged
// "other"; "-ly" words and non-alphabetic tokens tagged "other". Anything
// left is a noun.
class RuleTagger : public PosTagger {
  public:
    std::string name() const override { return "rule-tagger"; }
    std::vector<std::pair<std::string, PosTag>> tag(const std::string & text) const override;
};

using TaggerPtr = std::shared_ptr<const PosTagger>;

} // namespace congen::constraints
