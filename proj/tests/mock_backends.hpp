#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "congen/errors.hpp"
#include "congen/lm/backend.hpp"

namespace congen::testing {

// Completion-only judge for labeling tests. Extracts the queried text from
// the final template instance of the label prompt and answers raw_true when
// it contains `token`, raw_false otherwise.
class MockJudge : public lm::Backend {
  public:
    explicit MockJudge(std::string token, std::string raw_true = "True",
                       std::string raw_false = "False")
        : token_(std::move(token)), raw_true_(std::move(raw_true)),
          raw_false_(std::move(raw_false)) {}

    void set_choice_probs(double p_true, double p_false) { probs_ = {p_true, p_false}; }
    void fail_after(std::size_t n) { fail_after_ = n; }
    std::size_t calls() const { return calls_; }

    lm::BackendDescriptor descriptor() const override {
        return {"mock-judge", lm::BackendKind::completion_only, false};
    }

    lm::TokenSequence tokenize(const std::string & text) const override {
        lm::TokenSequence seq;
        seq.text = text;
        return seq;
    }

    std::string detokenize(const lm::TokenSequence & seq) const override { return seq.text; }

    lm::NextTokenDistribution next_token_logits(const lm::TokenSequence &,
                                                const lm::GenerationParams &) const override {
        throw CapabilityError("mock-judge is completion-only");
    }

    lm::Completion complete(const std::string & prompt,
                            const lm::GenerationParams &) const override {
        ++calls_;
        if (fail_after_ && calls_ > *fail_after_) {
            throw BackendUnavailable("mock-judge offline");
        }
        lm::Completion c;
        c.text = queried_text(prompt).find(token_) != std::string::npos ? raw_true_ : raw_false_;
        return c;
    }

    std::optional<std::vector<double>>
    choice_probabilities(const std::string &, const std::vector<std::string> &) const override {
        if (!probs_) return std::nullopt;
        return std::vector<double>{probs_->first, probs_->second};
    }

  private:
    // The query is the last template instance; with the default template the
    // text sits between these two fixed phrases.
    static std::string queried_text(const std::string & prompt) {
        const std::string open = "Given the following text ";
        const std::string close = " answer with either";
        const auto start = prompt.rfind(open);
        if (start == std::string::npos) return prompt;
        const auto from = start + open.size();
        const auto end = prompt.find(close, from);
        if (end == std::string::npos) return prompt.substr(from);
        return prompt.substr(from, end - from);
    }

    std::string token_;
    std::string raw_true_;
    std::string raw_false_;
    std::optional<std::pair<double, double>> probs_;
    std::optional<std::size_t> fail_after_;
    mutable std::size_t calls_ = 0;
};

// Delegates to an inner backend but makes complete() throw after n calls.
class FailingBackend : public lm::Backend {
  public:
    FailingBackend(const lm::Backend & inner, std::size_t fail_after)
        : inner_(inner), fail_after_(fail_after) {}

    std::size_t calls() const { return calls_; }

    lm::BackendDescriptor descriptor() const override { return inner_.descriptor(); }
    lm::TokenSequence tokenize(const std::string & text) const override {
        return inner_.tokenize(text);
    }
    std::string detokenize(const lm::TokenSequence & seq) const override {
        return inner_.detokenize(seq);
    }
    lm::NextTokenDistribution next_token_logits(const lm::TokenSequence & prefix,
                                                const lm::GenerationParams & params) const override {
        return inner_.next_token_logits(prefix, params);
    }
    std::optional<int> eos_token() const override { return inner_.eos_token(); }

    lm::Completion complete(const std::string & prompt,
                            const lm::GenerationParams & params) const override {
        if (++calls_ > fail_after_) {
            throw BackendUnavailable("backend offline");
        }
        return inner_.complete(prompt, params);
    }

  private:
    const lm::Backend & inner_;
    std::size_t fail_after_;
    mutable std::size_t calls_ = 0;
};

} // namespace congen::testing
