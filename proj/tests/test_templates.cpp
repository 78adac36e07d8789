#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "congen/decoding/templates.hpp"
#include "congen/errors.hpp"

using namespace congen;
using namespace congen::decoding;

namespace {

const std::string kPrompt = "The city council met on Tuesday";

std::string read_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string golden(const std::string & name) {
    return read_file(std::string(CONGEN_GOLDEN_DIR) + "/prompts/" + name + ".txt");
}

TemplateStore shipped_store() {
    return TemplateStore(std::string(CONGEN_DATA_DIR) + "/templates");
}

} // namespace

TEST_CASE("template store loads files and exemplars from a directory") {
    const auto store = shipped_store();
    CHECK(store.has("zero_toxicity"));
    CHECK(store.has("few_structural"));
    CHECK_FALSE(store.has("zero_nonexistent"));
    CHECK_THROWS_AS((void)store.get("zero_nonexistent"), IoError);
    CHECK(store.get("zero_structural").find("<CONSTRAINT>") != std::string::npos);

    const auto exs = store.exemplars("toxicity");
    REQUIRE(exs.size() == 2);
    CHECK(exs[0].q.find("Peshmerga") != std::string::npos);
    CHECK(exs[0].inst.find("nontoxic") != std::string::npos);
    CHECK_THROWS_AS((void)store.exemplars("nonexistent"), IoError);
}

TEST_CASE("in-memory store serves only what it was given") {
    auto store = TemplateStore::in_memory({{"zero_t", "ask <PROMPT>"}},
                                          {{"t", {{"q", "i", "a"}}}});
    CHECK(store.has("zero_t"));
    CHECK_FALSE(store.has("zero_u"));
    CHECK(store.get("zero_t") == "ask <PROMPT>");
    CHECK_THROWS_AS((void)store.get("zero_u"), IoError);
    REQUIRE(store.exemplars("t").size() == 1);
    CHECK(store.exemplars("t")[0].inst == "i");
    CHECK_THROWS_AS((void)store.exemplars("u"), IoError);
}

TEST_CASE("slot substitution is single-pass") {
    CHECK(substitute_slots("a<X>b<X>c", {{"<X>", "1"}}) == "a1b1c");
    // substituted values are never rescanned
    CHECK(substitute_slots("a<X>b", {{"<X>", "<Y>"}, {"<Y>", "!"}}) == "a<Y>b");
    CHECK(substitute_slots("<X><Y>", {{"<X>", "<Y>"}, {"<Y>", "!"}}) == "<Y>!");
    // earlier slots win at a shared match position
    CHECK(substitute_slots("<XY>", {{"<X", "1"}, {"<XY>", "2"}}) == "1Y>");
    CHECK(substitute_slots("plain", {{"<X>", "1"}}) == "plain");
}

TEST_CASE("exemplar blocks render one fixed stanza per exemplar") {
    CHECK(render_exemplar_blocks({}) == "");
    CHECK(render_exemplar_blocks({{"q1", "do it", "a1"}}) == "[Q]q1\ndo it\n[A]a1\n");
    CHECK(render_exemplar_blocks({{"q1", "i1", "a1"}, {"q2", "i2", "a2"}}) ==
          "[Q]q1\ni1\n[A]a1\n[Q]q2\ni2\n[A]a2\n");
}

TEST_CASE("zero-shot prompts match their golden bytes") {
    const auto store = shipped_store();
    for (const std::string task :
         {"toxicity", "sentiment", "topic", "excitement", "sensationalism", "irony"}) {
        CAPTURE(task);
        CHECK(assemble_prompt(store, kPrompt, task, PromptMode::zero) == golden("zero_" + task));
    }
    CHECK(assemble_prompt(store, kPrompt, "structural", PromptMode::zero,
                          "between 1 and 5 words") == golden("zero_structural"));
}

TEST_CASE("few-shot prompts match their golden bytes") {
    const auto store = shipped_store();
    for (const std::string task :
         {"toxicity", "sentiment", "topic", "excitement", "sensationalism", "irony"}) {
        CAPTURE(task);
        const auto exs = store.exemplars(task);
        REQUIRE(exs.size() == 2);
        CHECK(assemble_prompt(store, kPrompt, task, PromptMode::few, "", exs) ==
              golden("few_" + task));
    }
}

TEST_CASE("assembly rejects mismatched placeholders") {
    const auto store = shipped_store();
    const std::vector<Exemplar> exs = {{"q", "i", "a"}};

    // few-shot needs at least one exemplar
    CHECK_THROWS_AS((void)assemble_prompt(store, kPrompt, "toxicity", PromptMode::few),
                    MissingPlaceholder);
    // constraint text supplied, but the template has no slot for it
    CHECK_THROWS_AS(
        (void)assemble_prompt(store, kPrompt, "toxicity", PromptMode::zero, "between 1 and 5 words"),
        MissingPlaceholder);
    // template demands constraint text that was not supplied
    CHECK_THROWS_AS((void)assemble_prompt(store, kPrompt, "structural", PromptMode::zero),
                    MissingPlaceholder);

    auto broken = TemplateStore::in_memory(
        {{"zero_nop", "no prompt slot"}, {"few_nox", "<PROMPT> only"}});
    CHECK_THROWS_AS((void)assemble_prompt(broken, kPrompt, "nop", PromptMode::zero),
                    MissingPlaceholder);
    // few mode requires the exemplar slot
    CHECK_THROWS_AS((void)assemble_prompt(broken, kPrompt, "nox", PromptMode::few, "", exs),
                    MissingPlaceholder);
}
