#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "congen/cli/config.hpp"

using namespace congen;
using namespace congen::cli;

namespace {

// Environment variable scoped to one test body.
struct EnvVar {
    std::string name;

    EnvVar(const std::string & n, const std::string & value) : name(n) {
        setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvVar() { unsetenv(name.c_str()); }
};

std::string error_of(const std::string & text) {
    try {
        (void)parse_run_config(text, "test");
    } catch (const ConfigError & e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("defaults are a runnable toy setup") {
    const RunConfig cfg;
    CHECK(cfg.backend.name == "toy");
    CHECK(cfg.backend.spec == "data/toy/backend.json");
    CHECK(cfg.backend.url.empty());
    CHECK(cfg.params.max_new_tokens == 64);
    CHECK(cfg.params.temperature == 1.0);
    CHECK(cfg.decoder.method == "greedy");
    CHECK(cfg.decoder.satisfaction_stop);
    CHECK(cfg.task.dataset == "data/toy/prompts.jsonl");
    CHECK(cfg.task.constraint == "words_1_5");
    CHECK(cfg.task.n_prompts == 50);
    CHECK(cfg.label.threshold == 0.02);
    CHECK(cfg.eval.methods == std::vector<std::string>{"greedy"});
    CHECK(cfg.eval.formats == std::vector<std::string>{"markdown", "csv", "json"});
    CHECK(cfg.eval.template_id == "structural");
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("the toml subset parses every value shape") {
    const std::string text =
        "# run configuration\r\n"
        "[backend]\n"
        "name = \"remote\"\n"
        "url = \"http://localhost:8080\" # inline comment\n"
        "\n"
        "[params]\n"
        "temperature = 0 # integers coerce to floats\n"
        "top_p = 0.9\n"
        "max_new_tokens = 32\n"
        "seed = 7\n"
        "stop = [\"\\n\\n\", \"END\"]\n"
        "[decoder]\n"
        "method = \"neurologic\"\n"
        "rollout_len = 4\n"
        "satisfaction_stop = false\n"
        "[label]\n"
        "constraint = \"says \\\"hi\\\"\"\n"
        "[eval]\n"
        "methods = [\"greedy\", \"neurologic\"]\n"
        "tasks = []\n"
        "fewshot_truncate = 2\n";
    const auto cfg = parse_run_config(text, "test");
    CHECK(cfg.backend.name == "remote");
    CHECK(cfg.backend.url == "http://localhost:8080");
    CHECK(cfg.params.temperature == 0.0);
    CHECK(cfg.params.top_p == 0.9);
    CHECK(cfg.params.max_new_tokens == 32);
    REQUIRE(cfg.params.seed.has_value());
    CHECK(*cfg.params.seed == 7);
    CHECK(cfg.params.stop_sequences == std::vector<std::string>{"\n\n", "END"});
    CHECK(cfg.decoder.method == "neurologic");
    CHECK(cfg.decoder.cfg.rollout_len == 4);
    CHECK_FALSE(cfg.decoder.satisfaction_stop);
    CHECK(cfg.label.constraint == "says \"hi\"");
    CHECK(cfg.eval.methods == std::vector<std::string>{"greedy", "neurologic"});
    CHECK(cfg.eval.tasks.empty());
    CHECK(cfg.eval.fewshot_truncate == 2);
    // untouched keys keep their defaults
    CHECK(cfg.backend.spec == "data/toy/backend.json");
    CHECK(cfg.decoder.cfg.beam_width == 10);
}

TEST_CASE("type mismatches name the section and key") {
    CHECK(error_of("[decoder]\nmethod = 5\n").find("decoder.method expects a quoted string") !=
          std::string::npos);
    CHECK(error_of("[params]\nstop = \"x\"\n").find("params.stop expects an array of strings") !=
          std::string::npos);
    CHECK(error_of("[params]\ntop_k = 1.5\n").find("params.top_k expects an integer") !=
          std::string::npos);
    CHECK(error_of("[decoder]\nsatisfaction_stop = \"yes\"\n")
              .find("decoder.satisfaction_stop expects a boolean") != std::string::npos);
    CHECK(error_of("[params]\ntemperature = hot\n").find("cannot parse value: hot") !=
          std::string::npos);
    CHECK(error_of("[params]\nseed = -1\n").find("params.seed must be >= 0") !=
          std::string::npos);
}

TEST_CASE("structural errors carry line numbers") {
    CHECK(error_of("[backend]\nname = \"toy\"\n[transport]\n") ==
          "test line 3: unknown config section: [transport]");
    CHECK(error_of("[params]\nwarmth = 1\n") ==
          "test line 2: unknown config key: params.warmth");
    CHECK(error_of("name = \"toy\"\n") == "test line 1: key outside a section");
    CHECK(error_of("[params\n") == "test line 1: malformed section header");
    CHECK(error_of("[params]\ntemperature\n") == "test line 2: expected key = value");
    CHECK(error_of("[params]\n= 1\n") == "test line 2: empty key");
    CHECK(error_of("[params]\ntemperature =\n") == "test line 2: missing value");
    CHECK(error_of("[backend]\nname = \"toy\n") == "test line 2: unterminated string");
    CHECK(error_of("[backend]\nname = \"to\\y\"\n") == "test line 2: unsupported escape \\y");
    CHECK(error_of("[params]\nstop = [\"a\"\n") == "test line 2: expected , or ] in array");
    CHECK(error_of("[params]\nstop = [1]\n") ==
          "test line 2: arrays hold quoted strings only");
    CHECK(error_of("[params]\ntop_k = 3 4\n") == "test line 2: cannot parse value: 3 4");
    CHECK(error_of("[backend]\nname = \"toy\" extra\n") ==
          "test line 2: unexpected text after value");
}

TEST_CASE("environment variables override file values") {
    EnvVar name("CONGEN_BACKEND_NAME", "remote");
    EnvVar spec("CONGEN_BACKEND_SPEC", "\"specs/alt.json\""); // quotes are stripped
    EnvVar temp("CONGEN_PARAMS_TEMPERATURE", "0.5");
    EnvVar top_k("CONGEN_PARAMS_TOP_K", "12");
    EnvVar stop_flag("CONGEN_DECODER_SATISFACTION_STOP", "0");
    EnvVar methods("CONGEN_EVAL_METHODS", "greedy, rerank");
    EnvVar stops("CONGEN_PARAMS_STOP", "[\"a\", \"b\"]");

    RunConfig cfg;
    apply_env_overrides(cfg);
    CHECK(cfg.backend.name == "remote");
    CHECK(cfg.backend.spec == "specs/alt.json");
    CHECK(cfg.params.temperature == 0.5);
    CHECK(cfg.params.top_k == 12);
    CHECK_FALSE(cfg.decoder.satisfaction_stop);
    CHECK(cfg.eval.methods == std::vector<std::string>{"greedy", "rerank"});
    CHECK(cfg.params.stop_sequences == std::vector<std::string>{"a", "b"});
}

TEST_CASE("bad environment values name the variable") {
    EnvVar bad("CONGEN_PARAMS_TOP_K", "dozen");
    RunConfig cfg;
    try {
        apply_env_overrides(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError & e) {
        CHECK(std::string(e.what()).find("CONGEN_PARAMS_TOP_K") != std::string::npos);
    }
}

TEST_CASE("boolean overrides accept true/false and 0/1 only") {
    RunConfig cfg;
    {
        EnvVar flag("CONGEN_DECODER_SATISFACTION_STOP", "true");
        apply_env_overrides(cfg);
        CHECK(cfg.decoder.satisfaction_stop);
    }
    EnvVar bad("CONGEN_DECODER_SATISFACTION_STOP", "on");
    CHECK_THROWS_AS(apply_env_overrides(cfg), ConfigError);
}

TEST_CASE("the api key is a secret, not a config key") {
    EnvVar key("CONGEN_API_KEY", "sk-XYZ");
    RunConfig cfg;
    CHECK_NOTHROW(apply_env_overrides(cfg));
    CHECK(cfg.backend.name == "toy"); // untouched
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("validation covers cross-field rules") {
    const auto reject = [](void (*mutate)(RunConfig &), const std::string & needle) {
        RunConfig cfg;
        mutate(cfg);
        try {
            cfg.validate();
            FAIL_CHECK("expected ConfigError mentioning ", needle);
        } catch (const ConfigError & e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    reject([](RunConfig & c) { c.params.temperature = -1.0; }, "params:");
    reject([](RunConfig & c) { c.decoder.cfg.beam_width = 4, c.decoder.cfg.beam_groups = 3; },
           "decoder:");
    reject([](RunConfig & c) { c.decoder.method = "beam"; }, "unknown method");
    reject([](RunConfig & c) { c.eval.methods = {"greedy", "magic"}; }, "unknown method");
    reject([](RunConfig & c) { c.eval.formats = {"html"}; }, "unknown report format");
    reject([](RunConfig & c) { c.backend.name = "local"; }, "backend.name");
    reject([](RunConfig & c) { c.task.n_prompts = 0; }, "task.n_prompts");
    reject([](RunConfig & c) { c.label.n_per_prompt = 0; }, "label.n_per_prompt");
    reject([](RunConfig & c) { c.label.threshold = 1.5; }, "label.threshold");
    reject([](RunConfig & c) { c.label.checkpoint_every = 0; }, "label.checkpoint_every");
    reject([](RunConfig & c) { c.eval.fewshot_truncate = -1; }, "eval.fewshot_truncate");
}

TEST_CASE("load_run_config reads, overrides, and validates") {
    const std::string path =
        "/tmp/congen_config_" + std::to_string(getpid()) + ".toml";
    {
        std::ofstream out(path);
        out << "[params]\ntemperature = 0.7\nmax_new_tokens = 16\n";
    }

    auto cfg = load_run_config(path);
    CHECK(cfg.params.temperature == 0.7);
    CHECK(cfg.params.max_new_tokens == 16);

    {
        EnvVar temp("CONGEN_PARAMS_TEMPERATURE", "0.1");
        cfg = load_run_config(path);
        CHECK(cfg.params.temperature == 0.1);
    }

    {
        std::ofstream out(path);
        out << "[decoder]\nmethod = \"beam\"\n"; // validation runs on load
    }
    CHECK_THROWS_AS((void)load_run_config(path), ConfigError);

    std::remove(path.c_str());
    CHECK_THROWS_AS((void)load_run_config(path), ConfigError);
}
