#include "congen/cli/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "congen/eval/harness.hpp"
#include "congen/eval/report.hpp"

namespace congen::cli {

namespace {

struct Value {
    enum class Kind { string, integer, floating, boolean, array };
    Kind kind = Kind::string;
    std::string str;
    long long integer = 0;
    double floating = 0.0;
    bool boolean = false;
    std::vector<std::string> array;
};

const char * kind_name(Value::Kind kind) {
    switch (kind) {
        case Value::Kind::string: return "a quoted string";
        case Value::Kind::integer: return "an integer";
        case Value::Kind::floating: return "a number";
        case Value::Kind::boolean: return "a boolean";
        case Value::Kind::array: return "an array of strings";
    }
    return "a value";
}

[[noreturn]] void bad(const std::string & context, std::size_t line, const std::string & msg) {
    throw ConfigError(context + " line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string & s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::size_t skip_spaces(const std::string & s, std::size_t pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos;
}

// Decodes a quoted string starting at s[pos] == '"'; returns the index one
// past the closing quote.
std::size_t parse_quoted(const std::string & s, std::size_t pos, std::string & out,
                         const std::string & context, std::size_t line) {
    ++pos;
    while (pos < s.size()) {
        const char c = s[pos];
        if (c == '"') return pos + 1;
        if (c == '\\') {
            ++pos;
            if (pos >= s.size()) bad(context, line, "unterminated escape");
            switch (s[pos]) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: bad(context, line, std::string("unsupported escape \\") + s[pos]);
            }
        } else {
            out += c;
        }
        ++pos;
    }
    bad(context, line, "unterminated string");
}

void expect_rest_empty(const std::string & s, std::size_t pos, const std::string & context,
                       std::size_t line) {
    pos = skip_spaces(s, pos);
    if (pos < s.size() && s[pos] != '#') bad(context, line, "unexpected text after value");
}

bool parse_integer(const std::string & tok, long long & out) {
    if (tok.empty()) return false;
    std::size_t i = tok[0] == '+' || tok[0] == '-' ? 1 : 0;
    if (i == tok.size()) return false;
    for (; i < tok.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
    }
    try {
        out = std::stoll(tok);
    } catch (const std::exception &) {
        return false;
    }
    return true;
}

bool parse_floating(const std::string & tok, double & out) {
    if (tok.empty()) return false;
    std::size_t used = 0;
    try {
        out = std::stod(tok, &used);
    } catch (const std::exception &) {
        return false;
    }
    return used == tok.size();
}

Value parse_value(const std::string & raw, const std::string & context, std::size_t line) {
    std::size_t pos = skip_spaces(raw, 0);
    if (pos >= raw.size() || raw[pos] == '#') bad(context, line, "missing value");
    Value v;
    if (raw[pos] == '"') {
        v.kind = Value::Kind::string;
        pos = parse_quoted(raw, pos, v.str, context, line);
        expect_rest_empty(raw, pos, context, line);
        return v;
    }
    if (raw[pos] == '[') {
        v.kind = Value::Kind::array;
        ++pos;
        while (true) {
            pos = skip_spaces(raw, pos);
            if (pos >= raw.size()) bad(context, line, "unterminated array");
            if (raw[pos] == ']') {
                ++pos;
                break;
            }
            if (raw[pos] != '"') bad(context, line, "arrays hold quoted strings only");
            std::string elem;
            pos = parse_quoted(raw, pos, elem, context, line);
            v.array.push_back(std::move(elem));
            pos = skip_spaces(raw, pos);
            if (pos < raw.size() && raw[pos] == ',') {
                ++pos;
                continue;
            }
            if (pos < raw.size() && raw[pos] == ']') {
                ++pos;
                break;
            }
            bad(context, line, "expected , or ] in array");
        }
        expect_rest_empty(raw, pos, context, line);
        return v;
    }
    const auto hash = raw.find('#', pos);
    const std::string tok =
        trim(raw.substr(pos, hash == std::string::npos ? std::string::npos : hash - pos));
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::boolean;
        v.boolean = tok == "true";
        return v;
    }
    if (parse_integer(tok, v.integer)) {
        v.kind = Value::Kind::integer;
        return v;
    }
    if (parse_floating(tok, v.floating)) {
        v.kind = Value::Kind::floating;
        return v;
    }
    bad(context, line, "cannot parse value: " + tok);
}

struct KeyDef {
    const char * section;
    const char * key;
    Value::Kind kind;
    std::function<void(RunConfig &, const Value &)> set;
};

const std::vector<KeyDef> & key_table() {
    using K = Value::Kind;
    static const std::vector<KeyDef> table = {
        {"backend", "name", K::string, [](RunConfig & c, const Value & v) { c.backend.name = v.str; }},
        {"backend", "spec", K::string, [](RunConfig & c, const Value & v) { c.backend.spec = v.str; }},
        {"backend", "url", K::string, [](RunConfig & c, const Value & v) { c.backend.url = v.str; }},
        {"params", "temperature", K::floating,
         [](RunConfig & c, const Value & v) { c.params.temperature = v.floating; }},
        {"params", "top_p", K::floating,
         [](RunConfig & c, const Value & v) { c.params.top_p = v.floating; }},
        {"params", "top_k", K::integer,
         [](RunConfig & c, const Value & v) { c.params.top_k = static_cast<int>(v.integer); }},
        {"params", "max_new_tokens", K::integer,
         [](RunConfig & c, const Value & v) {
             c.params.max_new_tokens = static_cast<int>(v.integer);
         }},
        {"params", "seed", K::integer,
         [](RunConfig & c, const Value & v) {
             if (v.integer < 0) throw ConfigError("params.seed must be >= 0");
             c.params.seed = static_cast<std::uint64_t>(v.integer);
         }},
        {"params", "stop", K::array,
         [](RunConfig & c, const Value & v) { c.params.stop_sequences = v.array; }},
        {"decoder", "method", K::string,
         [](RunConfig & c, const Value & v) { c.decoder.method = v.str; }},
        {"decoder", "alpha", K::floating,
         [](RunConfig & c, const Value & v) { c.decoder.cfg.alpha = v.floating; }},
        {"decoder", "candidate_top_k", K::integer,
         [](RunConfig & c, const Value & v) {
             c.decoder.cfg.candidate_top_k = static_cast<int>(v.integer);
         }},
        {"decoder", "rollout_len", K::integer,
         [](RunConfig & c, const Value & v) {
             c.decoder.cfg.rollout_len = static_cast<int>(v.integer);
         }},
        {"decoder", "beam_width", K::integer,
         [](RunConfig & c, const Value & v) {
             c.decoder.cfg.beam_width = static_cast<int>(v.integer);
         }},
        {"decoder", "beam_groups", K::integer,
         [](RunConfig & c, const Value & v) {
             c.decoder.cfg.beam_groups = static_cast<int>(v.integer);
         }},
        {"decoder", "diversity_penalty", K::floating,
         [](RunConfig & c, const Value & v) { c.decoder.cfg.diversity_penalty = v.floating; }},
        {"decoder", "satisfaction_stop", K::boolean,
         [](RunConfig & c, const Value & v) { c.decoder.satisfaction_stop = v.boolean; }},
        {"task", "dataset", K::string,
         [](RunConfig & c, const Value & v) { c.task.dataset = v.str; }},
        {"task", "constraint", K::string,
         [](RunConfig & c, const Value & v) { c.task.constraint = v.str; }},
        {"task", "n_prompts", K::integer,
         [](RunConfig & c, const Value & v) { c.task.n_prompts = static_cast<int>(v.integer); }},
        {"label", "constraint", K::string,
         [](RunConfig & c, const Value & v) { c.label.constraint = v.str; }},
        {"label", "question", K::string,
         [](RunConfig & c, const Value & v) { c.label.question = v.str; }},
        {"label", "n_per_prompt", K::integer,
         [](RunConfig & c, const Value & v) {
             c.label.n_per_prompt = static_cast<int>(v.integer);
         }},
        {"label", "threshold", K::floating,
         [](RunConfig & c, const Value & v) { c.label.threshold = v.floating; }},
        {"label", "checkpoint_every", K::integer,
         [](RunConfig & c, const Value & v) {
             c.label.checkpoint_every = static_cast<int>(v.integer);
         }},
        {"label", "template", K::string,
         [](RunConfig & c, const Value & v) { c.label.template_path = v.str; }},
        {"eval", "methods", K::array,
         [](RunConfig & c, const Value & v) { c.eval.methods = v.array; }},
        {"eval", "tasks", K::array,
         [](RunConfig & c, const Value & v) { c.eval.tasks = v.array; }},
        {"eval", "formats", K::array,
         [](RunConfig & c, const Value & v) { c.eval.formats = v.array; }},
        {"eval", "fewshot_truncate", K::integer,
         [](RunConfig & c, const Value & v) {
             c.eval.fewshot_truncate = static_cast<int>(v.integer);
         }},
        {"eval", "reference", K::string,
         [](RunConfig & c, const Value & v) { c.eval.reference = v.str; }},
        {"eval", "expert", K::string,
         [](RunConfig & c, const Value & v) { c.eval.expert = v.str; }},
        {"eval", "antiexpert", K::string,
         [](RunConfig & c, const Value & v) { c.eval.antiexpert = v.str; }},
        {"eval", "template_id", K::string,
         [](RunConfig & c, const Value & v) { c.eval.template_id = v.str; }},
        {"eval", "templates", K::string,
         [](RunConfig & c, const Value & v) { c.eval.templates = v.str; }},
    };
    return table;
}

void apply_value(RunConfig & cfg, const std::string & section, const std::string & key,
                 Value value, const std::string & where) {
    for (const auto & def : key_table()) {
        if (section != def.section || key != def.key) continue;
        if (def.kind == Value::Kind::floating && value.kind == Value::Kind::integer) {
            value.kind = Value::Kind::floating;
            value.floating = static_cast<double>(value.integer);
        }
        if (value.kind != def.kind) {
            throw ConfigError(where + ": " + section + "." + key + " expects " +
                              kind_name(def.kind));
        }
        def.set(cfg, value);
        return;
    }
    throw ConfigError(where + ": unknown config key: " + section + "." + key);
}

std::string env_name(const KeyDef & def) {
    std::string name = std::string("CONGEN_") + def.section + "_" + def.key;
    for (auto & c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

Value value_from_env(const KeyDef & def, const std::string & text, const std::string & where) {
    Value v;
    v.kind = def.kind;
    switch (def.kind) {
        case Value::Kind::string:
            if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
                v.str = text.substr(1, text.size() - 2);
            } else {
                v.str = text;
            }
            break;
        case Value::Kind::integer:
            if (!parse_integer(trim(text), v.integer)) {
                throw ConfigError(where + ": expected an integer, got: " + text);
            }
            break;
        case Value::Kind::floating:
            if (!parse_floating(trim(text), v.floating)) {
                throw ConfigError(where + ": expected a number, got: " + text);
            }
            break;
        case Value::Kind::boolean: {
            const std::string t = trim(text);
            if (t == "true" || t == "1") {
                v.boolean = true;
            } else if (t == "false" || t == "0") {
                v.boolean = false;
            } else {
                throw ConfigError(where + ": expected true or false, got: " + text);
            }
            break;
        }
        case Value::Kind::array: {
            const std::string t = trim(text);
            if (!t.empty() && t.front() == '[') {
                return parse_value(t, where, 1);
            }
            std::size_t start = 0;
            while (start <= t.size() && !t.empty()) {
                const auto comma = t.find(',', start);
                const auto end = comma == std::string::npos ? t.size() : comma;
                const std::string elem = trim(t.substr(start, end - start));
                if (!elem.empty()) v.array.push_back(elem);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            break;
        }
    }
    return v;
}

} // namespace

void RunConfig::validate() const {
    try {
        params.validate();
    } catch (const Error & e) {
        throw ConfigError(std::string("params: ") + e.what());
    }
    try {
        decoder.cfg.validate();
    } catch (const Error & e) {
        throw ConfigError(std::string("decoder: ") + e.what());
    }
    congen::eval::method_from_string(decoder.method);
    for (const auto & m : eval.methods) congen::eval::method_from_string(m);
    for (const auto & f : eval.formats) congen::eval::report_format_from_string(f);
    if (backend.name != "toy" && backend.name != "remote") {
        throw ConfigError("backend.name must be \"toy\" or \"remote\"");
    }
    if (task.n_prompts < 1) throw ConfigError("task.n_prompts must be >= 1");
    if (label.n_per_prompt < 1) throw ConfigError("label.n_per_prompt must be >= 1");
    if (label.threshold < 0.0 || label.threshold > 1.0) {
        throw ConfigError("label.threshold must lie in [0,1]");
    }
    if (label.checkpoint_every < 1) throw ConfigError("label.checkpoint_every must be >= 1");
    if (eval.fewshot_truncate < 0) throw ConfigError("eval.fewshot_truncate must be >= 0");
}

RunConfig parse_run_config(const std::string & text, const std::string & context) {
    static const std::set<std::string> sections = {"backend", "params", "decoder",
                                                   "task",    "label",  "eval"};
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t[0] == '[') {
            if (t.back() != ']') bad(context, line_no, "malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!sections.count(section)) {
                bad(context, line_no, "unknown config section: [" + section + "]");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) bad(context, line_no, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) bad(context, line_no, "empty key");
        if (section.empty()) bad(context, line_no, "key outside a section");
        const Value value = parse_value(t.substr(eq + 1), context, line_no);
        apply_value(cfg, section, key, value, context + " line " + std::to_string(line_no));
    }
    return cfg;
}

RunConfig load_run_config(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_run_config(ss.str(), path);
    apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

void apply_env_overrides(RunConfig & cfg) {
    for (const auto & def : key_table()) {
        const std::string name = env_name(def);
        const char * value = std::getenv(name.c_str());
        if (!value) continue;
        apply_value(cfg, def.section, def.key, value_from_env(def, value, name), name);
    }
}

} // namespace congen::cli
