#include "congen/eval/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string_view>

#include <json.hpp>

#include "congen/lm/toy_backend.hpp"

namespace congen::eval {

namespace {

using nlohmann::ordered_json;

constexpr const char * kMethodNames[] = {"greedy", "rerank",   "fudge",    "neurologic",
                                         "dexperts", "air",    "zeroshot", "fewshot"};

} // namespace

std::string to_string(Method m) { return kMethodNames[static_cast<int>(m)]; }

Method method_from_string(const std::string & name) {
    for (int i = 0; i < 8; ++i) {
        if (name == kMethodNames[i]) return static_cast<Method>(i);
    }
    throw ConfigError("unknown method: " + name);
}

void TaskSpec::validate() const {
    if (id.empty()) throw Error("task id is empty");
    if (prompts.empty()) throw Error("task " + id + " has no prompts");
    if (n_prompts < 1) throw Error("task " + id + " needs n_prompts >= 1");
    if (constraint.kind == "structural") {
        if (!constraint.structural) throw Error("task " + id + " is missing its constraint");
        constraint.structural->validate();
    } else if (constraint.kind == "stylistic") {
        if (!constraint.stylistic) throw Error("task " + id + " is missing its constraint");
        constraint.stylistic->validate();
    } else {
        throw Error("task " + id + " has unknown constraint kind: " + constraint.kind);
    }
}

std::string TaskSpec::display_name() const {
    return constraint.structural ? constraint.structural->display_name() : id;
}

std::string task_id_for(const constraints::StructuralConstraint & c) {
    std::string unit = c.unit.id();
    std::replace(unit.begin(), unit.end(), ':', '_');
    std::string out = unit + "_" + std::to_string(c.lower) + "_";
    out += c.upper ? std::to_string(*c.upper) : "plus";
    return out;
}

double success_rate(const std::vector<std::string> & outputs,
                    const constraints::ConstraintSpec & constraint,
                    const constraints::PosTagger * tagger) {
    if (outputs.empty()) throw Error("success_rate needs at least one output");
    std::size_t ok = 0;
    if (constraint.structural) {
        for (const auto & o : outputs) {
            ok += constraints::check_structural(o, *constraint.structural, tagger) ? 1 : 0;
        }
    } else if (constraint.stylistic) {
        for (const auto & o : outputs) {
            ok += constraint.stylistic->scorer(o) >= 0.5 ? 1 : 0;
        }
    } else {
        throw Error("constraint spec carries no constraint");
    }
    return static_cast<double>(ok) / static_cast<double>(outputs.size());
}

std::optional<double>
fluency_proxy(const std::vector<std::pair<std::string, std::string>> & prompt_output_pairs,
              const lm::Backend & reference) {
    if (reference.descriptor().kind != lm::BackendKind::token_level) return std::nullopt;
    const lm::GenerationParams params;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto & [prompt, output] : prompt_output_pairs) {
        if (output.empty()) continue;
        const auto pre = reference.tokenize(prompt);
        const auto full = reference.tokenize(prompt + output);
        for (std::size_t i = pre.size(); i < full.size(); ++i) {
            lm::TokenSequence prefix;
            prefix.token_ids.assign(full.token_ids.begin(),
                                    full.token_ids.begin() + static_cast<std::ptrdiff_t>(i));
            prefix.vocab_size = full.vocab_size;
            prefix.text = reference.detokenize(prefix);
            const auto dist = reference.next_token_logits(prefix, params);
            total += dist.logprobs[static_cast<std::size_t>(full.token_ids[i])];
            ++n;
        }
    }
    if (n == 0 || !std::isfinite(total)) return std::nullopt;
    return total / static_cast<double>(n);
}

constraints::SequenceScorer scorer_from_descriptor(const std::string & descriptor) {
    const auto parse_words = [](const std::string & inner) {
        std::set<std::string> words;
        std::size_t start = 0;
        while (start <= inner.size() && !inner.empty()) {
            const auto comma = inner.find(',', start);
            const auto end = comma == std::string::npos ? inner.size() : comma;
            if (end > start) words.insert(inner.substr(start, end - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return words;
    };
    if (descriptor.rfind("lexicon{", 0) == 0 && descriptor.back() == '}') {
        const auto words = parse_words(descriptor.substr(8, descriptor.size() - 9));
        if (!words.empty()) return constraints::lexicon_scorer(words);
    }
    if (descriptor.rfind("clean{", 0) == 0 && descriptor.back() == '}') {
        const auto words = parse_words(descriptor.substr(6, descriptor.size() - 7));
        if (!words.empty()) {
            const auto presence = constraints::lexicon_scorer(words);
            const std::string name = "clean{" + presence.descriptor.substr(8);
            return {name, [presence](const std::string & text) { return 1.0 - presence(text); }};
        }
    }
    throw Error("no scorer registered for descriptor: " + descriptor);
}

namespace {

struct CellRun {
    RowResult row;
    std::vector<OutputRecord> records;
};

bool needs_token_level(Method m) {
    return m == Method::rerank || m == Method::fudge || m == Method::neurologic ||
           m == Method::dexperts || m == Method::air;
}

CellRun run_cell(Method method, const TaskSpec & task, const lm::Backend & backend,
                 const GridConfig & cfg) {
    const bool structural = task.constraint.kind == "structural";
    const constraints::PosTagger * tagger = cfg.tagger.get();
    const auto * sc = structural ? &*task.constraint.structural : nullptr;

    if (needs_token_level(method) && backend.descriptor().kind != lm::BackendKind::token_level) {
        throw Error("method " + to_string(method) + " needs a token-level backend");
    }
    if ((method == Method::dexperts || method == Method::air) &&
        (!cfg.expert || !cfg.antiexpert)) {
        throw Error("method " + to_string(method) + " needs expert and antiexpert backends");
    }
    if ((method == Method::zeroshot || method == Method::fewshot) && !cfg.templates) {
        throw Error("method " + to_string(method) + " needs a template store");
    }
    if (structural && sc->unit.kind == constraints::UnitKind::pos && !tagger) {
        throw TaggerUnavailable("task " + task.id + " needs a pos tagger");
    }

    constraints::SequenceScorer seq_scorer;
    constraints::PrefixScorer prefix_scorer;
    if (structural) {
        const auto c = *sc;
        seq_scorer = {"structural:" + task.id, [c, tagger](const std::string & text) {
                          return constraints::check_structural(text, c, tagger) ? 1.0 : 0.0;
                      }};
        prefix_scorer = {"feasibility:" + task.id,
                         [c, tagger](const std::string & prefix, const std::string & candidate) {
                             return constraints::prefix_feasibility(prefix + candidate, c, tagger);
                         }};
    } else {
        seq_scorer = task.constraint.stylistic->scorer;
        if (!seq_scorer) {
            seq_scorer = scorer_from_descriptor(task.constraint.stylistic->scorer.descriptor);
        }
        const auto s = seq_scorer;
        prefix_scorer = {s.descriptor,
                         [s](const std::string & prefix, const std::string & candidate) {
                             return s(prefix + candidate);
                         }};
    }

    auto dcfg = cfg.decoder;
    dcfg.tagger = cfg.tagger;
    dcfg.stop_constraint.reset();
    if (structural && cfg.satisfaction_stop) dcfg.stop_constraint = *sc;

    const std::string template_id = structural ? cfg.template_id : task.id;
    std::string constraint_text;
    if (structural) constraint_text = sc->constraint_text();
    std::vector<decoding::Exemplar> exemplars;
    if (method == Method::fewshot) {
        exemplars = cfg.templates->exemplars(template_id);
        if (cfg.fewshot_truncate > 0 &&
            exemplars.size() > static_cast<std::size_t>(cfg.fewshot_truncate)) {
            exemplars.resize(static_cast<std::size_t>(cfg.fewshot_truncate));
        }
    }

    CellRun cell;
    const int requested =
        std::min<int>(task.n_prompts, static_cast<int>(task.prompts.size()));
    for (int i = 0; i < requested; ++i) {
        const std::string & prompt = task.prompts[static_cast<std::size_t>(i)];
        OutputRecord rec;
        rec.prompt = prompt;
        try {
            decoding::DecodeResult res;
            switch (method) {
                case Method::greedy: res = decoding::greedy_decode(backend, prompt, cfg.params); break;
                case Method::rerank:
                    res = decoding::rerank_decode(backend, prompt, seq_scorer, dcfg, cfg.params);
                    break;
                case Method::fudge:
                    res = decoding::fudge_decode(backend, prompt, prefix_scorer, dcfg, cfg.params);
                    break;
                case Method::neurologic:
                    res = decoding::neurologic_decode(backend, prompt, seq_scorer, dcfg, cfg.params);
                    break;
                case Method::dexperts:
                    res = decoding::dexperts_decode(backend, *cfg.expert, *cfg.antiexpert, prompt,
                                                    dcfg, cfg.params);
                    break;
                case Method::air:
                    res = decoding::air_decode(backend, *cfg.expert, *cfg.antiexpert, prompt, dcfg,
                                               cfg.params);
                    break;
                case Method::zeroshot:
                case Method::fewshot: {
                    const auto mode = method == Method::zeroshot ? decoding::PromptMode::zero
                                                                 : decoding::PromptMode::few;
                    const auto assembled = decoding::assemble_prompt(
                        *cfg.templates, prompt, template_id, mode, constraint_text, exemplars);
                    const auto comp = backend.complete(assembled, cfg.params);
                    res.text = comp.text;
                    res.truncated = comp.truncated;
                    break;
                }
            }
            rec.output = res.text;
            rec.fallbacks = static_cast<int>(res.fallback_events.size());
            if (structural) {
                const auto n =
                    static_cast<long long>(constraints::count_units(res.text, sc->unit, tagger));
                rec.count = n;
                rec.satisfied = n >= sc->lower && (!sc->upper || n <= *sc->upper);
            } else {
                const double s = seq_scorer(res.text);
                rec.score = s;
                rec.satisfied = s >= 0.5;
            }
        } catch (const Error & e) {
            rec.error = e.what();
        }
        cell.records.push_back(std::move(rec));
    }

    auto & row = cell.row;
    row.method = to_string(method);
    row.task = task.id;
    row.task_display = task.display_name();
    row.requested = requested;
    std::size_t satisfied = 0;
    double score_sum = 0.0;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto & rec : cell.records) {
        if (!rec.error.empty()) continue;
        ++row.completed;
        satisfied += rec.satisfied ? 1 : 0;
        if (rec.score) score_sum += *rec.score;
        row.fallback_events += rec.fallbacks;
        pairs.emplace_back(rec.prompt, rec.output);
    }
    if (row.completed == 0) {
        std::string cause = "all " + std::to_string(requested) + " prompts failed";
        for (const auto & rec : cell.records) {
            if (!rec.error.empty()) {
                cause += ": " + rec.error;
                break;
            }
        }
        throw Error(cause);
    }
    row.success_rate = static_cast<double>(satisfied) / row.completed;
    if (!structural) row.mean_scorer = score_sum / row.completed;
    if (cfg.reference) row.fluency_proxy = fluency_proxy(pairs, *cfg.reference);
    return cell;
}

ordered_json backend_manifest(const lm::Backend * backend) {
    if (!backend) return nullptr;
    if (const auto * toy = dynamic_cast<const lm::ToyBackend *>(backend)) {
        ordered_json j;
        j["kind"] = "toy";
        j["spec"] = ordered_json::parse(toy->to_json());
        return j;
    }
    const auto d = backend->descriptor();
    ordered_json j;
    j["kind"] = "opaque";
    j["name"] = d.name;
    j["backend_kind"] = lm::to_string(d.kind);
    return j;
}

std::string build_manifest(const std::vector<Method> & methods,
                           const std::vector<TaskSpec> & tasks, const lm::Backend & backend,
                           const GridConfig & cfg) {
    ordered_json m;
    m["schema"] = 1;
    m["kind"] = "eval-grid";
    auto methods_arr = ordered_json::array();
    for (const auto method : methods) methods_arr.push_back(to_string(method));
    m["methods"] = methods_arr;
    m["backend"] = backend_manifest(&backend);
    m["expert"] = backend_manifest(cfg.expert.get());
    m["antiexpert"] = backend_manifest(cfg.antiexpert.get());
    m["reference"] = backend_manifest(cfg.reference.get());
    m["tagger"] = cfg.tagger ? ordered_json(cfg.tagger->name()) : ordered_json(nullptr);
    m["template_id"] = cfg.template_id;
    m["fewshot_truncate"] = cfg.fewshot_truncate;
    m["satisfaction_stop"] = cfg.satisfaction_stop;

    ordered_json dec;
    dec["alpha"] = cfg.decoder.alpha;
    dec["candidate_top_k"] = cfg.decoder.candidate_top_k;
    dec["rollout_len"] = cfg.decoder.rollout_len;
    dec["beam_width"] = cfg.decoder.beam_width;
    dec["beam_groups"] = cfg.decoder.beam_groups;
    dec["diversity_penalty"] = cfg.decoder.diversity_penalty;
    m["decoder"] = dec;

    ordered_json params;
    params["max_new_tokens"] = cfg.params.max_new_tokens;
    params["temperature"] = cfg.params.temperature;
    params["top_p"] = cfg.params.top_p;
    params["top_k"] = cfg.params.top_k;
    params["seed"] = cfg.params.seed ? ordered_json(*cfg.params.seed) : ordered_json(nullptr);
    params["stop_sequences"] = cfg.params.stop_sequences;
    m["params"] = params;

    auto tasks_arr = ordered_json::array();
    for (const auto & t : tasks) {
        ordered_json tj;
        tj["id"] = t.id;
        tj["constraint"] = ordered_json::parse(constraints::constraint_spec_to_json(t.constraint));
        tj["scorer"] = t.constraint.stylistic && t.constraint.stylistic->scorer
                           ? ordered_json(t.constraint.stylistic->scorer.descriptor)
                           : ordered_json(nullptr);
        tj["n_prompts"] = t.n_prompts;
        tj["prompts"] = t.prompts;
        tasks_arr.push_back(tj);
    }
    m["tasks"] = tasks_arr;

    const bool wants_zero =
        std::find(methods.begin(), methods.end(), Method::zeroshot) != methods.end();
    const bool wants_few =
        std::find(methods.begin(), methods.end(), Method::fewshot) != methods.end();
    if ((wants_zero || wants_few) && cfg.templates) {
        std::vector<std::string> template_ids;
        for (const auto & t : tasks) {
            const std::string tid = t.constraint.structural ? cfg.template_id : t.id;
            if (std::find(template_ids.begin(), template_ids.end(), tid) == template_ids.end()) {
                template_ids.push_back(tid);
            }
        }
        auto files = ordered_json::object();
        auto exemplar_sets = ordered_json::object();
        for (const auto & tid : template_ids) {
            for (const char * prefix : {"zero_", "few_"}) {
                if (std::string_view(prefix) == "zero_" && !wants_zero) continue;
                if (std::string_view(prefix) == "few_" && !wants_few) continue;
                const std::string file_id = prefix + tid;
                if (cfg.templates->has(file_id)) files[file_id] = cfg.templates->get(file_id);
            }
            if (wants_few) {
                try {
                    auto arr = ordered_json::array();
                    for (const auto & e : cfg.templates->exemplars(tid)) {
                        arr.push_back(ordered_json{{"q", e.q}, {"inst", e.inst}, {"a", e.a}});
                    }
                    exemplar_sets[tid] = arr;
                } catch (const Error &) {
                    // missing exemplar file: the fewshot cell quarantined already
                }
            }
        }
        m["templates"] = ordered_json{{"files", files}, {"exemplars", exemplar_sets}};
    } else {
        m["templates"] = nullptr;
    }
    return m.dump(2);
}

} // namespace

EvalReport run_grid(const std::vector<Method> & methods, const std::vector<TaskSpec> & tasks,
                    const lm::Backend & backend, const GridConfig & cfg) {
    if (methods.empty()) throw Error("run_grid needs at least one method");
    if (tasks.empty()) throw Error("run_grid needs at least one task");
    cfg.params.validate();
    cfg.decoder.validate();
    std::set<std::string> seen_methods;
    for (const auto m : methods) {
        if (!seen_methods.insert(to_string(m)).second) {
            throw Error("duplicate method: " + to_string(m));
        }
    }
    std::set<std::string> seen_tasks;
    for (const auto & t : tasks) {
        t.validate();
        if (!seen_tasks.insert(t.id).second) throw Error("duplicate task id: " + t.id);
    }

    EvalReport report;
    for (const auto m : methods) report.method_order.push_back(to_string(m));
    for (const auto & t : tasks) report.task_order.emplace_back(t.id, t.display_name());

    for (const auto m : methods) {
        for (const auto & t : tasks) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                auto cell = run_cell(m, t, backend, cfg);
                cell.row.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                report.rows.push_back(std::move(cell.row));
                report.outputs.push_back({to_string(m), t.id, std::move(cell.records)});
            } catch (const Error & e) {
                report.quarantines.push_back({to_string(m), t.id, e.what()});
            }
        }
    }
    report.manifest_json = build_manifest(methods, tasks, backend, cfg);
    return report;
}

EvalReport replay_run(const std::string & manifest_json) {
    const auto m = nlohmann::json::parse(manifest_json, nullptr, false);
    if (m.is_discarded()) throw FormatError("manifest is not valid json");
    try {
        if (m.at("schema").get<int>() != 1) throw FormatError("unsupported manifest schema");
        if (m.at("kind").get<std::string>() != "eval-grid") {
            throw FormatError("manifest is not an eval-grid manifest");
        }

        const auto rebuild =
            [](const nlohmann::json & j,
               const std::string & role) -> std::shared_ptr<const lm::Backend> {
            if (j.is_null()) return nullptr;
            if (j.at("kind").get<std::string>() != "toy") {
                throw Error("manifest " + role + " backend is not replayable");
            }
            return std::make_shared<const lm::ToyBackend>(
                lm::ToyBackend::from_json(j.at("spec").dump()));
        };

        const auto base = rebuild(m.at("backend"), "base");
        if (!base) throw FormatError("manifest has no base backend");

        GridConfig cfg;
        cfg.expert = rebuild(m.at("expert"), "expert");
        cfg.antiexpert = rebuild(m.at("antiexpert"), "antiexpert");
        cfg.reference = rebuild(m.at("reference"), "reference");

        if (!m.at("tagger").is_null()) {
            const auto tagger_name = m.at("tagger").get<std::string>();
            if (tagger_name != "rule-tagger") {
                throw Error("manifest tagger is not replayable: " + tagger_name);
            }
            cfg.tagger = std::make_shared<const constraints::RuleTagger>();
        }

        cfg.template_id = m.at("template_id").get<std::string>();
        cfg.fewshot_truncate = m.at("fewshot_truncate").get<int>();
        cfg.satisfaction_stop = m.at("satisfaction_stop").get<bool>();

        const auto & dec = m.at("decoder");
        cfg.decoder.alpha = dec.at("alpha").get<double>();
        cfg.decoder.candidate_top_k = dec.at("candidate_top_k").get<int>();
        cfg.decoder.rollout_len = dec.at("rollout_len").get<int>();
        cfg.decoder.beam_width = dec.at("beam_width").get<int>();
        cfg.decoder.beam_groups = dec.at("beam_groups").get<int>();
        cfg.decoder.diversity_penalty = dec.at("diversity_penalty").get<double>();

        const auto & params = m.at("params");
        cfg.params.max_new_tokens = params.at("max_new_tokens").get<int>();
        cfg.params.temperature = params.at("temperature").get<double>();
        cfg.params.top_p = params.at("top_p").get<double>();
        cfg.params.top_k = params.at("top_k").get<int>();
        if (!params.at("seed").is_null()) cfg.params.seed = params.at("seed").get<uint64_t>();
        cfg.params.stop_sequences = params.at("stop_sequences").get<std::vector<std::string>>();

        std::vector<Method> methods;
        for (const auto & name : m.at("methods")) {
            methods.push_back(method_from_string(name.get<std::string>()));
        }

        std::vector<TaskSpec> tasks;
        for (const auto & tj : m.at("tasks")) {
            TaskSpec t;
            t.id = tj.at("id").get<std::string>();
            t.constraint = constraints::constraint_spec_from_json(tj.at("constraint").dump());
            if (!tj.at("scorer").is_null() && t.constraint.stylistic) {
                t.constraint.stylistic->scorer =
                    scorer_from_descriptor(tj.at("scorer").get<std::string>());
            }
            t.n_prompts = tj.at("n_prompts").get<int>();
            t.prompts = tj.at("prompts").get<std::vector<std::string>>();
            tasks.push_back(std::move(t));
        }

        std::optional<decoding::TemplateStore> store;
        if (!m.at("templates").is_null()) {
            std::map<std::string, std::string> files;
            for (const auto & [key, value] : m.at("templates").at("files").items()) {
                files[key] = value.get<std::string>();
            }
            std::map<std::string, std::vector<decoding::Exemplar>> exemplar_sets;
            for (const auto & [key, value] : m.at("templates").at("exemplars").items()) {
                std::vector<decoding::Exemplar> list;
                for (const auto & e : value) {
                    list.push_back({e.at("q").get<std::string>(), e.at("inst").get<std::string>(),
                                    e.at("a").get<std::string>()});
                }
                exemplar_sets[key] = std::move(list);
            }
            store = decoding::TemplateStore::in_memory(std::move(files), std::move(exemplar_sets));
            cfg.templates = &*store;
        }

        return run_grid(methods, tasks, *base, cfg);
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    }
}

} // namespace congen::eval
