#include "congen/decoding/templates.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "congen/errors.hpp"

namespace congen::decoding {

TemplateStore::TemplateStore(std::string dir) : dir_(std::move(dir)) {}

TemplateStore TemplateStore::in_memory(std::map<std::string, std::string> files,
                                       std::map<std::string, std::vector<Exemplar>> exemplars) {
    TemplateStore store;
    store.memory_only_ = true;
    store.cache_ = std::move(files);
    store.exemplars_ = std::move(exemplars);
    return store;
}

bool TemplateStore::has(const std::string & file_id) const {
    if (cache_.count(file_id)) return true;
    if (memory_only_) return false;
    std::ifstream in(dir_ + "/" + file_id + ".txt");
    return in.good();
}

const std::string & TemplateStore::get(const std::string & file_id) const {
    auto it = cache_.find(file_id);
    if (it != cache_.end()) return it->second;
    if (memory_only_) throw IoError("unknown template: " + file_id);
    const std::string path = dir_ + "/" + file_id + ".txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open template: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return cache_.emplace(file_id, ss.str()).first->second;
}

std::vector<Exemplar> TemplateStore::exemplars(const std::string & task_id) const {
    if (memory_only_) {
        auto it = exemplars_.find(task_id);
        if (it == exemplars_.end()) throw IoError("unknown exemplar set: " + task_id);
        return it->second;
    }
    const std::string path = dir_ + "/exemplars_" + task_id + ".json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open exemplar file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception & e) {
        throw FormatError("bad exemplar file " + path + ": " + e.what());
    }
    std::vector<Exemplar> out;
    try {
        for (const auto & rec : doc) {
            out.push_back({rec.at("q").get<std::string>(), rec.at("inst").get<std::string>(),
                           rec.at("a").get<std::string>()});
        }
    } catch (const nlohmann::json::exception & e) {
        throw FormatError("bad exemplar file " + path + ": " + e.what());
    }
    return out;
}

std::string substitute_slots(const std::string & tmpl,
                             const std::vector<std::pair<std::string, std::string>> & slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool matched = false;
        for (const auto & [token, value] : slots) {
            if (!token.empty() && tmpl.compare(i, token.size(), token) == 0) {
                out += value;
                i += token.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            out += tmpl[i];
            ++i;
        }
    }
    return out;
}

std::string render_exemplar_blocks(const std::vector<Exemplar> & exemplars) {
    std::string out;
    for (const auto & ex : exemplars) {
        out += "[Q]" + ex.q + "\n" + ex.inst + "\n[A]" + ex.a + "\n";
    }
    return out;
}

std::string assemble_prompt(const TemplateStore & store, const std::string & task_prompt,
                            const std::string & template_id, PromptMode mode,
                            const std::string & constraint_text,
                            const std::vector<Exemplar> & exemplars) {
    const std::string file_id =
        (mode == PromptMode::zero ? "zero_" : "few_") + template_id;
    const std::string & tmpl = store.get(file_id);

    if (tmpl.find("<PROMPT>") == std::string::npos) {
        throw MissingPlaceholder("template " + file_id + " lacks <PROMPT>");
    }
    std::vector<std::pair<std::string, std::string>> slots;
    if (mode == PromptMode::few) {
        if (exemplars.empty()) {
            throw MissingPlaceholder("few-shot assembly of " + template_id +
                                     " needs at least one exemplar");
        }
        if (tmpl.find("<EXEMPLARS>") == std::string::npos) {
            throw MissingPlaceholder("template " + file_id + " lacks <EXEMPLARS>");
        }
        slots.emplace_back("<EXEMPLARS>", render_exemplar_blocks(exemplars));
    }
    if (!constraint_text.empty() && tmpl.find("<CONSTRAINT>") == std::string::npos) {
        throw MissingPlaceholder("template " + file_id + " lacks <CONSTRAINT>");
    }
    if (constraint_text.empty() && tmpl.find("<CONSTRAINT>") != std::string::npos) {
        throw MissingPlaceholder("template " + file_id + " needs constraint text");
    }
    slots.emplace_back("<CONSTRAINT>", constraint_text);
    slots.emplace_back("<PROMPT>", task_prompt);
    return substitute_slots(tmpl, slots);
}

} // namespace congen::decoding
