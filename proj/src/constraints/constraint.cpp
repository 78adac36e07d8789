#include "congen/constraints/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace congen::constraints {

std::string Unit::plural_name() const {
    switch (kind) {
        case UnitKind::words: return "words";
        case UnitKind::sentences: return "sentences";
        case UnitKind::pos: return to_string(tag) + "s";
    }
    return "words";
}

std::string Unit::id() const {
    switch (kind) {
        case UnitKind::words: return "words";
        case UnitKind::sentences: return "sentences";
        case UnitKind::pos: return "pos:" + to_string(tag);
    }
    return "words";
}

Unit Unit::from_id(const std::string & id) {
    if (id == "words") return words();
    if (id == "sentences") return sentences();
    if (id.rfind("pos:", 0) == 0) return pos(pos_tag_from_string(id.substr(4)));
    throw FormatError("unknown constraint unit: " + id);
}

void StructuralConstraint::validate() const {
    if (lower < 0) throw FormatError("constraint lower bound must be >= 0");
    if (upper && *upper < lower) throw FormatError("constraint upper bound below lower bound");
}

std::string StructuralConstraint::constraint_text() const {
    std::ostringstream out;
    if (upper) {
        out << "between " << lower << " and " << *upper << " " << unit.plural_name();
    } else {
        out << "at least " << lower << " " << unit.plural_name();
    }
    return out.str();
}

std::string StructuralConstraint::display_name() const {
    std::string name = unit.plural_name();
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::ostringstream out;
    out << name << " ";
    if (!upper) {
        out << lower << "+";
    } else if (*upper == lower) {
        out << lower;
    } else {
        out << lower << "-" << *upper;
    }
    return out.str();
}

double SequenceScorer::operator()(const std::string & text) const {
    if (!fn) throw Error("sequence scorer is unbound: " + descriptor);
    const double v = fn(text);
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error("sequence scorer " + descriptor + " returned value outside [0,1]");
    }
    return v;
}

double PrefixScorer::operator()(const std::string & prefix, const std::string & candidate) const {
    if (!fn) throw Error("prefix scorer is unbound: " + descriptor);
    const double v = fn(prefix, candidate);
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error("prefix scorer " + descriptor + " returned value outside [0,1]");
    }
    return v;
}

void StylisticConstraint::validate() const {
    if (description.empty()) throw FormatError("stylistic constraint needs a description");
    for (const auto & [text, label] : fewshot_examples) {
        (void)text;
        if (label != 0 && label != 1) throw FormatError("fewshot labels must be 0 or 1");
    }
}

std::size_t count_units(const std::string & text, const Unit & unit, const PosTagger * tagger) {
    switch (unit.kind) {
        case UnitKind::words: return count_words(text);
        case UnitKind::sentences: {
            static const SentenceSplitter splitter;
            return splitter.count(text);
        }
        case UnitKind::pos: {
            if (!tagger) throw TaggerUnavailable("pos counting needs a tagger adapter");
            std::size_t n = 0;
            for (const auto & [token, tag] : tagger->tag(text)) {
                (void)token;
                if (tag == unit.tag) ++n;
            }
            return n;
        }
    }
    return 0;
}

bool check_structural(const std::string & text, const StructuralConstraint & c,
                      const PosTagger * tagger) {
    const auto n = static_cast<long long>(count_units(text, c.unit, tagger));
    if (n < c.lower) return false;
    return !c.upper || n <= *c.upper;
}

double prefix_feasibility(const std::string & prefix, const StructuralConstraint & c,
                          const PosTagger * tagger) {
    if (!c.upper) return 1.0;
    const auto n = static_cast<long long>(count_units(prefix, c.unit, tagger));
    return n <= *c.upper ? 1.0 : 0.0;
}

SequenceScorer lexicon_scorer(const std::set<std::string> & word_set) {
    if (word_set.empty()) throw Error("lexicon scorer needs a non-empty word set");
    std::set<std::string> lowered;
    for (const auto & w : word_set) {
        std::string l = w;
        std::transform(l.begin(), l.end(), l.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        lowered.insert(l);
    }
    std::string descriptor = "lexicon{";
    for (auto it = lowered.begin(); it != lowered.end(); ++it) {
        if (it != lowered.begin()) descriptor += ",";
        descriptor += *it;
    }
    descriptor += "}";
    return SequenceScorer{
        descriptor,
        [lowered](const std::string & text) -> double {
            for (const auto & token : word_tokens(text)) {
                std::string l = token;
                std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) {
                    return static_cast<char>(std::tolower(c));
                });
                if (lowered.count(l)) return 1.0;
            }
            return 0.0;
        },
    };
}

std::vector<StructuralConstraint> benchmark_task_settings() {
    return {
        {Unit::words(), 1, 5},
        {Unit::words(), 1, 10},
        {Unit::words(), 5, 5},
        {Unit::words(), 5, 10},
        {Unit::words(), 10, 10},
        {Unit::sentences(), 1, 2},
        {Unit::sentences(), 2, 3},
        {Unit::sentences(), 1, 1},
        {Unit::sentences(), 2, 2},
        {Unit::sentences(), 3, 3},
        {Unit::pos(PosTag::noun), 1, 1},
        {Unit::pos(PosTag::verb), 2, 2},
        {Unit::pos(PosTag::pronoun), 0, 0},
    };
}

namespace {

ConstraintSpec spec_from_doc(const nlohmann::json & doc, const std::string & context) {
    ConstraintSpec spec;
    try {
        spec.kind = doc.at("kind").get<std::string>();
        if (spec.kind == "structural") {
            StructuralConstraint c;
            c.unit = Unit::from_id(doc.at("unit").get<std::string>());
            c.lower = doc.at("lower").get<int>();
            if (doc.contains("upper") && !doc["upper"].is_null()) {
                c.upper = doc["upper"].get<int>();
            }
            c.validate();
            spec.structural = c;
        } else if (spec.kind == "stylistic") {
            StylisticConstraint c;
            c.description = doc.at("description").get<std::string>();
            if (doc.contains("definition") && !doc["definition"].is_null()) {
                c.definition = doc["definition"].get<std::string>();
            }
            if (doc.contains("fewshot")) {
                for (const auto & pair : doc["fewshot"]) {
                    c.fewshot_examples.emplace_back(pair.at(0).get<std::string>(),
                                                    pair.at(1).get<int>());
                }
            }
            if (doc.contains("scorer") && !doc["scorer"].is_null()) {
                c.scorer.descriptor = doc["scorer"].get<std::string>();
            } else {
                c.scorer.descriptor = "unbound";
            }
            c.validate();
            spec.stylistic = c;
        } else {
            throw FormatError("constraint kind must be structural or stylistic");
        }
    } catch (const nlohmann::json::exception & e) {
        throw FormatError("bad constraint spec " + context + ": " + e.what());
    }
    return spec;
}

nlohmann::ordered_json spec_to_doc(const ConstraintSpec & spec) {
    nlohmann::ordered_json doc;
    doc["kind"] = spec.kind;
    if (spec.kind == "structural") {
        if (!spec.structural) throw Error("structural spec missing constraint");
        doc["unit"] = spec.structural->unit.id();
        doc["lower"] = spec.structural->lower;
        if (spec.structural->upper) {
            doc["upper"] = *spec.structural->upper;
        } else {
            doc["upper"] = nullptr;
        }
    } else if (spec.kind == "stylistic") {
        if (!spec.stylistic) throw Error("stylistic spec missing constraint");
        doc["description"] = spec.stylistic->description;
        if (spec.stylistic->definition) doc["definition"] = *spec.stylistic->definition;
        auto fewshot = nlohmann::ordered_json::array();
        for (const auto & [text, label] : spec.stylistic->fewshot_examples) {
            fewshot.push_back({text, label});
        }
        doc["fewshot"] = fewshot;
        const auto & descriptor = spec.stylistic->scorer.descriptor;
        if (!descriptor.empty() && descriptor != "unbound") doc["scorer"] = descriptor;
    } else {
        throw Error("constraint kind must be structural or stylistic");
    }
    return doc;
}

} // namespace

ConstraintSpec load_constraint_spec(const std::string & path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open constraint spec: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception & e) {
        throw FormatError("bad constraint spec " + path + ": " + e.what());
    }
    return spec_from_doc(doc, path);
}

void save_constraint_spec(const ConstraintSpec & spec, const std::string & path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write constraint spec: " + path);
    out << spec_to_doc(spec).dump(2) << "\n";
}

std::string constraint_spec_to_json(const ConstraintSpec & spec) { return spec_to_doc(spec).dump(); }

ConstraintSpec constraint_spec_from_json(const std::string & json_text) {
    const auto doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw FormatError("bad constraint spec json");
    return spec_from_doc(doc, "manifest");
}

} // namespace congen::constraints
