#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsag/cvss.hpp"
#include "bsag/error.hpp"
#include "bsag/graph.hpp"
#include "bsag/inference.hpp"
#include "bsag/network.hpp"

namespace bsag {

enum class ScoreSource { Cve, Expert, Deterministic };

inline std::string_view to_string(ScoreSource s) {
    switch (s) {
    case ScoreSource::Cve: return "cve";
    case ScoreSource::Expert: return "expert";
    case ScoreSource::Deterministic: return "deterministic";
    }
    return "?";
}

struct ScoreEntry {
    AspectId aspect;
    double score = 0.0;
    ScoreSource source = ScoreSource::Expert;
    std::optional<std::string> cve_id;
    std::optional<cvss::Vector> vector;

    /// Score entry backed by a CVSS vector; the score is recomputed.
    static ScoreEntry from_cve(AspectId aspect, std::string cve_id, const cvss::Vector& v) {
        return {std::move(aspect), cvss::exploit_probability(cvss::base_score(v)).p, ScoreSource::Cve,
                std::move(cve_id), v};
    }
};

struct Scenario {
    std::string name;
    std::string description;
    Evidence evidence;
    std::optional<std::map<AspectId, double>> reference;
};

/// A validated model document: graph, score table, origin configuration and
/// scenarios.
struct Model {
    AspectGraph graph;
    std::map<AspectId, ScoreEntry> scores;
    std::optional<double> origin_prior;
    std::vector<Scenario> scenarios;

    std::map<AspectId, double> score_table() const {
        std::map<AspectId, double> out;
        for (const auto& [id, e] : scores) out.emplace(id, e.score);
        return out;
    }

    CompiledNetwork compile() const {
        CompileOptions opts;
        opts.origin_prior = origin_prior;
        return compile_network(graph, score_table(), opts);
    }

    const Scenario& scenario(const std::string& name) const {
        for (const auto& s : scenarios) {
            if (s.name == name) return s;
        }
        throw Error(errc::unknown_scenario, "unknown scenario '" + name + "'", {{"name", name}});
    }
};

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                                  const std::string& where) {
    if (!obj.is_object()) throw Error(errc::malformed_model, where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) {
            throw Error(errc::unknown_field, "unknown field '" + key + "' in " + where,
                        {{"field", key}, {"where", where}});
        }
    }
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw Error(errc::malformed_model, where + " lacks required field '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(errc::malformed_model, where + " field '" + key + "' has the wrong type");
    }
}

inline double probability_field(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw Error(errc::malformed_model, where + " must be a number");
    const double p = v.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(errc::invalid_probability, where + " must lie in [0,1]", {{"value", p}});
    }
    return p;
}

inline void validate_score_entry(const Aspect& a, const ScoreEntry& e) {
    if (e.source == ScoreSource::Deterministic &&
        (a.kind != AspectKind::State || e.score != 1.0)) {
        throw Error(errc::malformed_model,
                    "deterministic score for " + a.id.str() + " must be 1.0 on a state");
    }
}

}  // namespace detail

/// Parses a model document. Unknown fields anywhere are rejected.
inline Model model_from_json(const nlohmann::json& doc) {
    using detail::required;
    detail::reject_unknown_fields(doc, {"aspects", "edges", "scores", "origin", "scenarios"}, "model");

    std::vector<Aspect> aspects;
    if (doc.contains("aspects")) {
        if (!doc["aspects"].is_array()) throw Error(errc::malformed_model, "aspects must be an array");
        for (const auto& a : doc["aspects"]) {
            detail::reject_unknown_fields(a, {"id", "name", "kind", "category", "description"}, "aspect");
            Aspect asp;
            asp.id = AspectId::parse(required<std::string>(a, "id", "aspect"));
            asp.name = required<std::string>(a, "name", "aspect " + asp.id.str());
            asp.kind = parse_aspect_kind(required<std::string>(a, "kind", "aspect " + asp.id.str()));
            asp.category = parse_category(required<std::string>(a, "category", "aspect " + asp.id.str()));
            if (a.contains("description")) {
                asp.description = required<std::string>(a, "description", "aspect " + asp.id.str());
            }
            aspects.push_back(std::move(asp));
        }
    }

    std::vector<DependencyEdge> edges;
    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) throw Error(errc::malformed_model, "edges must be an array");
        for (const auto& e : doc["edges"]) {
            detail::reject_unknown_fields(e, {"source", "target", "kind", "rule", "probability"}, "edge");
            DependencyEdge edge;
            edge.source = AspectId::parse(required<std::string>(e, "source", "edge"));
            edge.target = AspectId::parse(required<std::string>(e, "target", "edge"));
            edge.kind = parse_edge_kind(required<std::string>(e, "kind", "edge"));
            if (e.contains("rule")) edge.rule_id = required<std::string>(e, "rule", "edge");
            if (e.contains("probability")) {
                edge.probability = detail::probability_field(e["probability"], "edge probability");
            }
            edges.push_back(std::move(edge));
        }
    }

    Model model{validate_graph_or_throw(std::move(aspects), std::move(edges)), {}, {}, {}};

    if (doc.contains("scores")) {
        if (!doc["scores"].is_object()) throw Error(errc::malformed_model, "scores must be an object");
        for (const auto& [key, v] : doc["scores"].items()) {
            const auto id = AspectId::parse(key);
            const auto& aspect = model.graph.aspect(id);
            const std::string where = "score " + key;
            detail::reject_unknown_fields(v, {"source", "value", "cve", "vector"}, where);
            ScoreEntry e;
            e.aspect = id;
            const auto source = required<std::string>(v, "source", where);
            if (source == "cve") {
                auto cve_id = required<std::string>(v, "cve", where);
                e = ScoreEntry::from_cve(id, std::move(cve_id),
                                         cvss::parse_vector(required<std::string>(v, "vector", where)));
                if (v.contains("value") && detail::probability_field(v["value"], where) != e.score) {
                    throw Error(errc::score_mismatch,
                                where + " value disagrees with its recomputed CVSS score",
                                {{"id", key}, {"recomputed", e.score}});
                }
            } else if (source == "expert" || source == "deterministic") {
                if (v.contains("cve") || v.contains("vector")) {
                    throw Error(errc::malformed_model, where + ": only cve scores carry a vector");
                }
                e.source = source == "expert" ? ScoreSource::Expert : ScoreSource::Deterministic;
                e.score = detail::probability_field(v.contains("value") ? v["value"] : nlohmann::json(),
                                                    where + " value");
            } else {
                throw Error(errc::malformed_model, where + ": unknown source '" + source + "'");
            }
            detail::validate_score_entry(aspect, e);
            model.scores.emplace(id, std::move(e));
        }
    }

    if (doc.contains("origin") && !doc["origin"].is_null()) {
        detail::reject_unknown_fields(doc["origin"], {"id", "prior"}, "origin");
        if (doc["origin"].contains("id") && doc["origin"]["id"] != "H0") {
            throw Error(errc::malformed_model, "origin id must be H0");
        }
        model.origin_prior = detail::probability_field(
            doc["origin"].contains("prior") ? doc["origin"]["prior"] : nlohmann::json(), "origin prior");
    }

    if (doc.contains("scenarios")) {
        if (!doc["scenarios"].is_array()) throw Error(errc::malformed_model, "scenarios must be an array");
        std::set<std::string> names;
        for (const auto& s : doc["scenarios"]) {
            detail::reject_unknown_fields(s, {"name", "description", "evidence", "reference"}, "scenario");
            Scenario sc;
            sc.name = required<std::string>(s, "name", "scenario");
            if (!names.insert(sc.name).second) {
                throw Error(errc::malformed_model, "duplicate scenario '" + sc.name + "'");
            }
            const std::string where = "scenario " + sc.name;
            if (s.contains("description")) sc.description = required<std::string>(s, "description", where);
            if (s.contains("evidence")) {
                if (!s["evidence"].is_object()) throw Error(errc::malformed_model, where + " evidence must be an object");
                for (const auto& [key, v] : s["evidence"].items()) {
                    if (!v.is_boolean()) throw Error(errc::malformed_model, where + " evidence values must be booleans");
                    const auto id = AspectId::parse_any(key);
                    if (!id.is_origin()) model.graph.index_of(id);
                    sc.evidence.set(id, v.get<bool>());
                }
            }
            if (s.contains("reference")) {
                if (!s["reference"].is_object()) throw Error(errc::malformed_model, where + " reference must be an object");
                std::map<AspectId, double> ref;
                for (const auto& [key, v] : s["reference"].items()) {
                    const auto id = AspectId::parse(key);
                    model.graph.index_of(id);
                    ref.emplace(id, detail::probability_field(v, where + " reference " + key));
                }
                sc.reference = std::move(ref);
            }
            model.scenarios.push_back(std::move(sc));
        }
    }
    return model;
}

inline Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open model file " + path.string());
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(errc::malformed_model, "model file is not valid JSON: " + std::string(e.what()));
    }
}

/// Serialises a model document. Keys are emitted in sorted order and
/// collections in id order, so the output is stable.
inline nlohmann::json model_to_json(const Model& m) {
    nlohmann::json doc;
    doc["aspects"] = nlohmann::json::array();
    for (const auto& a : m.graph.aspects()) {
        nlohmann::json j = {{"id", a.id.str()},
                            {"name", a.name},
                            {"kind", to_string(a.kind)},
                            {"category", to_string(a.category)}};
        if (a.description) j["description"] = *a.description;
        doc["aspects"].push_back(std::move(j));
    }
    doc["edges"] = nlohmann::json::array();
    for (const auto& e : m.graph.edges()) {
        nlohmann::json j = {{"source", e.source.str()}, {"target", e.target.str()}, {"kind", to_string(e.kind)}};
        if (!e.rule_id.empty()) j["rule"] = e.rule_id;
        if (e.probability) j["probability"] = *e.probability;
        doc["edges"].push_back(std::move(j));
    }
    doc["scores"] = nlohmann::json::object();
    for (const auto& [id, e] : m.scores) {
        nlohmann::json j = {{"source", to_string(e.source)}, {"value", e.score}};
        if (e.cve_id) j["cve"] = *e.cve_id;
        if (e.vector) j["vector"] = cvss::format_vector(*e.vector);
        doc["scores"][id.str()] = std::move(j);
    }
    if (m.origin_prior) doc["origin"] = {{"id", "H0"}, {"prior", *m.origin_prior}};
    doc["scenarios"] = nlohmann::json::array();
    for (const auto& s : m.scenarios) {
        nlohmann::json j = {{"name", s.name}};
        if (!s.description.empty()) j["description"] = s.description;
        j["evidence"] = nlohmann::json::object();
        for (const auto& [id, v] : s.evidence.values()) j["evidence"][id.str()] = v;
        if (s.reference) {
            j["reference"] = nlohmann::json::object();
            for (const auto& [id, v] : *s.reference) j["reference"][id.str()] = v;
        }
        doc["scenarios"].push_back(std::move(j));
    }
    return doc;
}

}  // namespace bsag
