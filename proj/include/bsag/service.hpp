#pragma once

#include <optional>
#include <regex>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bsag/analysis.hpp"
#include "bsag/error.hpp"
#include "bsag/format.hpp"
#include "bsag/graph.hpp"
#include "bsag/inference.hpp"
#include "bsag/model.hpp"

namespace bsag {

/// HTTP status for an engine error code.
inline int http_status(const std::string& code) {
    if (code == errc::unknown_aspect || code == errc::unknown_scenario || code == errc::not_found) return 404;
    if (code == errc::internal || code == errc::provider_unavailable || code == errc::io_error) return 500;
    return 400;
}

inline std::string error_json(const std::string& code, const std::string& message,
                              const nlohmann::json& details = nullptr) {
    nlohmann::json j = {{"code", code}, {"message", message}};
    if (!details.is_null()) j["details"] = details;
    return j.dump();
}

inline nlohmann::json evidence_json(const Evidence& ev) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : ev.values()) j[id.str()] = v;
    return j;
}

/// `{"probabilities":{...},"evidence":{...}}`, the body of a query answer.
inline std::string query_response_json(const MarginalReport& report, int digits = 3) {
    return "{\"probabilities\":" + probabilities_json(report.probabilities, digits) +
           ",\"evidence\":" + evidence_json(report.evidence).dump() + "}";
}

inline std::string risk_response_json(const std::vector<RiskEntry>& ranking, const Evidence& ev,
                                      int digits = 3) {
    std::string out = "{\"ranking\":[";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& r = ranking[i];
        if (i) out += ",";
        out += "{\"aspect\":\"" + r.aspect.str() + "\",\"probability\":" + format_fixed(r.probability, digits) +
               ",\"impact\":" + format_fixed(r.impact, digits) + ",\"risk\":" + format_fixed(r.risk, digits) +
               "}";
    }
    return out + "],\"evidence\":" + evidence_json(ev).dump() + "}";
}

/// Stateless JSON query service over one immutable model. Every request
/// carries its own evidence; handle() may be called from many threads.
class Service {
public:
    struct Response {
        int status = 200;
        std::string body;
    };

    explicit Service(Model model, int digits = 3)
        : model_(std::move(model)), network_(model_.compile()), digits_(digits) {}

    const Model& model() const noexcept { return model_; }
    const CompiledNetwork& network() const noexcept { return network_; }

    Response handle(const std::string& method, const std::string& path, const std::string& body) const {
        try {
            return route(method, path, body);
        } catch (const Error& e) {
            return {http_status(e.code()), error_json(e.code(), e.what(), e.details())};
        } catch (const std::exception& e) {
            return {500, error_json(errc::internal, e.what())};
        }
    }

    /// Registers every route on `server`, delegating to handle().
    void bind(httplib::Server& server) const {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            auto r = handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_content(r.body, "application/json");
        };
        server.Get(R"(/api/.*)", forward);
        server.Post(R"(/api/.*)", forward);
    }

private:
    Response route(const std::string& method, const std::string& path, const std::string& body) const {
        static const std::regex aspect_route(R"(/api/aspects/([^/]+)/(causes|consequences))");
        static const std::regex scenario_route(R"(/api/scenarios/([^/]+)/run)");
        std::smatch m;

        if (method == "GET" && path == "/api/health") return {200, R"({"status":"ok"})"};
        if (method == "GET" && path == "/api/model") return {200, model_json()};
        if (method == "GET" && path == "/api/topo") {
            nlohmann::json order = nlohmann::json::array();
            for (const auto& id : topological_sort(model_.graph)) order.push_back(id.str());
            return {200, nlohmann::json{{"order", order}}.dump()};
        }
        if (method == "GET" && std::regex_match(path, m, aspect_route)) {
            const auto id = known_aspect(m[1].str());
            const bool causes = m[2] == "causes";
            nlohmann::json list = nlohmann::json::array();
            for (const auto& a : causes ? ancestors(model_.graph, id) : descendants(model_.graph, id)) {
                list.push_back(a.str());
            }
            return {200, nlohmann::json{{"id", id.str()}, {m[2].str(), list}}.dump()};
        }
        if (method == "GET" && path == "/api/scenarios") {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& s : model_.scenarios) {
                list.push_back({{"name", s.name},
                                {"description", s.description},
                                {"evidence", evidence_json(s.evidence)},
                                {"has_reference", s.reference.has_value()}});
            }
            return {200, nlohmann::json{{"scenarios", list}}.dump()};
        }
        if (method == "POST" && std::regex_match(path, m, scenario_route)) {
            const auto& scenario = model_.scenario(m[1].str());
            const auto report = query_marginals(network_, scenario.evidence);
            std::string out = query_response_json(report, digits_);
            out.pop_back();
            out += ",\"scenario\":" + nlohmann::json(scenario.name).dump();
            if (scenario.reference) {
                const auto v = verify_against_reference(report, scenario);
                nlohmann::json failures = nlohmann::json::array();
                for (const auto& id : v.failures()) failures.push_back(id.str());
                out += ",\"verification\":" +
                       nlohmann::json{{"passed", v.passed()}, {"tolerance", v.tolerance}, {"failures", failures}}
                           .dump();
            }
            return {200, out + "}"};
        }
        if (method == "POST" && path == "/api/query") {
            const auto req = parse_body(body, {"evidence", "include_origin"});
            QueryOptions opts;
            if (req.contains("include_origin")) {
                if (!req["include_origin"].is_boolean()) {
                    throw Error(errc::invalid_request, "include_origin must be a boolean");
                }
                opts.include_origin = req["include_origin"].get<bool>();
            }
            const auto report = query_marginals(network_, parse_evidence(req), opts);
            return {200, query_response_json(report, digits_)};
        }
        if (method == "POST" && path == "/api/risk") {
            const auto req = parse_body(body, {"evidence", "impacts", "top"});
            const auto ev = parse_evidence(req);
            std::optional<std::map<AspectId, double>> impacts;
            if (req.contains("impacts") && !req["impacts"].is_null()) {
                if (!req["impacts"].is_object()) throw Error(errc::invalid_request, "impacts must be an object");
                impacts.emplace();
                for (const auto& [key, v] : req["impacts"].items()) {
                    if (!v.is_number()) throw Error(errc::invalid_request, "impact for " + key + " must be a number");
                    impacts->emplace(known_aspect(key), v.get<double>());
                }
            }
            std::optional<std::size_t> top;
            if (req.contains("top")) {
                if (!req["top"].is_number_unsigned()) throw Error(errc::invalid_request, "top must be a positive integer");
                top = req["top"].get<std::size_t>();
            }
            const auto ranking = risk_ranking(query_marginals(network_, ev), impacts, top);
            return {200, risk_response_json(ranking, ev, digits_)};
        }
        throw Error(errc::not_found, "no route for " + method + " " + path);
    }

    AspectId known_aspect(const std::string& text) const {
        auto id = AspectId::try_parse(text);
        if (!id || !model_.graph.contains(*id)) {
            throw Error(errc::unknown_aspect, "unknown aspect " + text, {{"id", text}});
        }
        return *id;
    }

    static nlohmann::json parse_body(const std::string& body, std::initializer_list<const char*> allowed) {
        if (body.empty()) return nlohmann::json::object();
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(errc::invalid_request, std::string("request body is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw Error(errc::invalid_request, "request body must be a JSON object");
        for (const auto& [key, _] : j.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) throw Error(errc::invalid_request, "unknown field '" + key + "'", {{"field", key}});
        }
        return j;
    }

    Evidence parse_evidence(const nlohmann::json& req) const {
        Evidence ev;
        if (!req.contains("evidence") || req["evidence"].is_null()) return ev;
        if (!req["evidence"].is_object()) throw Error(errc::invalid_request, "evidence must be an object");
        for (const auto& [key, v] : req["evidence"].items()) {
            if (!v.is_boolean()) throw Error(errc::invalid_request, "evidence for " + key + " must be a boolean");
            if (key == "H0" && network_.contains(AspectId::origin())) {
                ev.set(AspectId::origin(), v.get<bool>());
            } else {
                ev.set(known_aspect(key), v.get<bool>());
            }
        }
        return ev;
    }

    std::string model_json() const {
        auto doc = model_to_json(model_);
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& s : category_stats(model_.graph)) {
            cats.push_back({{"category", to_string(s.category)}, {"count", s.count}, {"percentage", s.percentage}});
        }
        doc["categories"] = cats;
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& id : entry_points(model_.graph)) entries.push_back(id.str());
        doc["entry_points"] = entries;
        return doc.dump();
    }

    Model model_;
    CompiledNetwork network_;
    int digits_;
};

}  // namespace bsag
