#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsag/analysis.hpp"
#include "bsag/builtin.hpp"
#include "bsag/cvss.hpp"
#include "bsag/dot.hpp"
#include "bsag/format.hpp"
#include "bsag/graph.hpp"
#include "bsag/inference.hpp"
#include "bsag/model.hpp"
#include "bsag/nvd.hpp"
#include "bsag/service.hpp"

namespace bsag::cli {

enum ExitCode { kOk = 0, kDomainError = 1, kUsageError = 2 };

/// `builtin` names the bundled model; anything else is a model file path.
inline Model resolve_model(const std::string& arg) {
    if (arg == "builtin") return builtin::model();
    return load_model(arg);
}

namespace detail {

inline std::string join(const std::set<AspectId>& ids, const char* sep = "\n") {
    std::string out;
    for (const auto& id : ids) {
        out += id.str();
        out += sep;
    }
    return out;
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(errc::io_error, "cannot write " + path);
    f << text;
}

inline void print_report(const MarginalReport& report, const Model& model, const std::string& format,
                         int digits, std::ostream& out) {
    if (format == "json") {
        out << query_response_json(report, digits) << '\n';
    } else if (format == "csv") {
        out << "aspect,probability\n";
        for (const auto& [id, p] : report.probabilities) out << id << ',' << format_fixed(p, digits) << '\n';
    } else {
        out << "evidence:";
        if (report.evidence.empty()) out << " none";
        for (const auto& [id, v] : report.evidence.values()) out << ' ' << id << '=' << (v ? "true" : "false");
        out << '\n';
        out << std::left << std::setw(6) << "id" << std::setw(digits + 4) << "P" << "name\n";
        for (const auto& [id, p] : report.probabilities) {
            const std::string name = id.is_origin() ? "threat origin" : model.graph.aspect(id).name;
            out << std::left << std::setw(6) << id.str() << std::setw(digits + 4) << format_fixed(p, digits)
                << name << '\n';
        }
    }
}

inline std::map<AspectId, double> load_impacts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open impact file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(errc::malformed_model, std::string("impact file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(errc::malformed_model, "impact file must map aspect ids to numbers");
    std::map<AspectId, double> out;
    for (const auto& [key, v] : j.items()) {
        if (!v.is_number()) throw Error(errc::malformed_model, "impact for " + key + " must be a number");
        out.emplace(AspectId::parse(key), v.get<double>());
    }
    return out;
}

}  // namespace detail

/// Runs one CLI invocation. Returns 0 on success, 1 on domain errors and 2
/// on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian security aspect graph engine", "bsag"};
    app.require_subcommand(1);
    app.fallthrough();
    int digits = 3;
    app.add_option("--precision", digits, "Decimal digits for probabilities")
        ->check(CLI::Range(0, 12));

    std::string model_arg, id_arg, vector_arg, cve_arg, fixtures_arg, base_url_arg, evidence_arg;
    std::string format_arg = "table", scenario_a, scenario_b, impacts_arg, impact_preset = "unit";
    std::string dot_out, json_out, host = "127.0.0.1";
    bool show_origin = false, verify = false;
    double tolerance = kDefaultTolerance;
    std::optional<std::size_t> top;
    int port = 8080;

    auto* validate = app.add_subcommand("validate", "Validate a model document");
    validate->add_option("model", model_arg)->required();

    auto* topo = app.add_subcommand("topo", "Print the topological order");
    topo->add_option("model", model_arg)->required();

    auto* causes = app.add_subcommand("causes", "All transitive causes of an aspect");
    causes->add_option("model", model_arg)->required();
    causes->add_option("id", id_arg)->required();

    auto* consequences = app.add_subcommand("consequences", "All transitive consequences of an aspect");
    consequences->add_option("model", model_arg)->required();
    consequences->add_option("id", id_arg)->required();

    auto* entries = app.add_subcommand("entry-points", "Aspects without incoming edges");
    entries->add_option("model", model_arg)->required();

    auto* stats = app.add_subcommand("stats", "Aspect counts per category");
    stats->add_option("model", model_arg)->required();

    auto* cvss_cmd = app.add_subcommand("cvss", "CVSS v3.0 scoring");
    cvss_cmd->require_subcommand(1);
    auto* cvss_score = cvss_cmd->add_subcommand("score", "Score a base vector");
    cvss_score->add_option("--vector", vector_arg)->required();
    auto* cvss_fetch = cvss_cmd->add_subcommand("fetch", "Fetch a CVE's base vector from NVD");
    cvss_fetch->add_option("cve", cve_arg)->required();
    cvss_fetch->add_option("--offline-fixtures", fixtures_arg, "Directory of recorded NVD responses");
    cvss_fetch->add_option("--base-url", base_url_arg, "NVD endpoint (default: $BSAG_NVD_BASE_URL or NVD)");

    const std::vector<std::string> formats{"table", "json", "csv"};
    auto* infer = app.add_subcommand("infer", "Posterior marginals under evidence");
    infer->add_option("model", model_arg)->required();
    infer->add_option("--evidence", evidence_arg, "e.g. A25=true,A23=false");
    infer->add_flag("--show-origin", show_origin, "Include the threat origin H0");
    infer->add_option("--format", format_arg)->check(CLI::IsMember(formats));

    auto* scenario = app.add_subcommand("scenario", "Bundled scenarios");
    scenario->require_subcommand(1);
    auto* scenario_list = scenario->add_subcommand("list", "List scenarios");
    scenario_list->add_option("model", model_arg)->required();
    auto* scenario_run = scenario->add_subcommand("run", "Run a scenario");
    scenario_run->add_option("model", model_arg)->required();
    scenario_run->add_option("name", scenario_a)->required();
    scenario_run->add_flag("--verify", verify, "Compare against the scenario's reference values");
    scenario_run->add_option("--tolerance", tolerance)->check(CLI::Range(0.0, 1.0));
    scenario_run->add_option("--format", format_arg)->check(CLI::IsMember(formats));
    auto* scenario_diff = scenario->add_subcommand("diff", "Per-aspect change between two scenarios");
    scenario_diff->add_option("model", model_arg)->required();
    scenario_diff->add_option("a", scenario_a)->required();
    scenario_diff->add_option("b", scenario_b)->required();

    auto* risk = app.add_subcommand("risk", "Rank aspects by probability x impact");
    risk->add_option("model", model_arg)->required();
    risk->add_option("--evidence", evidence_arg);
    auto* impacts_opt = risk->add_option("--impacts", impacts_arg, "JSON object of aspect id -> impact");
    risk->add_option("--impact-preset", impact_preset)
        ->check(CLI::IsMember({"unit", "cvss"}))
        ->excludes(impacts_opt);
    risk->add_option("--top", top);

    auto* exp = app.add_subcommand("export", "Write the model as DOT or JSON ('-' for stdout)");
    exp->add_option("model", model_arg)->required();
    auto* dot_opt = exp->add_option("--dot", dot_out);
    auto* json_opt = exp->add_option("--json", json_out);
    dot_opt->excludes(json_opt);
    exp->add_flag("--show-origin", show_origin);

    auto* serve = app.add_subcommand("serve", "Run the HTTP query service");
    serve->add_option("model", model_arg)->required();
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));
    serve->add_option("--host", host);

    try {
        app.parse(argc, argv);
        if (exp->parsed() && dot_out.empty() && json_out.empty()) {
            throw CLI::RequiredError("export needs --dot <out> or --json <out>");
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsageError;
    }

    try {
        if (validate->parsed()) {
            try {
                const auto m = resolve_model(model_arg);
                out << "valid: " << m.graph.size() << " aspects, " << m.graph.edges().size() << " edges, "
                    << m.scores.size() << " scores, " << m.scenarios.size() << " scenarios\n";
                return kOk;
            } catch (const Error& e) {
                if (e.details().contains("violations")) {
                    for (const auto& v : e.details()["violations"]) {
                        err << "error[" << v["code"].get<std::string>() << "]: " << v["message"].get<std::string>()
                            << '\n';
                    }
                    return kDomainError;
                }
                throw;
            }
        }
        if (topo->parsed()) {
            for (const auto& id : topological_sort(resolve_model(model_arg).graph)) out << id << '\n';
            return kOk;
        }
        if (causes->parsed() || consequences->parsed()) {
            const auto m = resolve_model(model_arg);
            const auto id = AspectId::parse(id_arg);
            out << detail::join(causes->parsed() ? ancestors(m.graph, id) : descendants(m.graph, id));
            return kOk;
        }
        if (entries->parsed()) {
            out << detail::join(entry_points(resolve_model(model_arg).graph));
            return kOk;
        }
        if (stats->parsed()) {
            const auto m = resolve_model(model_arg);
            out << "category,count,percentage\n";
            for (const auto& s : category_stats(m.graph)) {
                out << to_string(s.category) << ',' << s.count << ',' << format_fixed(s.percentage, 2) << '\n';
            }
            return kOk;
        }
        if (cvss_score->parsed()) {
            const auto v = cvss::parse_vector(vector_arg);
            const auto s = cvss::base_score(v);
            out << cvss::format_vector(v) << '\n'
                << "base_score " << cvss::format_score(s) << '\n'
                << "exploit_probability " << format_fixed(cvss::exploit_probability(s).p, 2) << '\n';
            return kOk;
        }
        if (cvss_fetch->parsed()) {
            std::unique_ptr<nvd::DataSource> source;
            if (!fixtures_arg.empty()) {
                source = std::make_unique<nvd::FixtureDirectory>(fixtures_arg);
            } else {
                source = std::make_unique<nvd::HttpSource>(base_url_arg.empty() ? nvd::HttpSource::default_base_url()
                                                                                : base_url_arg);
            }
            const auto r = nvd::fetch_cvss(cve_arg, *source);
            out << r.cve_id << '\n'
                << cvss::format_vector(r.vector) << '\n'
                << "base_score " << cvss::format_score(r.score) << '\n'
                << "exploit_probability " << format_fixed(cvss::exploit_probability(r.score).p, 2) << '\n';
            for (const auto& w : r.warnings) err << "warning: " << w << '\n';
            return kOk;
        }
        if (infer->parsed()) {
            const auto m = resolve_model(model_arg);
            const auto net = m.compile();
            const auto ev = Evidence::parse(evidence_arg);
            QueryOptions opts;
            opts.include_origin = show_origin;
            detail::print_report(query_marginals(net, ev, opts), m, format_arg, digits, out);
            return kOk;
        }
        if (scenario_list->parsed()) {
            for (const auto& s : resolve_model(model_arg).scenarios) {
                out << s.name << '\t' << (s.description.empty() ? "-" : s.description) << '\n';
            }
            return kOk;
        }
        if (scenario_run->parsed()) {
            const auto m = resolve_model(model_arg);
            const auto net = m.compile();
            const auto& sc = m.scenario(scenario_a);
            const auto report = query_marginals(net, sc.evidence);
            if (!verify) {
                detail::print_report(report, m, format_arg, digits, out);
                return kOk;
            }
            const auto v = verify_against_reference(report, sc, tolerance, &net);
            out << verification_csv(v, digits);
            for (const auto& row : v.rows) {
                if (!row.pass && row.oracle) {
                    err << "erratum candidate " << row.aspect << ": engine " << format_fixed(row.computed, 6)
                        << ", enumeration " << format_fixed(*row.oracle, 6) << ", reference "
                        << format_fixed(row.reference, 3) << '\n';
                }
            }
            out << (v.passed() ? "PASS" : "FAIL") << ' ' << sc.name << " tolerance " << format_fixed(tolerance, 4)
                << '\n';
            return v.passed() ? kOk : kDomainError;
        }
        if (scenario_diff->parsed()) {
            const auto m = resolve_model(model_arg);
            const auto net = m.compile();
            const auto a = query_marginals(net, m.scenario(scenario_a).evidence);
            const auto b = query_marginals(net, m.scenario(scenario_b).evidence);
            out << "aspect," << scenario_a << ',' << scenario_b << ",delta\n";
            for (const auto& d : compare_scenarios(a, b)) {
                out << d.aspect << ',' << format_fixed(d.a, digits) << ',' << format_fixed(d.b, digits) << ','
                    << format_fixed(d.delta, digits) << '\n';
            }
            return kOk;
        }
        if (risk->parsed()) {
            const auto m = resolve_model(model_arg);
            const auto ev = Evidence::parse(evidence_arg);
            std::optional<std::map<AspectId, double>> impacts;
            if (!impacts_arg.empty()) {
                impacts = detail::load_impacts(impacts_arg);
            } else if (impact_preset == "cvss") {
                impacts = cvss_impacts(m);
            }
            out << "rank,aspect,probability,impact,risk\n";
            std::size_t rank = 0;
            for (const auto& r : risk_ranking(query_marginals(m.compile(), ev), impacts, top)) {
                out << ++rank << ',' << r.aspect << ',' << format_fixed(r.probability, digits) << ','
                    << format_fixed(r.impact, digits) << ',' << format_fixed(r.risk, digits) << '\n';
            }
            return kOk;
        }
        if (exp->parsed()) {
            const auto m = resolve_model(model_arg);
            if (!dot_out.empty()) {
                DotOptions opts;
                opts.show_origin = show_origin;
                detail::write_output(dot_out, export_dot(m.graph, opts), out);
            } else {
                detail::write_output(json_out, model_to_json(m).dump(2) + "\n", out);
            }
            return kOk;
        }
        if (serve->parsed()) {
            const Service service(resolve_model(model_arg), digits);
            httplib::Server server;
            service.bind(server);
            out << "listening on " << host << ':' << port << std::endl;
            if (!server.listen(host, port)) throw Error(errc::io_error, "cannot listen on " + host);
            return kOk;
        }
    } catch (const Error& e) {
        err << "error[" << e.code() << "]: " << e.what() << '\n';
        return kDomainError;
    }
    return kUsageError;
}

}  // namespace bsag::cli
