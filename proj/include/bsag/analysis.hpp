#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bsag/cvss.hpp"
#include "bsag/error.hpp"
#include "bsag/format.hpp"
#include "bsag/inference.hpp"
#include "bsag/model.hpp"

namespace bsag {

inline constexpr double kDefaultTolerance = 0.002;

inline MarginalReport run_scenario(const Model& model, const std::string& name,
                                   const QueryOptions& options = {}) {
    const auto& scenario = model.scenario(name);
    return query_marginals(model.compile(), scenario.evidence, options);
}

struct VerificationRow {
    AspectId aspect;
    double computed = 0.0;
    double reference = 0.0;
    double delta = 0.0;  // computed - reference
    bool pass = false;
    // Enumeration over the aspect's ancestral subnetwork, for failing rows
    // where that subnetwork is small enough.
    std::optional<double> oracle;
};

struct VerificationReport {
    std::string scenario;
    double tolerance = kDefaultTolerance;
    std::vector<VerificationRow> rows;

    bool passed() const {
        return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    }
    std::vector<AspectId> failures() const {
        std::vector<AspectId> out;
        for (const auto& r : rows) {
            if (!r.pass) out.push_back(r.aspect);
        }
        return out;
    }
};

/// Compares a report against a scenario's reference column. With a network
/// at hand, failing rows are recomputed by enumeration for cross-checking.
inline VerificationReport verify_against_reference(const MarginalReport& report, const Scenario& scenario,
                                                   double tolerance = kDefaultTolerance,
                                                   const CompiledNetwork* net = nullptr) {
    if (!scenario.reference) {
        throw Error(errc::unknown_scenario, "scenario '" + scenario.name + "' has no reference values",
                    {{"name", scenario.name}});
    }
    VerificationReport out;
    out.scenario = scenario.name;
    out.tolerance = tolerance;
    for (const auto& [id, ref] : *scenario.reference) {
        auto it = report.probabilities.find(id);
        if (it == report.probabilities.end()) {
            throw Error(errc::aspect_set_mismatch, "report lacks aspect " + id.str(), {{"id", id.str()}});
        }
        VerificationRow row{id, it->second, ref, it->second - ref, false, std::nullopt};
        // Compare on a 1e-9 grid so a delta of exactly the tolerance passes.
        row.pass = std::fabs(row.delta) <= tolerance + 1e-9;
        if (!row.pass && net) {
            std::set<AspectId> keep{id};
            for (const auto& [e, _] : report.evidence.values()) keep.insert(e);
            const auto sub = ancestral_subnetwork(*net, keep);
            if (sub.size() <= kEnumerationLimit) {
                row.oracle = enumerate_oracle(sub, report.evidence).probabilities.at(id);
            }
        }
        out.rows.push_back(row);
    }
    return out;
}

inline std::string verification_csv(const VerificationReport& v, int digits = 3) {
    std::ostringstream os;
    os << "aspect,computed,reference,delta,pass\n";
    for (const auto& r : v.rows) {
        os << r.aspect << ',' << format_fixed(r.computed, digits) << ',' << format_fixed(r.reference, digits)
           << ',' << format_fixed(r.delta, digits) << ',' << (r.pass ? "true" : "false") << '\n';
    }
    return os.str();
}

struct ScenarioDelta {
    AspectId aspect;
    double a = 0.0;
    double b = 0.0;
    double delta = 0.0;  // b - a
};

/// Per-aspect change from `a` to `b`, largest |delta| first, ties by id.
inline std::vector<ScenarioDelta> compare_scenarios(const MarginalReport& a, const MarginalReport& b) {
    std::set<AspectId> ka, kb;
    for (const auto& [id, _] : a.probabilities) ka.insert(id);
    for (const auto& [id, _] : b.probabilities) kb.insert(id);
    if (ka != kb) throw Error(errc::aspect_set_mismatch, "reports cover different aspects");
    std::vector<ScenarioDelta> out;
    for (const auto& [id, pa] : a.probabilities) {
        const double pb = b.probabilities.at(id);
        out.push_back({id, pa, pb, pb - pa});
    }
    std::stable_sort(out.begin(), out.end(), [](const ScenarioDelta& x, const ScenarioDelta& y) {
        const double dx = std::fabs(x.delta), dy = std::fabs(y.delta);
        if (dx != dy) return dx > dy;
        return x.aspect < y.aspect;
    });
    return out;
}

struct RiskEntry {
    AspectId aspect;
    double probability = 0.0;
    double impact = 0.0;
    double risk = 0.0;  // probability * impact
};

/// Impact table built from each aspect's CVSS impact sub-score / 10. Aspects
/// without a vector get impact 1.0.
inline std::map<AspectId, double> cvss_impacts(const Model& model) {
    std::map<AspectId, double> out;
    for (const auto& a : model.graph.aspects()) {
        double impact = 1.0;
        if (auto it = model.scores.find(a.id); it != model.scores.end() && it->second.vector) {
            impact = std::max(0.0, cvss::impact_subscore(*it->second.vector)) / 10.0;
        }
        out.emplace(a.id, impact);
    }
    return out;
}

/// Ranks aspects by probability x impact, highest first, ties by id. Without
/// an impact table every aspect has impact 1.0; an explicit table must cover
/// every aspect in the report.
inline std::vector<RiskEntry> risk_ranking(const MarginalReport& report,
                                           const std::optional<std::map<AspectId, double>>& impacts = std::nullopt,
                                           std::optional<std::size_t> top_k = std::nullopt) {
    std::vector<RiskEntry> out;
    for (const auto& [id, p] : report.probabilities) {
        double impact = 1.0;
        if (impacts) {
            auto it = impacts->find(id);
            if (it == impacts->end()) {
                throw Error(errc::missing_impact, "impact table lacks " + id.str(), {{"id", id.str()}});
            }
            impact = it->second;
            if (!(impact >= 0.0) || !std::isfinite(impact)) {
                throw Error(errc::missing_impact, "impact for " + id.str() + " must be a finite number >= 0",
                            {{"id", id.str()}});
            }
        }
        out.push_back({id, p, impact, p * impact});
    }
    std::stable_sort(out.begin(), out.end(), [](const RiskEntry& x, const RiskEntry& y) {
        if (x.risk != y.risk) return x.risk > y.risk;
        return x.aspect < y.aspect;
    });
    if (top_k && *top_k < out.size()) out.resize(*top_k);
    return out;
}

}  // namespace bsag
