#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bsag/cvss.hpp"
#include "bsag/model.hpp"

namespace bsag::builtin {

// BSAGIoT: thirty IoT security aspects, twenty-nine dependency rules
// (expanded to one edge per LHS/RHS pair), the testbed's CVSS data and three
// reference scenarios.

struct AspectRow {
    std::string_view id;
    std::string_view name;
    AspectKind kind;
    Category category;
};

inline constexpr AspectKind S = AspectKind::State;
inline constexpr AspectKind V = AspectKind::Vulnerability;

inline constexpr std::array<AspectRow, 30> kAspects{{
    {"A1", "QoS violation", S, Category::Network},
    {"A2", "Data confidentiality, integrity, and/or availability breach", V, Category::Data},
    {"A3", "Data alteration, inconsistency, and/or loss", V, Category::Data},
    {"A4", "Data privacy violation", V, Category::Data},
    {"A5", "Data leakage", V, Category::Data},
    {"A6", "Identity theft or forging legitimate user credentials", V, Category::AccessControl},
    {"A7", "Plain text traffic", V, Category::Data},
    {"A8", "Financial loss", S, Category::Loss},
    {"A9", "Blackmail or fraud", S, Category::Loss},
    {"A10", "Privacy and trust violation", V, Category::Standard},
    {"A11", "Public data misuse", V, Category::Data},
    {"A12", "Authentication and access control flaw", V, Category::AccessControl},
    {"A13", "Insufficient authorization", V, Category::AccessControl},
    {"A14", "Malicious nodes", V, Category::AccessControl},
    {"A15", "Health and/or life(s) at risk", S, Category::Loss},
    {"A16", "Service disrupt", V, Category::Network},
    {"A17", "Credential disclosure", V, Category::AccessControl},
    {"A18", "Node hijacking", V, Category::AccessControl},
    {"A19", "Hardware and/or software compromise", V, Category::AccessControl},
    {"A20", "Insecure network", V, Category::Network},
    {"A21", "Security misconfiguration", V, Category::Network},
    {"A22", "Compliance issues", V, Category::Standard},
    {"A23", "Lack of regular firmware updates or patch installations", V, Category::Standard},
    {"A24", "Lack of security standards and policies", V, Category::Standard},
    {"A25", "Insecure interfaces", V, Category::Network},
    {"A26", "Track nodes", V, Category::Data},
    {"A27", "Lack of account lockout", V, Category::AccessControl},
    {"A28", "Weak credentials", V, Category::AccessControl},
    {"A29", "Lack of prohibition laws and regulations", V, Category::Standard},
    {"A30", "Application and networking protocols deviation", V, Category::Network},
}};

struct RuleRow {
    std::string_view rule;
    std::vector<std::string_view> lhs;
    std::vector<std::string_view> rhs;
};

inline const std::vector<RuleRow>& rules() {
    static const std::vector<RuleRow> table{
        {"R1", {"A2"}, {"A1"}},
        {"R2", {"A3"}, {"A2"}},
        {"R3", {"A4"}, {"A3"}},
        {"R4", {"A5"}, {"A4"}},
        {"R5", {"A6"}, {"A5"}},
        {"R6", {"A7"}, {"A5"}},
        {"R7", {"A6"}, {"A8", "A9"}},
        {"R8", {"A10"}, {"A6"}},
        {"R9", {"A11"}, {"A10"}},
        {"R10", {"A12"}, {"A10"}},
        {"R11", {"A13"}, {"A10"}},
        {"R12", {"A14"}, {"A10"}},
        {"R13", {"A16"}, {"A15"}},
        {"R14", {"A14"}, {"A16"}},
        {"R15", {"A17"}, {"A12"}},
        {"R16", {"A18"}, {"A14", "A17"}},
        {"R17", {"A19"}, {"A18"}},
        {"R18", {"A20"}, {"A19"}},
        {"R19", {"A21"}, {"A20"}},
        {"R20", {"A22"}, {"A18"}},
        {"R21", {"A23"}, {"A20"}},
        {"R22", {"A24"}, {"A22"}},
        {"R23", {"A24"}, {"A20", "A19", "A12"}},
        {"R24", {"A26"}, {"A10"}},
        {"R25", {"A25"}, {"A26"}},
        {"R26", {"A25"}, {"A12", "A18"}},
        {"R27", {"A27", "A28"}, {"A25"}},
        {"R28", {"A29"}, {"A10"}},
        {"R29", {"A30"}, {"A20", "A10"}},
    };
    return table;
}

struct CveRow {
    std::string_view aspect;
    std::string_view testbed_node;
    std::string_view cve;
    std::string_view vector;
    double table_score;  // as printed, already divided by 10
};

inline const std::vector<CveRow>& cve_rows() {
    static const std::vector<CveRow> table{
        {"A1", "MQTT", "CVE-2021-41039", "AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H", 0.75},
        {"A2", "Raspberry Pi 4 Model B", "CVE-2023-46837", "AV:L/AC:L/PR:L/UI:N/S:U/C:L/I:N/A:N", 0.33},
        {"A3", "Node-RED Modbus TCP", "CVE-2018-18759", "AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H", 0.75},
        {"A4", "Node-RED Modbus TCP", "CVE-2021-3223", "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", 0.75},
        {"A5", "Raspberry Pi 4 Model B", "CVE-2017-5927", "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", 0.75},
        {"A6", "Node-RED Modbus TCP", "CVE-2019-10756", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", 0.88},
        {"A7", "Node-RED Modbus TCP", "CVE-2019-6549", "AV:N/AC:L/PR:H/UI:N/S:U/C:H/I:H/A:H", 0.72},
        {"A10", "Raspberry Pi 4 Model B", "CVE-2022-23960", "AV:L/AC:H/PR:L/UI:N/S:C/C:H/I:N/A:N", 0.56},
        {"A12", "Raspberry Pi 4 Model B", "CVE-2021-34387", "AV:L/AC:L/PR:H/UI:N/S:U/C:H/I:H/A:H", 0.67},
        {"A13", "MQTT", "CVE-2021-34431", "AV:N/AC:L/PR:L/UI:N/S:U/C:N/I:N/A:H", 0.65},
        {"A14", "Node-RED Modbus TCP", "CVE-2022-3783", "AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N", 0.61},
        {"A16", "ESP32", "CVE-2021-34173", "AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H", 0.75},
        {"A17", "Node-RED Modbus TCP", "CVE-2019-6531", "AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H", 0.81},
        {"A18", "Node-RED Modbus TCP", "CVE-2019-6527", "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 0.98},
        {"A19", "Raspberry Pi 4 Model B", "CVE-2023-41325", "AV:L/AC:L/PR:H/UI:N/S:U/C:H/I:H/A:H", 0.67},
        {"A20", "Raspberry Pi 4 Model B", "CVE-2021-38545", "AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N", 0.59},
        {"A21", "Raspberry Pi 4 Model B", "CVE-2020-24572", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", 0.88},
        {"A23", "MQTT", "CVE-2019-5432", "AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H", 0.75},
        {"A24", "ESP32", "CVE-2021-41104", "AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:H/A:N", 0.75},
        {"A25", "ESP32", "CVE-2020-11015", "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:N", 0.91},
        {"A30", "Raspberry Pi 4 Model B", "CVE-2021-41583", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:N/A:N", 0.65},
    };
    return table;
}

/// Scores assigned by expert judgement where no CVE applied.
inline const std::vector<std::pair<std::string_view, double>>& expert_scores() {
    static const std::vector<std::pair<std::string_view, double>> table{
        {"A11", 0.51}, {"A22", 0.60}, {"A26", 0.51}, {"A27", 0.60}, {"A28", 0.70}, {"A29", 0.70},
    };
    return table;
}

/// Loss states reached only through deterministic result edges.
inline constexpr std::array<std::string_view, 3> kDeterministic{"A8", "A9", "A15"};

inline constexpr double kOriginPrior = 0.7;

// Published marginals, 3 decimals, A1..A30 in order. Columns: no evidence;
// A25 compromised; A23 verified not compromised.
inline constexpr std::array<std::array<double, 3>, 30> kReference{{
    {0.081, 0.116, 0.042}, {0.108, 0.154, 0.057}, {0.326, 0.467, 0.172}, {0.435, 0.623, 0.229},
    {0.580, 0.830, 0.305}, {0.585, 0.843, 0.308}, {0.504, 0.720, 0.265}, {0.585, 0.843, 0.308},
    {0.585, 0.843, 0.308}, {0.664, 0.958, 0.350}, {0.357, 0.510, 0.188}, {0.549, 0.849, 0.288},
    {0.455, 0.650, 0.239}, {0.415, 0.608, 0.217}, {0.311, 0.456, 0.163}, {0.311, 0.456, 0.163},
    {0.551, 0.807, 0.289}, {0.680, 0.997, 0.356}, {0.558, 0.797, 0.282}, {0.635, 0.908, 0.308},
    {0.616, 0.880, 0.324}, {0.315, 0.450, 0.166}, {0.525, 0.750, 0.000}, {0.525, 0.750, 0.276},
    {0.585, 1.000, 0.308}, {0.298, 0.510, 0.157}, {0.420, 0.695, 0.221}, {0.490, 0.804, 0.258},
    {0.490, 0.700, 0.258}, {0.455, 0.650, 0.239},
}};

inline std::vector<Aspect> aspects() {
    std::vector<Aspect> out;
    for (const auto& r : kAspects) {
        out.push_back({AspectId::parse(r.id), std::string(r.name), r.kind, r.category, std::nullopt});
    }
    return out;
}

/// Edges present in the dependency rules but carrying no probability mass in
/// the published quantified model. A24 -> A12 (from R23) must be inactive for
/// the reference marginals of A12 and its consequences to hold: with the
/// edge at the default A12 score, P(A12) comes out 0.622 against 0.549.
inline const std::vector<std::pair<std::string_view, std::string_view>>& inactive_edges() {
    static const std::vector<std::pair<std::string_view, std::string_view>> table{{"A24", "A12"}};
    return table;
}

/// One edge per (LHS, RHS) pair of every rule; the kind follows from the
/// endpoint kinds. With `literal` set, inactive edges keep the default
/// probability instead of 0.
inline std::vector<DependencyEdge> edges(bool literal = false) {
    std::map<std::string_view, AspectKind> kind;
    for (const auto& r : kAspects) kind.emplace(r.id, r.kind);
    std::vector<DependencyEdge> out;
    for (const auto& rule : rules()) {
        for (auto l : rule.lhs) {
            for (auto r : rule.rhs) {
                const auto k = edge_kind_for(kind.at(l), kind.at(r));
                std::optional<double> p;
                for (const auto& [src, dst] : inactive_edges()) {
                    if (!literal && src == l && dst == r) p = 0.0;
                }
                out.push_back({AspectId::parse(l), AspectId::parse(r), k.value_or(EdgeKind::Lead),
                               std::string(rule.rule), p});
            }
        }
    }
    return out;
}

inline std::vector<Scenario> scenarios() {
    std::vector<Scenario> out(3);
    out[0].name = "scenario1";
    out[0].description = "no evidence";
    out[1].name = "scenario2";
    out[1].description = "A25 compromised";
    out[1].evidence.set(AspectId::parse("A25"), true);
    out[2].name = "scenario3";
    out[2].description = "A23 not compromised";
    out[2].evidence.set(AspectId::parse("A23"), false);
    for (std::size_t col = 0; col < 3; ++col) {
        std::map<AspectId, double> ref;
        for (std::size_t i = 0; i < kAspects.size(); ++i) {
            ref.emplace(AspectId::parse(kAspects[i].id), kReference[i][col]);
        }
        out[col].reference = std::move(ref);
    }
    return out;
}

/// The builtin model. `literal` drops the inactive-edge overrides, giving
/// every rule edge its target's score.
inline Model model(bool literal = false) {
    Model m{validate_graph_or_throw(aspects(), edges(literal)), {}, kOriginPrior, scenarios()};
    for (const auto& row : cve_rows()) {
        const auto id = AspectId::parse(row.aspect);
        m.scores.emplace(id, ScoreEntry::from_cve(id, std::string(row.cve), cvss::parse_vector(row.vector)));
    }
    for (const auto& [aspect, score] : expert_scores()) {
        const auto id = AspectId::parse(aspect);
        m.scores.emplace(id, ScoreEntry{id, score, ScoreSource::Expert, std::nullopt, std::nullopt});
    }
    for (auto aspect : kDeterministic) {
        const auto id = AspectId::parse(aspect);
        m.scores.emplace(id, ScoreEntry{id, 1.0, ScoreSource::Deterministic, std::nullopt, std::nullopt});
    }
    return m;
}

}  // namespace bsag::builtin
