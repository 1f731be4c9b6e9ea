#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "bsag/builtin.hpp"
#include "bsag/dot.hpp"
#include "bsag/graph.hpp"
#include "test_support.hpp"

using namespace bsag;
using bsag::testing::id;
using bsag::testing::ids;

namespace {

Aspect vuln(const char* name) { return {id(name), std::string("v ") + name, AspectKind::Vulnerability, Category::Data, {}}; }
Aspect state(const char* name) { return {id(name), std::string("s ") + name, AspectKind::State, Category::Loss, {}}; }

DependencyEdge edge(const char* s, const char* t, EdgeKind k = EdgeKind::Lead) { return {id(s), id(t), k, "", {}}; }

const AspectGraph& bsagiot() {
    static const AspectGraph g = builtin::model().graph;
    return g;
}

// Raw 36-edge list written out from the rule table by hand, independent of
// the library's rule expansion.
std::vector<std::pair<std::string, std::string>> hand_edges() {
    return {{"A2", "A1"},   {"A3", "A2"},   {"A4", "A3"},   {"A5", "A4"},   {"A6", "A5"},   {"A7", "A5"},
            {"A6", "A8"},   {"A6", "A9"},   {"A10", "A6"},  {"A11", "A10"}, {"A12", "A10"}, {"A13", "A10"},
            {"A14", "A10"}, {"A16", "A15"}, {"A14", "A16"}, {"A17", "A12"}, {"A18", "A14"}, {"A18", "A17"},
            {"A19", "A18"}, {"A20", "A19"}, {"A21", "A20"}, {"A22", "A18"}, {"A23", "A20"}, {"A24", "A22"},
            {"A24", "A20"}, {"A24", "A19"}, {"A24", "A12"}, {"A26", "A10"}, {"A25", "A26"}, {"A25", "A12"},
            {"A25", "A18"}, {"A27", "A25"}, {"A28", "A25"}, {"A29", "A10"}, {"A30", "A20"}, {"A30", "A10"}};
}

std::set<AspectId> to_ids(const std::set<std::string>& names) {
    std::set<AspectId> out;
    for (const auto& n : names) out.insert(AspectId::parse(n));
    return out;
}

bool has_violation(const ValidationResult& r, Violation::Kind k) {
    return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.kind == k; });
}

}  // namespace

TEST(AspectId, ParsesAndOrdersNumerically) {
    EXPECT_EQ(AspectId::parse("A12").number(), 12u);
    EXPECT_LT(AspectId::parse("A2"), AspectId::parse("A10"));
    EXPECT_LT(AspectId::origin(), AspectId::parse("A1"));
    EXPECT_FALSE(AspectId::try_parse("A0"));
    EXPECT_FALSE(AspectId::try_parse("A01"));
    EXPECT_FALSE(AspectId::try_parse("B3"));
    EXPECT_FALSE(AspectId::try_parse("A"));
    try {
        AspectId::parse("H0");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), errc::reserved_id);
    }
}

TEST(ValidateGraph, BuiltinIsValid) {
    EXPECT_EQ(bsagiot().size(), 30u);
    EXPECT_EQ(bsagiot().edges().size(), 36u);
}

TEST(ValidateGraph, TwoCycleReportsPath) {
    auto r = validate_graph({vuln("A1"), vuln("A2")}, {edge("A1", "A2"), edge("A2", "A1")});
    ASSERT_FALSE(r.ok());
    ASSERT_TRUE(has_violation(r, Violation::Kind::CycleDetected));
    for (const auto& v : r.violations) {
        if (v.kind == Violation::Kind::CycleDetected) {
            EXPECT_EQ(v.elements, (std::vector<std::string>{"A1", "A2", "A1"}));
        }
    }
}

TEST(ValidateGraph, SelfLoopIsACycle) {
    auto r = validate_graph({vuln("A1")}, {edge("A1", "A1")});
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(has_violation(r, Violation::Kind::CycleDetected));
}

TEST(ValidateGraph, StateToStateIsKindMismatch) {
    auto r = validate_graph({state("A1"), state("A2")}, {edge("A1", "A2", EdgeKind::Imply)});
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(has_violation(r, Violation::Kind::KindMismatch));
}

TEST(ValidateGraph, EdgeKindMustMatchEndpoints) {
    // Imply must go State -> Vulnerability.
    auto r = validate_graph({vuln("A1"), vuln("A2")}, {edge("A1", "A2", EdgeKind::Imply)});
    EXPECT_TRUE(has_violation(r, Violation::Kind::KindMismatch));
    auto ok = validate_graph({state("A1"), vuln("A2"), state("A3")},
                             {edge("A1", "A2", EdgeKind::Imply), edge("A2", "A3", EdgeKind::Result)});
    EXPECT_TRUE(ok.ok());
}

TEST(ValidateGraph, ReportsEveryViolation) {
    auto r = validate_graph({vuln("A1"), vuln("A1"), vuln("A2")},
                            {edge("A1", "A9"), edge("A1", "A2"), edge("A1", "A2")});
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(has_violation(r, Violation::Kind::DuplicateId));
    EXPECT_TRUE(has_violation(r, Violation::Kind::DanglingEndpoint));
    EXPECT_TRUE(has_violation(r, Violation::Kind::DuplicateEdge));
}

TEST(ValidateGraph, RejectsReservedOriginAndBadProbability) {
    Aspect h0{AspectId::origin(), "origin", AspectKind::Vulnerability, Category::Data, {}};
    auto r = validate_graph({h0}, {});
    EXPECT_TRUE(has_violation(r, Violation::Kind::ReservedId));

    auto e = edge("A1", "A2");
    e.probability = 1.5;
    auto r2 = validate_graph({vuln("A1"), vuln("A2")}, {e});
    EXPECT_FALSE(r2.ok());
}

TEST(ValidateGraph, OrThrowCarriesViolations) {
    try {
        validate_graph_or_throw({vuln("A1"), vuln("A2")}, {edge("A1", "A2"), edge("A2", "A1")});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), errc::cycle_detected);
        EXPECT_FALSE(e.details().at("violations").empty());
    }
}

TEST(ValidateGraph, Idempotent) {
    const auto& g = bsagiot();
    auto again = validate_graph(g.aspects(), g.edges());
    ASSERT_TRUE(again.ok());
    EXPECT_TRUE(*again.graph == g);
}

TEST(ValidateGraph, EdgeListMatchesHandExpansion) {
    std::set<std::pair<std::string, std::string>> lib, hand;
    for (const auto& e : bsagiot().edges()) lib.insert({e.source.str(), e.target.str()});
    for (const auto& e : hand_edges()) hand.insert(e);
    EXPECT_EQ(hand.size(), 36u);
    EXPECT_EQ(lib, hand);
}

TEST(TopologicalSort, Singleton) {
    auto g = validate_graph_or_throw({vuln("A4")}, {});
    EXPECT_EQ(topological_sort(g), std::vector<AspectId>{id("A4")});
}

TEST(TopologicalSort, DiamondTieBreak) {
    auto g = validate_graph_or_throw({vuln("A25"), vuln("A26"), vuln("A27"), vuln("A28")},
                                     {edge("A27", "A25"), edge("A28", "A25"), edge("A25", "A26")});
    EXPECT_EQ(topological_sort(g), (std::vector<AspectId>{id("A27"), id("A28"), id("A25"), id("A26")}));
}

TEST(TopologicalSort, BuiltinRespectsEveryEdge) {
    const auto order = topological_sort(bsagiot());
    ASSERT_EQ(order.size(), 30u);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i].str()] = i;
    EXPECT_EQ(pos.size(), 30u);
    for (const auto& [s, t] : hand_edges()) EXPECT_LT(pos.at(s), pos.at(t)) << s << "->" << t;
    EXPECT_EQ(order, topological_sort(bsagiot()));
}

TEST(Reachability, SpecExamples) {
    const auto& g = bsagiot();
    EXPECT_EQ(ancestors(g, id("A5")), ids({"A6", "A7", "A10", "A11", "A12", "A13", "A14", "A17", "A18", "A19", "A20",
                                           "A21", "A22", "A23", "A24", "A25", "A26", "A27", "A28", "A29", "A30"}));
    EXPECT_TRUE(ancestors(g, id("A24")).empty());
    EXPECT_EQ(descendants(g, id("A25")), ids({"A1", "A2", "A3", "A4", "A5", "A6", "A8", "A9", "A10", "A12", "A14",
                                             "A15", "A16", "A17", "A18", "A26"}));
    EXPECT_TRUE(descendants(g, id("A8")).empty());
    EXPECT_EQ(descendants(g, id("A16")), ids({"A15"}));
}

TEST(Reachability, A1AncestorsAreEverythingButTheLossSide) {
    std::set<AspectId> expected;
    for (int i = 2; i <= 30; ++i) expected.insert(AspectId::parse("A" + std::to_string(i)));
    for (const char* x : {"A8", "A9", "A15", "A16"}) expected.erase(id(x));
    EXPECT_EQ(ancestors(bsagiot(), id("A1")), expected);
}

TEST(Reachability, MatchesBruteForceClosureOnAllNodes) {
    const auto reach = bsag::testing::brute_reach(hand_edges());
    const auto& g = bsagiot();
    for (const auto& a : g.aspects()) {
        std::set<std::string> anc;
        for (const auto& [u, targets] : reach) {
            if (targets.count(a.id.str())) anc.insert(u);
        }
        auto it = reach.find(a.id.str());
        const std::set<std::string> desc = it == reach.end() ? std::set<std::string>{} : it->second;
        EXPECT_EQ(ancestors(g, a.id), to_ids(anc)) << a.id;
        EXPECT_EQ(descendants(g, a.id), to_ids(desc)) << a.id;
    }
}

TEST(Reachability, DualityAndDisjointness) {
    const auto& g = bsagiot();
    for (const auto& x : g.aspects()) {
        const auto anc = ancestors(g, x.id);
        const auto desc = descendants(g, x.id);
        for (const auto& a : anc) EXPECT_FALSE(desc.count(a));
        for (const auto& y : g.aspects()) {
            EXPECT_EQ(anc.count(y.id) == 1, descendants(g, y.id).count(x.id) == 1);
        }
    }
}

TEST(Reachability, UnknownAspectThrows) {
    try {
        ancestors(bsagiot(), id("A99"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), errc::unknown_aspect);
    }
}

TEST(EntryPoints, Builtin) {
    EXPECT_EQ(entry_points(bsagiot()),
              ids({"A7", "A11", "A13", "A21", "A23", "A24", "A27", "A28", "A29", "A30"}));
    for (const auto& a : bsagiot().aspects()) {
        EXPECT_EQ(entry_points(bsagiot()).count(a.id) == 1, ancestors(bsagiot(), a.id).empty());
    }
}

TEST(EntryPoints, EmptyAndChain) {
    EXPECT_TRUE(entry_points(validate_graph_or_throw({}, {})).empty());
    auto chain = validate_graph_or_throw({vuln("A20"), vuln("A21")}, {edge("A21", "A20")});
    EXPECT_EQ(entry_points(chain), ids({"A21"}));
}

TEST(CategoryStats, Builtin) {
    const auto stats = category_stats(bsagiot());
    std::map<Category, std::pair<std::size_t, double>> m;
    for (const auto& s : stats) m[s.category] = {s.count, s.percentage};
    EXPECT_EQ(m[Category::AccessControl], std::make_pair(std::size_t{9}, 30.00));
    EXPECT_EQ(m[Category::Data], std::make_pair(std::size_t{7}, 23.33));
    EXPECT_EQ(m[Category::Network], std::make_pair(std::size_t{6}, 20.00));
    EXPECT_EQ(m[Category::Standard], std::make_pair(std::size_t{5}, 16.67));
    EXPECT_EQ(m[Category::Loss], std::make_pair(std::size_t{3}, 10.00));
    double sum = 0;
    for (const auto& s : stats) sum += s.percentage;
    EXPECT_NEAR(sum, 100.0, 0.02);
}

TEST(CategoryStats, OnePerCategoryAndEmpty) {
    std::vector<Aspect> as;
    int n = 1;
    for (auto c : kAllCategories) {
        as.push_back({AspectId::parse("A" + std::to_string(n++)), "x", AspectKind::Vulnerability, c, {}});
    }
    for (const auto& s : category_stats(validate_graph_or_throw(as, {}))) {
        EXPECT_EQ(s.count, 1u);
        EXPECT_DOUBLE_EQ(s.percentage, 20.0);
    }
    for (const auto& s : category_stats(validate_graph_or_throw({}, {}))) {
        EXPECT_EQ(s.count, 0u);
        EXPECT_DOUBLE_EQ(s.percentage, 0.0);
    }
}

namespace {
std::size_t count_lines(const std::string& text, const std::function<bool(const std::string&)>& pred) {
    std::istringstream is(text);
    std::size_t n = 0;
    for (std::string line; std::getline(is, line);) n += pred(line) ? 1 : 0;
    return n;
}
bool is_node_line(const std::string& l) { return l.find("[label=") != std::string::npos && l.find("->") == std::string::npos; }
bool is_edge_line(const std::string& l) { return l.find("->") != std::string::npos; }
}  // namespace

TEST(ExportDot, SingleVulnerabilityIsBox) {
    const auto dot = export_dot(validate_graph_or_throw({vuln("A3")}, {}));
    EXPECT_NE(dot.find("shape=box"), std::string::npos);
    EXPECT_EQ(count_lines(dot, is_node_line), 1u);
}

TEST(ExportDot, StateIsEllipse) {
    const auto dot = export_dot(validate_graph_or_throw({state("A8")}, {}));
    EXPECT_NE(dot.find("shape=ellipse"), std::string::npos);
}

TEST(ExportDot, BuiltinCounts) {
    const auto dot = export_dot(bsagiot());
    EXPECT_EQ(count_lines(dot, is_node_line), 30u);
    EXPECT_EQ(count_lines(dot, is_edge_line), 36u);
    EXPECT_EQ(count_lines(dot, [](const std::string& l) { return l.find("yellow") != std::string::npos; }), 9u);

    DotOptions opts;
    opts.show_origin = true;
    const auto with_origin = export_dot(bsagiot(), opts);
    EXPECT_EQ(count_lines(with_origin, is_node_line), 31u);
    EXPECT_EQ(count_lines(with_origin, [](const std::string& l) { return l.rfind("  H0 ->", 0) == 0; }), 10u);
    EXPECT_EQ(dot, export_dot(bsagiot()));
}
