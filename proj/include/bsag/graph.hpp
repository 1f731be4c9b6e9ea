#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bsag/aspect.hpp"
#include "bsag/error.hpp"

namespace bsag {

struct Violation {
    enum class Kind { CycleDetected, DanglingEndpoint, KindMismatch, DuplicateId, DuplicateEdge,
                      ReservedId, InvalidAspect };

    Kind kind;
    std::string message;
    // Offending element: a cycle path, an edge's endpoints, or a single id.
    std::vector<std::string> elements;

    std::string code() const {
        switch (kind) {
        case Kind::CycleDetected: return errc::cycle_detected;
        case Kind::DanglingEndpoint: return errc::dangling_endpoint;
        case Kind::KindMismatch: return errc::kind_mismatch;
        case Kind::DuplicateId: return errc::duplicate_id;
        case Kind::DuplicateEdge: return errc::duplicate_edge;
        case Kind::ReservedId: return errc::reserved_id;
        case Kind::InvalidAspect: return errc::invalid_aspect;
        }
        return errc::internal;
    }
};

struct ValidationResult;

ValidationResult validate_graph(std::vector<Aspect> aspects, std::vector<DependencyEdge> edges);

/// Validated, immutable security-aspect DAG. Aspects are held in ascending
/// id order and edges in ascending (source, target) order; only
/// validate_graph() constructs one.
class AspectGraph {
public:
    const std::vector<Aspect>& aspects() const noexcept { return aspects_; }
    const std::vector<DependencyEdge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return aspects_.size(); }
    bool empty() const noexcept { return aspects_.empty(); }

    bool contains(const AspectId& id) const { return index_.count(id) != 0; }

    std::size_t index_of(const AspectId& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) {
            throw Error(errc::unknown_aspect, "unknown aspect " + id.str(), {{"id", id.str()}});
        }
        return it->second;
    }

    const Aspect& aspect(const AspectId& id) const { return aspects_[index_of(id)]; }

    /// Indices into aspects(), ascending.
    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }

    /// Edges entering aspect i, ascending by source.
    std::vector<const DependencyEdge*> incoming(std::size_t i) const {
        std::vector<const DependencyEdge*> out;
        for (const auto& e : edges_) {
            if (e.target == aspects_[i].id) out.push_back(&e);
        }
        return out;
    }

    friend bool operator==(const AspectGraph& a, const AspectGraph& b) {
        return a.aspects_ == b.aspects_ && a.edges_ == b.edges_;
    }

private:
    friend ValidationResult validate_graph(std::vector<Aspect>, std::vector<DependencyEdge>);

    AspectGraph(std::vector<Aspect> aspects, std::vector<DependencyEdge> edges)
        : aspects_(std::move(aspects)), edges_(std::move(edges)) {
        for (std::size_t i = 0; i < aspects_.size(); ++i) index_.emplace(aspects_[i].id, i);
        parents_.resize(aspects_.size());
        children_.resize(aspects_.size());
        for (const auto& e : edges_) {
            auto s = index_.at(e.source);
            auto t = index_.at(e.target);
            children_[s].push_back(t);
            parents_[t].push_back(s);
        }
        for (auto& v : parents_) std::sort(v.begin(), v.end());
        for (auto& v : children_) std::sort(v.begin(), v.end());
    }

    std::vector<Aspect> aspects_;
    std::vector<DependencyEdge> edges_;
    std::map<AspectId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
};

struct ValidationResult {
    std::optional<AspectGraph> graph;
    std::vector<Violation> violations;

    bool ok() const noexcept { return graph.has_value(); }
};

namespace detail {

inline std::string edge_label(const DependencyEdge& e) {
    return e.source.str() + "->" + e.target.str();
}

// DFS over the adjacency lists; every back edge yields one cycle, reported
// as the node sequence closing on itself.
inline std::vector<std::vector<AspectId>> find_cycles(
    const std::vector<AspectId>& ids, const std::vector<std::vector<std::size_t>>& adj) {
    enum Mark { White, Grey, Black };
    std::vector<Mark> mark(ids.size(), White);
    std::vector<std::size_t> stack;
    std::vector<std::vector<AspectId>> cycles;

    std::function<void(std::size_t)> visit = [&](std::size_t u) {
        mark[u] = Grey;
        stack.push_back(u);
        for (auto v : adj[u]) {
            if (mark[v] == Grey) {
                auto it = std::find(stack.begin(), stack.end(), v);
                std::vector<AspectId> path;
                for (; it != stack.end(); ++it) path.push_back(ids[*it]);
                path.push_back(ids[v]);
                cycles.push_back(std::move(path));
            } else if (mark[v] == White) {
                visit(v);
            }
        }
        stack.pop_back();
        mark[u] = Black;
    };
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (mark[i] == White) visit(i);
    }
    return cycles;
}

}  // namespace detail

/// Checks every structural invariant and returns either the graph or the
/// complete list of violations. Never returns a partially valid graph.
inline ValidationResult validate_graph(std::vector<Aspect> aspects,
                                       std::vector<DependencyEdge> edges) {
    ValidationResult result;
    auto& out = result.violations;

    std::map<AspectId, const Aspect*> by_id;
    for (const auto& a : aspects) {
        if (a.id.is_origin()) {
            out.push_back({Violation::Kind::ReservedId, "aspect id H0 is reserved", {a.id.str()}});
            continue;
        }
        if (a.name.empty()) {
            out.push_back({Violation::Kind::InvalidAspect, "aspect " + a.id.str() + " has an empty name",
                           {a.id.str()}});
        }
        if (!by_id.emplace(a.id, &a).second) {
            out.push_back({Violation::Kind::DuplicateId, "duplicate aspect id " + a.id.str(),
                           {a.id.str()}});
        }
    }

    std::set<std::pair<AspectId, AspectId>> seen;
    std::vector<const DependencyEdge*> usable;
    for (const auto& e : edges) {
        const auto label = detail::edge_label(e);
        auto s = by_id.find(e.source);
        auto t = by_id.find(e.target);
        bool dangling = false;
        for (const auto* end : {&e.source, &e.target}) {
            if (!by_id.count(*end)) {
                out.push_back({Violation::Kind::DanglingEndpoint,
                               "edge " + label + " references unknown aspect " + end->str(),
                               {e.source.str(), e.target.str()}});
                dangling = true;
                break;
            }
        }
        if (e.probability && !(*e.probability >= 0.0 && *e.probability <= 1.0)) {
            out.push_back({Violation::Kind::InvalidAspect,
                           "edge " + label + " has a probability outside [0,1]",
                           {e.source.str(), e.target.str()}});
        }
        if (!seen.emplace(e.source, e.target).second) {
            out.push_back({Violation::Kind::DuplicateEdge, "duplicate edge " + label,
                           {e.source.str(), e.target.str()}});
            continue;
        }
        if (dangling) continue;
        if (e.source == e.target) {
            out.push_back({Violation::Kind::CycleDetected, "self loop on " + e.source.str(),
                           {e.source.str(), e.source.str()}});
            continue;
        }
        if (!edge_kind_allows(e.kind, s->second->kind, t->second->kind)) {
            out.push_back({Violation::Kind::KindMismatch,
                           "edge " + label + " of kind " + std::string(to_string(e.kind)) + " connects " +
                               std::string(to_string(s->second->kind)) + " to " +
                               std::string(to_string(t->second->kind)),
                           {e.source.str(), e.target.str()}});
        }
        usable.push_back(&e);
    }

    std::vector<AspectId> ids;
    std::map<AspectId, std::size_t> pos;
    for (const auto& [id, _] : by_id) {
        pos.emplace(id, ids.size());
        ids.push_back(id);
    }
    std::vector<std::vector<std::size_t>> adj(ids.size());
    for (const auto* e : usable) adj[pos.at(e->source)].push_back(pos.at(e->target));
    for (auto& v : adj) std::sort(v.begin(), v.end());
    for (auto& cycle : detail::find_cycles(ids, adj)) {
        std::vector<std::string> path;
        std::string text;
        for (const auto& id : cycle) {
            if (!text.empty()) text += ",";
            text += id.str();
            path.push_back(id.str());
        }
        out.push_back({Violation::Kind::CycleDetected, "cycle detected: [" + text + "]", std::move(path)});
    }

    if (!out.empty()) return result;

    std::sort(aspects.begin(), aspects.end(),
              [](const Aspect& a, const Aspect& b) { return a.id < b.id; });
    std::sort(edges.begin(), edges.end(), [](const DependencyEdge& a, const DependencyEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    result.graph = AspectGraph(std::move(aspects), std::move(edges));
    return result;
}

/// Throwing convenience wrapper: the first violation's code names the error,
/// the full list travels in details.
inline AspectGraph validate_graph_or_throw(std::vector<Aspect> aspects,
                                           std::vector<DependencyEdge> edges) {
    auto r = validate_graph(std::move(aspects), std::move(edges));
    if (r.ok()) return std::move(*r.graph);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : r.violations) {
        list.push_back({{"code", v.code()}, {"message", v.message}, {"elements", v.elements}});
    }
    throw Error(r.violations.front().code(), r.violations.front().message,
                {{"violations", std::move(list)}});
}

/// Kahn's algorithm; among ready aspects the smallest id goes first.
inline std::vector<AspectId> topological_sort(const AspectGraph& g) {
    const auto n = g.size();
    std::vector<std::size_t> indeg(n);
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        indeg[i] = g.parents(i).size();
        if (indeg[i] == 0) ready.push(i);
    }
    std::vector<AspectId> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto u = ready.top();
        ready.pop();
        order.push_back(g.aspects()[u].id);
        for (auto v : g.children(u)) {
            if (--indeg[v] == 0) ready.push(v);
        }
    }
    return order;
}

namespace detail {

template <typename Next>
std::set<AspectId> closure(const AspectGraph& g, const AspectId& start, Next next) {
    const auto s = g.index_of(start);
    std::vector<bool> seen(g.size(), false);
    std::vector<std::size_t> stack{s};
    std::set<AspectId> out;
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto v : next(u)) {
            if (!seen[v]) {
                seen[v] = true;
                out.insert(g.aspects()[v].id);
                stack.push_back(v);
            }
        }
    }
    return out;
}

}  // namespace detail

/// All transitive causes of `id`, excluding `id`.
inline std::set<AspectId> ancestors(const AspectGraph& g, const AspectId& id) {
    return detail::closure(g, id, [&](std::size_t u) -> const auto& { return g.parents(u); });
}

/// All transitive consequences of `id`, excluding `id`.
inline std::set<AspectId> descendants(const AspectGraph& g, const AspectId& id) {
    return detail::closure(g, id, [&](std::size_t u) -> const auto& { return g.children(u); });
}

inline std::set<AspectId> entry_points(const AspectGraph& g) {
    std::set<AspectId> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.parents(i).empty()) out.insert(g.aspects()[i].id);
    }
    return out;
}

struct CategoryStat {
    Category category;
    std::size_t count = 0;
    double percentage = 0.0;  // rounded half-up to 2 decimals
};

/// One entry per category, in declaration order.
inline std::vector<CategoryStat> category_stats(const AspectGraph& g) {
    std::vector<CategoryStat> out;
    for (Category c : kAllCategories) out.push_back({c, 0, 0.0});
    for (const auto& a : g.aspects()) ++out[static_cast<std::size_t>(a.category)].count;
    if (g.empty()) return out;
    for (auto& s : out) {
        const double hundredths =
            std::floor(10000.0 * static_cast<double>(s.count) / static_cast<double>(g.size()) + 0.5);
        s.percentage = hundredths / 100.0;
    }
    return out;
}

}  // namespace bsag
