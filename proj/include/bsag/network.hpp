#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bsag/aspect.hpp"
#include "bsag/error.hpp"
#include "bsag/graph.hpp"

namespace bsag {

enum class NodeMode { Or, And, Root };

inline std::string_view to_string(NodeMode m) {
    switch (m) {
    case NodeMode::Or: return "or";
    case NodeMode::And: return "and";
    case NodeMode::Root: return "root";
    }
    return "?";
}

struct ParentEdge {
    AspectId parent;
    double p = 1.0;  // probability the parent's compromise propagates along this edge

    friend bool operator==(const ParentEdge&, const ParentEdge&) = default;
};

struct BayesNode {
    AspectId id;
    NodeMode mode = NodeMode::Root;
    double prior = 0.0;  // meaningful for Root only
    std::vector<ParentEdge> parent_edges;

    friend bool operator==(const BayesNode&, const BayesNode&) = default;
};

struct OriginConfig {
    AspectId id = AspectId::origin();
    double prior = 0.7;
};

namespace detail {

inline void check_probability(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(errc::invalid_probability, what + " must lie in [0,1]", {{"value", p}});
    }
}

}  // namespace detail

/// Immutable Bayesian network over binary aspect variables. Nodes are kept
/// in topological order (ties by ascending id); parents are referenced by
/// index into that order.
class CompiledNetwork {
public:
    static constexpr std::size_t kMaxParents = 30;

    /// Validates the node set and sorts it topologically.
    static CompiledNetwork from_nodes(std::vector<BayesNode> nodes,
                                      std::optional<OriginConfig> origin = std::nullopt) {
        std::map<AspectId, std::size_t> pos;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!pos.emplace(nodes[i].id, i).second) {
                throw Error(errc::duplicate_id, "duplicate node " + nodes[i].id.str(),
                            {{"id", nodes[i].id.str()}});
            }
        }
        for (const auto& n : nodes) {
            const bool root = n.mode == NodeMode::Root;
            if (root != n.parent_edges.empty()) {
                throw Error(errc::invalid_network,
                            "node " + n.id.str() + (root ? " is Root but has parents"
                                                         : " is Or/And but has no parents"),
                            {{"id", n.id.str()}});
            }
            if (root) detail::check_probability(n.prior, "prior of " + n.id.str());
            if (n.parent_edges.size() > kMaxParents) {
                throw Error(errc::too_large, "node " + n.id.str() + " has more than " +
                                                 std::to_string(kMaxParents) + " parents");
            }
            std::set<AspectId> seen;
            for (const auto& e : n.parent_edges) {
                if (!pos.count(e.parent)) {
                    throw Error(errc::dangling_endpoint,
                                "node " + n.id.str() + " references unknown parent " + e.parent.str(),
                                {{"id", n.id.str()}, {"parent", e.parent.str()}});
                }
                if (!seen.insert(e.parent).second || e.parent == n.id) {
                    throw Error(errc::invalid_network, "node " + n.id.str() + " repeats parent " +
                                                           e.parent.str());
                }
                detail::check_probability(e.p, "edge " + e.parent.str() + "->" + n.id.str());
            }
        }
        if (origin) {
            detail::check_probability(origin->prior, "origin prior");
            auto it = pos.find(origin->id);
            if (it == pos.end() || nodes[it->second].mode != NodeMode::Root) {
                throw Error(errc::invalid_network, "origin " + origin->id.str() + " must be a root node");
            }
        }

        // Kahn over ids so the order is deterministic regardless of input order.
        std::map<AspectId, std::size_t> indeg;
        std::map<AspectId, std::vector<AspectId>> kids;
        for (const auto& n : nodes) {
            indeg[n.id] += n.parent_edges.size();
            for (const auto& e : n.parent_edges) kids[e.parent].push_back(n.id);
        }
        std::priority_queue<AspectId, std::vector<AspectId>, std::greater<>> ready;
        for (const auto& [id, d] : indeg) {
            if (d == 0) ready.push(id);
        }
        CompiledNetwork net;
        while (!ready.empty()) {
            auto id = ready.top();
            ready.pop();
            net.index_.emplace(id, net.nodes_.size());
            net.nodes_.push_back(std::move(nodes[pos.at(id)]));
            for (const auto& k : kids[id]) {
                if (--indeg[k] == 0) ready.push(k);
            }
        }
        if (net.nodes_.size() != nodes.size()) {
            throw Error(errc::cycle_detected, "network contains a cycle");
        }
        net.parents_.resize(net.nodes_.size());
        net.children_.resize(net.nodes_.size());
        for (std::size_t i = 0; i < net.nodes_.size(); ++i) {
            for (const auto& e : net.nodes_[i].parent_edges) {
                const auto p = net.index_.at(e.parent);
                net.parents_[i].push_back(p);
                net.children_[p].push_back(i);
            }
        }
        net.origin_ = origin;
        return net;
    }

    const std::vector<BayesNode>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::optional<OriginConfig>& origin() const noexcept { return origin_; }

    bool contains(const AspectId& id) const { return index_.count(id) != 0; }

    std::size_t index_of(const AspectId& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) {
            throw Error(errc::unknown_aspect, "unknown aspect " + id.str(), {{"id", id.str()}});
        }
        return it->second;
    }

    const BayesNode& node(const AspectId& id) const { return nodes_[index_of(id)]; }

    /// Parent indices, in the order of the node's parent_edges.
    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }

private:
    std::vector<BayesNode> nodes_;
    std::map<AspectId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::optional<OriginConfig> origin_;
};

/// P(node = true | parents), with parent states given as a bit mask over
/// parent_edges (bit k set = k-th parent compromised).
inline double cpt_true(const BayesNode& node, std::uint64_t parent_bits) {
    switch (node.mode) {
    case NodeMode::Root: return node.prior;
    case NodeMode::Or: {
        double miss = 1.0;
        for (std::size_t k = 0; k < node.parent_edges.size(); ++k) {
            if (parent_bits >> k & 1U) miss *= 1.0 - node.parent_edges[k].p;
        }
        return 1.0 - miss;
    }
    case NodeMode::And: {
        double hit = 1.0;
        for (std::size_t k = 0; k < node.parent_edges.size(); ++k) {
            if (!(parent_bits >> k & 1U)) return 0.0;
            hit *= node.parent_edges[k].p;
        }
        return hit;
    }
    }
    return 0.0;
}

/// P(node = true | parent_assignment). The assignment must name exactly the
/// node's parents.
inline double cpt_entry(const BayesNode& node, const std::map<AspectId, bool>& parent_assignment) {
    if (parent_assignment.size() != node.parent_edges.size()) {
        throw Error(errc::assignment_mismatch,
                    "assignment for " + node.id.str() + " must cover exactly its parents");
    }
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < node.parent_edges.size(); ++k) {
        auto it = parent_assignment.find(node.parent_edges[k].parent);
        if (it == parent_assignment.end()) {
            throw Error(errc::assignment_mismatch, "assignment for " + node.id.str() + " lacks parent " +
                                                       node.parent_edges[k].parent.str());
        }
        if (it->second) bits |= std::uint64_t{1} << k;
    }
    return cpt_true(node, bits);
}

struct CompileOptions {
    std::optional<double> origin_prior;
    /// Aspects whose parents combine with AND instead of the default OR.
    std::set<AspectId> and_nodes;
};

/// Builds the network from a validated graph and a score table.
///
/// Edge probability resolution: explicit edge probability, else the target's
/// score, else 1.0 when the target is a scoreless State. With an origin
/// prior, `H0` becomes the sole parent of every entry point, the edge
/// carrying that entry point's score.
inline CompiledNetwork compile_network(const AspectGraph& graph,
                                       const std::map<AspectId, double>& scores,
                                       const CompileOptions& options = {}) {
    if (graph.contains(AspectId::origin())) {
        throw Error(errc::origin_collision, "graph already declares H0");
    }
    for (const auto& [id, s] : scores) {
        if (id.is_origin()) throw Error(errc::origin_collision, "score table names H0");
        if (!graph.contains(id)) {
            throw Error(errc::unknown_aspect, "score for unknown aspect " + id.str(), {{"id", id.str()}});
        }
        detail::check_probability(s, "score of " + id.str());
    }
    for (const auto& id : options.and_nodes) graph.index_of(id);

    auto score_of = [&](const Aspect& a) -> double {
        if (auto it = scores.find(a.id); it != scores.end()) return it->second;
        if (a.kind == AspectKind::State) return 1.0;
        throw Error(errc::missing_score, "vulnerability " + a.id.str() + " has no score",
                    {{"id", a.id.str()}});
    };

    std::vector<BayesNode> nodes;
    const bool with_origin = options.origin_prior.has_value();
    if (with_origin) {
        nodes.push_back({AspectId::origin(), NodeMode::Root, *options.origin_prior, {}});
    }
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto& a = graph.aspects()[i];
        BayesNode n{a.id, NodeMode::Or, 0.0, {}};
        const auto incoming = graph.incoming(i);
        if (incoming.empty()) {
            if (with_origin) {
                n.parent_edges.push_back({AspectId::origin(), score_of(a)});
            } else {
                n.mode = NodeMode::Root;
                n.prior = score_of(a);
            }
        } else {
            for (const auto* e : incoming) {
                n.parent_edges.push_back({e->source, e->probability ? *e->probability : score_of(a)});
            }
            if (options.and_nodes.count(a.id)) n.mode = NodeMode::And;
        }
        nodes.push_back(std::move(n));
    }
    std::optional<OriginConfig> origin;
    if (with_origin) origin = OriginConfig{AspectId::origin(), *options.origin_prior};
    return CompiledNetwork::from_nodes(std::move(nodes), origin);
}

/// The ancestral closure of `keep` as a standalone network.
inline CompiledNetwork ancestral_subnetwork(const CompiledNetwork& net, const std::set<AspectId>& keep) {
    std::vector<bool> in(net.size(), false);
    std::vector<std::size_t> stack;
    for (const auto& id : keep) {
        auto i = net.index_of(id);
        if (!in[i]) {
            in[i] = true;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto p : net.parents(u)) {
            if (!in[p]) {
                in[p] = true;
                stack.push_back(p);
            }
        }
    }
    std::vector<BayesNode> nodes;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (in[i]) nodes.push_back(net.nodes()[i]);
    }
    auto origin = net.origin();
    if (origin && !in[net.index_of(origin->id)]) origin.reset();
    return CompiledNetwork::from_nodes(std::move(nodes), origin);
}

}  // namespace bsag
