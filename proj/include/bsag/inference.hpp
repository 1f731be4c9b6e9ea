#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bsag/error.hpp"
#include "bsag/network.hpp"

namespace bsag {

/// Observed truth values: true = compromised, false = verified secure.
class Evidence {
public:
    Evidence() = default;
    Evidence(std::initializer_list<std::pair<const AspectId, bool>> init) {
        for (const auto& [id, v] : init) set(id, v);
    }

    void set(const AspectId& id, bool compromised) {
        if (!values_.emplace(id, compromised).second) {
            throw Error(errc::duplicate_evidence, "evidence for " + id.str() + " given more than once",
                        {{"id", id.str()}});
        }
    }

    /// Parses `A25=true,A23=false`. An empty string is the empty set.
    static Evidence parse(std::string_view text) {
        Evidence ev;
        while (!text.empty()) {
            const auto comma = text.find(',');
            const auto item = text.substr(0, comma);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos) {
                throw Error(errc::invalid_evidence,
                            "evidence item '" + std::string(item) + "' is not <id>=<true|false>");
            }
            const auto value = item.substr(eq + 1);
            if (value != "true" && value != "false") {
                throw Error(errc::invalid_evidence,
                            "evidence value '" + std::string(value) + "' is not true or false");
            }
            ev.set(AspectId::parse_any(item.substr(0, eq)), value == "true");
            if (comma == std::string_view::npos) break;
            text.remove_prefix(comma + 1);
        }
        return ev;
    }

    const std::map<AspectId, bool>& values() const noexcept { return values_; }
    bool empty() const noexcept { return values_.empty(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool contains(const AspectId& id) const { return values_.count(id) != 0; }

    friend bool operator==(const Evidence&, const Evidence&) = default;

private:
    std::map<AspectId, bool> values_;
};

enum class InferenceMethod { Elimination, Enumeration };

inline std::string_view to_string(InferenceMethod m) {
    return m == InferenceMethod::Elimination ? "elimination" : "enumeration";
}

struct MarginalReport {
    std::map<AspectId, double> probabilities;  // P(aspect compromised | evidence)
    Evidence evidence;
    InferenceMethod method = InferenceMethod::Elimination;
};

enum class OrderHeuristic { MinFill, MinDegree };

struct QueryOptions {
    bool include_origin = false;
    OrderHeuristic heuristic = OrderHeuristic::MinFill;
};

/// Below this, P(evidence) is treated as zero.
inline constexpr double kImpossibleEvidence = 1e-12;

/// Table over binary variables; bit j of a table index is the value of vars[j].
class Factor {
public:
    Factor() : table_{1.0} {}
    Factor(std::vector<std::size_t> vars, std::vector<double> table)
        : vars_(std::move(vars)), table_(std::move(table)) {}

    const std::vector<std::size_t>& vars() const noexcept { return vars_; }
    const std::vector<double>& table() const noexcept { return table_; }
    bool contains(std::size_t v) const { return std::binary_search(vars_.begin(), vars_.end(), v); }

    Factor multiply(const Factor& other) const {
        std::vector<std::size_t> vars;
        std::set_union(vars_.begin(), vars_.end(), other.vars_.begin(), other.vars_.end(),
                       std::back_inserter(vars));
        const auto mine = positions(vars, vars_);
        const auto theirs = positions(vars, other.vars_);
        std::vector<double> table(std::size_t{1} << vars.size());
        for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
            table[idx] = table_[project(idx, mine)] * other.table_[project(idx, theirs)];
        }
        return Factor(std::move(vars), std::move(table));
    }

    Factor sum_out(std::size_t v) const {
        const auto j = static_cast<std::size_t>(
            std::lower_bound(vars_.begin(), vars_.end(), v) - vars_.begin());
        std::vector<std::size_t> vars = vars_;
        vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(j));
        std::vector<double> table(std::size_t{1} << vars.size(), 0.0);
        const std::uint64_t low = (std::uint64_t{1} << j) - 1;
        for (std::uint64_t idx = 0; idx < table_.size(); ++idx) {
            table[(idx & low) | ((idx >> (j + 1)) << j)] += table_[idx];
        }
        return Factor(std::move(vars), std::move(table));
    }

    Factor reduce(std::size_t v, bool value) const {
        const auto j = static_cast<std::size_t>(
            std::lower_bound(vars_.begin(), vars_.end(), v) - vars_.begin());
        std::vector<std::size_t> vars = vars_;
        vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(j));
        std::vector<double> table(std::size_t{1} << vars.size());
        const std::uint64_t low = (std::uint64_t{1} << j) - 1;
        for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
            const std::uint64_t full = (idx & low) | (static_cast<std::uint64_t>(value) << j) |
                                       ((idx >> j) << (j + 1));
            table[idx] = table_[full];
        }
        return Factor(std::move(vars), std::move(table));
    }

private:
    static std::vector<int> positions(const std::vector<std::size_t>& all,
                                      const std::vector<std::size_t>& sub) {
        std::vector<int> pos;
        for (auto v : sub) {
            pos.push_back(static_cast<int>(std::lower_bound(all.begin(), all.end(), v) - all.begin()));
        }
        return pos;
    }

    static std::uint64_t project(std::uint64_t idx, const std::vector<int>& pos) {
        std::uint64_t out = 0;
        for (std::size_t k = 0; k < pos.size(); ++k) out |= ((idx >> pos[k]) & 1U) << k;
        return out;
    }

    std::vector<std::size_t> vars_;
    std::vector<double> table_;
};

/// The CPT of node i as a factor over {i} ∪ parents(i).
inline Factor node_factor(const CompiledNetwork& net, std::size_t i) {
    std::vector<std::size_t> vars = net.parents(i);
    vars.push_back(i);
    std::sort(vars.begin(), vars.end());
    const auto& node = net.nodes()[i];
    // Bit k of the parent mask refers to parent_edges[k]; map it to factor positions.
    std::vector<int> parent_pos;
    for (auto p : net.parents(i)) {
        parent_pos.push_back(static_cast<int>(std::lower_bound(vars.begin(), vars.end(), p) - vars.begin()));
    }
    const int self = static_cast<int>(std::lower_bound(vars.begin(), vars.end(), i) - vars.begin());
    std::vector<double> table(std::size_t{1} << vars.size());
    for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < parent_pos.size(); ++k) bits |= ((idx >> parent_pos[k]) & 1U) << k;
        const double p = cpt_true(node, bits);
        table[idx] = (idx >> self & 1U) ? p : 1.0 - p;
    }
    return Factor(std::move(vars), std::move(table));
}

struct EliminationPlan {
    std::vector<AspectId> order;
    std::size_t max_factor_scope = 0;  // largest product factor formed, in variables
};

namespace detail {

using Adjacency = std::map<std::size_t, std::set<std::size_t>>;

inline Adjacency interaction_graph(const std::vector<Factor>& factors) {
    Adjacency adj;
    for (const auto& f : factors) {
        for (auto u : f.vars()) {
            auto& nbrs = adj[u];
            for (auto v : f.vars()) {
                if (u != v) nbrs.insert(v);
            }
        }
    }
    return adj;
}

// Greedy ordering; ties go to the smaller aspect id.
inline std::vector<std::size_t> greedy_order(const CompiledNetwork& net, Adjacency adj,
                                             std::set<std::size_t> to_eliminate,
                                             OrderHeuristic heuristic, std::size_t* max_scope) {
    for (auto v : to_eliminate) adj[v];
    std::vector<std::size_t> order;
    std::size_t widest = 0;
    while (!to_eliminate.empty()) {
        std::size_t best = 0;
        std::size_t best_cost = SIZE_MAX;
        for (auto v : to_eliminate) {
            const auto& nbrs = adj[v];
            std::size_t cost = 0;
            if (heuristic == OrderHeuristic::MinDegree) {
                cost = nbrs.size();
            } else {
                for (auto a = nbrs.begin(); a != nbrs.end(); ++a) {
                    for (auto b = std::next(a); b != nbrs.end(); ++b) {
                        if (!adj[*a].count(*b)) ++cost;
                    }
                }
            }
            if (cost < best_cost ||
                (cost == best_cost && net.nodes()[v].id < net.nodes()[best].id)) {
                best = v;
                best_cost = cost;
            }
        }
        const auto nbrs = adj[best];
        widest = std::max(widest, nbrs.size() + 1);
        for (auto a : nbrs) {
            for (auto b : nbrs) {
                if (a != b) adj[a].insert(b);
            }
            adj[a].erase(best);
        }
        adj.erase(best);
        to_eliminate.erase(best);
        order.push_back(best);
    }
    if (max_scope) *max_scope = widest;
    return order;
}

inline std::vector<bool> ancestral_mask(const CompiledNetwork& net, const std::vector<std::size_t>& seeds) {
    std::vector<bool> in(net.size(), false);
    std::vector<std::size_t> stack;
    for (auto s : seeds) {
        if (!in[s]) {
            in[s] = true;
            stack.push_back(s);
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
    return in;
}

inline std::map<std::size_t, bool> evidence_indices(const CompiledNetwork& net, const Evidence& ev) {
    std::map<std::size_t, bool> out;
    for (const auto& [id, v] : ev.values()) out.emplace(net.index_of(id), v);
    return out;
}

// Variable elimination over the ancestral closure of `seeds` ∪ evidence.
// When `target` is given, only the factors connected to it (after evidence
// reduction) take part; the rest contribute a constant that normalisation
// cancels. Returns the unnormalised factor over {target}, or the scalar
// P(evidence) when target is absent.
inline Factor eliminate(const CompiledNetwork& net, const std::map<std::size_t, bool>& ev,
                        std::optional<std::size_t> target, OrderHeuristic heuristic) {
    std::vector<std::size_t> seeds;
    for (const auto& [i, _] : ev) seeds.push_back(i);
    if (target) seeds.push_back(*target);
    const auto in = ancestral_mask(net, seeds);

    std::vector<Factor> factors;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!in[i]) continue;
        Factor f = node_factor(net, i);
        for (const auto& [v, val] : ev) {
            if (f.contains(v)) f = f.reduce(v, val);
        }
        factors.push_back(std::move(f));
    }

    if (target) {
        // Keep the factors reachable from the target through shared variables.
        std::vector<bool> keep(factors.size(), false);
        std::set<std::size_t> reached{*target};
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t k = 0; k < factors.size(); ++k) {
                if (keep[k]) continue;
                const auto& vars = factors[k].vars();
                if (std::any_of(vars.begin(), vars.end(), [&](auto v) { return reached.count(v); })) {
                    keep[k] = true;
                    grew = true;
                    reached.insert(vars.begin(), vars.end());
                }
            }
        }
        std::vector<Factor> kept;
        for (std::size_t k = 0; k < factors.size(); ++k) {
            if (keep[k]) kept.push_back(std::move(factors[k]));
        }
        factors = std::move(kept);
    }

    std::set<std::size_t> hidden;
    for (const auto& f : factors) hidden.insert(f.vars().begin(), f.vars().end());
    if (target) hidden.erase(*target);
    const auto order = greedy_order(net, interaction_graph(factors), hidden, heuristic, nullptr);

    for (auto v : order) {
        Factor product;
        std::vector<Factor> rest;
        for (auto& f : factors) {
            if (f.contains(v)) {
                product = product.multiply(f);
            } else {
                rest.push_back(std::move(f));
            }
        }
        rest.push_back(product.sum_out(v));
        factors = std::move(rest);
    }
    Factor result;
    for (const auto& f : factors) result = result.multiply(f);
    return result;
}

[[noreturn]] inline void throw_impossible(const Evidence& ev, double p) {
    nlohmann::json details = {{"probability", p}};
    for (const auto& [id, v] : ev.values()) details["evidence"][id.str()] = v;
    throw Error(errc::impossible_evidence, "evidence has probability zero", std::move(details));
}

}  // namespace detail

/// Min-fill (or min-degree) elimination order over the moralised network,
/// eliminating every node not in `retained`.
inline EliminationPlan elimination_order(const CompiledNetwork& net,
                                         const std::set<AspectId>& retained = {},
                                         OrderHeuristic heuristic = OrderHeuristic::MinFill) {
    std::vector<Factor> factors;
    for (std::size_t i = 0; i < net.size(); ++i) factors.push_back(node_factor(net, i));
    std::set<std::size_t> hidden;
    for (std::size_t i = 0; i < net.size(); ++i) hidden.insert(i);
    for (const auto& id : retained) hidden.erase(net.index_of(id));
    EliminationPlan plan;
    for (auto i : detail::greedy_order(net, detail::interaction_graph(factors), hidden, heuristic,
                                       &plan.max_factor_scope)) {
        plan.order.push_back(net.nodes()[i].id);
    }
    return plan;
}

inline double evidence_probability(const CompiledNetwork& net, const Evidence& evidence,
                                   OrderHeuristic heuristic = OrderHeuristic::MinFill) {
    const auto ev = detail::evidence_indices(net, evidence);
    if (ev.empty()) return 1.0;
    return detail::eliminate(net, ev, std::nullopt, heuristic).table().at(0);
}

/// Exact posterior marginals by variable elimination.
inline MarginalReport query_marginals(const CompiledNetwork& net, const Evidence& evidence,
                                      const QueryOptions& options = {}) {
    const auto ev = detail::evidence_indices(net, evidence);
    if (!ev.empty()) {
        const double pe = detail::eliminate(net, ev, std::nullopt, options.heuristic).table().at(0);
        if (pe < kImpossibleEvidence) detail::throw_impossible(evidence, pe);
    }
    MarginalReport report;
    report.evidence = evidence;
    report.method = InferenceMethod::Elimination;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& id = net.nodes()[i].id;
        if (id.is_origin() && !options.include_origin) continue;
        if (auto it = ev.find(i); it != ev.end()) {
            report.probabilities[id] = it->second ? 1.0 : 0.0;
            continue;
        }
        const auto f = detail::eliminate(net, ev, i, options.heuristic);
        const double z = f.table()[0] + f.table()[1];
        if (z < kImpossibleEvidence) detail::throw_impossible(evidence, z);
        report.probabilities[id] = f.table()[1] / z;
    }
    return report;
}

inline double query_posterior(const CompiledNetwork& net, const AspectId& target,
                              const Evidence& evidence, const QueryOptions& options = {}) {
    const auto t = net.index_of(target);
    const auto ev = detail::evidence_indices(net, evidence);
    if (!ev.empty()) {
        const double pe = detail::eliminate(net, ev, std::nullopt, options.heuristic).table().at(0);
        if (pe < kImpossibleEvidence) detail::throw_impossible(evidence, pe);
    }
    if (auto it = ev.find(t); it != ev.end()) return it->second ? 1.0 : 0.0;
    const auto f = detail::eliminate(net, ev, t, options.heuristic);
    return f.table()[1] / (f.table()[0] + f.table()[1]);
}

inline constexpr std::size_t kEnumerationLimit = 20;

/// Brute-force marginals: sums the full joint over every assignment
/// consistent with the evidence.
inline MarginalReport enumerate_oracle(const CompiledNetwork& net, const Evidence& evidence,
                                       const QueryOptions& options = {}) {
    const auto n = net.size();
    if (n > kEnumerationLimit) {
        throw Error(errc::too_large, "enumeration is limited to " + std::to_string(kEnumerationLimit) +
                                         " nodes, network has " + std::to_string(n),
                    {{"nodes", n}});
    }
    const auto ev = detail::evidence_indices(net, evidence);
    std::uint64_t fixed_mask = 0;
    std::uint64_t fixed_bits = 0;
    for (const auto& [i, v] : ev) {
        fixed_mask |= std::uint64_t{1} << i;
        if (v) fixed_bits |= std::uint64_t{1} << i;
    }
    double z = 0.0;
    std::vector<double> mass(n, 0.0);
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << n); ++a) {
        if ((a & fixed_mask) != fixed_bits) continue;
        double w = 1.0;
        for (std::size_t i = 0; i < n && w != 0.0; ++i) {
            std::uint64_t bits = 0;
            const auto& ps = net.parents(i);
            for (std::size_t k = 0; k < ps.size(); ++k) bits |= ((a >> ps[k]) & 1U) << k;
            const double p = cpt_true(net.nodes()[i], bits);
            w *= (a >> i & 1U) ? p : 1.0 - p;
        }
        if (w == 0.0) continue;
        z += w;
        for (std::size_t i = 0; i < n; ++i) {
            if (a >> i & 1U) mass[i] += w;
        }
    }
    if (z < kImpossibleEvidence) detail::throw_impossible(evidence, z);
    MarginalReport report;
    report.evidence = evidence;
    report.method = InferenceMethod::Enumeration;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = net.nodes()[i].id;
        if (id.is_origin() && !options.include_origin) continue;
        if (auto it = ev.find(i); it != ev.end()) {
            report.probabilities[id] = it->second ? 1.0 : 0.0;
        } else {
            report.probabilities[id] = mass[i] / z;
        }
    }
    return report;
}

}  // namespace bsag
