#pragma once

#include <sstream>
#include <string>

#include "bsag/graph.hpp"

namespace bsag {

struct DotOptions {
    /// Emit the synthetic threat-origin node and its edges to every entry point.
    bool show_origin = false;
    std::string graph_name = "bsag";
};

inline std::string_view dot_fill_color(Category c) {
    switch (c) {
    case Category::Data: return "green";
    case Category::Standard: return "blue";
    case Category::AccessControl: return "yellow";
    case Category::Loss: return "red";
    case Category::Network: return "gray";
    }
    return "white";
}

namespace detail {

inline std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace detail

/// Graphviz rendering: one statement per line, aspects in id order, edges in
/// (source, target) order. States are ellipses, vulnerabilities boxes.
inline std::string export_dot(const AspectGraph& g, const DotOptions& options = {}) {
    std::ostringstream os;
    os << "digraph " << options.graph_name << " {\n";
    os << "  rankdir=LR;\n";
    os << "  node [style=filled, fontname=\"Helvetica\"];\n";
    if (options.show_origin) {
        os << "  H0 [label=\"H0\\nthreat origin\", shape=diamond, fillcolor=\"white\"];\n";
    }
    for (const auto& a : g.aspects()) {
        const auto color = dot_fill_color(a.category);
        os << "  " << a.id << " [label=\"" << a.id << "\\n" << detail::dot_escape(a.name)
           << "\", shape=" << (a.kind == AspectKind::State ? "ellipse" : "box") << ", fillcolor=\""
           << color << "\"";
        if (color == "blue" || color == "red") os << ", fontcolor=\"white\"";
        os << "];\n";
    }
    if (options.show_origin) {
        for (const auto& id : entry_points(g)) os << "  H0 -> " << id << " [style=dashed];\n";
    }
    for (const auto& e : g.edges()) {
        os << "  " << e.source << " -> " << e.target;
        if (!e.rule_id.empty()) os << " [label=\"" << detail::dot_escape(e.rule_id) << "\"]";
        os << ";\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace bsag
