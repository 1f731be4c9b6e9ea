#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "bsag/error.hpp"

namespace bsag {

/// Identifier of a security aspect: `A<n>` with n >= 1, or the reserved
/// threat-origin id `H0`. Ordering is by the numeric part, which puts `H0`
/// first and sorts `A2` before `A10`.
class AspectId {
public:
    AspectId() = default;

    /// Parses `A<positive integer>`. `H0` is rejected here; use origin().
    static AspectId parse(std::string_view text) {
        auto id = try_parse(text);
        if (!id) {
            if (text == "H0") {
                throw Error(errc::reserved_id, "aspect id H0 is reserved for the threat origin",
                            {{"id", "H0"}});
            }
            throw Error(errc::invalid_id, "invalid aspect id '" + std::string(text) + "'",
                        {{"id", std::string(text)}});
        }
        return *id;
    }

    static std::optional<AspectId> try_parse(std::string_view text) {
        if (text.size() < 2 || text.size() > 10 || text[0] != 'A' || text[1] == '0') {
            return std::nullopt;
        }
        std::uint32_t n = 0;
        for (char c : text.substr(1)) {
            if (c < '0' || c > '9') return std::nullopt;
            n = n * 10 + static_cast<std::uint32_t>(c - '0');
        }
        return AspectId(std::string(text), n);
    }

    /// Accepts either an aspect id or the reserved origin id.
    static AspectId parse_any(std::string_view text) {
        if (text == "H0") return origin();
        return parse(text);
    }

    static AspectId origin() { return AspectId("H0", 0); }

    bool is_origin() const noexcept { return number_ == 0; }
    std::uint32_t number() const noexcept { return number_; }
    const std::string& str() const noexcept { return text_; }

    friend bool operator==(const AspectId& a, const AspectId& b) noexcept {
        return a.text_ == b.text_;
    }
    friend std::strong_ordering operator<=>(const AspectId& a, const AspectId& b) noexcept {
        if (auto c = a.number_ <=> b.number_; c != 0) return c;
        return a.text_.compare(b.text_) <=> 0;
    }
    friend std::ostream& operator<<(std::ostream& os, const AspectId& id) { return os << id.text_; }

private:
    AspectId(std::string text, std::uint32_t n) : text_(std::move(text)), number_(n) {}

    std::string text_;
    std::uint32_t number_ = 0;
};

enum class AspectKind { State, Vulnerability };

enum class Category { Data, AccessControl, Standard, Network, Loss };

inline constexpr Category kAllCategories[] = {Category::Data, Category::AccessControl,
                                              Category::Standard, Category::Network,
                                              Category::Loss};

enum class EdgeKind { Imply, Result, Lead };

struct Aspect {
    AspectId id;
    std::string name;
    AspectKind kind = AspectKind::Vulnerability;
    Category category = Category::Data;
    std::optional<std::string> description;

    friend bool operator==(const Aspect&, const Aspect&) = default;
};

struct DependencyEdge {
    AspectId source;
    AspectId target;
    EdgeKind kind = EdgeKind::Lead;
    std::string rule_id;
    std::optional<double> probability;

    friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
};

inline std::string_view to_string(AspectKind k) {
    return k == AspectKind::State ? "state" : "vulnerability";
}

inline std::string_view to_string(Category c) {
    switch (c) {
    case Category::Data: return "data";
    case Category::AccessControl: return "access_control";
    case Category::Standard: return "standard";
    case Category::Network: return "network";
    case Category::Loss: return "loss";
    }
    return "?";
}

inline std::string_view to_string(EdgeKind k) {
    switch (k) {
    case EdgeKind::Imply: return "imply";
    case EdgeKind::Result: return "result";
    case EdgeKind::Lead: return "lead";
    }
    return "?";
}

inline AspectKind parse_aspect_kind(std::string_view s) {
    if (s == "state") return AspectKind::State;
    if (s == "vulnerability") return AspectKind::Vulnerability;
    throw Error(errc::malformed_model, "unknown aspect kind '" + std::string(s) + "'");
}

inline Category parse_category(std::string_view s) {
    for (Category c : kAllCategories) {
        if (to_string(c) == s) return c;
    }
    throw Error(errc::malformed_model, "unknown category '" + std::string(s) + "'");
}

inline EdgeKind parse_edge_kind(std::string_view s) {
    if (s == "imply") return EdgeKind::Imply;
    if (s == "result") return EdgeKind::Result;
    if (s == "lead") return EdgeKind::Lead;
    throw Error(errc::malformed_model, "unknown edge kind '" + std::string(s) + "'");
}

/// The (source kind, target kind) pair each edge kind admits.
inline bool edge_kind_allows(EdgeKind k, AspectKind source, AspectKind target) {
    switch (k) {
    case EdgeKind::Imply: return source == AspectKind::State && target == AspectKind::Vulnerability;
    case EdgeKind::Result: return source == AspectKind::Vulnerability && target == AspectKind::State;
    case EdgeKind::Lead:
        return source == AspectKind::Vulnerability && target == AspectKind::Vulnerability;
    }
    return false;
}

/// Edge kind implied by the endpoint kinds; nullopt for State -> State.
inline std::optional<EdgeKind> edge_kind_for(AspectKind source, AspectKind target) {
    if (source == AspectKind::State && target == AspectKind::Vulnerability) return EdgeKind::Imply;
    if (source == AspectKind::Vulnerability && target == AspectKind::State) return EdgeKind::Result;
    if (source == AspectKind::Vulnerability && target == AspectKind::Vulnerability) {
        return EdgeKind::Lead;
    }
    return std::nullopt;
}

}  // namespace bsag

template <>
struct std::hash<bsag::AspectId> {
    std::size_t operator()(const bsag::AspectId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
