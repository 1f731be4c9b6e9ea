#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bsag/error.hpp"

namespace bsag::cvss {

enum class AttackVector { Network, Adjacent, Local, Physical };
enum class AttackComplexity { Low, High };
enum class Privileges { None, Low, High };
enum class UserInteraction { None, Required };
enum class Scope { Unchanged, Changed };
enum class Impact { None, Low, High };

/// The eight CVSS v3.0 base metrics. Every field is mandatory.
struct Vector {
    AttackVector av = AttackVector::Network;
    AttackComplexity ac = AttackComplexity::Low;
    Privileges pr = Privileges::None;
    UserInteraction ui = UserInteraction::None;
    Scope scope = Scope::Unchanged;
    Impact c = Impact::None;
    Impact i = Impact::None;
    Impact a = Impact::None;

    friend bool operator==(const Vector&, const Vector&) = default;
};

/// Base score on the integer tenths scale, so 9.8 is stored as 98.
class BaseScore {
public:
    constexpr BaseScore() = default;
    static constexpr BaseScore from_tenths(int tenths) { return BaseScore(tenths); }

    constexpr int tenths() const noexcept { return tenths_; }
    constexpr double value() const noexcept { return tenths_ / 10.0; }

    friend constexpr auto operator<=>(const BaseScore&, const BaseScore&) = default;

private:
    constexpr explicit BaseScore(int t) : tenths_(t) {}
    int tenths_ = 0;
};

struct ExploitProbability {
    double p = 0.0;
};

namespace weights {

inline double av(AttackVector v) {
    switch (v) {
    case AttackVector::Network: return 0.85;
    case AttackVector::Adjacent: return 0.62;
    case AttackVector::Local: return 0.55;
    case AttackVector::Physical: return 0.2;
    }
    return 0;
}

inline double ac(AttackComplexity v) { return v == AttackComplexity::Low ? 0.77 : 0.44; }

inline double pr(Privileges v, Scope s) {
    switch (v) {
    case Privileges::None: return 0.85;
    case Privileges::Low: return s == Scope::Changed ? 0.68 : 0.62;
    case Privileges::High: return s == Scope::Changed ? 0.5 : 0.27;
    }
    return 0;
}

inline double ui(UserInteraction v) { return v == UserInteraction::None ? 0.85 : 0.62; }

inline double cia(Impact v) {
    switch (v) {
    case Impact::None: return 0.0;
    case Impact::Low: return 0.22;
    case Impact::High: return 0.56;
    }
    return 0;
}

}  // namespace weights

/// Smallest number of tenths whose value is >= raw. The 1e-9 guard is
/// taken off the raw value, so representation noise such as 5.0000000001
/// does not bump a whole tenth.
inline int round_up_tenths(double raw) {
    return static_cast<int>(std::ceil((raw - 1e-9) * 10.0));
}

inline double impact_subscore(const Vector& v) {
    const double iss = 1.0 - (1.0 - weights::cia(v.c)) * (1.0 - weights::cia(v.i)) *
                                 (1.0 - weights::cia(v.a));
    if (v.scope == Scope::Unchanged) return 6.42 * iss;
    return 7.52 * (iss - 0.029) - 3.25 * std::pow(iss - 0.02, 15);
}

inline double exploitability_subscore(const Vector& v) {
    return 8.22 * weights::av(v.av) * weights::ac(v.ac) * weights::pr(v.pr, v.scope) *
           weights::ui(v.ui);
}

inline BaseScore base_score(const Vector& v) {
    const double impact = impact_subscore(v);
    if (impact <= 0.0) return BaseScore::from_tenths(0);
    const double sum = impact + exploitability_subscore(v);
    const double raw = v.scope == Scope::Unchanged ? std::min(sum, 10.0)
                                                   : std::min(1.08 * sum, 10.0);
    return BaseScore::from_tenths(round_up_tenths(raw));
}

inline ExploitProbability exploit_probability(BaseScore s) {
    return {s.tenths() / 100.0};
}

namespace detail {

struct Metric {
    std::string_view key;
    std::vector<std::string_view> values;
};

inline const std::array<Metric, 8>& metrics() {
    static const std::array<Metric, 8> table{{
        {"AV", {"N", "A", "L", "P"}},
        {"AC", {"L", "H"}},
        {"PR", {"N", "L", "H"}},
        {"UI", {"N", "R"}},
        {"S", {"U", "C"}},
        {"C", {"N", "L", "H"}},
        {"I", {"N", "L", "H"}},
        {"A", {"N", "L", "H"}},
    }};
    return table;
}

}  // namespace detail

/// Parses `AV:N/AC:L/...` in any order, optionally prefixed by `CVSS:3.0/`
/// (or `CVSS:3.1/`, whose base metrics are identical).
inline Vector parse_vector(std::string_view text) {
    if (text.starts_with("CVSS:3.0/") || text.starts_with("CVSS:3.1/")) text.remove_prefix(9);
    std::array<int, 8> chosen;
    chosen.fill(-1);
    const auto& table = detail::metrics();
    while (true) {
        const auto slash = text.find('/');
        const auto token = text.substr(0, slash);
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) {
            throw Error(errc::unknown_token, "unknown CVSS token '" + std::string(token) + "'",
                        {{"token", std::string(token)}});
        }
        const auto key = token.substr(0, colon);
        const auto value = token.substr(colon + 1);
        std::size_t m = 0;
        while (m < table.size() && table[m].key != key) ++m;
        if (m == table.size()) {
            throw Error(errc::unknown_token, "unknown CVSS token '" + std::string(token) + "'",
                        {{"token", std::string(token)}});
        }
        if (chosen[m] != -1) {
            throw Error(errc::duplicate_metric, "duplicate CVSS metric " + std::string(key),
                        {{"metric", std::string(key)}});
        }
        int idx = 0;
        while (idx < static_cast<int>(table[m].values.size()) && table[m].values[idx] != value) ++idx;
        if (idx == static_cast<int>(table[m].values.size())) {
            throw Error(errc::unknown_token, "unknown CVSS token '" + std::string(token) + "'",
                        {{"token", std::string(token)}});
        }
        chosen[m] = idx;
        if (slash == std::string_view::npos) break;
        text.remove_prefix(slash + 1);
    }
    for (std::size_t m = 0; m < table.size(); ++m) {
        if (chosen[m] == -1) {
            throw Error(errc::missing_metric, "missing CVSS metric " + std::string(table[m].key),
                        {{"metric", std::string(table[m].key)}});
        }
    }
    Vector v;
    v.av = static_cast<AttackVector>(chosen[0]);
    v.ac = static_cast<AttackComplexity>(chosen[1]);
    v.pr = static_cast<Privileges>(chosen[2]);
    v.ui = static_cast<UserInteraction>(chosen[3]);
    v.scope = static_cast<Scope>(chosen[4]);
    v.c = static_cast<Impact>(chosen[5]);
    v.i = static_cast<Impact>(chosen[6]);
    v.a = static_cast<Impact>(chosen[7]);
    return v;
}

/// Canonical form: `CVSS:3.0/` prefix, metrics in standard order.
inline std::string format_vector(const Vector& v) {
    const auto& t = detail::metrics();
    const int idx[8] = {static_cast<int>(v.av), static_cast<int>(v.ac), static_cast<int>(v.pr),
                        static_cast<int>(v.ui), static_cast<int>(v.scope), static_cast<int>(v.c),
                        static_cast<int>(v.i),  static_cast<int>(v.a)};
    std::string out = "CVSS:3.0";
    for (std::size_t m = 0; m < t.size(); ++m) {
        out += '/';
        out += t[m].key;
        out += ':';
        out += t[m].values[idx[m]];
    }
    return out;
}

inline std::string format_score(BaseScore s) {
    return std::to_string(s.tenths() / 10) + "." + std::to_string(s.tenths() % 10);
}

/// Every one of the 2592 base vectors (4*2*3*2*2*3*3*3), in lexicographic metric order.
inline std::vector<Vector> all_vectors() {
    std::vector<Vector> out;
    out.reserve(2592);
    for (int av = 0; av < 4; ++av)
        for (int ac = 0; ac < 2; ++ac)
            for (int pr = 0; pr < 3; ++pr)
                for (int ui = 0; ui < 2; ++ui)
                    for (int s = 0; s < 2; ++s)
                        for (int c = 0; c < 3; ++c)
                            for (int i = 0; i < 3; ++i)
                                for (int a = 0; a < 3; ++a) {
                                    out.push_back({static_cast<AttackVector>(av),
                                                   static_cast<AttackComplexity>(ac),
                                                   static_cast<Privileges>(pr),
                                                   static_cast<UserInteraction>(ui),
                                                   static_cast<Scope>(s), static_cast<Impact>(c),
                                                   static_cast<Impact>(i), static_cast<Impact>(a)});
                                }
    return out;
}

}  // namespace bsag::cvss
