#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "bsag/aspect.hpp"

namespace bsag {

/// Fixed-point rendering rounded half-up to `digits` decimals. A 1e-9 guard
/// on the scaled value absorbs binary representation error, so 0.5805 prints
/// as 0.581 even though its double is slightly below.
inline std::string format_fixed(double value, int digits = 3) {
    const bool negative = value < 0;
    double scale = 1.0;
    for (int i = 0; i < digits; ++i) scale *= 10.0;
    const auto units = static_cast<std::uint64_t>(std::floor(std::fabs(value) * scale + 0.5 + 1e-9));
    const auto whole = units / static_cast<std::uint64_t>(scale);
    std::string frac = std::to_string(units % static_cast<std::uint64_t>(scale));
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    std::string out = (negative && units != 0) ? "-" : "";
    out += std::to_string(whole);
    if (digits > 0) out += "." + frac;
    return out;
}

/// `{"A1": 0.081, ...}` with ids in ascending numeric order and every value
/// at exactly `digits` decimals. Shared by the CLI and the HTTP service so
/// both surfaces emit identical bytes.
inline std::string probabilities_json(const std::map<AspectId, double>& probs, int digits = 3) {
    std::string out = "{";
    bool first = true;
    for (const auto& [id, p] : probs) {
        if (!first) out += ",";
        first = false;
        out += "\"" + id.str() + "\":" + format_fixed(p, digits);
    }
    return out + "}";
}

}  // namespace bsag
