#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace bsag {

// Every engine failure carries a machine token (snake_case) and an optional
// structured payload naming the offending element.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, nlohmann::json details = nullptr)
        : std::runtime_error(message), code_(std::move(code)), details_(std::move(details)) {}

    const std::string& code() const noexcept { return code_; }
    const nlohmann::json& details() const noexcept { return details_; }

private:
    std::string code_;
    nlohmann::json details_;
};

namespace errc {
inline constexpr const char* cycle_detected = "cycle_detected";
inline constexpr const char* dangling_endpoint = "dangling_endpoint";
inline constexpr const char* kind_mismatch = "kind_mismatch";
inline constexpr const char* duplicate_id = "duplicate_id";
inline constexpr const char* duplicate_edge = "duplicate_edge";
inline constexpr const char* reserved_id = "reserved_id";
inline constexpr const char* invalid_id = "invalid_id";
inline constexpr const char* invalid_aspect = "invalid_aspect";
inline constexpr const char* invalid_graph = "invalid_graph";
inline constexpr const char* unknown_aspect = "unknown_aspect";
inline constexpr const char* missing_metric = "missing_metric";
inline constexpr const char* unknown_token = "unknown_token";
inline constexpr const char* duplicate_metric = "duplicate_metric";
inline constexpr const char* not_found = "not_found";
inline constexpr const char* provider_unavailable = "provider_unavailable";
inline constexpr const char* malformed_response = "malformed_response";
inline constexpr const char* missing_score = "missing_score";
inline constexpr const char* origin_collision = "origin_collision";
inline constexpr const char* invalid_probability = "invalid_probability";
inline constexpr const char* invalid_network = "invalid_network";
inline constexpr const char* assignment_mismatch = "assignment_mismatch";
inline constexpr const char* impossible_evidence = "impossible_evidence";
inline constexpr const char* duplicate_evidence = "duplicate_evidence";
inline constexpr const char* invalid_evidence = "invalid_evidence";
inline constexpr const char* too_large = "too_large";
inline constexpr const char* unknown_scenario = "unknown_scenario";
inline constexpr const char* aspect_set_mismatch = "aspect_set_mismatch";
inline constexpr const char* missing_impact = "missing_impact";
inline constexpr const char* score_mismatch = "score_mismatch";
inline constexpr const char* unknown_field = "unknown_field";
inline constexpr const char* malformed_model = "malformed_model";
inline constexpr const char* invalid_request = "invalid_request";
inline constexpr const char* io_error = "io_error";
inline constexpr const char* internal = "internal";
}  // namespace errc

}  // namespace bsag
