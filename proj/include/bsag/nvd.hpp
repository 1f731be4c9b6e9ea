#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bsag/cvss.hpp"
#include "bsag/error.hpp"

namespace bsag::nvd {

inline constexpr const char* kDefaultBaseUrl = "https://services.nvd.nist.gov";
inline constexpr const char* kBaseUrlEnv = "BSAG_NVD_BASE_URL";

inline bool is_cve_id(const std::string& id) {
    static const std::regex pattern(R"(CVE-\d{4}-\d{4,})");
    return std::regex_match(id, pattern);
}

/// Source of raw NVD CVE API 2.0 response bodies. Returns nullopt when the
/// CVE is unknown to the source.
class DataSource {
public:
    virtual ~DataSource() = default;
    virtual std::optional<std::string> response_body(const std::string& cve_id) = 0;
};

/// Recorded responses, one `<CVE-ID>.json` file per CVE.
class FixtureDirectory final : public DataSource {
public:
    explicit FixtureDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<std::string> response_body(const std::string& cve_id) override {
        if (!std::filesystem::is_directory(dir_)) {
            throw Error(errc::provider_unavailable, "fixture directory " + dir_.string() + " not found");
        }
        const auto path = dir_ / (cve_id + ".json");
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

private:
    std::filesystem::path dir_;
};

/// Live NVD REST client. Requests are spaced at least `min_interval` apart
/// and successful bodies are cached for the lifetime of the client.
class HttpSource final : public DataSource {
public:
    explicit HttpSource(std::string base_url = default_base_url(),
                        std::chrono::milliseconds min_interval = std::chrono::milliseconds(6000))
        : base_url_(std::move(base_url)), min_interval_(min_interval) {}

    static std::string default_base_url() {
        if (const char* env = std::getenv(kBaseUrlEnv); env && *env) return env;
        return kDefaultBaseUrl;
    }

    std::optional<std::string> response_body(const std::string& cve_id) override {
        {
            std::shared_lock lock(cache_mutex_);
            if (auto it = cache_.find(cve_id); it != cache_.end()) return it->second;
        }
        throttle();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (base_url_.starts_with("https://")) {
            throw Error(errc::provider_unavailable, "built without TLS support; cannot reach " + base_url_);
        }
#endif
        httplib::Client client(base_url_);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        auto res = client.Get("/rest/json/cves/2.0?cveId=" + cve_id);
        if (!res) {
            throw Error(errc::provider_unavailable,
                        "NVD request failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 404) return std::nullopt;
        if (res->status != 200) {
            throw Error(errc::provider_unavailable, "NVD returned HTTP " + std::to_string(res->status));
        }
        std::unique_lock lock(cache_mutex_);
        cache_[cve_id] = res->body;
        return res->body;
    }

private:
    void throttle() {
        std::unique_lock lock(rate_mutex_);
        const auto now = std::chrono::steady_clock::now();
        if (last_request_ && now - *last_request_ < min_interval_) {
            std::this_thread::sleep_for(min_interval_ - (now - *last_request_));
        }
        last_request_ = std::chrono::steady_clock::now();
    }

    std::string base_url_;
    std::chrono::milliseconds min_interval_;
    std::mutex rate_mutex_;
    std::optional<std::chrono::steady_clock::time_point> last_request_;
    std::shared_mutex cache_mutex_;
    std::map<std::string, std::string> cache_;
};

struct FetchResult {
    std::string cve_id;
    cvss::Vector vector;
    cvss::BaseScore score;              // recomputed locally
    std::optional<double> published;    // as reported by the source
    std::vector<std::string> warnings;  // e.g. "score_mismatch: ..."
};

/// Parses an NVD CVE API 2.0 body. Prefers cvssMetricV31, then V30; within a
/// list, the "Primary" entry wins.
inline FetchResult parse_response(const std::string& cve_id, const std::string& body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::malformed_response, std::string("unparseable NVD response: ") + e.what());
    }
    try {
        const auto& vulns = doc.at("vulnerabilities");
        if (vulns.empty()) throw Error(errc::not_found, "CVE " + cve_id + " not found", {{"id", cve_id}});
        const auto& cve = vulns.at(0).at("cve");
        const auto& metrics = cve.at("metrics");
        for (const char* key : {"cvssMetricV31", "cvssMetricV30"}) {
            if (!metrics.contains(key) || metrics[key].empty()) continue;
            const nlohmann::json* pick = &metrics[key][0];
            for (const auto& m : metrics[key]) {
                if (m.value("type", "") == "Primary") {
                    pick = &m;
                    break;
                }
            }
            const auto& data = pick->at("cvssData");
            FetchResult r;
            r.cve_id = cve_id;
            r.vector = cvss::parse_vector(data.at("vectorString").get<std::string>());
            r.score = cvss::base_score(r.vector);
            if (data.contains("baseScore")) r.published = data["baseScore"].get<double>();
            if (r.published && cvss::round_up_tenths(*r.published) != r.score.tenths()) {
                std::ostringstream w;
                w << "score_mismatch: published " << *r.published << ", recomputed "
                  << cvss::format_score(r.score);
                r.warnings.push_back(w.str());
            }
            return r;
        }
        throw Error(errc::not_found, "CVE " + cve_id + " has no CVSS v3 base metrics", {{"id", cve_id}});
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::malformed_response, std::string("unexpected NVD response shape: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == errc::not_found) throw;
        throw Error(errc::malformed_response, std::string("bad CVSS data in NVD response: ") + e.what());
    }
}

inline FetchResult fetch_cvss(const std::string& cve_id, DataSource& source) {
    if (!is_cve_id(cve_id)) throw Error(errc::not_found, "CVE " + cve_id + " not found", {{"id", cve_id}});
    auto body = source.response_body(cve_id);
    if (!body) throw Error(errc::not_found, "CVE " + cve_id + " not found", {{"id", cve_id}});
    return parse_response(cve_id, *body);
}

}  // namespace bsag::nvd
