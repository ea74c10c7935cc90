#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hypwalk/estimators.hpp"

namespace hypwalk {

using Json = nlohmann::ordered_json;

/// JSON shape shared by all CLI results:
/// {quantity, method, value, stderr, n, N, seed, metadata}.
Json estimate_to_json(const Estimate& est, const std::string& quantity);

Json clt_report_to_json(const CltReport& report);
std::string clt_report_to_csv(const CltReport& report);

Json fundamental_report_to_json(const FundamentalInequalityReport& report);

/// FNV-1a 64-bit content hash, hex-encoded. Used for manifest entries and the
/// spec echo hash; deterministic across platforms.
std::string content_hash(const std::string& bytes);

struct EmittedFile {
    std::string name;
    std::string hash;
    std::size_t bytes = 0;
};

struct ResultManifest {
    Json spec_echo;
    std::string spec_hash;
    std::vector<EmittedFile> files;
    double wall_ms = 0.0;
    std::string version;

    Json to_json() const;
};

/// Writes every named payload plus manifest.json into `dir` (created if
/// needed). Timing lives only in the manifest, never in hashed payloads.
ResultManifest emit_report(const Json& spec_echo,
                           const std::vector<std::pair<std::string, std::string>>& files,
                           const std::string& dir, double wall_ms);

std::string library_version();

}  // namespace hypwalk
