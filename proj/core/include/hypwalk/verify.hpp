#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypwalk {

/// One acceptance criterion outcome. `values` carries every number that went
/// into the pass/fail decision so reruns can be compared byte-for-byte.
struct CriterionResult {
    std::string id;
    std::string title;
    bool passed = false;
    std::string detail;
    nlohmann::ordered_json values;
    double wall_ms = 0.0;  // excluded from hashed payloads
};

enum class VerifyProfile { Quick, Full };

struct VerifyOptions {
    VerifyProfile profile = VerifyProfile::Quick;
    std::uint64_t seed = 20240101;
    int threads = 1;
    std::string only;  // run a single criterion id ("C5"); empty = all
};

VerifyProfile parse_profile(const std::string& name);

/// Runs the full criterion suite. Deterministic in (profile, seed); thread
/// count must not change any reported value.
std::vector<CriterionResult> run_verification(const VerifyOptions& opts);

/// JSON payload for the suite, stable across reruns (no timing fields).
nlohmann::ordered_json verification_to_json(const std::vector<CriterionResult>& results);

}  // namespace hypwalk
