#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypwalk/estimators.hpp"
#include "hypwalk/group.hpp"
#include "hypwalk/measure.hpp"

namespace hypwalk {

/// A fully described experiment: the union of config-file keys and CLI flags.
/// CLI flags override file values; `run_command` validates per command.
struct ExperimentSpec {
    std::string command;

    std::string group = "free:2";
    std::map<std::string, std::string> mu0;  // letter token -> decimal literal; empty = uniform
    std::map<std::string, std::string> phi;  // tilt literals; needed by curve commands

    std::string metric = "word";  // word | green-tree | green-ball
    int n = 1000;
    long N = 10000;
    int n_max = 12;
    std::uint64_t seed = 1;
    std::vector<int> checkpoints;
    std::vector<double> lambdas;
    double lambda = 0.05;
    double alpha = 1.0;
    std::string method;           // command-specific algorithm switch
    std::string target = "escape";  // fd derivative target: escape | entropy
    std::string side = "central";   // central | forward
    std::string z;                  // serialized group element
    int R = -1;                     // ball radius (-1: |z| + 15)
    int T = 200;                    // series truncation
    std::string out_dir = "results";
    int threads = 1;
    std::string profile = "quick";
    bool emit_records = false;
    std::string engine = "convolution";  // covariance oracle engine

    GroupModel build_model() const;
    StepMeasure build_measure(const GroupModel& model) const;
    MeasureCurve build_curve(const GroupModel& model) const;  // throws if phi empty
    nlohmann::ordered_json echo() const;
};

/// Parses a config file (`key = value` lines, inline `{a: 0.3}` maps and
/// `[1, 2]` lists, `#` comments). Errors carry file:line anchors.
ExperimentSpec load_config(const std::string& path);

/// Applies config text onto a spec (exposed for tests).
void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& filename);

/// Exit codes: 0 success, 1 usage, 2 validation, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

/// Executes the spec's command, writing result files and a manifest into
/// spec.out_dir. Returns an exit code; prints a one-line summary to stdout.
int run_command(const ExperimentSpec& spec);

}  // namespace hypwalk
