#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypwalk/config.hpp"

namespace {

using hypwalk::ExperimentSpec;

// Every subcommand shares the same option surface; flags override config
// values, which override defaults.
struct CliState {
    std::string config_path;
    ExperimentSpec flags;  // values captured from the command line
    std::vector<std::string> lambda_raw;
    std::string mu0_raw, phi_raw, checkpoints_raw;
    bool records_flag = false;
};

void add_common_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_path, "config file (key = value lines)");
    cmd->add_option("--group", state.flags.group, "group model, e.g. free:2 or freeproduct:3,3");
    cmd->add_option("--mu0", state.mu0_raw,
                    "step measure, e.g. a:0.3,b:0.2 (inverses filled by symmetry)");
    cmd->add_option("--phi", state.phi_raw, "tilt direction, e.g. a:1.0,b:-1.0");
    cmd->add_option("--metric", state.flags.metric, "word | green-tree | green-ball");
    cmd->add_option("--n", state.flags.n, "walk horizon");
    cmd->add_option("--N", state.flags.N, "trajectory count");
    cmd->add_option("--n-max", state.flags.n_max, "series horizon for exact computations");
    cmd->add_option("--seed", state.flags.seed, "base seed");
    cmd->add_option("--checkpoints", state.checkpoints_raw, "comma-separated checkpoint list");
    cmd->add_option("--lambda", state.lambda_raw, "curve parameter (repeatable)");
    cmd->add_option("--alpha", state.flags.alpha, "Girsanov scaling: lambda = sqrt(alpha/n)");
    cmd->add_option("--method", state.flags.method, "command-specific method switch");
    cmd->add_option("--target", state.flags.target, "derivative target: escape | entropy");
    cmd->add_option("--side", state.flags.side, "finite difference side: central | forward");
    cmd->add_option("--z", state.flags.z, "group element, e.g. abA or x1^2.x2^1");
    cmd->add_option("--R", state.flags.R, "ball radius (default |z| + 15)");
    cmd->add_option("--T", state.flags.T, "series truncation");
    cmd->add_option("--out", state.flags.out_dir, "output directory");
    cmd->add_option("--threads", state.flags.threads, "worker threads (default $HYPWALK_THREADS)");
    cmd->add_option("--profile", state.flags.profile, "verify profile: quick | full");
    cmd->add_option("--engine", state.flags.engine, "oracle covariance engine: convolution | paths");
    cmd->add_flag("--records", state.records_flag, "emit per-trajectory CSV records");
}

std::map<std::string, std::string> parse_pairs(const std::string& raw, const char* what) {
    std::map<std::string, std::string> out;
    if (raw.empty()) return out;
    std::string body = raw;
    if (body.front() != '{') body = "{" + body + "}";
    hypwalk::ExperimentSpec tmp;
    hypwalk::apply_config_text(tmp, std::string(what) + " = " + body, "<cli>");
    return std::string(what) == "mu0" ? tmp.mu0 : tmp.phi;
}

ExperimentSpec assemble(const CLI::App* cmd, const CliState& state, const std::string& command) {
    ExperimentSpec spec;
    if (!state.config_path.empty()) spec = hypwalk::load_config(state.config_path);
    if (!command.empty()) spec.command = command;

    auto set_if = [&](const char* flag, auto member) {
        if (cmd->count(flag) > 0) spec.*member = state.flags.*member;
    };
    set_if("--group", &ExperimentSpec::group);
    set_if("--metric", &ExperimentSpec::metric);
    set_if("--n", &ExperimentSpec::n);
    set_if("--N", &ExperimentSpec::N);
    set_if("--n-max", &ExperimentSpec::n_max);
    set_if("--seed", &ExperimentSpec::seed);
    set_if("--alpha", &ExperimentSpec::alpha);
    set_if("--method", &ExperimentSpec::method);
    set_if("--target", &ExperimentSpec::target);
    set_if("--side", &ExperimentSpec::side);
    set_if("--z", &ExperimentSpec::z);
    set_if("--R", &ExperimentSpec::R);
    set_if("--T", &ExperimentSpec::T);
    set_if("--out", &ExperimentSpec::out_dir);
    set_if("--threads", &ExperimentSpec::threads);
    set_if("--profile", &ExperimentSpec::profile);
    set_if("--engine", &ExperimentSpec::engine);

    if (cmd->count("--mu0") > 0) spec.mu0 = parse_pairs(state.mu0_raw, "mu0");
    if (cmd->count("--phi") > 0) spec.phi = parse_pairs(state.phi_raw, "phi");
    if (cmd->count("--records") > 0) spec.emit_records = state.records_flag;
    if (cmd->count("--checkpoints") > 0) {
        ExperimentSpec tmp;
        hypwalk::apply_config_text(tmp, "checkpoints = [" + state.checkpoints_raw + "]", "<cli>");
        spec.checkpoints = tmp.checkpoints;
    }
    if (cmd->count("--lambda") > 0) {
        spec.lambdas.clear();
        for (const auto& raw : state.lambda_raw) spec.lambdas.push_back(std::stod(raw));
        spec.lambda = spec.lambdas.front();
    }
    if (cmd->count("--threads") == 0) {
        if (const char* env = std::getenv("HYPWALK_THREADS")) {
            try {
                spec.threads = std::max(1, std::stoi(env));
            } catch (const std::exception&) {
                // ignore malformed env, keep default
            }
        }
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random walks on free groups and free products: rate of escape, entropy,\n"
                 "Green metrics and derivative estimators"};
    app.require_subcommand(0, 1);

    static const std::vector<std::pair<std::string, std::string>> kCommands = {
        {"simulate", "run trajectory batches and emit summaries/records"},
        {"oracle", "exact small-n computations (convolutions, covariances, spectra)"},
        {"escape", "Monte Carlo rate of escape"},
        {"entropy", "asymptotic entropy (Green speed or convolution increments)"},
        {"green", "Green metric: tree-exact values, ball brackets, series"},
        {"covariance", "asymptotic correlation sigma"},
        {"derivative", "derivative estimators: fd | sigma | girsanov"},
        {"clt", "joint CLT diagnostics"},
        {"verify", "run the full verification suite"},
    };

    std::map<std::string, CliState> states;
    for (const auto& [name, help] : kCommands) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common_options(cmd, states[name]);
    }
    CliState root_state;
    add_common_options(&app, root_state);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return hypwalk::kExitUsage;
    }

    try {
        ExperimentSpec spec;
        if (app.get_subcommands().empty()) {
            if (root_state.config_path.empty()) {
                std::cerr << "usage: hypwalk <command> [options] or hypwalk --config <file>\n"
                          << "commands: simulate oracle escape entropy green covariance "
                             "derivative clt verify\n";
                return hypwalk::kExitUsage;
            }
            spec = assemble(&app, root_state, "");
        } else {
            CLI::App* sub = app.get_subcommands().front();
            spec = assemble(sub, states[sub->get_name()], sub->get_name());
        }
        return hypwalk::run_command(spec);
    } catch (const hypwalk::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return hypwalk::kExitValidation;
    } catch (const hypwalk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hypwalk::kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hypwalk::kExitNumerical;
    }
}
