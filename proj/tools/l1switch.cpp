#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "l1switch/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"L1 adaptive control toolkit for switched reference systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string variant = "switched";
    std::vector<double> gammas;
    double dt_flag = 0.0;
    int seed = 0;  // reserved; the pipeline is deterministic

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "scenario configuration (JSON)")->required();
        cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_option("--dt", dt_flag, "integration step override [s]");
        cmd->add_option("--seed", seed, "reserved for future stochastic features");
    };

    CLI::App* certify = app.add_subcommand("certify", "solve and verify a stability certificate");
    add_common(certify, true);
    CLI::App* simulate = app.add_subcommand("simulate", "run the closed loop and emit traces");
    add_common(simulate, true);
    CLI::App* sweep = app.add_subcommand("sweep-gamma", "repeat the scenario across gains");
    add_common(sweep, true);
    sweep->add_option("--gamma", gammas, "adaptation gain (repeatable)")->required();
    CLI::App* demo = app.add_subcommand("aircraft-demo", "built-in transport aircraft study");
    add_common(demo, false);
    demo->add_option("--variant", variant, "switched | fixed")
        ->check(CLI::IsMember({"switched", "fixed"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : l1switch::exit_code::usage;
    }

    const std::optional<double> dt_override =
        dt_flag > 0.0 ? std::optional<double>(dt_flag) : std::nullopt;
    try {
        if (app.got_subcommand(certify)) return l1switch::run_certify(config_path, out_dir);
        if (app.got_subcommand(simulate))
            return l1switch::run_simulate(config_path, out_dir, dt_override);
        if (app.got_subcommand(sweep))
            return l1switch::run_sweep_gamma(config_path, out_dir, gammas, dt_override);
        if (app.got_subcommand(demo))
            return l1switch::run_aircraft_demo(variant, out_dir, dt_override.value_or(1e-4));
    } catch (const l1switch::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return l1switch::exit_code::usage;
    } catch (const l1switch::SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return l1switch::exit_code::violation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return l1switch::exit_code::usage;
    }
    return l1switch::exit_code::usage;
}
