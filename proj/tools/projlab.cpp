#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "projlab/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"projlab: Monte Carlo experiments on projective structures of the punctured torus"};
    std::string command, config_path, out_dir;
    long long seed = -1;
    int workers = 0;
    app.add_option("command", command, "lyapunov | degree | harmonic | dimension | verify-formula | scan | traceloci | compare")
        ->required();
    app.add_option("--config", config_path, "flat key = value configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--workers", workers, "worker threads (overrides the config)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    projlab::ExperimentConfig cfg;
    try {
        cfg = projlab::load_config(config_path);
    } catch (const projlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return projlab::exit_code(e.kind());
    }
    if (!cfg.command.empty() && cfg.command != command) {
        std::cerr << "error: command mismatch: config names '" << cfg.command << "' but '" << command
                  << "' was requested\n";
        return 2;
    }
    cfg.command = command;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (workers > 0) cfg.workers = workers;
    int status = projlab::run_experiment(cfg, std::cerr);
    if (status == 0) std::cout << cfg.out_dir << "/results.json\n";
    return status;
}
