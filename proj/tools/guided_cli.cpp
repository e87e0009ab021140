#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "guided/commands.hpp"
#include "guided/config.hpp"
#include "guided/modelclient.hpp"

namespace {

using guided::commands::CommonOptions;
using guided::commands::kExitBackend;
using guided::commands::kExitConfig;

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string out_dir;
};

guided::config::RunConfig load_or_default(const GlobalArgs& args) {
    if (args.config_path.empty()) return {};
    return guided::config::load_config(args.config_path);
}

CommonOptions common_options(const GlobalArgs& args) {
    CommonOptions options;
    options.seed = args.seed;
    options.jobs = args.jobs;
    options.out_dir = args.out_dir;
    return options;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop guided-verifier reasoning toolkit"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Run configuration file (JSON)");
    app.add_option("--seed", args.seed, "RNG seed for stochastic commands");
    app.add_option("--jobs", args.jobs, "Worker threads (0 = logical cores)");
    app.add_option("--out", args.out_dir, "Output directory override");

    std::string rollout_mode = "guided";
    std::string tasks_path;
    auto* rollout = app.add_subcommand("rollout", "Run guided or standalone rollouts over tasks");
    rollout->add_option("--mode", rollout_mode, "guided | standalone");
    rollout->add_option("--tasks", tasks_path, "Task manifest (JSONL)")->required();

    std::string train_mode = "both";
    int epochs = -1;
    auto* train = app.add_subcommand("train", "Toy-policy optimization on the synthetic chain");
    train->add_option("--mode", train_mode, "open | guided | both");
    train->add_option("--epochs", epochs, "Training epochs (default from config)");

    auto* simulate = app.add_subcommand("simulate", "Error-propagation chain sweep");

    std::string problems_path;
    auto* synth = app.add_subcommand("synth", "Dialogue synthesis pipeline");
    synth->add_option("--tasks", problems_path, "Problem manifest (JSONL)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = load_or_default(args);
        const auto options = common_options(args);
        if (rollout->parsed())
            return guided::commands::cmd_rollout(config, tasks_path, rollout_mode, options, std::cout);
        if (train->parsed())
            return guided::commands::cmd_train(config, train_mode, epochs, options, std::cout);
        if (simulate->parsed()) return guided::commands::cmd_simulate(config, options, std::cout);
        if (synth->parsed())
            return guided::commands::cmd_synth(config, problems_path, options, std::cout);
        std::cerr << "no subcommand selected\n";
        return kExitConfig;
    } catch (const guided::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const guided::modelclient::BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBackend;
    }
}
