#include "otss/runner.hpp"

#include "CLI11.hpp"

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"contextual decision-weight benchmark harness"};
    app.require_subcommand(1);

    otss::cli::RunOptions opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "path to the JSON config")->required();
        sub->add_option("--out", opt.out_root, "output root directory");
        sub->add_option("--jobs", opt.jobs, "worker pool size");
        sub->add_option("--seed-offset", opt.seed_offset, "added to every seed in the config");
    };

    CLI::App* panel = app.add_subcommand("panel", "fit every method per seed, write tables");
    add_common(panel);
    CLI::App* sweep = app.add_subcommand("sweep", "run the configured axis sweep");
    add_common(sweep);
    CLI::App* theory = app.add_subcommand("theory", "run the analytic bound checks");
    add_common(theory);
    theory->add_option("--kappa-scale", opt.kappa_scale,
                       "multiply the analytic gate slope (falsification hook)");
    CLI::App* runtime = app.add_subcommand("runtime", "time the estimators per panel");
    add_common(runtime);

    CLI11_PARSE(app, argc, argv);

    try {
        if (panel->parsed()) return otss::cli::run_panel(opt);
        if (sweep->parsed()) return otss::cli::run_sweep(opt);
        if (theory->parsed()) return otss::cli::run_theory(opt);
        return otss::cli::run_runtime(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
