#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qkdplan/errors.hpp"
#include "qkdplan/harness.hpp"
#include "qkdplan/selfcheck.hpp"

using namespace qkdplan;

int main(int argc, char** argv) {
    CLI::App app{"Two-stage wavelength planning and coalition analysis for key-distribution "
                 "service chains"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    bool exhaustive = false;
    bool baseline = false;
    int check_count = 50;

    const auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory for CSV files");
        cmd->add_flag("--exhaustive", exhaustive,
                      "force exhaustive route enumeration regardless of budget");
    };

    auto* plan = app.add_subcommand("plan", "solve the two-stage plan and write CSV files");
    add_config(plan);
    plan->add_flag("--baseline", baseline, "also price the all-on-demand baseline");

    auto* bounds = app.add_subcommand("bounds", "wait-and-see and mean-value bounds");
    add_config(bounds);

    auto* sweep = app.add_subcommand("sweep", "re-solve along the configured parameter axis");
    add_config(sweep);

    auto* coalition =
        app.add_subcommand("coalition", "coalition payoffs, stability and revision dynamics");
    add_config(coalition);
    coalition->add_option("--seed", seed, "seed for the dynamics simulation");

    auto* check = app.add_subcommand("oracle-check",
                                     "compare the planner against brute force on random "
                                     "tiny instances");
    check->add_option("--count", check_count, "number of generated instances")
        ->check(CLI::PositiveNumber);
    check->add_option("--seed", seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            const auto report = run_oracle_check(check_count, seed);
            std::printf("oracle-check: instances=%d failures=%d worst_rel=%.3e\n",
                        report.instances, report.failures, report.worst_rel);
            for (const auto& c : report.cases)
                if (!c.pass)
                    std::printf("  instance %d: solver=%.10g oracle=%.10g rel=%.3e\n", c.index,
                                c.solver_total, c.oracle_total, c.rel_diff);
            return report.failures == 0 ? 0 : 1;
        }

        ExperimentConfig cfg = load_experiment_file(config_path);
        if (exhaustive) cfg.options.force_exhaustive = true;

        std::string summary;
        if (plan->parsed())
            summary = run_plan(cfg, out_dir, baseline);
        else if (bounds->parsed())
            summary = run_bounds(cfg, out_dir);
        else if (sweep->parsed())
            summary = run_sweep(cfg, out_dir);
        else if (coalition->parsed())
            summary = run_coalition(cfg, out_dir, seed);
        std::printf("%s\n", summary.c_str());
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SolveError& e) {
        std::fprintf(stderr, "solve error: %s\n", e.what());
        return 3;
    }
}
