#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qkdplan/economics.hpp"
#include "qkdplan/network.hpp"
#include "qkdplan/planner.hpp"

namespace qkdplan {

// Parsed experiment description. Paths inside the config file resolve
// relative to the directory the file lives in.
struct ExperimentConfig {
    std::shared_ptr<const Topology> topology;
    std::vector<ChainRequest> requests;
    bool has_providers = false;
    ProviderSet providers;
    PriceTable prices;
    PhysicalParams params;
    SolverOptions options;

    // Per-link pools for plan/bounds/sweep runs. Filled either from explicit
    // uniform numbers or by pooling every provider's contribution.
    bool has_capacities = false;
    PoolCapacities capacities;

    struct SweepSettings {
        std::string axis; // demand_scale, reserved_qkd, reserved_km, link_cost_scale
        std::vector<double> values;
    };
    bool has_sweep = false;
    SweepSettings sweep;

    struct CoalitionSettings {
        bool enabled = false;
        double lambda = 0.5;
        double irrationality = 0.1;
        std::uint64_t sim_steps = 0; // 0 skips the simulation output
        std::vector<double> fee_scales;

        bool injected = false;
        std::vector<std::string> injected_ids;
        std::map<std::string, std::vector<double>> injected_rows;
    };
    CoalitionSettings coalition;

    bool has_instance() const { return static_cast<bool>(topology); }
    Instance instance() const; // throws ConfigError when pieces are missing
};

ExperimentConfig load_experiment_text(const std::string& json_text, const std::string& base_dir);
ExperimentConfig load_experiment_file(const std::string& path);

// Each runner writes CSV files under out_dir (created if needed) and returns
// a one-line summary for the terminal. Numeric CSV cells use %.10g so a given
// config and seed always reproduce byte-identical files.
std::string run_plan(const ExperimentConfig& config, const std::string& out_dir,
                     bool with_baseline);
std::string run_bounds(const ExperimentConfig& config, const std::string& out_dir);
std::string run_sweep(const ExperimentConfig& config, const std::string& out_dir);
std::string run_coalition(const ExperimentConfig& config, const std::string& out_dir,
                          std::uint64_t seed);

} // namespace qkdplan
