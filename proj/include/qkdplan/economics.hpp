#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qkdplan/network.hpp"
#include "qkdplan/planner.hpp"

namespace qkdplan {

// Partition of the provider indices 0..n-1. Members ascend inside each block
// and blocks ascend by first member, so every partition has exactly one
// representation.
struct CoalitionStructure {
    std::vector<std::vector<int>> blocks;

    int num_providers() const;
    int block_of(int provider) const; // -1 when absent
    std::string name() const;         // "{0,1}{2}" style
};

// Every partition of n providers, fully fragmented first and the grand
// coalition last; equal block counts tie-break on the lexicographic block
// label string.
std::vector<CoalitionStructure> all_structures(int n);

// Canonical label string, e.g. "0,0,1": provider i carries the index of its
// block in order of first appearance. Used to address structures in configs.
std::string structure_key(const CoalitionStructure& st);

// Cost of operating each possible coalition on its own.
class EconomicsContext {
public:
    virtual ~EconomicsContext() = default;
    virtual int num_providers() const = 0;
    virtual std::string provider_id(int s) const = 0;
    // coalition holds ascending provider indices; the empty set costs 0.
    virtual double coalition_cost(const std::vector<int>& coalition) = 0;
};

// Planning-driven economics: a coalition pools its members' per-link
// wavelength contributions and plans its members' requests over that pool.
struct CoalitionInstance {
    std::shared_ptr<const Topology> topology;
    std::vector<ChainRequest> requests; // provider fields must be set
    ProviderSet providers;
    PriceTable prices;
    PhysicalParams params;
    SolverOptions options;

    void validate() const;
    PoolCapacities pool_capacities(const std::vector<int>& coalition) const;
    // Sub-problem seen by one coalition. Throws ConfigError when the
    // coalition serves no requests; such coalitions cost 0 by convention.
    Instance sub_instance(const std::vector<int>& coalition) const;
};

class SpEconomics : public EconomicsContext {
public:
    explicit SpEconomics(CoalitionInstance instance);
    int num_providers() const override { return static_cast<int>(inst_.providers.providers.size()); }
    std::string provider_id(int s) const override { return inst_.providers.providers.at(s).id; }
    double coalition_cost(const std::vector<int>& coalition) override;

private:
    CoalitionInstance inst_;
    std::map<unsigned, double> memo_; // keyed by coalition bitmask
};

// Fixed coalition costs for analyses where the characteristic function is
// given instead of planned. Every queried coalition must be present.
class InjectedEconomics : public EconomicsContext {
public:
    InjectedEconomics(std::vector<std::string> provider_ids,
                      std::map<std::vector<int>, double> costs);
    int num_providers() const override { return static_cast<int>(ids_.size()); }
    std::string provider_id(int s) const override { return ids_.at(s); }
    double coalition_cost(const std::vector<int>& coalition) override;

private:
    std::vector<std::string> ids_;
    std::map<std::vector<int>, double> costs_;
};

// Exact Shapley split of v(block) among its members. Subset weights stay in
// exact integer arithmetic; block sizes above 12 are rejected.
std::vector<double> shapley_shares(EconomicsContext& ctx, const std::vector<int>& block);

struct ProviderCostBreakdown {
    std::string id;
    double allocation = 0; // Shapley share, or the standalone cost when alone
    double fees = 0;       // wavelength sharing prices plus cooperation fee
    double total = 0;
};

// Bottom line of each provider under one structure: members of multi-provider
// blocks pay their Shapley share plus sharing fees, loners pay their
// standalone cost. providers[i] must describe context provider i.
std::vector<ProviderCostBreakdown> structure_costs(EconomicsContext& ctx,
                                                   const std::vector<Provider>& providers,
                                                   const CoalitionStructure& st);

// v(S or T together) <= v(S) + v(T) for every disjoint nonempty pair.
// Exhaustive over subsets, so more than 10 providers are rejected.
bool is_subadditive(EconomicsContext& ctx, double tol = 1e-9);

// What the coalition-formation dynamics sees: per-provider bottom lines as a
// function of the coalition structure.
class PayoffSource {
public:
    virtual ~PayoffSource() = default;
    virtual int num_providers() const = 0;
    virtual std::string provider_id(int s) const = 0;
    virtual std::vector<double> costs(const CoalitionStructure& st) = 0;
};

class EconomicsPayoffs : public PayoffSource {
public:
    EconomicsPayoffs(std::shared_ptr<EconomicsContext> ctx, std::vector<Provider> providers);
    int num_providers() const override { return static_cast<int>(providers_.size()); }
    std::string provider_id(int s) const override { return providers_.at(s).id; }
    std::vector<double> costs(const CoalitionStructure& st) override;

private:
    std::shared_ptr<EconomicsContext> ctx_;
    std::vector<Provider> providers_;
    std::map<std::string, std::vector<double>> memo_;
};

// Explicit per-structure cost rows keyed by structure_key().
class InjectedPayoffs : public PayoffSource {
public:
    InjectedPayoffs(std::vector<std::string> provider_ids,
                    std::map<std::string, std::vector<double>> rows);
    int num_providers() const override { return static_cast<int>(ids_.size()); }
    std::string provider_id(int s) const override { return ids_.at(s); }
    std::vector<double> costs(const CoalitionStructure& st) override;

private:
    std::vector<std::string> ids_;
    std::map<std::string, std::vector<double>> rows_;
};

} // namespace qkdplan
