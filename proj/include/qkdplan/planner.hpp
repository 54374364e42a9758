#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qkdplan/cost.hpp"
#include "qkdplan/demand.hpp"
#include "qkdplan/network.hpp"

namespace qkdplan {

struct SolverOptions {
    int k_paths = 8;               // candidate paths per request
    long long route_budget = 20000; // max route combinations tried exhaustively
    bool force_exhaustive = false;  // enumerate routes even above the budget
    double scenario_cap = 1e6;      // per-link joint scenario guard
    double ws_joint_cap = 1e4;      // wait-and-see per-scenario solve guard
};

// Shared wavelength pool per link. Sizes must match the topology link list.
struct PoolCapacities {
    std::vector<long long> qkd;
    std::vector<long long> km;

    static PoolCapacities uniform(const Topology& topo, long long qkd_per_link,
                                  long long km_per_link);
};

struct Instance {
    std::shared_ptr<const Topology> topology;
    std::vector<ChainRequest> requests; // sorted by id
    PoolCapacities capacities;
    PriceTable prices;
    PhysicalParams params;

    void validate() const;
};

struct ReservedPair {
    long long qkd = 0;
    long long km = 0;
};

// First-stage decision: one route per request plus per-link wavelength
// reservations on that route. reservations[i] is keyed by link index and only
// holds links on routes[i].
struct Plan {
    std::vector<std::vector<int>> routes;
    std::vector<std::map<int, ReservedPair>> reservations;
};

struct RequestBreakdown {
    std::string id;
    double first_stage = 0;           // routing energy plus reservation cost
    double expected_second_stage = 0; // utilization plus on-demand, in expectation
};

struct PlanEvaluation {
    double first_stage = 0;
    double expected_second_stage = 0;
    double total = 0;
    // The solver certified a global optimum over the candidate-path space.
    bool exact = false;
    // A repair pass had to shrink reservations to respect pool capacity.
    bool repaired = false;
    // Some scenario actually hit a pool ceiling during evaluation.
    bool capacity_bound = false;
    bool exhaustive_routes = false;
    std::vector<RequestBreakdown> per_request;
};

struct PlanResult {
    Plan plan;
    PlanEvaluation eval;
};

// Two-stage solve: route selection, advance reservations, expected recourse.
// Routing is restricted to the k shortest candidate paths per request; every
// bound and oracle below shares that decision space.
PlanResult solve(const Instance& instance, const SolverOptions& options = {});

// Prices a fixed plan under the instance distributions. No repair pass; pool
// ceilings show up as truncated utilization, exactly as they would play out.
PlanEvaluation evaluate_plan(const Instance& instance, const Plan& plan,
                             const SolverOptions& options = {});

// One request's stake in a single pool of a single link under one scenario.
struct LinkClaim {
    long long reserved = 0; // wavelengths reserved in stage one
    long long demand = 0;   // wavelengths demanded in the scenario
    double use_cost = 0;    // per wavelength drawn from the reservation
    double od_cost = 0;     // per wavelength bought on demand
};

struct LinkAllocation {
    std::vector<long long> used; // drawn from reservations, aligned with claims
    double cost = 0;
    bool truncated = false; // pool ceiling forced some demand onto on-demand
};

// Cheapest split of each claim between its own reservation and on-demand subject
// to sum(used) <= capacity. Unit claims share one price each, so descending
// savings order is optimal; negative savings draw nothing.
LinkAllocation optimal_link_allocation(const std::vector<LinkClaim>& claims, long long capacity);

// Exhaustive reference optimum over the same decision space as solve().
// Shares no allocation logic with the solver. Throws ConfigError with a size
// report when the instance is too large to enumerate.
struct OracleResult {
    double total = 0;
    Plan plan;
};
OracleResult brute_force_oracle(const Instance& instance, const SolverOptions& options = {});

// Expected cost with demand revealed before any decision. Lower bound on the
// two-stage optimum whenever `exact` comes back true.
struct WsResult {
    double value = 0;
    bool exact = false;
};
WsResult wait_and_see_bound(const Instance& instance, const SolverOptions& options = {});

// Plan for the expectation of demand, then price it under the real
// distribution. Upper bound on the two-stage optimum.
PlanResult expected_value_plan(const Instance& instance, const SolverOptions& options = {});

// Shortest candidate route, no reservations, everything on demand.
PlanResult on_demand_baseline(const Instance& instance, const SolverOptions& options = {});

// Second-stage cost of a plan in every joint demand scenario. assignment[i]
// indexes the support of the i-th request in id order.
struct ScenarioCost {
    std::vector<std::size_t> assignment;
    double probability = 0;
    double second_stage = 0;
};
std::vector<ScenarioCost> scenario_costs(const Instance& instance, const Plan& plan,
                                         double cap = JointScenarioSpace::kDefaultCap);

} // namespace qkdplan
