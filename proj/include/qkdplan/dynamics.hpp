#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "qkdplan/economics.hpp"

namespace qkdplan {

// Symmetric cooperation-intent profile: one flag per unordered provider pair,
// packed into a mask. Flag {s,l} up means s and l intend to cooperate.
class StrategyProfile {
public:
    explicit StrategyProfile(int n, std::uint32_t mask = 0);

    static int num_pairs(int n) { return n * (n - 1) / 2; }
    static int pair_index(int s, int l, int n);

    int providers() const { return n_; }
    std::uint32_t mask() const { return mask_; }
    bool flag(int s, int l) const;
    void set_flag(int s, int l, bool v);

private:
    int n_ = 0;
    std::uint32_t mask_ = 0;
};

struct ClosureResult {
    CoalitionStructure structure;
    bool consistent = false; // every within-block pair is flagged
};

// Blocks are the connected components of the flag graph. Consistent profiles
// are exactly those whose components are cliques.
ClosureResult structure_from_profile(const StrategyProfile& profile);

// The one consistent profile whose closure is the given structure.
StrategyProfile profile_for_structure(const CoalitionStructure& st);

// Per-provider costs of a profile's closure structure, cached by mask.
class ProfileCosts {
public:
    explicit ProfileCosts(PayoffSource& payoffs);

    int providers() const { return n_; }
    const std::vector<double>& costs(std::uint32_t mask);
    bool consistent(std::uint32_t mask);

private:
    struct Entry {
        std::vector<double> costs;
        bool consistent = false;
    };
    const Entry& at(std::uint32_t mask);

    PayoffSource& payoffs_;
    int n_ = 0;
    std::map<std::uint32_t, Entry> memo_;
};

// Provider s's cheapest own-flag vector with everyone else's flags fixed,
// returned as the whole deviated profile. Deviations whose closure is
// inconsistent are void (they would conscript a third provider into a block
// it never flagged); the incumbent profile always stays admissible. Cost ties
// prefer fewer partners, then the lexicographically smallest partner set.
std::uint32_t best_response(ProfileCosts& costs, std::uint32_t profile_mask, int provider);

// True when no provider has an admissible strictly improving deviation.
bool is_equilibrium(ProfileCosts& costs, std::uint32_t profile_mask, double tol = 1e-9);

struct TransitionMatrix {
    int n = 0;              // providers
    std::size_t states = 0; // 2^pairs profiles
    std::vector<double> t;  // row-major, states x states
    // Some residual self-loop went negative and the row was rescaled.
    bool renormalized = false;

    double at(std::size_t i, std::size_t j) const { return t[i * states + j]; }
};

// Synchronized revision kernel over all profiles. Each provider revises with
// probability lambda; a move needs every provider whose pairs changed to have
// revised, each endpoint contributing (1 - irrationality) when the new
// profile strictly lowers its cost and irrationality otherwise. The diagonal
// takes the residual mass.
TransitionMatrix transition_matrix(ProfileCosts& costs, double lambda, double irrationality);

struct StationaryResult {
    bool unique = false;    // exactly one recurrent class
    std::vector<double> pi; // full-length; zero off the single class
    std::vector<std::vector<std::size_t>> recurrent_classes;
    std::vector<std::vector<double>> class_pis; // aligned with recurrent_classes
};

StationaryResult stationary_distribution(const TransitionMatrix& T);

struct SimulationResult {
    std::vector<double> occupancy; // per profile mask, fraction of steps
    std::uint32_t final_mask = 0;
    std::uint64_t steps = 0;
};

// Monte-carlo counterpart of the kernel: every provider revises with
// probability lambda and proposes its best response, or a uniformly random
// different own vector with probability irrationality. A pair flag moves only
// when both endpoints revised and proposed the same new value.
SimulationResult simulate_dynamics(ProfileCosts& costs, double lambda, double irrationality,
                                   std::uint64_t steps, std::uint64_t seed,
                                   std::uint32_t initial_mask = 0);

} // namespace qkdplan
