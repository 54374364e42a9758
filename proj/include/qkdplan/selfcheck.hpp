#pragma once

#include <cstdint>
#include <vector>

#include "qkdplan/planner.hpp"

namespace qkdplan {

// Options every generated tiny instance is solved with. k stays small so the
// whole candidate set fits under the oracle's enumeration guards.
SolverOptions tiny_instance_options();

// Deterministic small random instance: 4 or 5 nodes, at most 3 requests with
// rates up to 2, and per-link pools that are either slack or zero. Those two
// regimes are where the decomposition is provably optimal, which makes
// equality against the oracle a fair expectation.
Instance random_tiny_instance(std::uint64_t seed, int index);

struct OracleCheckCase {
    int index = 0;
    double solver_total = 0;
    double oracle_total = 0;
    double rel_diff = 0;
    bool pass = false;
};

struct OracleCheckReport {
    int instances = 0;
    int failures = 0;
    double worst_rel = 0;
    std::vector<OracleCheckCase> cases;
};

// Solves `count` generated instances with both the planner and the
// brute-force oracle and compares totals at relative tolerance `tol`.
OracleCheckReport run_oracle_check(int count, std::uint64_t seed, double tol = 1e-9);

} // namespace qkdplan
