#include "qkdplan/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "qkdplan/rng.hpp"

namespace qkdplan {

SolverOptions tiny_instance_options() {
    SolverOptions opts;
    opts.k_paths = 2; // 3 requests x 2 candidates stays inside the oracle guards
    return opts;
}

namespace {

PriceTable reference_prices() {
    PriceTable t;
    t.r = {1500, 2250, 1200, 150, 300, 1};
    t.e = t.r;
    t.o = {6000, 9000, 3000, 500, 900, 4};
    return t;
}

DemandDistribution random_demand(SubstreamRng& rng) {
    const int sz = 1 + static_cast<int>(rng.below(3));
    std::vector<std::vector<long long>> candidates;
    for (unsigned m = 1; m < 8; ++m) {
        std::vector<long long> vals;
        for (int v = 0; v < 3; ++v)
            if (m & (1u << v)) vals.push_back(v);
        if (static_cast<int>(vals.size()) == sz) candidates.push_back(std::move(vals));
    }
    const auto& support = candidates[rng.below(candidates.size())];
    std::vector<double> probs(support.size());
    double total = 0;
    for (double& p : probs) {
        p = 1.0 + static_cast<double>(rng.below(9));
        total += p;
    }
    for (double& p : probs) p /= total;
    std::vector<double> values(support.begin(), support.end());
    return DemandDistribution(values, probs);
}

} // namespace

Instance random_tiny_instance(std::uint64_t seed, int index) {
    SubstreamRng rng(seed, "selfcheck-" + std::to_string(index));

    const int nn = 4 + static_cast<int>(rng.below(2));
    std::vector<std::string> nodes;
    for (int i = 0; i < nn; ++i) nodes.push_back("n" + std::to_string(i + 1));

    const double lengths[] = {80, 160, 240, 320};
    std::vector<std::tuple<std::string, std::string, double>> links;
    std::set<std::pair<int, int>> present;
    for (int v = 1; v < nn; ++v) {
        const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
        present.insert({p, v});
        links.emplace_back(nodes[p], nodes[v], lengths[rng.below(4)]);
    }
    const int extras = static_cast<int>(rng.below(3));
    for (int t = 0; t < extras; ++t) {
        int a = static_cast<int>(rng.below(nn));
        int b = static_cast<int>(rng.below(nn));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!present.insert({a, b}).second) continue;
        links.emplace_back(nodes[a], nodes[b], lengths[rng.below(4)]);
    }

    Instance inst;
    inst.topology = std::make_shared<Topology>(nodes, links);

    const int nr = 1 + static_cast<int>(rng.below(3));
    long long parallel_total = 0;
    for (int j = 0; j < nr; ++j) {
        ChainRequest r;
        r.id = "r" + std::to_string(j + 1);
        r.src = static_cast<int>(rng.below(nn));
        do {
            r.dst = static_cast<int>(rng.below(nn));
        } while (r.dst == r.src);
        r.demand = random_demand(rng);
        parallel_total += static_cast<long long>(r.demand.max_rate());
        inst.requests.push_back(std::move(r));
    }

    const bool slack = rng.unit() < 0.7;
    inst.capacities = slack ? PoolCapacities::uniform(*inst.topology, 3 * parallel_total,
                                                      parallel_total)
                            : PoolCapacities::uniform(*inst.topology, 0, 0);

    inst.prices = reference_prices();
    inst.params.span_km = 160;
    inst.params.key_rate_per_link = 1;
    for (const auto& n : nodes)
        inst.params.node_energy[n] = static_cast<double>(rng.below(5));
    return inst;
}

OracleCheckReport run_oracle_check(int count, std::uint64_t seed, double tol) {
    const SolverOptions opts = tiny_instance_options();
    OracleCheckReport report;
    report.instances = count;
    for (int i = 0; i < count; ++i) {
        const Instance inst = random_tiny_instance(seed, i);
        const PlanResult solved = solve(inst, opts);
        const OracleResult oracle = brute_force_oracle(inst, opts);

        OracleCheckCase c;
        c.index = i;
        c.solver_total = solved.eval.total;
        c.oracle_total = oracle.total;
        c.rel_diff = std::abs(solved.eval.total - oracle.total) /
                     std::max(1.0, std::abs(oracle.total));
        c.pass = c.rel_diff <= tol;
        if (!c.pass) ++report.failures;
        report.worst_rel = std::max(report.worst_rel, c.rel_diff);
        report.cases.push_back(c);
    }
    return report;
}

} // namespace qkdplan
