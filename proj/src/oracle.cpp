#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qkdplan/errors.hpp"
#include "qkdplan/planner.hpp"

// Exhaustive reference optimum. Kept deliberately naive: route assignments,
// per-link reservation bundles, and per-scenario reservation/on-demand splits
// are all enumerated outright, so none of the solver's shortcuts can leak in
// here. Only the cost-model primitives are shared.

namespace qkdplan {
namespace {

// One joint demand scenario on one link, restricted to one pool: per-claimant
// wavelength demand and the prices at that scenario's parallel count.
struct PoolScenario {
    double prob = 0;
    std::vector<long long> demand;
    std::vector<double> use, od;
};

// True minimum recourse for given reservations: every admissible split of
// every claim, subject to the pool ceiling.
double min_split_cost(const std::vector<long long>& reserved, const PoolScenario& sc,
                      long long cap) {
    const std::size_t m = reserved.size();
    // With a slack ceiling the claims separate; each picks the cheaper of
    // "draw everything possible" and "all on-demand" (the cost is linear in
    // the draw).
    long long want_total = 0;
    for (std::size_t i = 0; i < m; ++i) want_total += std::min(reserved[i], sc.demand[i]);
    if (want_total <= cap) {
        double acc = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double all_od = static_cast<double>(sc.demand[i]) * sc.od[i];
            const long long want = std::min(reserved[i], sc.demand[i]);
            const double drawn = static_cast<double>(want) * sc.use[i] +
                                 static_cast<double>(sc.demand[i] - want) * sc.od[i];
            acc += std::min(all_od, drawn);
        }
        return acc;
    }
    double best = std::numeric_limits<double>::infinity();
    const auto rec = [&](auto&& self, std::size_t i, long long remaining, double acc) -> void {
        if (i == m) {
            best = std::min(best, acc);
            return;
        }
        const long long hi = std::min(std::min(reserved[i], sc.demand[i]), remaining);
        for (long long u = 0; u <= hi; ++u)
            self(self, i + 1, remaining - u,
                 acc + static_cast<double>(u) * sc.use[i] +
                     static_cast<double>(sc.demand[i] - u) * sc.od[i]);
    };
    rec(rec, 0, cap, 0.0);
    return best;
}

struct BundleBest {
    double value = std::numeric_limits<double>::infinity();
    std::vector<long long> reservation;
};

// Cheapest reservation bundle for one pool of one link: odometer over every
// per-claimant reservation up to its peak demand (reserving past peak demand
// is dominated because prices are nonnegative).
BundleBest best_bundle(const std::vector<double>& res_coeff,
                       const std::vector<long long>& peak,
                       const std::vector<PoolScenario>& scenarios, long long cap) {
    double vectors = 1;
    for (long long p : peak) vectors *= static_cast<double>(p + 1);
    if (vectors > 2e6)
        throw ConfigError("oracle: " + std::to_string(vectors) +
                          " reservation bundles on one link is beyond enumeration");
    BundleBest best;
    std::vector<long long> y(peak.size(), 0);
    for (;;) {
        double total = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
            total += static_cast<double>(y[i]) * res_coeff[i];
        for (const auto& sc : scenarios) total += sc.prob * min_split_cost(y, sc, cap);
        if (total < best.value) {
            best.value = total;
            best.reservation = y;
        }
        std::size_t pos = y.size();
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++y[pos] <= peak[pos]) {
                done = false;
                break;
            }
            y[pos] = 0;
        }
        if (done || y.empty()) break;
    }
    return best;
}

} // namespace

OracleResult brute_force_oracle(const Instance& instance, const SolverOptions& options) {
    instance.validate();
    const auto& topo = *instance.topology;
    const auto& reqs = instance.requests;
    if (reqs.size() > 3)
        throw ConfigError("oracle: " + std::to_string(reqs.size()) +
                          " requests exceed the 3-request enumeration limit");

    std::vector<std::vector<std::vector<int>>> cands;
    std::size_t total_cands = 0;
    for (const auto& r : reqs) {
        cands.push_back(k_candidate_paths(topo, r.src, r.dst, options.k_paths));
        total_cands += cands.back().size();
    }
    if (total_cands > 6)
        throw ConfigError("oracle: " + std::to_string(total_cands) +
                          " candidate paths exceed the enumeration limit of 6; lower k_paths");
    double joint = 1;
    for (const auto& r : reqs) joint *= static_cast<double>(r.demand.size());
    if (joint > 1e4)
        throw ConfigError("oracle: " + std::to_string(joint) +
                          " joint demand scenarios exceed the enumeration limit");

    std::vector<long long> pbar, pmax;
    for (const auto& r : reqs) {
        pbar.push_back(parallel_links(r.demand.expected(), instance.params.key_rate_per_link));
        pmax.push_back(parallel_links(r.demand.max_rate(), instance.params.key_rate_per_link));
    }

    // A link's optimum depends only on which requests cross it: reservations
    // off a request's route can never be drawn from, and the objective and
    // ceilings are otherwise separable per link and per pool.
    struct LinkChoice {
        double value = 0;
        BundleBest qkd, km;
    };
    std::map<std::pair<int, std::vector<int>>, LinkChoice> memo;

    const auto link_choice = [&](int link, const std::vector<int>& claimants) -> const LinkChoice& {
        auto it = memo.find({link, claimants});
        if (it != memo.end()) return it->second;
        const double km_len = topo.links()[link].km;
        std::vector<double> res_q, res_k;
        std::vector<long long> peak_q, peak_k;
        for (int r : claimants) {
            const auto res = objective_coefficients(km_len, pbar[r], instance.prices,
                                                    instance.params, Phase::Reservation);
            res_q.push_back(res.per_qkd_wl);
            res_k.push_back(res.per_km_wl);
            peak_q.push_back(kQkdWavelengthsPerParallelLink * pmax[r]);
            peak_k.push_back(kKmWavelengthsPerParallelLink * pmax[r]);
        }
        std::vector<PoolScenario> qkd_sc, km_sc;
        JointScenarioSpace space;
        for (int r : claimants) space.add(reqs[r].id, &reqs[r].demand);
        space.enumerate([&](const std::vector<std::size_t>& idx, double prob) {
            PoolScenario q, k;
            q.prob = k.prob = prob;
            for (std::size_t i = 0; i < claimants.size(); ++i) {
                const int r = claimants[i];
                const long long p = parallel_links(reqs[r].demand.support[idx[i]],
                                                   instance.params.key_rate_per_link);
                const auto use = objective_coefficients(km_len, p, instance.prices,
                                                        instance.params, Phase::Utilization);
                const auto od = objective_coefficients(km_len, p, instance.prices,
                                                       instance.params, Phase::OnDemand);
                q.demand.push_back(kQkdWavelengthsPerParallelLink * p);
                q.use.push_back(use.per_qkd_wl);
                q.od.push_back(od.per_qkd_wl);
                k.demand.push_back(kKmWavelengthsPerParallelLink * p);
                k.use.push_back(use.per_km_wl);
                k.od.push_back(od.per_km_wl);
            }
            qkd_sc.push_back(std::move(q));
            km_sc.push_back(std::move(k));
        });
        LinkChoice choice;
        choice.qkd = best_bundle(res_q, peak_q, qkd_sc, instance.capacities.qkd[link]);
        choice.km = best_bundle(res_k, peak_k, km_sc, instance.capacities.km[link]);
        choice.value = choice.qkd.value + choice.km.value;
        return memo.emplace(std::make_pair(link, claimants), std::move(choice)).first->second;
    };

    const auto path_energy = [&](const std::vector<int>& path) {
        double acc = 0;
        for (std::size_t i = 1; i < path.size(); ++i)
            acc += instance.params.energy(topo.node_name(path[i]));
        return acc;
    };

    OracleResult best;
    best.total = std::numeric_limits<double>::infinity();
    std::vector<int> choice(reqs.size(), 0);
    for (;;) {
        std::vector<std::vector<int>> claimants(topo.links().size());
        double total = 0;
        for (std::size_t r = 0; r < reqs.size(); ++r) {
            const auto& path = cands[r][choice[r]];
            total += path_energy(path);
            for (std::size_t i = 1; i < path.size(); ++i)
                claimants[topo.link_between(path[i - 1], path[i])].push_back(
                    static_cast<int>(r));
        }
        for (std::size_t e = 0; e < claimants.size(); ++e)
            if (!claimants[e].empty())
                total += link_choice(static_cast<int>(e), claimants[e]).value;

        if (total < best.total) {
            best.total = total;
            best.plan.routes.assign(reqs.size(), {});
            best.plan.reservations.assign(reqs.size(), {});
            for (std::size_t r = 0; r < reqs.size(); ++r)
                best.plan.routes[r] = cands[r][choice[r]];
            for (std::size_t e = 0; e < claimants.size(); ++e) {
                if (claimants[e].empty()) continue;
                const LinkChoice& lc = link_choice(static_cast<int>(e), claimants[e]);
                for (std::size_t i = 0; i < claimants[e].size(); ++i)
                    best.plan.reservations[claimants[e][i]][static_cast<int>(e)] =
                        ReservedPair{lc.qkd.reservation[i], lc.km.reservation[i]};
            }
        }

        std::size_t pos = reqs.size();
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++choice[pos] < static_cast<int>(cands[pos].size())) {
                done = false;
                break;
            }
            choice[pos] = 0;
        }
        if (done) break;
    }
    return best;
}

} // namespace qkdplan
