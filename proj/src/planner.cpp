#include "qkdplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

#include "qkdplan/errors.hpp"

namespace qkdplan {

PoolCapacities PoolCapacities::uniform(const Topology& topo, long long qkd_per_link,
                                       long long km_per_link) {
    PoolCapacities c;
    c.qkd.assign(topo.links().size(), qkd_per_link);
    c.km.assign(topo.links().size(), km_per_link);
    return c;
}

void Instance::validate() const {
    if (!topology) throw ConfigError("instance: missing topology");
    if (requests.empty()) throw ConfigError("instance: no requests");
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& r = requests[i];
        if (i > 0 && !(requests[i - 1].id < r.id))
            throw ConfigError("instance: requests not sorted by unique id at \"" + r.id + "\"");
        if (r.src < 0 || r.src >= topology->num_nodes() || r.dst < 0 ||
            r.dst >= topology->num_nodes())
            throw ConfigError("instance: request " + r.id + " references unknown nodes");
        if (r.src == r.dst) throw ConfigError("instance: request " + r.id + " has src == dst");
        r.demand.validate();
    }
    const std::size_t nlinks = topology->links().size();
    if (capacities.qkd.size() != nlinks || capacities.km.size() != nlinks)
        throw ConfigError("instance: capacity vectors must have one entry per link");
    for (std::size_t e = 0; e < nlinks; ++e)
        if (capacities.qkd[e] < 0 || capacities.km[e] < 0)
            throw ConfigError("instance: negative capacity on link " + topology->link_name(
                                  static_cast<int>(e)));
    prices.validate();
    params.validate();
}

namespace {

// One demand scenario of one request as seen from one link: wavelength needs
// and the per-wavelength prices at that scenario's parallel-link count.
struct SupportPoint {
    double prob = 0;
    long long d_qkd = 0, d_km = 0;
    double use_qkd = 0, od_qkd = 0;
    double use_km = 0, od_km = 0;
};

// Everything the solver needs about one (request, link) pair. y/z are the
// QKD/KM reservations that minimize this pair's expected cost when the pool
// never binds; relax_cost is that minimum.
struct Cell {
    double res_qkd = 0, res_km = 0; // reservation price per wavelength
    std::vector<SupportPoint> pts;
    long long d_qkd_max = 0, d_km_max = 0;
    long long y_star = 0, z_star = 0;
    double relax_cost = 0;
};

// Expected second-stage cost of reserving y against the qkd (or km) marginals
// of one cell, ignoring the pool ceiling. Drawing from the reservation only
// happens when it saves money, matching optimal_link_allocation.
double marginal_recourse_qkd(const Cell& c, long long y) {
    double acc = 0;
    for (const auto& p : c.pts) {
        const double sav = std::max(p.od_qkd - p.use_qkd, 0.0);
        acc += p.prob * (static_cast<double>(p.d_qkd) * p.od_qkd -
                         sav * static_cast<double>(std::min(y, p.d_qkd)));
    }
    return acc;
}

double marginal_recourse_km(const Cell& c, long long z) {
    double acc = 0;
    for (const auto& p : c.pts) {
        const double sav = std::max(p.od_km - p.use_km, 0.0);
        acc += p.prob * (static_cast<double>(p.d_km) * p.od_km -
                         sav * static_cast<double>(std::min(z, p.d_km)));
    }
    return acc;
}

class PlannerCore {
public:
    PlannerCore(const Instance& inst, const SolverOptions& opt) : inst_(inst), opt_(opt) {
        pbar_.reserve(inst_.requests.size());
        for (const auto& r : inst_.requests)
            pbar_.push_back(parallel_links(r.demand.expected(), inst_.params.key_rate_per_link));
    }

    void build_candidates() {
        candidates_.clear();
        for (const auto& r : inst_.requests)
            candidates_.push_back(
                k_candidate_paths(*inst_.topology, r.src, r.dst, opt_.k_paths));
    }

    const std::vector<std::vector<std::vector<int>>>& candidates() const { return candidates_; }

    const Cell& cell(int req, int link) {
        auto it = cells_.find({req, link});
        if (it != cells_.end()) return it->second;
        return cells_.emplace(std::make_pair(req, link), make_cell(req, link)).first->second;
    }

    double path_energy(const std::vector<int>& path) const {
        double acc = 0;
        for (std::size_t i = 1; i < path.size(); ++i)
            acc += inst_.params.energy(inst_.topology->node_name(path[i]));
        return acc;
    }

    double path_relax(int req, const std::vector<int>& path) {
        double acc = path_energy(path);
        for (std::size_t i = 1; i < path.size(); ++i)
            acc += cell(req, inst_.topology->link_between(path[i - 1], path[i])).relax_cost;
        return acc;
    }

    Plan make_plan(const std::vector<int>& choice) {
        Plan plan;
        plan.routes.resize(inst_.requests.size());
        plan.reservations.resize(inst_.requests.size());
        for (std::size_t r = 0; r < inst_.requests.size(); ++r) {
            plan.routes[r] = candidates_[r][choice[r]];
            for (std::size_t i = 1; i < plan.routes[r].size(); ++i) {
                const int e =
                    inst_.topology->link_between(plan.routes[r][i - 1], plan.routes[r][i]);
                const Cell& c = cell(static_cast<int>(r), e);
                plan.reservations[r][e] = ReservedPair{c.y_star, c.z_star};
            }
        }
        return plan;
    }

    // Prices a plan exactly. With allow_repair the reservations are first
    // trimmed wherever expected utilization overshoots a pool.
    PlanEvaluation price(Plan& plan, bool allow_repair) {
        const auto& reqs = inst_.requests;
        const auto& topo = *inst_.topology;
        PlanEvaluation ev;
        ev.per_request.resize(reqs.size());
        for (std::size_t r = 0; r < reqs.size(); ++r) ev.per_request[r].id = reqs[r].id;

        // Claimants per link, ascending request index (== id order).
        std::vector<std::vector<int>> claimants(topo.links().size());
        for (std::size_t r = 0; r < reqs.size(); ++r) {
            const auto& path = plan.routes[r];
            for (std::size_t i = 1; i < path.size(); ++i)
                claimants[topo.link_between(path[i - 1], path[i])].push_back(
                    static_cast<int>(r));
        }

        if (allow_repair)
            for (std::size_t e = 0; e < claimants.size(); ++e)
                repair_link(plan, static_cast<int>(e), claimants[e], ev);

        for (std::size_t r = 0; r < reqs.size(); ++r) {
            double fs = path_energy(plan.routes[r]);
            for (const auto& [e, res] : plan.reservations[r]) {
                const Cell& c = cell(static_cast<int>(r), e);
                fs += static_cast<double>(res.qkd) * c.res_qkd +
                      static_cast<double>(res.km) * c.res_km;
            }
            ev.per_request[r].first_stage = fs;
            ev.first_stage += fs;
        }

        for (std::size_t e = 0; e < claimants.size(); ++e)
            if (!claimants[e].empty()) price_link(plan, static_cast<int>(e), claimants[e], ev);

        ev.total = ev.first_stage + ev.expected_second_stage;
        return ev;
    }

private:
    Cell make_cell(int req, int link) {
        const auto& d = inst_.requests[req].demand;
        const double km_len = inst_.topology->links()[link].km;
        Cell c;
        const auto res = objective_coefficients(km_len, pbar_[req], inst_.prices, inst_.params,
                                                Phase::Reservation);
        c.res_qkd = res.per_qkd_wl;
        c.res_km = res.per_km_wl;
        for (std::size_t i = 0; i < d.support.size(); ++i) {
            const long long p =
                parallel_links(d.support[i], inst_.params.key_rate_per_link);
            const auto use =
                objective_coefficients(km_len, p, inst_.prices, inst_.params, Phase::Utilization);
            const auto od =
                objective_coefficients(km_len, p, inst_.prices, inst_.params, Phase::OnDemand);
            SupportPoint sp;
            sp.prob = d.probs[i];
            sp.d_qkd = kQkdWavelengthsPerParallelLink * p;
            sp.d_km = kKmWavelengthsPerParallelLink * p;
            sp.use_qkd = use.per_qkd_wl;
            sp.od_qkd = od.per_qkd_wl;
            sp.use_km = use.per_km_wl;
            sp.od_km = od.per_km_wl;
            c.d_qkd_max = std::max(c.d_qkd_max, sp.d_qkd);
            c.d_km_max = std::max(c.d_km_max, sp.d_km);
            c.pts.push_back(sp);
        }
        // Reserving beyond the pool or beyond peak demand is pure waste, so
        // the scan stops there. Ties keep the smallest reservation.
        double best_y = std::numeric_limits<double>::infinity();
        for (long long y = 0; y <= std::min(c.d_qkd_max, inst_.capacities.qkd[link]); ++y) {
            const double cost = static_cast<double>(y) * c.res_qkd + marginal_recourse_qkd(c, y);
            if (cost < best_y) {
                best_y = cost;
                c.y_star = y;
            }
        }
        double best_z = std::numeric_limits<double>::infinity();
        for (long long z = 0; z <= std::min(c.d_km_max, inst_.capacities.km[link]); ++z) {
            const double cost = static_cast<double>(z) * c.res_km + marginal_recourse_km(c, z);
            if (cost < best_z) {
                best_z = cost;
                c.z_star = z;
            }
        }
        c.relax_cost = best_y + best_z;
        return c;
    }

    // Shrinks reservations on one link until expected utilization fits the
    // pool. Each step drops the unit with the least expected value; total
    // reservation strictly decreases, so the loop terminates.
    void repair_link(Plan& plan, int link, const std::vector<int>& reqs, PlanEvaluation& ev) {
        for (int resource = 0; resource < 2; ++resource) {
            const bool qkd = resource == 0;
            const long long cap =
                qkd ? inst_.capacities.qkd[link] : inst_.capacities.km[link];
            for (;;) {
                double exp_util = 0;
                for (int r : reqs) {
                    const auto& res = plan.reservations[r].at(link);
                    const long long y = qkd ? res.qkd : res.km;
                    for (const auto& p : cell(r, link).pts)
                        exp_util += p.prob * static_cast<double>(
                                                 std::min(y, qkd ? p.d_qkd : p.d_km));
                }
                if (exp_util <= static_cast<double>(cap) + 1e-9) break;
                int victim = -1;
                double victim_value = 0;
                for (int r : reqs) {
                    auto& res = plan.reservations[r].at(link);
                    const long long y = qkd ? res.qkd : res.km;
                    if (y <= 0) continue;
                    const Cell& c = cell(r, link);
                    // Expected saving of the y-th reserved unit, net of its
                    // reservation price.
                    double value = qkd ? -c.res_qkd : -c.res_km;
                    for (const auto& p : c.pts) {
                        const long long d = qkd ? p.d_qkd : p.d_km;
                        const double sav = qkd ? std::max(p.od_qkd - p.use_qkd, 0.0)
                                               : std::max(p.od_km - p.use_km, 0.0);
                        if (d >= y) value += p.prob * sav;
                    }
                    if (victim < 0 || value < victim_value) {
                        victim = r;
                        victim_value = value;
                    }
                }
                if (victim < 0) break;
                auto& res = plan.reservations[victim].at(link);
                (qkd ? res.qkd : res.km) -= 1;
                ev.repaired = true;
            }
        }
    }

    void price_link(const Plan& plan, int link, const std::vector<int>& reqs,
                    PlanEvaluation& ev) {
        // When no scenario can exhaust either pool the requests decouple and
        // the marginal formulas are exact.
        long long worst_qkd = 0, worst_km = 0;
        for (int r : reqs) {
            const auto& res = plan.reservations[r].at(link);
            const Cell& c = cell(r, link);
            worst_qkd += std::min(res.qkd, c.d_qkd_max);
            worst_km += std::min(res.km, c.d_km_max);
        }
        if (worst_qkd <= inst_.capacities.qkd[link] && worst_km <= inst_.capacities.km[link]) {
            for (int r : reqs) {
                const auto& res = plan.reservations[r].at(link);
                const Cell& c = cell(r, link);
                const double cost =
                    marginal_recourse_qkd(c, res.qkd) + marginal_recourse_km(c, res.km);
                ev.per_request[r].expected_second_stage += cost;
                ev.expected_second_stage += cost;
            }
            return;
        }

        // Contended link: enumerate the joint demand scenarios of exactly the
        // requests that cross it and split each pool optimally per scenario.
        JointScenarioSpace space;
        for (int r : reqs) space.add(inst_.requests[r].id, &inst_.requests[r].demand);
        // Entries come back sorted by id, which matches ascending request
        // index because requests are id-sorted.
        space.enumerate(
            [&](const std::vector<std::size_t>& idx, double prob) {
                std::vector<LinkClaim> qkd_claims, km_claims;
                qkd_claims.reserve(reqs.size());
                km_claims.reserve(reqs.size());
                for (std::size_t i = 0; i < reqs.size(); ++i) {
                    const int r = reqs[i];
                    const auto& res = plan.reservations[r].at(link);
                    const SupportPoint& p = cell(r, link).pts[idx[i]];
                    qkd_claims.push_back({res.qkd, p.d_qkd, p.use_qkd, p.od_qkd});
                    km_claims.push_back({res.km, p.d_km, p.use_km, p.od_km});
                }
                const auto qa = optimal_link_allocation(qkd_claims, inst_.capacities.qkd[link]);
                const auto ka = optimal_link_allocation(km_claims, inst_.capacities.km[link]);
                if (qa.truncated || ka.truncated) ev.capacity_bound = true;
                for (std::size_t i = 0; i < reqs.size(); ++i) {
                    const double cq =
                        static_cast<double>(qa.used[i]) * qkd_claims[i].use_cost +
                        static_cast<double>(qkd_claims[i].demand - qa.used[i]) *
                            qkd_claims[i].od_cost;
                    const double ck =
                        static_cast<double>(ka.used[i]) * km_claims[i].use_cost +
                        static_cast<double>(km_claims[i].demand - ka.used[i]) *
                            km_claims[i].od_cost;
                    ev.per_request[reqs[i]].expected_second_stage += prob * (cq + ck);
                    ev.expected_second_stage += prob * (cq + ck);
                }
            },
            opt_.scenario_cap);
    }

    const Instance& inst_;
    const SolverOptions& opt_;
    std::vector<long long> pbar_;
    std::vector<std::vector<std::vector<int>>> candidates_;
    std::map<std::pair<int, int>, Cell> cells_;
};

void check_plan_shape(const Instance& inst, const Plan& plan) {
    const auto& topo = *inst.topology;
    if (plan.routes.size() != inst.requests.size() ||
        plan.reservations.size() != inst.requests.size())
        throw ConfigError("plan: route and reservation counts must match the request count");
    for (std::size_t r = 0; r < inst.requests.size(); ++r) {
        const auto& path = plan.routes[r];
        const auto& req = inst.requests[r];
        if (path.size() < 2 || path.front() != req.src || path.back() != req.dst)
            throw ConfigError("plan: route of request " + req.id +
                              " does not join its endpoints");
        std::set<int> seen(path.begin(), path.end());
        if (seen.size() != path.size())
            throw ConfigError("plan: route of request " + req.id + " revisits a node");
        std::set<int> route_links;
        for (std::size_t i = 1; i < path.size(); ++i) {
            const int e = topo.link_between(path[i - 1], path[i]);
            if (e < 0)
                throw ConfigError("plan: route of request " + req.id + " uses a missing link");
            route_links.insert(e);
        }
        for (const auto& [e, res] : plan.reservations[r]) {
            if (!route_links.count(e))
                throw ConfigError("plan: request " + req.id + " reserves on off-route link " +
                                  topo.link_name(e));
            if (res.qkd < 0 || res.km < 0)
                throw ConfigError("plan: negative reservation for request " + req.id);
        }
    }
}

// Reservation entries exist for every route link so pricing can index freely.
void fill_missing_reservations(const Instance& inst, Plan& plan) {
    for (std::size_t r = 0; r < inst.requests.size(); ++r)
        for (std::size_t i = 1; i < plan.routes[r].size(); ++i) {
            const int e =
                inst.topology->link_between(plan.routes[r][i - 1], plan.routes[r][i]);
            plan.reservations[r].emplace(e, ReservedPair{});
        }
}

} // namespace

LinkAllocation optimal_link_allocation(const std::vector<LinkClaim>& claims,
                                       long long capacity) {
    if (capacity < 0) throw ConfigError("link allocation: negative capacity");
    LinkAllocation out;
    out.used.assign(claims.size(), 0);
    std::vector<std::size_t> order(claims.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = claims[a].od_cost - claims[a].use_cost;
        const double sb = claims[b].od_cost - claims[b].use_cost;
        if (sa != sb) return sa > sb;
        return a < b;
    });
    long long remaining = capacity;
    for (std::size_t i : order) {
        const auto& c = claims[i];
        if (c.reserved < 0 || c.demand < 0)
            throw ConfigError("link allocation: negative claim");
        const double savings = c.od_cost - c.use_cost;
        if (savings < 0) continue; // the reservation is a strictly worse source
        const long long want = std::min(c.reserved, c.demand);
        const long long take = std::min(want, remaining);
        out.used[i] = take;
        remaining -= take;
        if (savings > 0 && take < want) out.truncated = true;
    }
    for (std::size_t i = 0; i < claims.size(); ++i)
        out.cost += static_cast<double>(out.used[i]) * claims[i].use_cost +
                    static_cast<double>(claims[i].demand - out.used[i]) * claims[i].od_cost;
    return out;
}

PlanResult solve(const Instance& instance, const SolverOptions& options) {
    instance.validate();
    PlannerCore core(instance, options);
    core.build_candidates();
    const auto& cands = core.candidates();

    double combos = 1;
    for (const auto& c : cands) combos *= static_cast<double>(c.size());
    const bool exhaustive =
        options.force_exhaustive || combos <= static_cast<double>(options.route_budget);
    if (exhaustive && combos > 1e7)
        throw SolveError("solve: " + std::to_string(combos) +
                         " route combinations is beyond exhaustive reach; lower k_paths");

    PlanResult best;
    bool have_best = false;

    if (exhaustive) {
        // Track the assignment with the smallest capacity-free lower bound.
        // If its priced cost needed no repair and hit no ceiling, that bound
        // is attained and the chosen plan is provably optimal.
        double best_relax = std::numeric_limits<double>::infinity();
        bool relax_clean = false;
        std::vector<int> choice(cands.size(), 0);
        for (;;) {
            double relax = 0;
            for (std::size_t r = 0; r < cands.size(); ++r)
                relax += core.path_relax(static_cast<int>(r), cands[r][choice[r]]);
            Plan plan = core.make_plan(choice);
            PlanEvaluation ev = core.price(plan, true);
            if (!have_best || ev.total < best.eval.total) {
                best = {std::move(plan), ev};
                have_best = true;
            }
            if (relax < best_relax) {
                best_relax = relax;
                relax_clean = !ev.repaired && !ev.capacity_bound;
            }
            std::size_t pos = cands.size();
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
        best.eval.exhaustive_routes = true;
        best.eval.exact = relax_clean;
    } else {
        // Heaviest expected demand routes first, each on its cheapest
        // capacity-free path.
        std::vector<int> order(cands.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ea = instance.requests[a].demand.expected();
            const double eb = instance.requests[b].demand.expected();
            if (ea != eb) return ea > eb;
            return a < b;
        });
        std::vector<int> choice(cands.size(), 0);
        for (int r : order) {
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < cands[r].size(); ++i) {
                const double c = core.path_relax(r, cands[r][i]);
                if (c < best_cost) {
                    best_cost = c;
                    choice[r] = static_cast<int>(i);
                }
            }
        }
        Plan plan = core.make_plan(choice);
        PlanEvaluation ev = core.price(plan, true);
        best = {std::move(plan), ev};
    }
    return best;
}

PlanEvaluation evaluate_plan(const Instance& instance, const Plan& plan,
                             const SolverOptions& options) {
    instance.validate();
    check_plan_shape(instance, plan);
    Plan normalized = plan;
    fill_missing_reservations(instance, normalized);
    PlannerCore core(instance, options);
    return core.price(normalized, false);
}

PlanResult expected_value_plan(const Instance& instance, const SolverOptions& options) {
    instance.validate();
    Instance mean = instance;
    for (auto& r : mean.requests)
        r.demand = DemandDistribution::degenerate(r.demand.expected());
    PlanResult det = solve(mean, options);
    PlanResult out;
    out.plan = det.plan;
    out.eval = evaluate_plan(instance, out.plan, options);
    // The deterministic solve's flags do not transfer; this is a bound plan.
    out.eval.exhaustive_routes = det.eval.exhaustive_routes;
    out.eval.exact = false;
    return out;
}

PlanResult on_demand_baseline(const Instance& instance, const SolverOptions& options) {
    instance.validate();
    PlannerCore core(instance, options);
    core.build_candidates();
    Plan plan;
    plan.routes.resize(instance.requests.size());
    plan.reservations.resize(instance.requests.size());
    for (std::size_t r = 0; r < instance.requests.size(); ++r)
        plan.routes[r] = core.candidates()[r][0];
    fill_missing_reservations(instance, plan);
    PlanResult out;
    out.eval = core.price(plan, false);
    out.plan = std::move(plan);
    return out;
}

WsResult wait_and_see_bound(const Instance& instance, const SolverOptions& options) {
    instance.validate();
    PlannerCore core(instance, options);
    core.build_candidates();
    const auto& topo = *instance.topology;
    const auto& cands = core.candidates();

    // Worst-case pull on each link if every request that could touch it did
    // so at peak demand. If pools still hold, scenarios decouple per request.
    std::vector<long long> pull_qkd(topo.links().size(), 0), pull_km(topo.links().size(), 0);
    for (std::size_t r = 0; r < instance.requests.size(); ++r) {
        const long long pmax = parallel_links(instance.requests[r].demand.max_rate(),
                                              instance.params.key_rate_per_link);
        std::set<int> touched;
        for (const auto& path : cands[r])
            for (std::size_t i = 1; i < path.size(); ++i)
                touched.insert(topo.link_between(path[i - 1], path[i]));
        for (int e : touched) {
            pull_qkd[e] += kQkdWavelengthsPerParallelLink * pmax;
            pull_km[e] += kKmWavelengthsPerParallelLink * pmax;
        }
    }
    bool slack = true;
    for (std::size_t e = 0; e < topo.links().size(); ++e)
        if (pull_qkd[e] > instance.capacities.qkd[e] || pull_km[e] > instance.capacities.km[e])
            slack = false;

    WsResult out;
    if (slack) {
        out.exact = true;
        for (std::size_t r = 0; r < instance.requests.size(); ++r) {
            const auto& dist = instance.requests[r].demand;
            for (std::size_t i = 0; i < dist.support.size(); ++i) {
                const long long p =
                    parallel_links(dist.support[i], instance.params.key_rate_per_link);
                double best = std::numeric_limits<double>::infinity();
                for (const auto& path : cands[r]) {
                    double cost = core.path_energy(path);
                    for (std::size_t h = 1; h < path.size(); ++h) {
                        const int e = topo.link_between(path[h - 1], path[h]);
                        const double km_len = topo.links()[e].km;
                        // Demand is known here, so both coefficient sets sit
                        // at the realized parallel count.
                        const auto res = objective_coefficients(km_len, p, instance.prices,
                                                                instance.params,
                                                                Phase::Reservation);
                        const auto use = objective_coefficients(km_len, p, instance.prices,
                                                                instance.params,
                                                                Phase::Utilization);
                        const auto od = objective_coefficients(km_len, p, instance.prices,
                                                               instance.params, Phase::OnDemand);
                        const double dq =
                            static_cast<double>(kQkdWavelengthsPerParallelLink * p);
                        const double dk =
                            static_cast<double>(kKmWavelengthsPerParallelLink * p);
                        cost += std::min(dq * (res.per_qkd_wl + use.per_qkd_wl),
                                         dq * od.per_qkd_wl) +
                                std::min(dk * (res.per_km_wl + use.per_km_wl),
                                         dk * od.per_km_wl);
                    }
                    best = std::min(best, cost);
                }
                out.value += dist.probs[i] * best;
            }
        }
        return out;
    }

    // Contended pools couple the requests, so solve each joint scenario as
    // its own deterministic instance.
    JointScenarioSpace space;
    for (const auto& r : instance.requests) space.add(r.id, &r.demand);
    out.exact = true;
    space.enumerate(
        [&](const std::vector<std::size_t>& idx, double prob) {
            Instance det = instance;
            for (std::size_t r = 0; r < det.requests.size(); ++r)
                det.requests[r].demand = DemandDistribution::degenerate(
                    instance.requests[r].demand.support[idx[r]]);
            PlanResult sub = solve(det, options);
            out.value += prob * sub.eval.total;
            out.exact = out.exact && sub.eval.exact;
        },
        options.ws_joint_cap);
    return out;
}

std::vector<ScenarioCost> scenario_costs(const Instance& instance, const Plan& plan,
                                         double cap) {
    instance.validate();
    check_plan_shape(instance, plan);
    Plan normalized = plan;
    fill_missing_reservations(instance, normalized);
    SolverOptions opts;
    PlannerCore core(instance, opts);

    const auto& topo = *instance.topology;
    std::vector<std::vector<int>> claimants(topo.links().size());
    for (std::size_t r = 0; r < instance.requests.size(); ++r) {
        const auto& path = normalized.routes[r];
        for (std::size_t i = 1; i < path.size(); ++i)
            claimants[topo.link_between(path[i - 1], path[i])].push_back(static_cast<int>(r));
    }

    // Global scenario index i aligns with request i: both orders are by id.
    JointScenarioSpace space;
    for (const auto& r : instance.requests) space.add(r.id, &r.demand);
    std::vector<ScenarioCost> rows;
    space.enumerate(
        [&](const std::vector<std::size_t>& idx, double prob) {
            ScenarioCost row;
            row.assignment = idx;
            row.probability = prob;
            for (std::size_t e = 0; e < claimants.size(); ++e) {
                if (claimants[e].empty()) continue;
                std::vector<LinkClaim> qkd_claims, km_claims;
                for (int r : claimants[e]) {
                    const auto& res = normalized.reservations[r].at(static_cast<int>(e));
                    const SupportPoint& p = core.cell(r, static_cast<int>(e)).pts[idx[r]];
                    qkd_claims.push_back({res.qkd, p.d_qkd, p.use_qkd, p.od_qkd});
                    km_claims.push_back({res.km, p.d_km, p.use_km, p.od_km});
                }
                row.second_stage +=
                    optimal_link_allocation(qkd_claims, instance.capacities.qkd[e]).cost;
                row.second_stage +=
                    optimal_link_allocation(km_claims, instance.capacities.km[e]).cost;
            }
            rows.push_back(std::move(row));
        },
        cap);
    return rows;
}

} // namespace qkdplan
