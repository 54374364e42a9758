#include "doctest.h"

#include <memory>
#include <tuple>
#include <vector>

#include "qkdplan/errors.hpp"
#include "qkdplan/planner.hpp"

using namespace qkdplan;

namespace {

std::shared_ptr<Topology> single_link_topo(double km = 160) {
    return std::make_shared<Topology>(
        std::vector<std::string>{"n1", "n2"},
        std::vector<std::tuple<std::string, std::string, double>>{{"n1", "n2", km}});
}

PriceTable standard_prices() {
    PriceTable t;
    t.r = {1500, 2250, 1200, 150, 300, 1};
    t.e = t.r;
    t.o = {6000, 9000, 3000, 500, 900, 4};
    return t;
}

ChainRequest request(const Topology& topo, const std::string& id, const std::string& src,
                     const std::string& dst, DemandDistribution dist) {
    ChainRequest r;
    r.id = id;
    r.src = topo.node_index(src);
    r.dst = topo.node_index(dst);
    r.demand = std::move(dist);
    return r;
}

// One request, one 160 km link, demand 3 or 9 at even odds. Only the KM pool
// carries prices (reserve 1, use 1, on-demand 4 per wavelength), so the
// stochastic structure is a bare newsvendor with known bounds.
Instance newsvendor_instance() {
    Instance inst;
    inst.topology = single_link_topo();
    inst.requests = {request(*inst.topology, "r1", "n1", "n2",
                             DemandDistribution{{3, 9}, {0.5, 0.5}})};
    inst.capacities = PoolCapacities::uniform(*inst.topology, 100, 100);
    inst.prices.r.km = 0.5;
    inst.prices.e.km = 0.5;
    inst.prices.o.km = 2;
    return inst;
}

} // namespace

TEST_CASE("link allocation draws high-savings claims first") {
    std::vector<LinkClaim> claims{{5, 5, 1, 4}, {5, 5, 1, 4}};
    auto a = optimal_link_allocation(claims, 6);
    CHECK(a.used == std::vector<long long>{5, 1});
    CHECK(a.cost == doctest::Approx(22));
    CHECK(a.truncated);

    auto slackful = optimal_link_allocation(claims, 10);
    CHECK(slackful.used == std::vector<long long>{5, 5});
    CHECK(slackful.cost == doctest::Approx(10));
    CHECK_FALSE(slackful.truncated);
}

TEST_CASE("link allocation skips claims whose reservation costs more than on-demand") {
    std::vector<LinkClaim> claims{{4, 4, 5, 2}, {3, 3, 1, 4}};
    auto a = optimal_link_allocation(claims, 4);
    CHECK(a.used == std::vector<long long>{0, 3});
    CHECK(a.cost == doctest::Approx(4 * 2 + 3 * 1));
    CHECK_FALSE(a.truncated);
    CHECK_THROWS_AS(optimal_link_allocation(claims, -1), ConfigError);
}

TEST_CASE("deterministic single-request solve reproduces the closed-form cost") {
    Instance inst;
    inst.topology = single_link_topo();
    inst.requests = {request(*inst.topology, "r1", "n1", "n2",
                             DemandDistribution::degenerate(2))};
    inst.capacities = PoolCapacities::uniform(*inst.topology, 10, 10);
    inst.prices = standard_prices();
    inst.params.key_rate_per_link = 2; // one parallel link covers demand 2

    auto res = solve(inst);
    CHECK(res.eval.total == doctest::Approx(17180));
    CHECK(res.eval.first_stage == doctest::Approx(8590));
    CHECK(res.eval.expected_second_stage == doctest::Approx(8590));
    CHECK(res.eval.exact);
    CHECK(res.eval.exhaustive_routes);
    CHECK_FALSE(res.eval.repaired);
    REQUIRE(res.plan.routes.size() == 1);
    const auto& bundle = res.plan.reservations[0].at(0);
    CHECK(bundle.qkd == 3);
    CHECK(bundle.km == 1);
}

TEST_CASE("newsvendor instance hits the known plan, bounds and baseline") {
    Instance inst = newsvendor_instance();

    auto sp = solve(inst);
    CHECK(sp.eval.total == doctest::Approx(15.0));
    CHECK(sp.eval.exact);
    CHECK(sp.plan.reservations[0].at(0).km == 9);
    CHECK(sp.plan.reservations[0].at(0).qkd == 0); // free resource, ties go low

    auto eev = expected_value_plan(inst);
    CHECK(eev.plan.reservations[0].at(0).km == 6); // sized for the mean
    CHECK(eev.eval.total == doctest::Approx(16.5));

    auto ws = wait_and_see_bound(inst);
    CHECK(ws.value == doctest::Approx(12.0));
    CHECK(ws.exact);

    auto od = on_demand_baseline(inst);
    CHECK(od.eval.total == doctest::Approx(24.0));
    CHECK(od.eval.first_stage == 0);

    CHECK(ws.value <= sp.eval.total + 1e-9);
    CHECK(sp.eval.total <= eev.eval.total + 1e-9);
    CHECK(eev.eval.total <= od.eval.total + 1e-9);
}

TEST_CASE("oracle agrees with the solver on the newsvendor instance") {
    Instance inst = newsvendor_instance();
    auto oracle = brute_force_oracle(inst);
    CHECK(oracle.total == doctest::Approx(15.0));
    auto sp = solve(inst);
    CHECK(sp.eval.total == doctest::Approx(oracle.total));
    // Pricing the oracle's own plan must reproduce the oracle's value.
    auto priced = evaluate_plan(inst, oracle.plan);
    CHECK(priced.total == doctest::Approx(oracle.total));
}

TEST_CASE("scenario table matches the expected second stage") {
    Instance inst = newsvendor_instance();
    auto sp = solve(inst);
    auto rows = scenario_costs(inst, sp.plan);
    REQUIRE(rows.size() == 2);
    double acc = 0;
    for (const auto& row : rows) acc += row.probability * row.second_stage;
    CHECK(acc == doctest::Approx(sp.eval.expected_second_stage));
    CHECK(rows[0].second_stage == doctest::Approx(3.0));  // demand 3, all drawn
    CHECK(rows[1].second_stage == doctest::Approx(9.0));  // demand 9, all drawn
}

TEST_CASE("contended pool forces joint pricing and stays above the oracle") {
    Instance inst;
    inst.topology = single_link_topo();
    DemandDistribution coin{{1, 2}, {0.5, 0.5}};
    inst.requests = {request(*inst.topology, "a", "n1", "n2", coin),
                     request(*inst.topology, "b", "n1", "n2", coin)};
    inst.capacities = PoolCapacities::uniform(*inst.topology, 9, 100);
    inst.prices = standard_prices();

    auto sp = solve(inst);
    CHECK(sp.eval.capacity_bound); // both at peak demand want 12 of 9
    CHECK_FALSE(sp.eval.exact);
    auto oracle = brute_force_oracle(inst);
    CHECK(sp.eval.total >= oracle.total - 1e-9);
    auto priced = evaluate_plan(inst, oracle.plan);
    CHECK(priced.total == doctest::Approx(oracle.total));

    auto ws = wait_and_see_bound(inst);
    CHECK(ws.value <= oracle.total + 1e-9);
}

TEST_CASE("expected-utilization overflow triggers the repair pass") {
    Instance inst;
    inst.topology = single_link_topo();
    inst.requests = {request(*inst.topology, "a", "n1", "n2",
                             DemandDistribution::degenerate(2)),
                     request(*inst.topology, "b", "n1", "n2",
                             DemandDistribution::degenerate(2))};
    inst.capacities = PoolCapacities::uniform(*inst.topology, 100, 3);
    inst.prices = standard_prices();

    auto sp = solve(inst);
    CHECK(sp.eval.repaired);
    CHECK_FALSE(sp.eval.exact);
    const long long km_total = sp.plan.reservations[0].at(0).km +
                               sp.plan.reservations[1].at(0).km;
    CHECK(km_total == 3);
    // The trimmed plan is still optimal here; the oracle confirms it.
    auto oracle = brute_force_oracle(inst);
    CHECK(sp.eval.total == doctest::Approx(oracle.total));
}

TEST_CASE("zero capacity pushes everything on demand") {
    Instance inst = newsvendor_instance();
    inst.capacities = PoolCapacities::uniform(*inst.topology, 0, 0);
    auto sp = solve(inst);
    CHECK(sp.eval.first_stage == 0);
    CHECK(sp.eval.total == doctest::Approx(24.0));
    CHECK(sp.eval.exact);
    auto oracle = brute_force_oracle(inst);
    CHECK(sp.eval.total == doctest::Approx(oracle.total));
}

TEST_CASE("plan pricing rejects malformed plans") {
    Instance inst = newsvendor_instance();
    auto sp = solve(inst);

    Plan wrong_route = sp.plan;
    wrong_route.routes[0] = {1, 0};
    CHECK_THROWS_AS(evaluate_plan(inst, wrong_route), ConfigError);

    Plan negative = sp.plan;
    negative.reservations[0].at(0).km = -1;
    CHECK_THROWS_AS(evaluate_plan(inst, negative), ConfigError);

    Plan short_route = sp.plan;
    short_route.routes[0] = {0};
    CHECK_THROWS_AS(evaluate_plan(inst, short_route), ConfigError);
}

TEST_CASE("bound sandwich holds on a slack multi-request triangle") {
    auto topo = std::make_shared<Topology>(
        std::vector<std::string>{"a", "b", "c"},
        std::vector<std::tuple<std::string, std::string, double>>{
            {"a", "b", 120}, {"b", "c", 200}, {"a", "c", 240}});
    Instance inst;
    inst.topology = topo;
    inst.requests = {request(*topo, "r1", "a", "c", DemandDistribution{{1, 2, 3}, {0.3, 0.4, 0.3}}),
                     request(*topo, "r2", "b", "c", DemandDistribution{{1, 4}, {0.6, 0.4}})};
    inst.capacities = PoolCapacities::uniform(*topo, 50, 20);
    inst.prices = standard_prices();

    auto sp = solve(inst);
    CHECK(sp.eval.exact);
    auto ws = wait_and_see_bound(inst);
    CHECK(ws.exact);
    auto eev = expected_value_plan(inst);
    auto od = on_demand_baseline(inst);
    CHECK(ws.value <= sp.eval.total + 1e-9);
    CHECK(sp.eval.total <= eev.eval.total + 1e-9);
    CHECK(sp.eval.total < od.eval.total); // reservations strictly pay off here
}

TEST_CASE("oracle size guards report the offending dimension") {
    auto topo = std::make_shared<Topology>(
        std::vector<std::string>{"a", "b"},
        std::vector<std::tuple<std::string, std::string, double>>{{"a", "b", 100}});
    Instance inst;
    inst.topology = topo;
    for (int i = 0; i < 4; ++i)
        inst.requests.push_back(request(*topo, "r" + std::to_string(i), "a", "b",
                                        DemandDistribution::degenerate(1)));
    inst.capacities = PoolCapacities::uniform(*topo, 10, 10);
    CHECK_THROWS_WITH_AS(brute_force_oracle(inst), doctest::Contains("3-request"),
                         ConfigError);
}
