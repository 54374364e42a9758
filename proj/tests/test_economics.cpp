#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qkdplan/economics.hpp"
#include "qkdplan/errors.hpp"
#include "qkdplan/rng.hpp"

using namespace qkdplan;

namespace {

PriceTable table_prices() {
    PriceTable t;
    t.r = {1500, 2250, 1200, 150, 300, 1};
    t.e = t.r;
    t.o = {6000, 9000, 3000, 500, 900, 4};
    return t;
}

std::shared_ptr<const Topology> triangle() {
    return std::make_shared<Topology>(
        std::vector<std::string>{"1", "2", "3"},
        std::vector<std::tuple<std::string, std::string, double>>{
            {"1", "2", 160}, {"2", "3", 160}, {"1", "3", 320}});
}

Provider provider(std::string id, long long qkd, long long km) {
    Provider p;
    p.id = std::move(id);
    p.qkd_per_link = qkd;
    p.km_per_link = km;
    return p;
}

ChainRequest request(std::string id, int src, int dst, DemandDistribution d,
                     std::string provider) {
    ChainRequest r;
    r.id = std::move(id);
    r.src = src;
    r.dst = dst;
    r.demand = std::move(d);
    r.provider = std::move(provider);
    return r;
}

CoalitionInstance small_coalition_instance() {
    CoalitionInstance ci;
    ci.topology = triangle();
    ci.providers.providers = {provider("a", 10, 5), provider("b", 10, 5), provider("c", 2, 2)};
    ci.requests = {request("r1", 0, 1, DemandDistribution::degenerate(2), "a"),
                   request("r2", 1, 2, DemandDistribution({1, 2}, {0.5, 0.5}), "b")};
    ci.prices = table_prices();
    return ci;
}

InjectedEconomics two_player_game(double v0, double v1, double v01) {
    return InjectedEconomics({"p1", "p2"},
                             {{{0}, v0}, {{1}, v1}, {{0, 1}, v01}});
}

} // namespace

TEST_CASE("structure basics: name, key, block lookup") {
    CoalitionStructure st;
    st.blocks = {{0, 2}, {1}};
    CHECK(st.num_providers() == 3);
    CHECK(st.block_of(0) == 0);
    CHECK(st.block_of(1) == 1);
    CHECK(st.block_of(2) == 0);
    CHECK(st.block_of(7) == -1);
    CHECK(st.name() == "{0,2}{1}");
    CHECK(structure_key(st) == "0,1,0");

    CoalitionStructure grand;
    grand.blocks = {{0, 1, 2}};
    CHECK(structure_key(grand) == "0,0,0");

    // Out-of-order blocks still map to the canonical key.
    CoalitionStructure swapped;
    swapped.blocks = {{1}, {0, 2}};
    CHECK(structure_key(swapped) == "0,1,0");

    CoalitionStructure broken;
    broken.blocks = {{0}, {0, 1}};
    CHECK_THROWS_AS(structure_key(broken), ConfigError);
    CoalitionStructure oob;
    oob.blocks = {{1}};
    CHECK_THROWS_AS(structure_key(oob), ConfigError);
}

TEST_CASE("all_structures enumerates partitions, fragmented first") {
    const auto one = all_structures(1);
    REQUIRE(one.size() == 1);
    CHECK(structure_key(one[0]) == "0");

    const auto three = all_structures(3);
    REQUIRE(three.size() == 5);
    CHECK(structure_key(three[0]) == "0,1,2");
    CHECK(structure_key(three[1]) == "0,0,1");
    CHECK(structure_key(three[2]) == "0,1,0");
    CHECK(structure_key(three[3]) == "0,1,1");
    CHECK(structure_key(three[4]) == "0,0,0");
    CHECK(three[0].name() == "{0}{1}{2}");
    CHECK(three[1].name() == "{0,1}{2}");
    CHECK(three[2].name() == "{0,2}{1}");
    CHECK(three[3].name() == "{0}{1,2}");
    CHECK(three[4].name() == "{0,1,2}");

    const auto four = all_structures(4);
    CHECK(four.size() == 15); // Bell number
    CHECK(structure_key(four.front()) == "0,1,2,3");
    CHECK(structure_key(four.back()) == "0,0,0,0");

    CHECK_THROWS_AS(all_structures(0), ConfigError);
    CHECK_THROWS_AS(all_structures(13), ConfigError);
}

TEST_CASE("shapley splits the two player game") {
    auto game = two_player_game(10, 20, 24);
    const auto shares = shapley_shares(game, {0, 1});
    REQUIRE(shares.size() == 2);
    CHECK(shares[0] == doctest::Approx(7.0));
    CHECK(shares[1] == doctest::Approx(17.0));

    CHECK_THROWS_AS(shapley_shares(game, {}), ConfigError);
    CHECK_THROWS_AS(shapley_shares(game, {1, 0}), ConfigError);
}

TEST_CASE("shapley ignores a dummy player and stays efficient") {
    // Player 2 always adds exactly 5, so it must be charged exactly 5.
    InjectedEconomics game({"x", "y", "z"}, {{{0}, 10},
                                             {{1}, 20},
                                             {{2}, 5},
                                             {{0, 1}, 24},
                                             {{0, 2}, 15},
                                             {{1, 2}, 25},
                                             {{0, 1, 2}, 29}});
    const auto shares = shapley_shares(game, {0, 1, 2});
    REQUIRE(shares.size() == 3);
    CHECK(shares[0] == doctest::Approx(7.0));
    CHECK(shares[1] == doctest::Approx(17.0));
    CHECK(shares[2] == doctest::Approx(5.0));
    CHECK(shares[0] + shares[1] + shares[2] == doctest::Approx(29.0));
}

TEST_CASE("shapley efficiency holds on random integer games") {
    SubstreamRng rng(20240217, "econ-tests");
    for (int trial = 0; trial < 25; ++trial) {
        std::map<std::vector<int>, double> v;
        double grand = 0;
        for (unsigned mask = 1; mask < 8; ++mask) {
            std::vector<int> members;
            for (int i = 0; i < 3; ++i)
                if (mask & (1u << i)) members.push_back(i);
            const double val = static_cast<double>(rng.below(100000));
            v[members] = val;
            if (mask == 7) grand = val;
        }
        InjectedEconomics game({"a", "b", "c"}, std::move(v));
        const auto shares = shapley_shares(game, {0, 1, 2});
        CHECK(shares[0] + shares[1] + shares[2] == doctest::Approx(grand).epsilon(1e-12));
    }
}

TEST_CASE("shapley reproduces the published two provider split") {
    auto game = two_player_game(2000000.00, 2327169.28, 5453150.96);
    const auto shares = shapley_shares(game, {0, 1});
    CHECK(shares[0] == doctest::Approx(2562990.84));
    CHECK(shares[1] == doctest::Approx(2890160.12));
    CHECK(shares[0] + shares[1] == doctest::Approx(5453150.96));
}

TEST_CASE("injected economics rejects unknown coalitions") {
    auto game = two_player_game(1, 2, 3);
    CHECK(game.coalition_cost({}) == 0.0);
    CHECK(game.coalition_cost({1}) == 2.0);
    CHECK_THROWS_WITH_AS(static_cast<void>(game.coalition_cost({0, 1, 2})),
                         doctest::Contains("{0,1,2}"), ConfigError);
}

TEST_CASE("structure costs add sharing fees only inside real coalitions") {
    auto game = two_player_game(10, 20, 24);
    Provider a = provider("p1", 10, 40);
    a.qkd_share_price = 5;
    a.km_share_price = 2;
    a.coop_fee = 100;
    Provider b = provider("p2", 3, 3);

    CoalitionStructure apart;
    apart.blocks = {{0}, {1}};
    auto rows = structure_costs(game, {a, b}, apart);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "p1");
    CHECK(rows[0].allocation == doctest::Approx(10.0));
    CHECK(rows[0].fees == 0.0);
    CHECK(rows[0].total == doctest::Approx(10.0));
    CHECK(rows[1].total == doctest::Approx(20.0));

    CoalitionStructure together;
    together.blocks = {{0, 1}};
    rows = structure_costs(game, {a, b}, together);
    CHECK(rows[0].allocation == doctest::Approx(7.0));
    CHECK(rows[0].fees == doctest::Approx(230.0)); // 10*5 + 40*2 + 100
    CHECK(rows[0].total == doctest::Approx(237.0));
    CHECK(rows[1].allocation == doctest::Approx(17.0));
    CHECK(rows[1].fees == 0.0);

    CHECK_THROWS_AS(structure_costs(game, {a}, together), ConfigError);
}

TEST_CASE("subadditivity check accepts and rejects") {
    auto good = two_player_game(10, 20, 24);
    CHECK(is_subadditive(good));
    auto bad = two_player_game(1, 1, 3);
    CHECK_FALSE(is_subadditive(bad));
}

TEST_CASE("pool capacities sum contributions with overrides and ceilings") {
    CoalitionInstance ci = small_coalition_instance();
    ci.providers.providers[0].link_overrides[0] = {7, 4};

    auto caps = ci.pool_capacities({0});
    REQUIRE(caps.qkd.size() == 3);
    CHECK(caps.qkd[0] == 7);
    CHECK(caps.km[0] == 4);
    CHECK(caps.qkd[1] == 10);
    CHECK(caps.km[2] == 5);

    caps = ci.pool_capacities({0, 1, 2});
    CHECK(caps.qkd[0] == 7 + 10 + 2);
    CHECK(caps.km[0] == 4 + 5 + 2);
    CHECK(caps.qkd[1] == 22);

    ci.providers.qkd_pool_max = 15;
    ci.providers.km_pool_max = 6;
    caps = ci.pool_capacities({0, 1, 2});
    CHECK(caps.qkd[0] == 15);
    CHECK(caps.km[0] == 6);
    CHECK(caps.qkd[0] <= ci.providers.qkd_pool_max);
}

TEST_CASE("coalition instance validation and sub instances") {
    CoalitionInstance ci = small_coalition_instance();
    CHECK_NOTHROW(ci.validate());

    auto sub = ci.sub_instance({0});
    REQUIRE(sub.requests.size() == 1);
    CHECK(sub.requests[0].id == "r1");
    CHECK(sub.capacities.qkd[0] == 10);

    sub = ci.sub_instance({0, 1});
    CHECK(sub.requests.size() == 2);

    // Provider c serves nothing, so planning for it alone is refused.
    CHECK_THROWS_AS(ci.sub_instance({2}), ConfigError);

    CoalitionInstance orphan = small_coalition_instance();
    orphan.requests.push_back(request("r3", 0, 2, DemandDistribution::degenerate(1), "nobody"));
    CHECK_THROWS_AS(orphan.validate(), ConfigError);

    CoalitionInstance anon = small_coalition_instance();
    anon.requests[0].provider.clear();
    CHECK_THROWS_AS(anon.validate(), ConfigError);
}

TEST_CASE("planned economics: empty and idle coalitions cost nothing") {
    SpEconomics econ(small_coalition_instance());
    CHECK(econ.num_providers() == 3);
    CHECK(econ.provider_id(0) == "a");
    CHECK(econ.coalition_cost({}) == 0.0);
    CHECK(econ.coalition_cost({2}) == 0.0);

    const double va = econ.coalition_cost({0});
    const double vb = econ.coalition_cost({1});
    const double vab = econ.coalition_cost({0, 1});
    CHECK(va > 0);
    CHECK(vb > 0);
    CHECK(vab <= va + vb + 1e-9);
    CHECK(econ.coalition_cost({0}) == va); // memoized value is stable

    // Adding an idle member only widens the pool.
    CHECK(econ.coalition_cost({0, 2}) <= va + 1e-9);
    CHECK(is_subadditive(econ));

    CHECK_THROWS_AS(static_cast<void>(econ.coalition_cost({0, 5})), ConfigError);
}

TEST_CASE("payoff sources agree on provider counts and memoize rows") {
    auto ctx = std::make_shared<SpEconomics>(small_coalition_instance());
    CoalitionInstance ci = small_coalition_instance();
    EconomicsPayoffs payoffs(ctx, ci.providers.providers);
    CHECK(payoffs.num_providers() == 3);
    CHECK(payoffs.provider_id(2) == "c");

    CoalitionStructure st;
    st.blocks = {{0, 1}, {2}};
    const auto row1 = payoffs.costs(st);
    const auto row2 = payoffs.costs(st);
    REQUIRE(row1.size() == 3);
    CHECK(row1 == row2);
    CHECK(row1[2] == 0.0); // idle singleton

    CHECK_THROWS_AS(EconomicsPayoffs(ctx, {ci.providers.providers[0]}), ConfigError);
    CHECK_THROWS_AS(EconomicsPayoffs(nullptr, ci.providers.providers), ConfigError);
}

TEST_CASE("injected payoffs validate rows and resolve keys") {
    std::map<std::string, std::vector<double>> rows = {
        {"0,1", {10, 20}},
        {"0,0", {6, 12}},
    };
    InjectedPayoffs payoffs({"p1", "p2"}, rows);

    CoalitionStructure apart;
    apart.blocks = {{0}, {1}};
    CHECK(payoffs.costs(apart) == std::vector<double>{10, 20});
    CoalitionStructure grand;
    grand.blocks = {{0, 1}};
    CHECK(payoffs.costs(grand) == std::vector<double>{6, 12});

    CoalitionStructure missing;
    missing.blocks = {{0}, {1}, {2}};
    CHECK_THROWS_AS(static_cast<void>(payoffs.costs(missing)), ConfigError);

    rows["0,1"] = {1, 2, 3};
    CHECK_THROWS_AS(InjectedPayoffs({"p1", "p2"}, rows), ConfigError);
}
