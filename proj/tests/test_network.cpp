#include "doctest.h"

#include <string>
#include <vector>

#include "qkdplan/errors.hpp"
#include "qkdplan/network.hpp"

using namespace qkdplan;

namespace {

Topology triangle() {
    return Topology({"2", "1", "3"},
                    {{"1", "2", 100}, {"2", "3", 100}, {"1", "3", 200}});
}

} // namespace

TEST_CASE("topology normalizes node and link order") {
    auto t = triangle();
    CHECK(t.num_nodes() == 3);
    CHECK(t.node_name(0) == "1");
    CHECK(t.node_index("3") == 2);
    REQUIRE(t.links().size() == 3);
    // Links sorted by normalized endpoint pair.
    CHECK(t.link_name(0) == "1-2");
    CHECK(t.link_name(1) == "1-3");
    CHECK(t.link_name(2) == "2-3");
    CHECK(t.link_between(2, 1) == 2); // endpoint order is irrelevant
    CHECK(t.link_between(0, 0) == -1);
    const auto& adj = t.neighbors(0);
    REQUIRE(adj.size() == 2);
    CHECK(adj[0] == std::pair<int, int>{1, 0});
    CHECK(adj[1] == std::pair<int, int>{2, 1});
}

TEST_CASE("topology rejects malformed input") {
    CHECK_THROWS_AS(Topology({}, {}), ConfigError);
    CHECK_THROWS_AS(Topology({"A", "A"}, {}), ConfigError);
    CHECK_THROWS_AS(Topology({"A", "B"}, {{"A", "A", 1}}), ConfigError);
    CHECK_THROWS_AS(Topology({"A", "B"}, {{"A", "C", 1}}), ConfigError);
    CHECK_THROWS_AS(Topology({"A", "B"}, {{"A", "B", 0}}), ConfigError);
    CHECK_THROWS_AS(Topology({"A", "B"}, {{"A", "B", 1}, {"B", "A", 2}}), ConfigError);
    CHECK_THROWS_AS(triangle().node_index("nope"), ConfigError);
}

TEST_CASE("topology JSON loader") {
    auto t = load_topology_text(R"({
        "nodes": ["n1", "n2"],
        "links": [{"a": "n1", "b": "n2", "km": 80.5}]
    })");
    CHECK(t.num_nodes() == 2);
    CHECK(t.links()[0].km == doctest::Approx(80.5));
    CHECK_THROWS_AS(load_topology_text("{"), ConfigError);
    CHECK_THROWS_AS(load_topology_text(R"({"nodes": []})"), ConfigError);
}

TEST_CASE("request loader sorts by id and validates") {
    auto t = triangle();
    auto reqs = load_requests_text(R"({
        "requests": [
            {"id": "r2", "src": "2", "dst": "3",
             "demand": {"kind": "table", "support": [1, 2], "probs": [0.5, 0.5]}},
            {"id": "r1", "src": "1", "dst": "3", "provider": "p1",
             "demand": {"kind": "uniform", "min": 1, "max": 3, "step": 1}}
        ]
    })", t);
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[0].id == "r1");
    CHECK(reqs[0].provider == "p1");
    CHECK(reqs[0].demand.support == std::vector<double>{1, 2, 3});
    CHECK(reqs[1].provider.empty());
    CHECK(reqs[1].src == 1);
    CHECK(reqs[1].dst == 2);

    CHECK_THROWS_AS(load_requests_text(R"({"requests": [
        {"id": "x", "src": "1", "dst": "1",
         "demand": {"kind": "uniform", "min": 1, "max": 1, "step": 1}}]})", t),
        ConfigError);
    CHECK_THROWS_AS(load_requests_text(R"({"requests": [
        {"id": "x", "src": "1", "dst": "2", "demand": {"kind": "weird"}}]})", t),
        ConfigError);
    CHECK_THROWS_AS(load_requests_text(R"({"requests": [
        {"id": "x", "src": "1", "dst": "2",
         "demand": {"kind": "uniform", "min": 1, "max": 1, "step": 1}},
        {"id": "x", "src": "2", "dst": "3",
         "demand": {"kind": "uniform", "min": 1, "max": 1, "step": 1}}]})", t),
        ConfigError);
}

TEST_CASE("provider loader applies defaults and overrides") {
    auto t = triangle();
    auto set = load_providers_text(R"({
        "km_max": 300,
        "providers": [
            {"id": "p2", "qkd_per_link": 15, "km_per_link": 55},
            {"id": "p1", "qkd_per_link": 10, "km_per_link": 40,
             "qkd_share_price": 5, "km_share_price": 2, "coop_fee": 100,
             "link_overrides": [{"a": "1", "b": "2", "qkd": 3, "km": 1}]}
        ]
    })", t);
    CHECK(set.qkd_pool_max == 1000);
    CHECK(set.km_pool_max == 300);
    REQUIRE(set.providers.size() == 2);
    CHECK(set.providers[0].id == "p1");
    CHECK(set.providers[0].coop_fee == 100);
    REQUIRE(set.providers[0].link_overrides.count(0) == 1);
    CHECK(set.providers[0].link_overrides.at(0) == std::pair<long long, long long>{3, 1});
    CHECK(set.providers[1].qkd_share_price == 0);

    CHECK_THROWS_AS(load_providers_text(R"({"providers": [
        {"id": "p", "qkd_per_link": -1, "km_per_link": 0}]})", t), ConfigError);
    CHECK_THROWS_AS(load_providers_text(R"({"providers": [
        {"id": "p", "qkd_per_link": 1, "km_per_link": 1,
         "link_overrides": [{"a": "1", "b": "1", "qkd": 1, "km": 1}]}]})", t),
        ConfigError);
}

TEST_CASE("candidate paths come back in total length-then-lex order") {
    auto t = triangle();
    SUBCASE("tie on length broken by node sequence") {
        auto paths = k_candidate_paths(t, t.node_index("1"), t.node_index("3"), 3);
        REQUIRE(paths.size() == 2);
        // Both cost 200 km; [1,2,3] precedes [1,3] lexicographically.
        CHECK(paths[0] == std::vector<int>{0, 1, 2});
        CHECK(paths[1] == std::vector<int>{0, 2});
    }
    SUBCASE("k truncates after ordering") {
        auto paths = k_candidate_paths(t, t.node_index("1"), t.node_index("3"), 1);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0] == std::vector<int>{0, 1, 2});
    }
}

TEST_CASE("candidate paths on a complete graph enumerate every simple path") {
    Topology k4({"A", "B", "C", "D"},
                {{"A", "B", 1}, {"A", "C", 1}, {"A", "D", 1},
                 {"B", "C", 1}, {"B", "D", 1}, {"C", "D", 1}});
    auto paths = k_candidate_paths(k4, 0, 3, 10);
    REQUIRE(paths.size() == 5);
    CHECK(paths[0] == std::vector<int>{0, 3});
    CHECK(paths[1] == std::vector<int>{0, 1, 3});
    CHECK(paths[2] == std::vector<int>{0, 2, 3});
    CHECK(paths[3] == std::vector<int>{0, 1, 2, 3});
    CHECK(paths[4] == std::vector<int>{0, 2, 1, 3});

    auto four = k_candidate_paths(k4, 0, 3, 4);
    CHECK(four.size() == 4);
    CHECK(four[3] == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("candidate path error handling") {
    Topology split({"A", "B", "C", "D"}, {{"A", "B", 1}, {"C", "D", 1}});
    CHECK_THROWS_AS(k_candidate_paths(split, 0, 2, 1), SolveError);
    auto t = triangle();
    CHECK_THROWS_AS(k_candidate_paths(t, 0, 2, 0), ConfigError);
    CHECK_THROWS_AS(k_candidate_paths(t, 0, 0, 1), ConfigError);
}
