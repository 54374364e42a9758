#include "doctest.h"

#include <vector>

#include "qkdplan/demand.hpp"
#include "qkdplan/errors.hpp"

using namespace qkdplan;

TEST_CASE("uniform distribution spans min..max inclusive") {
    auto d = uniform_distribution(1, 5, 1);
    CHECK(d.support == std::vector<double>{1, 2, 3, 4, 5});
    for (double p : d.probs) CHECK(p == doctest::Approx(0.2));
    CHECK(d.expected() == doctest::Approx(3.0));
    CHECK(d.max_rate() == 5);

    auto h = uniform_distribution(0.5, 2.0, 0.5);
    CHECK(h.support.size() == 4);
    CHECK(h.support.front() == doctest::Approx(0.5));
    CHECK(h.support.back() == doctest::Approx(2.0));
    CHECK(h.expected() == doctest::Approx(1.25));
}

TEST_CASE("uniform distribution rejects bad ranges") {
    CHECK_THROWS_AS(uniform_distribution(1, 5, 0), ConfigError);
    CHECK_THROWS_AS(uniform_distribution(1, 5, -1), ConfigError);
    CHECK_THROWS_AS(uniform_distribution(-1, 5, 1), ConfigError);
    CHECK_THROWS_AS(uniform_distribution(5, 1, 1), ConfigError);
}

TEST_CASE("degenerate distribution is a point mass") {
    auto d = DemandDistribution::degenerate(3);
    d.validate();
    CHECK(d.size() == 1);
    CHECK(d.expected() == 3);
    CHECK(d.max_rate() == 3);
}

TEST_CASE("distribution validation catches structural errors") {
    CHECK_THROWS_AS(DemandDistribution{}.validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{1, 2}, {1.0}}).validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{2, 1}, {0.5, 0.5}}).validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{1, 1}, {0.5, 0.5}}).validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{-1, 1}, {0.5, 0.5}}).validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{1, 2}, {0.5, 0.4}}).validate(), ConfigError);
    CHECK_THROWS_AS((DemandDistribution{{1, 2}, {-0.5, 1.5}}).validate(), ConfigError);
    CHECK_NOTHROW((DemandDistribution{{0, 2}, {0.5, 0.5}}).validate());
}

TEST_CASE("joint scenario space enumerates the full product in a fixed order") {
    DemandDistribution a{{1, 2}, {0.4, 0.6}};
    DemandDistribution b{{10, 20, 30}, {0.2, 0.3, 0.5}};
    JointScenarioSpace space;
    space.add("b", &b); // insertion order must not matter
    space.add("a", &a);

    CHECK(space.cardinality() == 6);
    CHECK(space.entries()[0].first == "a");

    std::vector<std::vector<std::size_t>> seen;
    double total = 0;
    space.enumerate([&](const std::vector<std::size_t>& idx, double p) {
        seen.push_back(idx);
        total += p;
    });
    REQUIRE(seen.size() == 6);
    // First request varies slowest, last fastest.
    CHECK(seen.front() == std::vector<std::size_t>{0, 0});
    CHECK(seen[1] == std::vector<std::size_t>{0, 1});
    CHECK(seen[2] == std::vector<std::size_t>{0, 2});
    CHECK(seen[3] == std::vector<std::size_t>{1, 0});
    CHECK(seen.back() == std::vector<std::size_t>{1, 2});
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("joint scenario space edge cases") {
    JointScenarioSpace empty;
    int visits = 0;
    empty.enumerate([&](const std::vector<std::size_t>& idx, double p) {
        ++visits;
        CHECK(idx.empty());
        CHECK(p == 1.0);
    });
    CHECK(visits == 1);

    DemandDistribution a{{1, 2}, {0.4, 0.6}};
    JointScenarioSpace space;
    space.add("r", &a);
    CHECK_THROWS_AS(space.add("r", &a), ConfigError);

    DemandDistribution b{{1, 2, 3}, {0.2, 0.3, 0.5}};
    space.add("s", &b);
    CHECK_THROWS_AS(space.enumerate([](const auto&, double) {}, 5.0), ConfigError);
}
