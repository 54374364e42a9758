#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qkdplan {

// Discrete distribution of one request's secret-key-rate demand (kbps).
struct DemandDistribution {
    std::vector<double> support; // ascending, distinct, nonnegative
    std::vector<double> probs;   // aligned with support, sums to 1

    // Throws ConfigError on any structural violation. Probability sums are
    // accepted within 1e-12 of 1.
    void validate() const;

    double expected() const;
    double max_rate() const;
    std::size_t size() const { return support.size(); }

    static DemandDistribution degenerate(double rate);
};

// Equispaced support {min, min+step, ..., max} with equal probabilities.
DemandDistribution uniform_distribution(double min_rate, double max_rate, double step);

double expected_demand(const DemandDistribution& dist);

// Product space over independent per-request demands. Iteration is
// lexicographic over request ids, each request's support in ascending order,
// so enumeration order is identical across runs.
class JointScenarioSpace {
public:
    static constexpr double kDefaultCap = 1e6;

    // Pointers must outlive the space. Duplicate ids are rejected.
    void add(const std::string& request_id, const DemandDistribution* dist);

    // Product of support sizes, as double so huge spaces stay representable.
    double cardinality() const;

    // Visits every combination once with its joint probability. assignment[i]
    // indexes into entries()[i]'s support. Zero entries yield the single
    // empty assignment with probability 1. Throws ConfigError when
    // cardinality() > cap.
    void enumerate(const std::function<void(const std::vector<std::size_t>&, double)>& visit,
                   double cap = kDefaultCap) const;

    const std::vector<std::pair<std::string, const DemandDistribution*>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, const DemandDistribution*>> entries_; // sorted by id
};

} // namespace qkdplan
