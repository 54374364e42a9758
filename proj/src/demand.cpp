#include "qkdplan/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "qkdplan/errors.hpp"

namespace qkdplan {

void DemandDistribution::validate() const {
    if (support.empty())
        throw ConfigError("demand distribution: empty support");
    if (support.size() != probs.size())
        throw ConfigError("demand distribution: support and probability lengths differ");
    double sum = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!(support[i] >= 0) || !std::isfinite(support[i]))
            throw ConfigError("demand distribution: negative or non-finite rate at index " +
                              std::to_string(i));
        if (i > 0 && !(support[i] > support[i - 1]))
            throw ConfigError("demand distribution: support not strictly ascending at index " +
                              std::to_string(i));
        if (!(probs[i] >= 0) || !std::isfinite(probs[i]))
            throw ConfigError("demand distribution: negative or non-finite probability at index " +
                              std::to_string(i));
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("demand distribution: probabilities sum to " + std::to_string(sum) +
                          ", expected 1");
}

double DemandDistribution::expected() const {
    double acc = 0;
    for (std::size_t i = 0; i < support.size(); ++i) acc += support[i] * probs[i];
    return acc;
}

double DemandDistribution::max_rate() const {
    return support.empty() ? 0.0 : support.back();
}

DemandDistribution DemandDistribution::degenerate(double rate) {
    return DemandDistribution{{rate}, {1.0}};
}

DemandDistribution uniform_distribution(double min_rate, double max_rate, double step) {
    if (!(step > 0))
        throw ConfigError("uniform demand: step must be positive");
    if (min_rate < 0 || max_rate < min_rate)
        throw ConfigError("uniform demand: need 0 <= min <= max");
    // Snap the point count so that max = min + n*step survives decimal noise.
    const auto count = static_cast<std::size_t>(std::floor((max_rate - min_rate) / step + 1e-9)) + 1;
    DemandDistribution d;
    d.support.reserve(count);
    d.probs.assign(count, 1.0 / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i)
        d.support.push_back(min_rate + static_cast<double>(i) * step);
    d.validate();
    return d;
}

double expected_demand(const DemandDistribution& dist) { return dist.expected(); }

void JointScenarioSpace::add(const std::string& request_id, const DemandDistribution* dist) {
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), request_id,
                                [](const auto& e, const std::string& id) { return e.first < id; });
    if (pos != entries_.end() && pos->first == request_id)
        throw ConfigError("joint scenario space: duplicate request id " + request_id);
    entries_.insert(pos, {request_id, dist});
}

double JointScenarioSpace::cardinality() const {
    double card = 1;
    for (const auto& [id, dist] : entries_) card *= static_cast<double>(dist->size());
    return card;
}

void JointScenarioSpace::enumerate(
    const std::function<void(const std::vector<std::size_t>&, double)>& visit, double cap) const {
    const double card = cardinality();
    if (card > cap)
        throw ConfigError("joint scenario space has " + std::to_string(card) +
                          " combinations, above the cap of " + std::to_string(cap) +
                          "; truncate per-request supports or sample instead");
    std::vector<std::size_t> assignment(entries_.size(), 0);
    // Odometer over supports; the last request varies fastest.
    for (;;) {
        double prob = 1;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            prob *= entries_[i].second->probs[assignment[i]];
        visit(assignment, prob);
        std::size_t pos = entries_.size();
        while (pos > 0) {
            --pos;
            if (++assignment[pos] < entries_[pos].second->size()) break;
            assignment[pos] = 0;
            if (pos == 0) return;
        }
        if (entries_.empty()) return;
    }
}

} // namespace qkdplan
