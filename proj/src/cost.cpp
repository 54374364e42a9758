#include "qkdplan/cost.hpp"

#include <cmath>

#include "qkdplan/errors.hpp"

namespace qkdplan {
namespace {

// ceil with a 1e-9 snap toward the nearest integer, so exact ratios that
// picked up floating-point noise do not round an extra unit up.
long long snapped_ceil(double q) {
    const double r = std::nearbyint(q);
    if (std::abs(q - r) <= 1e-9) return static_cast<long long>(r);
    return static_cast<long long>(std::ceil(q));
}

void check_link_args(double link_km, long long parallel, double span_km) {
    if (!(link_km > 0)) throw ConfigError("link length must be positive");
    if (parallel < 0) throw ConfigError("parallel link count must be nonnegative");
    if (!(span_km > 0)) throw ConfigError("span length must be positive");
}

} // namespace

const PhasePrices& PriceTable::phase(Phase p) const {
    switch (p) {
    case Phase::Reservation: return r;
    case Phase::Utilization: return e;
    default: return o;
    }
}

std::vector<std::string> PriceTable::validate() const {
    const PhasePrices* phases[] = {&r, &e, &o};
    const char* phase_names[] = {"reservation", "utilization", "on-demand"};
    for (int i = 0; i < 3; ++i) {
        const auto& p = *phases[i];
        for (double v : {p.tx, p.rx, p.km, p.si, p.md, p.ch})
            if (v < 0 || !std::isfinite(v))
                throw ConfigError(std::string("price table: negative or non-finite ") +
                                  phase_names[i] + " price");
    }
    std::vector<std::string> warnings;
    const double* on[] = {&o.tx, &o.rx, &o.km, &o.si, &o.md, &o.ch};
    const double* ut[] = {&e.tx, &e.rx, &e.km, &e.si, &e.md, &e.ch};
    const char* classes[] = {"tx", "rx", "km", "si", "md", "ch"};
    for (int i = 0; i < 6; ++i)
        if (*on[i] < *ut[i])
            warnings.push_back(std::string("price table: on-demand ") + classes[i] +
                               " price below utilization price; reservations will look useless");
    return warnings;
}

void PhysicalParams::validate() const {
    if (!(span_km > 0)) throw ConfigError("physical params: span_km must be positive");
    if (!(key_rate_per_link > 0))
        throw ConfigError("physical params: key_rate_per_link must be positive");
    for (const auto& [node, v] : node_energy)
        if (v < 0 || !std::isfinite(v))
            throw ConfigError("physical params: negative energy cost at node " + node);
}

double PhysicalParams::energy(const std::string& node) const {
    auto it = node_energy.find(node);
    return it == node_energy.end() ? 0.0 : it->second;
}

long long parallel_links(double secret_key_rate, double key_rate_per_link) {
    if (!(key_rate_per_link > 0))
        throw ConfigError("parallel_links: key rate per link must be positive");
    if (secret_key_rate < 0 || !std::isfinite(secret_key_rate))
        throw ConfigError("parallel_links: demand rate must be nonnegative and finite");
    if (secret_key_rate == 0) return 0;
    long long p = snapped_ceil(secret_key_rate / key_rate_per_link);
    return p < 1 ? 1 : p; // any positive demand needs at least one link
}

DeviceCounts per_link_device_counts(double link_km, long long parallel, double span_km) {
    check_link_args(link_km, parallel, span_km);
    const double ratio = link_km / span_km;
    const long long segments = snapped_ceil(ratio); // >= 1 for positive length
    DeviceCounts c;
    c.tx = 2 * parallel * segments;
    c.rx = parallel * segments;
    c.km = snapped_ceil(ratio + 1.0);
    c.si = std::max<long long>(snapped_ceil(ratio - 1.0), 0);
    c.md = segments + c.si;
    return c;
}

double link_channel_cost(double link_km, long long parallel) {
    if (!(link_km > 0)) throw ConfigError("link length must be positive");
    if (parallel < 0) throw ConfigError("parallel link count must be nonnegative");
    return 3.0 * static_cast<double>(parallel) * link_km + link_km;
}

WavelengthCosts objective_coefficients(double link_km, long long parallel,
                                       const PriceTable& prices, const PhysicalParams& params,
                                       Phase phase) {
    const DeviceCounts dev = per_link_device_counts(link_km, parallel, params.span_km);
    const PhasePrices& p = prices.phase(phase);
    WavelengthCosts w;
    w.per_qkd_wl = (static_cast<double>(dev.tx) * p.tx + static_cast<double>(dev.rx) * p.rx) / 3.0 +
                   link_km * p.ch;
    w.per_km_wl = static_cast<double>(dev.km) * p.km + static_cast<double>(dev.si) * p.si +
                  static_cast<double>(dev.md) * p.md + link_km * p.ch;
    return w;
}

} // namespace qkdplan
