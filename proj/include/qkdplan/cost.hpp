#pragma once

#include <map>
#include <string>
#include <vector>

namespace qkdplan {

// Procurement phases for network resources: advance reservation, utilization
// of reserved capacity once demand realizes, and on-demand top-up.
enum class Phase { Reservation, Utilization, OnDemand };

struct PhasePrices {
    double tx = 0; // QKD transmitter
    double rx = 0; // QKD receiver (measurement node)
    double km = 0; // key-management device
    double si = 0; // switch insertion
    double md = 0; // multiplexer/demultiplexer pair
    double ch = 0; // channel, per wavelength-km
};

struct PriceTable {
    PhasePrices r, e, o;

    const PhasePrices& phase(Phase p) const;

    // Throws ConfigError on negative prices. Returns warnings for price
    // patterns that are legal but suspicious (on-demand below utilization):
    // those only move optima around, they do not invalidate the model.
    std::vector<std::string> validate() const;
};

// Each parallel QKD link consumes a fixed wavelength bundle: 3 wavelengths on
// the QKD channel plus 1 on the key-management channel.
inline constexpr long long kQkdWavelengthsPerParallelLink = 3;
inline constexpr long long kKmWavelengthsPerParallelLink = 1;

struct PhysicalParams {
    // Distance between the paired transmitters of one measurement segment; a
    // link of length e needs ceil(e / span_km) chained segments.
    double span_km = 160.0;
    // Secret-key rate one parallel link sustains at span_km (kbps).
    double key_rate_per_link = 1.0;
    // Optional per-node energy surcharge applied once per traversed hop that
    // ends at the node. Missing nodes cost 0.
    std::map<std::string, double> node_energy;

    void validate() const;
    double energy(const std::string& node) const;
};

struct DeviceCounts {
    long long tx = 0, rx = 0, km = 0, si = 0, md = 0;
};

// Parallel links needed to sustain `secret_key_rate`: ceil(rate / unit rate),
// 0 exactly when the rate is 0. Quotients within 1e-9 of an integer are
// treated as that integer so config decimals do not buy an extra link.
long long parallel_links(double secret_key_rate, double key_rate_per_link);

// Device complement of one link of given length carrying `parallel` links.
DeviceCounts per_link_device_counts(double link_km, long long parallel, double span_km);

// Channel length consumed on one link: 3 QKD wavelengths per parallel link
// plus 1 KM wavelength, each spanning the whole link.
double link_channel_cost(double link_km, long long parallel);

// Per-wavelength objective coefficients on one link for one phase.
//   per_qkd_wl = (tx + rx device cost at `parallel`) / 3 + km * ch
//   per_km_wl  = km-chain device cost + km * ch
// The 1/3 spreads the transceiver complement over the three QKD wavelengths
// each parallel link occupies.
struct WavelengthCosts {
    double per_qkd_wl = 0;
    double per_km_wl = 0;
};

WavelengthCosts objective_coefficients(double link_km, long long parallel,
                                       const PriceTable& prices,
                                       const PhysicalParams& params, Phase phase);

} // namespace qkdplan
