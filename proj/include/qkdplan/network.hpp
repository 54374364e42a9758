#pragma once

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qkdplan/demand.hpp"

namespace qkdplan {

struct Link {
    int a = -1, b = -1; // node indices, a < b
    double km = 0;
};

// Undirected fiber topology. Node ids are arbitrary strings; internally nodes
// are indexed in lexicographic id order so iteration order never depends on
// file order.
class Topology {
public:
    Topology() = default;
    // Validates and normalizes. Throws ConfigError naming the offending
    // element on duplicate nodes or links, dangling endpoints, self-loops, or
    // nonpositive lengths.
    Topology(std::vector<std::string> nodes,
             const std::vector<std::tuple<std::string, std::string, double>>& links);

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::string& node_name(int idx) const { return nodes_.at(idx); }
    int node_index(const std::string& id) const; // throws ConfigError if unknown

    const std::vector<Link>& links() const { return links_; }
    int link_between(int a, int b) const; // -1 when absent
    // (neighbor, link index) pairs in ascending neighbor order.
    const std::vector<std::pair<int, int>>& neighbors(int node) const {
        return adjacency_.at(node);
    }
    std::string link_name(int link) const;

private:
    std::vector<std::string> nodes_;
    std::vector<Link> links_;
    std::vector<std::vector<std::pair<int, int>>> adjacency_;
    std::map<std::pair<int, int>, int> link_index_;
};

Topology load_topology_text(const std::string& json_text);
Topology load_topology_file(const std::string& path);

// One semantic chain request: key material must flow src -> dst.
struct ChainRequest {
    std::string id;
    int src = -1, dst = -1;
    DemandDistribution demand;
    std::string provider; // owning provider id; empty outside coalition runs
};

std::vector<ChainRequest> load_requests_text(const std::string& json_text, const Topology& topo);
std::vector<ChainRequest> load_requests_file(const std::string& path, const Topology& topo);

// An infrastructure provider and what it contributes to a shared pool.
struct Provider {
    std::string id;
    long long qkd_per_link = 0; // QKD wavelengths contributed on every link
    long long km_per_link = 0;  // KM wavelengths contributed on every link
    double qkd_share_price = 0; // sharing fee per contributed QKD wavelength
    double km_share_price = 0;  // sharing fee per contributed KM wavelength
    double coop_fee = 0;        // flat cooperation overhead
    // Per-link contribution overrides, keyed by link index.
    std::map<int, std::pair<long long, long long>> link_overrides;
};

struct ProviderSet {
    std::vector<Provider> providers; // sorted by id
    long long qkd_pool_max = 1000;   // per-link ceiling of the shared QKD pool
    long long km_pool_max = 300;     // per-link ceiling of the shared KM pool
};

ProviderSet load_providers_text(const std::string& json_text, const Topology& topo);
ProviderSet load_providers_file(const std::string& path, const Topology& topo);

// Up to k loop-free src->dst paths (node index sequences), ordered by
// ascending total km, ties by lexicographic node-id sequence. The ordering is
// total, so the result is the true k-prefix of all simple paths. Throws
// SolveError when no path exists, ConfigError for k < 1.
std::vector<std::vector<int>> k_candidate_paths(const Topology& topo, int src, int dst, int k);

} // namespace qkdplan
