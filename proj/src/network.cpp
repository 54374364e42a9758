#include "qkdplan/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "json.hpp"

#include "qkdplan/errors.hpp"

namespace qkdplan {

using nlohmann::json;

Topology::Topology(std::vector<std::string> nodes,
                   const std::vector<std::tuple<std::string, std::string, double>>& links) {
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i] == nodes[i - 1])
            throw ConfigError("topology: duplicate node id \"" + nodes[i] + "\"");
    nodes_ = std::move(nodes);
    if (nodes_.empty()) throw ConfigError("topology: no nodes");

    adjacency_.assign(nodes_.size(), {});
    std::vector<std::tuple<int, int, double>> resolved;
    resolved.reserve(links.size());
    for (const auto& [na, nb, km] : links) {
        const int a = node_index(na);
        const int b = node_index(nb);
        if (a == b) throw ConfigError("topology: self-loop at node \"" + na + "\"");
        if (!(km > 0) || !std::isfinite(km))
            throw ConfigError("topology: nonpositive length on link " + na + "-" + nb);
        resolved.emplace_back(std::min(a, b), std::max(a, b), km);
    }
    std::sort(resolved.begin(), resolved.end(),
              [](const auto& x, const auto& y) {
                  return std::pair{std::get<0>(x), std::get<1>(x)} <
                         std::pair{std::get<0>(y), std::get<1>(y)};
              });
    for (const auto& [a, b, km] : resolved) {
        if (link_index_.count({a, b}))
            throw ConfigError("topology: duplicate link " + nodes_[a] + "-" + nodes_[b]);
        const int idx = static_cast<int>(links_.size());
        link_index_[{a, b}] = idx;
        links_.push_back(Link{a, b, km});
        adjacency_[a].push_back({b, idx});
        adjacency_[b].push_back({a, idx});
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

int Topology::node_index(const std::string& id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id)
        throw ConfigError("topology: unknown node id \"" + id + "\"");
    return static_cast<int>(it - nodes_.begin());
}

int Topology::link_between(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = link_index_.find({a, b});
    return it == link_index_.end() ? -1 : it->second;
}

std::string Topology::link_name(int link) const {
    const Link& l = links_.at(link);
    return nodes_[l.a] + "-" + nodes_[l.b];
}

namespace {

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": invalid JSON: " + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DemandDistribution parse_demand(const json& j, const std::string& request_id) {
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("request " + request_id + ": demand needs a \"kind\" field");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform") {
        return uniform_distribution(j.at("min").get<double>(), j.at("max").get<double>(),
                                    j.at("step").get<double>());
    }
    if (kind == "table") {
        DemandDistribution d;
        d.support = j.at("support").get<std::vector<double>>();
        d.probs = j.at("probs").get<std::vector<double>>();
        d.validate();
        return d;
    }
    throw ConfigError("request " + request_id + ": unknown demand kind \"" + kind + "\"");
}

} // namespace

Topology load_topology_text(const std::string& json_text) {
    const json doc = parse_json(json_text, "topology");
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
        throw ConfigError("topology: expected an object with \"nodes\" and \"links\"");
    std::vector<std::string> nodes;
    for (const auto& n : doc.at("nodes")) nodes.push_back(n.get<std::string>());
    std::vector<std::tuple<std::string, std::string, double>> links;
    for (const auto& l : doc.at("links"))
        links.emplace_back(l.at("a").get<std::string>(), l.at("b").get<std::string>(),
                           l.at("km").get<double>());
    return Topology(std::move(nodes), links);
}

Topology load_topology_file(const std::string& path) {
    return load_topology_text(slurp(path));
}

std::vector<ChainRequest> load_requests_text(const std::string& json_text, const Topology& topo) {
    const json doc = parse_json(json_text, "requests");
    if (!doc.is_object() || !doc.contains("requests"))
        throw ConfigError("requests: expected an object with a \"requests\" array");
    std::vector<ChainRequest> out;
    for (const auto& r : doc.at("requests")) {
        ChainRequest req;
        req.id = r.at("id").get<std::string>();
        req.src = topo.node_index(r.at("src").get<std::string>());
        req.dst = topo.node_index(r.at("dst").get<std::string>());
        if (req.src == req.dst)
            throw ConfigError("request " + req.id + ": src equals dst");
        req.demand = parse_demand(r.at("demand"), req.id);
        if (r.contains("provider")) req.provider = r.at("provider").get<std::string>();
        out.push_back(std::move(req));
    }
    std::sort(out.begin(), out.end(),
              [](const ChainRequest& x, const ChainRequest& y) { return x.id < y.id; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].id == out[i - 1].id)
            throw ConfigError("requests: duplicate id \"" + out[i].id + "\"");
    return out;
}

std::vector<ChainRequest> load_requests_file(const std::string& path, const Topology& topo) {
    return load_requests_text(slurp(path), topo);
}

ProviderSet load_providers_text(const std::string& json_text, const Topology& topo) {
    const json doc = parse_json(json_text, "providers");
    if (!doc.is_object() || !doc.contains("providers"))
        throw ConfigError("providers: expected an object with a \"providers\" array");
    ProviderSet set;
    if (doc.contains("qkd_max")) set.qkd_pool_max = doc.at("qkd_max").get<long long>();
    if (doc.contains("km_max")) set.km_pool_max = doc.at("km_max").get<long long>();
    if (set.qkd_pool_max < 0 || set.km_pool_max < 0)
        throw ConfigError("providers: pool ceilings must be nonnegative");
    for (const auto& p : doc.at("providers")) {
        Provider prov;
        prov.id = p.at("id").get<std::string>();
        prov.qkd_per_link = p.at("qkd_per_link").get<long long>();
        prov.km_per_link = p.at("km_per_link").get<long long>();
        if (p.contains("qkd_share_price")) prov.qkd_share_price = p.at("qkd_share_price").get<double>();
        if (p.contains("km_share_price")) prov.km_share_price = p.at("km_share_price").get<double>();
        if (p.contains("coop_fee")) prov.coop_fee = p.at("coop_fee").get<double>();
        if (prov.qkd_per_link < 0 || prov.km_per_link < 0)
            throw ConfigError("provider " + prov.id + ": negative wavelength contribution");
        if (prov.qkd_share_price < 0 || prov.km_share_price < 0 || prov.coop_fee < 0)
            throw ConfigError("provider " + prov.id + ": negative fee");
        if (p.contains("link_overrides")) {
            for (const auto& ov : p.at("link_overrides")) {
                const int a = topo.node_index(ov.at("a").get<std::string>());
                const int b = topo.node_index(ov.at("b").get<std::string>());
                const int link = topo.link_between(a, b);
                if (link < 0)
                    throw ConfigError("provider " + prov.id + ": override on missing link " +
                                      ov.at("a").get<std::string>() + "-" +
                                      ov.at("b").get<std::string>());
                const long long q = ov.at("qkd").get<long long>();
                const long long k = ov.at("km").get<long long>();
                if (q < 0 || k < 0)
                    throw ConfigError("provider " + prov.id + ": negative override contribution");
                prov.link_overrides[link] = {q, k};
            }
        }
        set.providers.push_back(std::move(prov));
    }
    std::sort(set.providers.begin(), set.providers.end(),
              [](const Provider& x, const Provider& y) { return x.id < y.id; });
    for (std::size_t i = 1; i < set.providers.size(); ++i)
        if (set.providers[i].id == set.providers[i - 1].id)
            throw ConfigError("providers: duplicate id \"" + set.providers[i].id + "\"");
    return set;
}

ProviderSet load_providers_file(const std::string& path, const Topology& topo) {
    return load_providers_text(slurp(path), topo);
}

namespace {

// Partial path in the uniform-cost search. `bound` is length so far plus the
// all-pairs lower bound to the target, so complete paths pop in true length
// order.
struct Frontier {
    double bound;
    double length;
    std::vector<int> nodes;
    std::uint64_t visited_mask; // works because the search caps node count
};

struct FrontierOrder {
    bool operator()(const Frontier& x, const Frontier& y) const {
        if (x.bound != y.bound) return x.bound > y.bound;
        return x.nodes > y.nodes; // prefer lexicographically smaller prefixes
    }
};

} // namespace

std::vector<std::vector<int>> k_candidate_paths(const Topology& topo, int src, int dst, int k) {
    if (k < 1) throw ConfigError("k_candidate_paths: k must be at least 1");
    if (src < 0 || src >= topo.num_nodes() || dst < 0 || dst >= topo.num_nodes())
        throw ConfigError("k_candidate_paths: node index out of range");
    if (src == dst) throw ConfigError("k_candidate_paths: src equals dst");
    if (topo.num_nodes() > 64)
        throw ConfigError("k_candidate_paths: topology above the 64-node search limit");

    // Dijkstra from dst gives an admissible bound for every prefix.
    std::vector<double> to_dst(topo.num_nodes(), std::numeric_limits<double>::infinity());
    {
        std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                            std::greater<>> pq;
        to_dst[dst] = 0;
        pq.push({0, dst});
        while (!pq.empty()) {
            auto [d, v] = pq.top();
            pq.pop();
            if (d > to_dst[v]) continue;
            for (auto [w, link] : topo.neighbors(v)) {
                const double nd = d + topo.links()[link].km;
                if (nd < to_dst[w]) {
                    to_dst[w] = nd;
                    pq.push({nd, w});
                }
            }
        }
    }
    if (!std::isfinite(to_dst[src]))
        throw SolveError("no path between " + topo.node_name(src) + " and " +
                         topo.node_name(dst));

    // Expand simple paths best-first. We keep collecting complete paths until
    // the frontier bound passes the k-th best length; only then is the k-prefix
    // of the (length, node sequence) order certain.
    std::priority_queue<Frontier, std::vector<Frontier>, FrontierOrder> frontier;
    frontier.push({to_dst[src], 0, {src}, std::uint64_t{1} << src});
    std::vector<std::pair<double, std::vector<int>>> complete;
    long long expansions = 0;
    constexpr long long kExpansionCap = 4'000'000;

    while (!frontier.empty()) {
        Frontier cur = frontier.top();
        frontier.pop();
        if (static_cast<int>(complete.size()) >= k) {
            std::nth_element(complete.begin(), complete.begin() + (k - 1), complete.end());
            if (cur.bound > complete[k - 1].first) break;
        }
        const int tail = cur.nodes.back();
        if (tail == dst) {
            complete.push_back({cur.length, cur.nodes});
            continue;
        }
        if (++expansions > kExpansionCap)
            throw SolveError("k_candidate_paths: path enumeration exceeded the expansion cap");
        for (auto [w, link] : topo.neighbors(tail)) {
            if (cur.visited_mask & (std::uint64_t{1} << w)) continue;
            Frontier next;
            next.length = cur.length + topo.links()[link].km;
            next.bound = next.length + to_dst[w];
            next.nodes = cur.nodes;
            next.nodes.push_back(w);
            next.visited_mask = cur.visited_mask | (std::uint64_t{1} << w);
            frontier.push(std::move(next));
        }
    }

    std::sort(complete.begin(), complete.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        // Lexicographic comparison of node-id sequences; node indices are in
        // id order already.
        return x.second < y.second;
    });
    if (static_cast<int>(complete.size()) > k) complete.resize(k);
    std::vector<std::vector<int>> out;
    out.reserve(complete.size());
    for (auto& [len, nodes] : complete) out.push_back(std::move(nodes));
    return out;
}

} // namespace qkdplan
