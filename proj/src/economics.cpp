#include "qkdplan/economics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "qkdplan/errors.hpp"

namespace qkdplan {

int CoalitionStructure::num_providers() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.size());
    return n;
}

int CoalitionStructure::block_of(int provider) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (int s : blocks[i])
            if (s == provider) return static_cast<int>(i);
    return -1;
}

std::string CoalitionStructure::name() const {
    std::string out;
    for (const auto& b : blocks) {
        out += "{";
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(b[i]);
        }
        out += "}";
    }
    return out;
}

std::string structure_key(const CoalitionStructure& st) {
    const int n = st.num_providers();
    std::vector<int> label(n, -1);
    for (std::size_t i = 0; i < st.blocks.size(); ++i)
        for (int s : st.blocks[i]) {
            if (s < 0 || s >= n || label[s] != -1)
                throw ConfigError("coalition structure is not a partition of 0.." +
                                  std::to_string(n - 1));
            label[s] = static_cast<int>(i);
        }
    // Relabel by first appearance so the key is canonical even when the
    // blocks arrive out of order.
    std::vector<int> remap(st.blocks.size(), -1);
    int next = 0;
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (remap[label[i]] == -1) remap[label[i]] = next++;
        if (i) out += ",";
        out += std::to_string(remap[label[i]]);
    }
    return out;
}

std::vector<CoalitionStructure> all_structures(int n) {
    if (n < 1 || n > 12)
        throw ConfigError("all_structures: provider count must be between 1 and 12");
    // Restricted-growth labelings enumerate each partition once.
    std::vector<std::vector<int>> labelings;
    std::vector<int> a(n, 0);
    const auto rec = [&](auto&& self, int i, int mx) -> void {
        if (i == n) {
            labelings.push_back(a);
            return;
        }
        for (int v = 0; v <= mx + 1; ++v) {
            a[i] = v;
            self(self, i + 1, std::max(mx, v));
        }
    };
    rec(rec, 1, 0); // a[0] is pinned to 0
    std::sort(labelings.begin(), labelings.end(), [](const auto& x, const auto& y) {
        const int bx = *std::max_element(x.begin(), x.end()) + 1;
        const int by = *std::max_element(y.begin(), y.end()) + 1;
        if (bx != by) return bx > by;
        return x < y;
    });
    std::vector<CoalitionStructure> out;
    out.reserve(labelings.size());
    for (const auto& lab : labelings) {
        CoalitionStructure st;
        st.blocks.resize(*std::max_element(lab.begin(), lab.end()) + 1);
        for (int i = 0; i < n; ++i) st.blocks[lab[i]].push_back(i);
        out.push_back(std::move(st));
    }
    return out;
}

void CoalitionInstance::validate() const {
    if (!topology) throw ConfigError("coalition instance: missing topology");
    if (providers.providers.empty()) throw ConfigError("coalition instance: no providers");
    if (providers.providers.size() > 16)
        throw ConfigError("coalition instance: more than 16 providers");
    prices.validate();
    params.validate();
    for (const auto& r : requests) {
        if (r.provider.empty())
            throw ConfigError("coalition instance: request " + r.id + " names no provider");
        bool found = false;
        for (const auto& p : providers.providers) found = found || p.id == r.provider;
        if (!found)
            throw ConfigError("coalition instance: request " + r.id +
                              " names unknown provider " + r.provider);
    }
}

PoolCapacities CoalitionInstance::pool_capacities(const std::vector<int>& coalition) const {
    const std::size_t nlinks = topology->links().size();
    PoolCapacities caps;
    caps.qkd.assign(nlinks, 0);
    caps.km.assign(nlinks, 0);
    for (int s : coalition) {
        const Provider& p = providers.providers.at(s);
        for (std::size_t e = 0; e < nlinks; ++e) {
            auto ov = p.link_overrides.find(static_cast<int>(e));
            caps.qkd[e] += ov != p.link_overrides.end() ? ov->second.first : p.qkd_per_link;
            caps.km[e] += ov != p.link_overrides.end() ? ov->second.second : p.km_per_link;
        }
    }
    for (std::size_t e = 0; e < nlinks; ++e) {
        caps.qkd[e] = std::min(caps.qkd[e], providers.qkd_pool_max);
        caps.km[e] = std::min(caps.km[e], providers.km_pool_max);
    }
    return caps;
}

Instance CoalitionInstance::sub_instance(const std::vector<int>& coalition) const {
    Instance inst;
    inst.topology = topology;
    for (const auto& r : requests)
        for (int s : coalition)
            if (providers.providers.at(s).id == r.provider) inst.requests.push_back(r);
    if (inst.requests.empty())
        throw ConfigError("coalition serves no requests; cost it as 0 instead of planning");
    inst.capacities = pool_capacities(coalition);
    inst.prices = prices;
    inst.params = params;
    return inst;
}

SpEconomics::SpEconomics(CoalitionInstance instance) : inst_(std::move(instance)) {
    inst_.validate();
}

double SpEconomics::coalition_cost(const std::vector<int>& coalition) {
    if (coalition.empty()) return 0;
    unsigned mask = 0;
    for (int s : coalition) {
        if (s < 0 || s >= num_providers())
            throw ConfigError("coalition member index out of range");
        mask |= 1u << s;
    }
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
    bool any = false;
    for (const auto& r : inst_.requests)
        for (int s : coalition) any = any || inst_.providers.providers[s].id == r.provider;
    const double cost =
        any ? solve(inst_.sub_instance(coalition), inst_.options).eval.total : 0.0;
    memo_[mask] = cost;
    return cost;
}

InjectedEconomics::InjectedEconomics(std::vector<std::string> provider_ids,
                                     std::map<std::vector<int>, double> costs)
    : ids_(std::move(provider_ids)), costs_(std::move(costs)) {
    if (ids_.empty()) throw ConfigError("injected economics: no providers");
}

double InjectedEconomics::coalition_cost(const std::vector<int>& coalition) {
    if (coalition.empty()) return 0;
    auto it = costs_.find(coalition);
    if (it == costs_.end()) {
        std::string who;
        for (int s : coalition) who += (who.empty() ? "" : ",") + std::to_string(s);
        throw ConfigError("injected economics: no cost for coalition {" + who + "}");
    }
    return it->second;
}

std::vector<double> shapley_shares(EconomicsContext& ctx, const std::vector<int>& block) {
    const int m = static_cast<int>(block.size());
    if (m < 1) throw ConfigError("shapley: empty block");
    if (m > 12) throw ConfigError("shapley: block of " + std::to_string(m) +
                                  " exceeds the exact limit of 12");
    for (int i = 1; i < m; ++i)
        if (block[i] <= block[i - 1]) throw ConfigError("shapley: block must ascend");

    std::vector<unsigned long long> fact(m + 1, 1);
    for (int i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<unsigned long long>(i);

    // v over subsets of the block, indexed by local bitmask.
    std::vector<double> v(1u << m, 0.0);
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> members;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) members.push_back(block[i]);
        v[mask] = ctx.coalition_cost(members);
    }

    std::vector<double> shares(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double num = 0;
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            if (mask & (1u << i)) continue;
            const int d = std::popcount(mask);
            const double w = static_cast<double>(fact[d] * fact[m - d - 1]);
            num += w * (v[mask | (1u << i)] - v[mask]);
        }
        shares[i] = num / static_cast<double>(fact[m]);
    }
    return shares;
}

std::vector<ProviderCostBreakdown> structure_costs(EconomicsContext& ctx,
                                                   const std::vector<Provider>& providers,
                                                   const CoalitionStructure& st) {
    const int n = ctx.num_providers();
    if (static_cast<int>(providers.size()) != n || st.num_providers() != n)
        throw ConfigError("structure_costs: provider count mismatch");
    std::vector<ProviderCostBreakdown> out(n);
    for (int s = 0; s < n; ++s) out[s].id = ctx.provider_id(s);
    for (const auto& block : st.blocks) {
        if (block.size() == 1) {
            const int s = block[0];
            out[s].allocation = ctx.coalition_cost(block);
            out[s].total = out[s].allocation;
            continue;
        }
        const auto shares = shapley_shares(ctx, block);
        for (std::size_t i = 0; i < block.size(); ++i) {
            const int s = block[i];
            const Provider& p = providers[s];
            out[s].allocation = shares[i];
            out[s].fees = static_cast<double>(p.qkd_per_link) * p.qkd_share_price +
                          static_cast<double>(p.km_per_link) * p.km_share_price + p.coop_fee;
            out[s].total = out[s].allocation + out[s].fees;
        }
    }
    return out;
}

bool is_subadditive(EconomicsContext& ctx, double tol) {
    const int n = ctx.num_providers();
    if (n > 10) throw ConfigError("is_subadditive: more than 10 providers");
    std::vector<double> v(1u << n, 0.0);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) members.push_back(i);
        v[mask] = ctx.coalition_cost(members);
    }
    for (unsigned s = 1; s < (1u << n); ++s)
        for (unsigned t = 1; t < (1u << n); ++t) {
            if (s & t) continue;
            if (v[s | t] > v[s] + v[t] + tol) return false;
        }
    return true;
}

EconomicsPayoffs::EconomicsPayoffs(std::shared_ptr<EconomicsContext> ctx,
                                   std::vector<Provider> providers)
    : ctx_(std::move(ctx)), providers_(std::move(providers)) {
    if (!ctx_) throw ConfigError("payoffs: missing economics context");
    if (static_cast<int>(providers_.size()) != ctx_->num_providers())
        throw ConfigError("payoffs: provider list does not match the context");
}

std::vector<double> EconomicsPayoffs::costs(const CoalitionStructure& st) {
    const std::string key = structure_key(st);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::vector<double> totals;
    for (const auto& row : structure_costs(*ctx_, providers_, st)) totals.push_back(row.total);
    memo_[key] = totals;
    return totals;
}

InjectedPayoffs::InjectedPayoffs(std::vector<std::string> provider_ids,
                                 std::map<std::string, std::vector<double>> rows)
    : ids_(std::move(provider_ids)), rows_(std::move(rows)) {
    if (ids_.empty()) throw ConfigError("injected payoffs: no providers");
    for (const auto& [key, row] : rows_)
        if (row.size() != ids_.size())
            throw ConfigError("injected payoffs: row " + key + " has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(ids_.size()));
}

std::vector<double> InjectedPayoffs::costs(const CoalitionStructure& st) {
    const std::string key = structure_key(st);
    auto it = rows_.find(key);
    if (it == rows_.end())
        throw ConfigError("injected payoffs: no row for structure " + key);
    return it->second;
}

} // namespace qkdplan
