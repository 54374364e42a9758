#include "qkdplan/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "qkdplan/errors.hpp"
#include "qkdplan/rng.hpp"

namespace qkdplan {

StrategyProfile::StrategyProfile(int n, std::uint32_t mask) : n_(n), mask_(mask) {
    if (n < 1 || n > 8)
        throw ConfigError("strategy profile: provider count must be between 1 and 8");
    if (num_pairs(n) < 32 && mask >= (std::uint32_t{1} << num_pairs(n)))
        throw ConfigError("strategy profile: mask has bits beyond the pair count");
}

int StrategyProfile::pair_index(int s, int l, int n) {
    if (s == l || s < 0 || l < 0 || s >= n || l >= n)
        throw ConfigError("strategy profile: bad pair");
    if (s > l) std::swap(s, l);
    return s * n - s * (s + 1) / 2 + (l - s - 1);
}

bool StrategyProfile::flag(int s, int l) const {
    return mask_ & (std::uint32_t{1} << pair_index(s, l, n_));
}

void StrategyProfile::set_flag(int s, int l, bool v) {
    const std::uint32_t bit = std::uint32_t{1} << pair_index(s, l, n_);
    if (v)
        mask_ |= bit;
    else
        mask_ &= ~bit;
}

ClosureResult structure_from_profile(const StrategyProfile& profile) {
    const int n = profile.providers();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int s = 0; s < n; ++s)
        for (int l = s + 1; l < n; ++l)
            if (profile.flag(s, l)) parent[find(s)] = find(l);

    std::vector<std::vector<int>> groups(n);
    for (int s = 0; s < n; ++s) groups[find(s)].push_back(s);

    ClosureResult out;
    out.consistent = true;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        out.structure.blocks.push_back(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = i + 1; j < g.size(); ++j)
                if (!profile.flag(g[i], g[j])) out.consistent = false;
    }
    // The union-find root is some arbitrary member, so restore the canonical
    // block order here.
    std::sort(out.structure.blocks.begin(), out.structure.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

StrategyProfile profile_for_structure(const CoalitionStructure& st) {
    StrategyProfile p(st.num_providers());
    for (const auto& b : st.blocks)
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = i + 1; j < b.size(); ++j) p.set_flag(b[i], b[j], true);
    return p;
}

ProfileCosts::ProfileCosts(PayoffSource& payoffs)
    : payoffs_(payoffs), n_(payoffs.num_providers()) {
    if (n_ < 1 || n_ > 8)
        throw ConfigError("profile costs: provider count must be between 1 and 8");
}

const ProfileCosts::Entry& ProfileCosts::at(std::uint32_t mask) {
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
    const auto closed = structure_from_profile(StrategyProfile(n_, mask));
    Entry e;
    e.costs = payoffs_.costs(closed.structure);
    e.consistent = closed.consistent;
    if (static_cast<int>(e.costs.size()) != n_)
        throw ConfigError("profile costs: payoff row size mismatch");
    return memo_.emplace(mask, std::move(e)).first->second;
}

const std::vector<double>& ProfileCosts::costs(std::uint32_t mask) { return at(mask).costs; }
bool ProfileCosts::consistent(std::uint32_t mask) { return at(mask).consistent; }

namespace {

// Bit k of an own-flag vector refers to provider s's k-th partner in
// ascending index order.
std::uint32_t extract_own(std::uint32_t mask, int s, int n) {
    std::uint32_t own = 0;
    int k = 0;
    for (int l = 0; l < n; ++l) {
        if (l == s) continue;
        if (mask & (std::uint32_t{1} << StrategyProfile::pair_index(s, l, n)))
            own |= std::uint32_t{1} << k;
        ++k;
    }
    return own;
}

std::uint32_t apply_own(std::uint32_t mask, int s, std::uint32_t own, int n) {
    int k = 0;
    for (int l = 0; l < n; ++l) {
        if (l == s) continue;
        const std::uint32_t bit = std::uint32_t{1} << StrategyProfile::pair_index(s, l, n);
        if (own & (std::uint32_t{1} << k))
            mask |= bit;
        else
            mask &= ~bit;
        ++k;
    }
    return mask;
}

// Own vectors in tie-break order: fewer partners first, then numerically
// ascending, which is lexicographic on the sorted partner list.
std::vector<std::uint32_t> own_vector_order(int n) {
    std::vector<std::uint32_t> order(std::size_t{1} << (n - 1));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [](std::uint32_t a, std::uint32_t b) {
        return std::popcount(a) < std::popcount(b);
    });
    return order;
}

} // namespace

std::uint32_t best_response(ProfileCosts& costs, std::uint32_t profile_mask, int provider) {
    const int n = costs.providers();
    const std::uint32_t incumbent_own = extract_own(profile_mask, provider, n);
    std::uint32_t best_mask = profile_mask;
    double best_cost = std::numeric_limits<double>::infinity();
    bool have = false;
    for (std::uint32_t own : own_vector_order(n)) {
        const std::uint32_t cand = apply_own(profile_mask, provider, own, n);
        if (own != incumbent_own && !costs.consistent(cand)) continue;
        const double c = costs.costs(cand)[provider];
        if (!have || c < best_cost) {
            have = true;
            best_cost = c;
            best_mask = cand;
        }
    }
    return best_mask;
}

bool is_equilibrium(ProfileCosts& costs, std::uint32_t profile_mask, double tol) {
    const int n = costs.providers();
    for (int s = 0; s < n; ++s) {
        const double incumbent = costs.costs(profile_mask)[s];
        const std::uint32_t incumbent_own = extract_own(profile_mask, s, n);
        for (std::uint32_t own = 0; own < (std::uint32_t{1} << (n - 1)); ++own) {
            if (own == incumbent_own) continue;
            const std::uint32_t cand = apply_own(profile_mask, s, own, n);
            if (!costs.consistent(cand)) continue;
            if (costs.costs(cand)[s] < incumbent - tol) return false;
        }
    }
    return true;
}

TransitionMatrix transition_matrix(ProfileCosts& costs, double lambda, double irrationality) {
    const int n = costs.providers();
    if (n > 5) throw ConfigError("transition matrix: more than 5 providers");
    if (lambda < 0 || lambda > 1) throw ConfigError("transition matrix: lambda outside [0,1]");
    if (irrationality < 0 || irrationality > 1)
        throw ConfigError("transition matrix: irrationality outside [0,1]");

    const int pairs = StrategyProfile::num_pairs(n);
    TransitionMatrix T;
    T.n = n;
    T.states = std::size_t{1} << pairs;
    T.t.assign(T.states * T.states, 0.0);

    for (std::size_t from = 0; from < T.states; ++from) {
        const auto& base = costs.costs(static_cast<std::uint32_t>(from));
        double off = 0;
        for (std::size_t to = 0; to < T.states; ++to) {
            if (to == from) continue;
            const std::uint32_t diff =
                static_cast<std::uint32_t>(from) ^ static_cast<std::uint32_t>(to);
            std::uint32_t movers = 0; // providers touching any changed pair
            for (int s = 0; s < n; ++s)
                for (int l = s + 1; l < n; ++l)
                    if (diff & (std::uint32_t{1} << StrategyProfile::pair_index(s, l, n)))
                        movers |= (std::uint32_t{1} << s) | (std::uint32_t{1} << l);
            const int z = std::popcount(movers);
            double p = std::pow(lambda, z) * std::pow(1 - lambda, n - z);
            const auto& next = costs.costs(static_cast<std::uint32_t>(to));
            for (int s = 0; s < n; ++s)
                if (movers & (std::uint32_t{1} << s))
                    p *= next[s] < base[s] ? 1 - irrationality : irrationality;
            T.t[from * T.states + to] = p;
            off += p;
        }
        if (off <= 1.0) {
            T.t[from * T.states + from] = 1.0 - off;
        } else {
            // The kernel is a density over moves, not a full distribution;
            // rows can overfill once many simultaneous flips are likely.
            T.t[from * T.states + from] = 0.0;
            for (std::size_t to = 0; to < T.states; ++to) T.t[from * T.states + to] /= off;
            T.renormalized = true;
        }
    }
    return T;
}

namespace {

// pi with pi = pi*M and sum(pi) = 1 for one closed class, by elimination with
// partial pivoting. Class sizes stay small enough for dense O(k^3).
std::vector<double> class_stationary(const TransitionMatrix& T,
                                     const std::vector<std::size_t>& members) {
    const std::size_t k = members.size();
    std::vector<double> a(k * k, 0.0), b(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            a[i * k + j] = T.at(members[j], members[i]) - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < k; ++j) a[(k - 1) * k + j] = 1.0;
    b[k - 1] = 1.0;

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < k; ++row)
            if (std::abs(a[row * k + col]) > std::abs(a[pivot * k + col])) pivot = row;
        if (std::abs(a[pivot * k + col]) < 1e-300)
            throw SolveError("stationary distribution: singular system");
        if (pivot != col) {
            for (std::size_t j = 0; j < k; ++j) std::swap(a[pivot * k + j], a[col * k + j]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t row = col + 1; row < k; ++row) {
            const double f = a[row * k + col] / a[col * k + col];
            if (f == 0) continue;
            for (std::size_t j = col; j < k; ++j) a[row * k + j] -= f * a[col * k + j];
            b[row] -= f * b[col];
        }
    }
    std::vector<double> x(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < k; ++j) acc -= a[i * k + j] * x[j];
        x[i] = acc / a[i * k + i];
    }
    double sum = 0;
    for (double& v : x) {
        if (v < 0 && v > -1e-9) v = 0; // elimination noise
        sum += v;
    }
    if (!(sum > 0)) throw SolveError("stationary distribution: degenerate solution");
    for (double& v : x) v /= sum;
    return x;
}

} // namespace

StationaryResult stationary_distribution(const TransitionMatrix& T) {
    const std::size_t k = T.states;
    constexpr double kEdgeEps = 1e-15;

    // Kosaraju strongly connected components over the support graph.
    std::vector<int> comp(k, -1);
    std::vector<std::size_t> order;
    order.reserve(k);
    {
        std::vector<char> seen(k, 0);
        for (std::size_t s0 = 0; s0 < k; ++s0) {
            if (seen[s0]) continue;
            std::vector<std::pair<std::size_t, std::size_t>> stack{{s0, 0}};
            seen[s0] = 1;
            while (!stack.empty()) {
                auto& [v, next] = stack.back();
                bool descended = false;
                while (next < k) {
                    const std::size_t w = next++;
                    if (!seen[w] && T.at(v, w) > kEdgeEps) {
                        seen[w] = 1;
                        stack.push_back({w, 0});
                        descended = true;
                        break;
                    }
                }
                if (!descended && stack.back().second >= k) {
                    order.push_back(v);
                    stack.pop_back();
                }
            }
        }
        int c = 0;
        for (std::size_t idx = k; idx-- > 0;) {
            const std::size_t root = order[idx];
            if (comp[root] != -1) continue;
            std::vector<std::size_t> stack{root};
            comp[root] = c;
            while (!stack.empty()) {
                const std::size_t v = stack.back();
                stack.pop_back();
                for (std::size_t w = 0; w < k; ++w)
                    if (comp[w] == -1 && T.at(w, v) > kEdgeEps) {
                        comp[w] = c;
                        stack.push_back(w);
                    }
            }
            ++c;
        }
    }

    const int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<char> leaks(ncomp, 0);
    std::vector<std::vector<std::size_t>> members(ncomp);
    for (std::size_t v = 0; v < k; ++v) {
        members[comp[v]].push_back(v);
        for (std::size_t w = 0; w < k; ++w)
            if (comp[w] != comp[v] && T.at(v, w) > kEdgeEps) leaks[comp[v]] = 1;
    }

    StationaryResult out;
    for (int c = 0; c < ncomp; ++c) {
        if (leaks[c]) continue;
        out.recurrent_classes.push_back(members[c]);
        out.class_pis.push_back(class_stationary(T, members[c]));
    }
    // Recurrent classes surface in ascending order of their smallest state.
    std::vector<std::size_t> perm(out.recurrent_classes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return out.recurrent_classes[a].front() < out.recurrent_classes[b].front();
    });
    {
        std::vector<std::vector<std::size_t>> rc;
        std::vector<std::vector<double>> cp;
        for (std::size_t i : perm) {
            rc.push_back(std::move(out.recurrent_classes[i]));
            cp.push_back(std::move(out.class_pis[i]));
        }
        out.recurrent_classes = std::move(rc);
        out.class_pis = std::move(cp);
    }

    out.unique = out.recurrent_classes.size() == 1;
    if (out.unique) {
        out.pi.assign(k, 0.0);
        for (std::size_t i = 0; i < out.recurrent_classes[0].size(); ++i)
            out.pi[out.recurrent_classes[0][i]] = out.class_pis[0][i];
    }
    return out;
}

SimulationResult simulate_dynamics(ProfileCosts& costs, double lambda, double irrationality,
                                   std::uint64_t steps, std::uint64_t seed,
                                   std::uint32_t initial_mask) {
    const int n = costs.providers();
    if (n > 5) throw ConfigError("simulation: more than 5 providers");
    if (lambda < 0 || lambda > 1) throw ConfigError("simulation: lambda outside [0,1]");
    if (irrationality < 0 || irrationality > 1)
        throw ConfigError("simulation: irrationality outside [0,1]");
    if (steps == 0) throw ConfigError("simulation: need at least one step");

    const int pairs = StrategyProfile::num_pairs(n);
    const std::uint32_t own_count = std::uint32_t{1} << (n - 1);
    SubstreamRng rng(seed, "coalition-dynamics");

    SimulationResult out;
    out.steps = steps;
    out.occupancy.assign(std::size_t{1} << pairs, 0.0);

    std::uint32_t mask = initial_mask;
    std::vector<char> revising(n, 0);
    std::vector<std::uint32_t> proposal(n, 0);
    for (std::uint64_t step = 0; step < steps; ++step) {
        for (int s = 0; s < n; ++s) revising[s] = rng.bernoulli(lambda) ? 1 : 0;
        for (int s = 0; s < n; ++s) {
            if (!revising[s]) continue;
            if (rng.bernoulli(irrationality)) {
                // Any own vector except the current one, uniformly.
                const std::uint32_t cur = extract_own(mask, s, n);
                std::uint32_t draw =
                    static_cast<std::uint32_t>(rng.below(own_count - 1));
                if (draw >= cur) ++draw;
                proposal[s] = draw;
            } else {
                proposal[s] = extract_own(best_response(costs, mask, s), s, n);
            }
        }
        std::uint32_t next = mask;
        for (int s = 0; s < n; ++s)
            for (int l = s + 1; l < n; ++l) {
                if (!revising[s] || !revising[l]) continue;
                // Bit of partner l inside s's own vector and vice versa.
                const int bit_sl = l < s ? l : l - 1;
                const int bit_ls = s < l ? s : s - 1;
                const bool want_s = proposal[s] & (std::uint32_t{1} << bit_sl);
                const bool want_l = proposal[l] & (std::uint32_t{1} << bit_ls);
                if (want_s != want_l) continue;
                const std::uint32_t pair_bit =
                    std::uint32_t{1} << StrategyProfile::pair_index(s, l, n);
                if (want_s)
                    next |= pair_bit;
                else
                    next &= ~pair_bit;
            }
        mask = next;
        out.occupancy[mask] += 1.0;
    }
    for (double& v : out.occupancy) v /= static_cast<double>(steps);
    out.final_mask = mask;
    return out;
}

} // namespace qkdplan
