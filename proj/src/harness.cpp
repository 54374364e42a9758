#include "qkdplan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qkdplan/dynamics.hpp"
#include "qkdplan/errors.hpp"

namespace qkdplan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(what + ": malformed JSON");
    return doc;
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::ofstream open_csv(const std::string& out_dir, const std::string& name) {
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

PhasePrices parse_phase(const json& j, const std::string& what) {
    PhasePrices p;
    for (const auto& key : {"tx", "rx", "km", "si", "md", "ch"})
        if (!j.contains(key))
            throw ConfigError(what + ": missing price \"" + key + "\"");
    p.tx = j.at("tx").get<double>();
    p.rx = j.at("rx").get<double>();
    p.km = j.at("km").get<double>();
    p.si = j.at("si").get<double>();
    p.md = j.at("md").get<double>();
    p.ch = j.at("ch").get<double>();
    return p;
}

PriceTable parse_prices(const json& j) {
    if (!j.is_object() || !j.contains("reservation") || !j.contains("utilization") ||
        !j.contains("on_demand"))
        throw ConfigError(
            "prices: expected \"reservation\", \"utilization\" and \"on_demand\" blocks");
    PriceTable t;
    t.r = parse_phase(j.at("reservation"), "prices.reservation");
    t.e = parse_phase(j.at("utilization"), "prices.utilization");
    t.o = parse_phase(j.at("on_demand"), "prices.on_demand");
    t.validate();
    return t;
}

long long integer_capacity(double v, const std::string& what) {
    const double r = std::nearbyint(v);
    if (v < 0 || std::abs(v - r) > 1e-9)
        throw ConfigError(what + " must be a nonnegative integer");
    return static_cast<long long>(r);
}

std::string yesno(bool v) { return v ? "1" : "0"; }

// Structure keys carry commas, so they always travel quoted.
std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

} // namespace

Instance ExperimentConfig::instance() const {
    if (!topology)
        throw ConfigError("config: this run needs \"topology\" and \"requests\"");
    if (!has_capacities)
        throw ConfigError("config: this run needs \"capacities\" (or providers to pool)");
    Instance inst;
    inst.topology = topology;
    inst.requests = requests;
    inst.capacities = capacities;
    inst.prices = prices;
    inst.params = params;
    inst.validate();
    return inst;
}

ExperimentConfig load_experiment_text(const std::string& json_text,
                                      const std::string& base_dir) {
    const json doc = parse_json(json_text, "config");
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");

    const auto resolve = [&](const std::string& p) {
        fs::path q(p);
        return q.is_absolute() ? q.string() : (fs::path(base_dir) / q).string();
    };

    ExperimentConfig cfg;

    if (doc.contains("topology"))
        cfg.topology = std::make_shared<Topology>(
            load_topology_file(resolve(doc.at("topology").get<std::string>())));
    if (doc.contains("requests")) {
        if (!cfg.topology) throw ConfigError("config: \"requests\" without \"topology\"");
        cfg.requests =
            load_requests_file(resolve(doc.at("requests").get<std::string>()), *cfg.topology);
    }
    if (doc.contains("providers")) {
        if (!cfg.topology) throw ConfigError("config: \"providers\" without \"topology\"");
        cfg.providers =
            load_providers_file(resolve(doc.at("providers").get<std::string>()), *cfg.topology);
        cfg.has_providers = true;
    }

    if (doc.contains("prices")) {
        const auto& pj = doc.at("prices");
        cfg.prices = pj.is_string()
                         ? parse_prices(parse_json(slurp_file(resolve(pj.get<std::string>())),
                                                   "prices"))
                         : parse_prices(pj);
    }

    if (doc.contains("params")) {
        const auto& pj = doc.at("params");
        if (pj.contains("span_km")) cfg.params.span_km = pj.at("span_km").get<double>();
        if (pj.contains("key_rate_per_link"))
            cfg.params.key_rate_per_link = pj.at("key_rate_per_link").get<double>();
        if (pj.contains("node_energy"))
            for (const auto& [node, val] : pj.at("node_energy").items())
                cfg.params.node_energy[node] = val.get<double>();
        cfg.params.validate();
    }

    if (doc.contains("solver")) {
        const auto& sj = doc.at("solver");
        if (sj.contains("k_paths")) cfg.options.k_paths = sj.at("k_paths").get<int>();
        if (sj.contains("route_budget"))
            cfg.options.route_budget = sj.at("route_budget").get<long long>();
        if (sj.contains("force_exhaustive"))
            cfg.options.force_exhaustive = sj.at("force_exhaustive").get<bool>();
        if (sj.contains("scenario_cap"))
            cfg.options.scenario_cap = sj.at("scenario_cap").get<double>();
        if (sj.contains("ws_joint_cap"))
            cfg.options.ws_joint_cap = sj.at("ws_joint_cap").get<double>();
        if (cfg.options.k_paths < 1) throw ConfigError("config: k_paths must be positive");
        if (cfg.options.route_budget < 1)
            throw ConfigError("config: route_budget must be positive");
    }

    if (doc.contains("capacities")) {
        const auto& cj = doc.at("capacities");
        if (!cfg.topology) throw ConfigError("config: \"capacities\" without \"topology\"");
        if (cj.is_string() && cj.get<std::string>() == "providers") {
            if (!cfg.has_providers)
                throw ConfigError("config: capacities \"providers\" needs a provider file");
            CoalitionInstance ci;
            ci.topology = cfg.topology;
            ci.providers = cfg.providers;
            std::vector<int> everyone;
            for (std::size_t i = 0; i < cfg.providers.providers.size(); ++i)
                everyone.push_back(static_cast<int>(i));
            cfg.capacities = ci.pool_capacities(everyone);
        } else if (cj.is_object()) {
            cfg.capacities = PoolCapacities::uniform(
                *cfg.topology, integer_capacity(cj.at("qkd").get<double>(), "capacities.qkd"),
                integer_capacity(cj.at("km").get<double>(), "capacities.km"));
        } else {
            throw ConfigError("config: capacities must be an object or \"providers\"");
        }
        cfg.has_capacities = true;
    } else if (cfg.has_providers && cfg.topology) {
        CoalitionInstance ci;
        ci.topology = cfg.topology;
        ci.providers = cfg.providers;
        std::vector<int> everyone;
        for (std::size_t i = 0; i < cfg.providers.providers.size(); ++i)
            everyone.push_back(static_cast<int>(i));
        cfg.capacities = ci.pool_capacities(everyone);
        cfg.has_capacities = true;
    }

    if (doc.contains("sweep")) {
        const auto& sj = doc.at("sweep");
        cfg.sweep.axis = sj.at("axis").get<std::string>();
        for (const auto& v : sj.at("values")) cfg.sweep.values.push_back(v.get<double>());
        if (cfg.sweep.values.empty()) throw ConfigError("config: sweep has no values");
        const bool known = cfg.sweep.axis == "demand_scale" ||
                           cfg.sweep.axis == "reserved_qkd" ||
                           cfg.sweep.axis == "reserved_km" ||
                           cfg.sweep.axis == "link_cost_scale";
        if (!known) throw ConfigError("config: unknown sweep axis \"" + cfg.sweep.axis + "\"");
        cfg.has_sweep = true;
    }

    if (doc.contains("coalition")) {
        const auto& cj = doc.at("coalition");
        cfg.coalition.enabled = true;
        if (cj.contains("lambda")) cfg.coalition.lambda = cj.at("lambda").get<double>();
        if (cj.contains("irrationality"))
            cfg.coalition.irrationality = cj.at("irrationality").get<double>();
        if (cfg.coalition.lambda < 0 || cfg.coalition.lambda > 1)
            throw ConfigError("config: coalition lambda outside [0,1]");
        if (cfg.coalition.irrationality < 0 || cfg.coalition.irrationality > 1)
            throw ConfigError("config: coalition irrationality outside [0,1]");
        if (cj.contains("sim_steps"))
            cfg.coalition.sim_steps = cj.at("sim_steps").get<std::uint64_t>();
        if (cj.contains("fee_scales"))
            for (const auto& v : cj.at("fee_scales"))
                cfg.coalition.fee_scales.push_back(v.get<double>());
        if (cj.contains("injected")) {
            const auto& ij = cj.at("injected");
            cfg.coalition.injected = true;
            for (const auto& id : ij.at("providers"))
                cfg.coalition.injected_ids.push_back(id.get<std::string>());
            for (const auto& [key, row] : ij.at("rows").items())
                cfg.coalition.injected_rows[key] = row.get<std::vector<double>>();
        }
    }

    return cfg;
}

ExperimentConfig load_experiment_file(const std::string& path) {
    return load_experiment_text(slurp_file(path), fs::path(path).parent_path().string());
}

namespace {

void write_plan_files(const ExperimentConfig& cfg, const Instance& inst,
                      const PlanResult& result, const std::string& out_dir,
                      const double* baseline_total) {
    const Topology& topo = *inst.topology;

    auto summary = open_csv(out_dir, "plan_summary.csv");
    summary << "total,first_stage,expected_second_stage,exact,repaired,capacity_bound,"
               "exhaustive_routes,baseline_total\n";
    summary << fmt_num(result.eval.total) << ',' << fmt_num(result.eval.first_stage) << ','
            << fmt_num(result.eval.expected_second_stage) << ',' << yesno(result.eval.exact)
            << ',' << yesno(result.eval.repaired) << ',' << yesno(result.eval.capacity_bound)
            << ',' << yesno(result.eval.exhaustive_routes) << ','
            << (baseline_total ? fmt_num(*baseline_total) : "") << '\n';

    auto routes = open_csv(out_dir, "plan_routes.csv");
    routes << "request,path\n";
    for (std::size_t r = 0; r < inst.requests.size(); ++r) {
        routes << inst.requests[r].id << ',';
        const auto& path = result.plan.routes[r];
        for (std::size_t i = 0; i < path.size(); ++i)
            routes << (i ? "|" : "") << topo.node_name(path[i]);
        routes << '\n';
    }

    auto reservations = open_csv(out_dir, "plan_reservations.csv");
    reservations << "request,link,qkd_reserved,km_reserved\n";
    for (std::size_t r = 0; r < inst.requests.size(); ++r)
        for (const auto& [link, res] : result.plan.reservations[r])
            reservations << inst.requests[r].id << ',' << topo.link_name(link) << ','
                         << res.qkd << ',' << res.km << '\n';

    auto per_request = open_csv(out_dir, "plan_requests.csv");
    per_request << "request,first_stage,expected_second_stage\n";
    for (const auto& row : result.eval.per_request)
        per_request << row.id << ',' << fmt_num(row.first_stage) << ','
                    << fmt_num(row.expected_second_stage) << '\n';

    // Joint scenario table when the joint space is small enough, otherwise
    // only the per-request demand marginals.
    try {
        const auto scenarios = scenario_costs(inst, result.plan, 1e5);
        auto out = open_csv(out_dir, "scenario_costs.csv");
        out << "scenario,probability,second_stage";
        for (const auto& r : inst.requests) out << ",d_" << r.id;
        out << '\n';
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            out << i << ',' << fmt_num(scenarios[i].probability) << ','
                << fmt_num(scenarios[i].second_stage);
            for (std::size_t r = 0; r < inst.requests.size(); ++r)
                out << ',' << fmt_num(inst.requests[r].demand.support[scenarios[i].assignment[r]]);
            out << '\n';
        }
    } catch (const ConfigError&) {
        auto out = open_csv(out_dir, "demand_marginals.csv");
        out << "request,demand,probability\n";
        for (const auto& r : inst.requests)
            for (std::size_t i = 0; i < r.demand.support.size(); ++i)
                out << r.id << ',' << fmt_num(r.demand.support[i]) << ','
                    << fmt_num(r.demand.probs[i]) << '\n';
    }

    (void)cfg;
}

} // namespace

std::string run_plan(const ExperimentConfig& cfg, const std::string& out_dir,
                     bool with_baseline) {
    const Instance inst = cfg.instance();
    const PlanResult result = solve(inst, cfg.options);
    double baseline_total = 0;
    if (with_baseline) baseline_total = on_demand_baseline(inst, cfg.options).eval.total;
    write_plan_files(cfg, inst, result, out_dir, with_baseline ? &baseline_total : nullptr);

    std::string line = "plan: total=" + fmt_num(result.eval.total) +
                       " exact=" + (result.eval.exact ? "yes" : "no");
    if (with_baseline) line += " baseline=" + fmt_num(baseline_total);
    return line;
}

std::string run_bounds(const ExperimentConfig& cfg, const std::string& out_dir) {
    const Instance inst = cfg.instance();
    const PlanResult sp = solve(inst, cfg.options);
    const PlanResult eev = expected_value_plan(inst, cfg.options);
    const WsResult ws = wait_and_see_bound(inst, cfg.options);
    const PlanResult baseline = on_demand_baseline(inst, cfg.options);

    auto out = open_csv(out_dir, "bounds.csv");
    out << "metric,value,exact\n";
    out << "ws," << fmt_num(ws.value) << ',' << yesno(ws.exact) << '\n';
    out << "sp," << fmt_num(sp.eval.total) << ',' << yesno(sp.eval.exact) << '\n';
    out << "eev," << fmt_num(eev.eval.total) << ',' << yesno(eev.eval.exact) << '\n';
    out << "baseline," << fmt_num(baseline.eval.total) << ',' << yesno(baseline.eval.exact)
        << '\n';
    out << "evpi," << fmt_num(sp.eval.total - ws.value) << ','
        << yesno(ws.exact && sp.eval.exact) << '\n';
    out << "vss," << fmt_num(eev.eval.total - sp.eval.total) << ',' << yesno(sp.eval.exact)
        << '\n';

    return "bounds: ws=" + fmt_num(ws.value) + " sp=" + fmt_num(sp.eval.total) +
           " eev=" + fmt_num(eev.eval.total) + " baseline=" + fmt_num(baseline.eval.total);
}

namespace {

Instance sweep_point(const ExperimentConfig& cfg, const std::string& axis, double value) {
    Instance inst = cfg.instance();
    if (axis == "demand_scale") {
        if (value <= 0) throw ConfigError("sweep: demand_scale must be positive");
        for (auto& r : inst.requests) {
            for (double& s : r.demand.support) s *= value;
            r.demand.validate();
        }
    } else if (axis == "reserved_qkd") {
        const long long cap = integer_capacity(value, "sweep reserved_qkd value");
        std::fill(inst.capacities.qkd.begin(), inst.capacities.qkd.end(), cap);
    } else if (axis == "reserved_km") {
        const long long cap = integer_capacity(value, "sweep reserved_km value");
        std::fill(inst.capacities.km.begin(), inst.capacities.km.end(), cap);
    } else if (axis == "link_cost_scale") {
        if (value <= 0) throw ConfigError("sweep: link_cost_scale must be positive");
        const Topology& base = *inst.topology;
        std::vector<std::tuple<std::string, std::string, double>> links;
        for (const auto& l : base.links())
            links.emplace_back(base.node_name(l.a), base.node_name(l.b), l.km * value);
        inst.topology = std::make_shared<Topology>(base.nodes(), links);
    } else {
        throw ConfigError("sweep: unknown axis \"" + axis + "\"");
    }
    return inst;
}

} // namespace

std::string run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (!cfg.has_sweep) throw ConfigError("config: sweep run needs a \"sweep\" block");

    auto out = open_csv(out_dir, "sweep.csv");
    out << "axis,value,total,first_stage,expected_second_stage,exact\n";
    for (double value : cfg.sweep.values) {
        const Instance inst = sweep_point(cfg, cfg.sweep.axis, value);
        const PlanResult result = solve(inst, cfg.options);
        out << cfg.sweep.axis << ',' << fmt_num(value) << ',' << fmt_num(result.eval.total)
            << ',' << fmt_num(result.eval.first_stage) << ','
            << fmt_num(result.eval.expected_second_stage) << ',' << yesno(result.eval.exact)
            << '\n';
    }
    return "sweep: axis=" + cfg.sweep.axis + " points=" +
           std::to_string(cfg.sweep.values.size());
}

namespace {

struct CoalitionSetup {
    std::unique_ptr<PayoffSource> payoffs;
    std::shared_ptr<EconomicsContext> ctx; // planned mode only
    std::vector<Provider> providers;       // planned mode only
    std::vector<std::string> ids;
};

CoalitionSetup coalition_setup(const ExperimentConfig& cfg) {
    CoalitionSetup setup;
    if (cfg.coalition.injected) {
        setup.ids = cfg.coalition.injected_ids;
        setup.payoffs = std::make_unique<InjectedPayoffs>(cfg.coalition.injected_ids,
                                                          cfg.coalition.injected_rows);
        return setup;
    }
    if (!cfg.has_providers || !cfg.has_instance())
        throw ConfigError(
            "config: coalition run needs topology, requests and providers, or injected rows");
    CoalitionInstance ci;
    ci.topology = cfg.topology;
    ci.requests = cfg.requests;
    ci.providers = cfg.providers;
    ci.prices = cfg.prices;
    ci.params = cfg.params;
    ci.options = cfg.options;
    setup.ctx = std::make_shared<SpEconomics>(std::move(ci));
    setup.providers = cfg.providers.providers;
    for (const auto& p : setup.providers) setup.ids.push_back(p.id);
    setup.payoffs = std::make_unique<EconomicsPayoffs>(setup.ctx, setup.providers);
    return setup;
}

} // namespace

std::string run_coalition(const ExperimentConfig& cfg, const std::string& out_dir,
                          std::uint64_t seed) {
    if (!cfg.coalition.enabled) throw ConfigError("config: no \"coalition\" block");
    CoalitionSetup setup = coalition_setup(cfg);
    const int n = setup.payoffs->num_providers();
    const auto structures = all_structures(n);

    auto payoffs_csv = open_csv(out_dir, "coalition_payoffs.csv");
    payoffs_csv << "structure,name";
    for (const auto& id : setup.ids) payoffs_csv << ",cost_" << id;
    payoffs_csv << '\n';
    for (const auto& st : structures) {
        const auto row = setup.payoffs->costs(st);
        payoffs_csv << csv_quote(structure_key(st)) << ',' << csv_quote(st.name());
        for (double v : row) payoffs_csv << ',' << fmt_num(v);
        payoffs_csv << '\n';
    }

    ProfileCosts costs(*setup.payoffs);
    std::vector<std::string> stable;
    auto stability_csv = open_csv(out_dir, "coalition_stability.csv");
    stability_csv << "structure,name,stable\n";
    for (const auto& st : structures) {
        const bool eq = is_equilibrium(costs, profile_for_structure(st).mask());
        if (eq) stable.push_back(structure_key(st));
        stability_csv << csv_quote(structure_key(st)) << ',' << csv_quote(st.name()) << ',' << yesno(eq)
                      << '\n';
    }

    if (setup.ctx) {
        auto shares_csv = open_csv(out_dir, "coalition_shares.csv");
        shares_csv << "structure,provider,allocation,fees,total\n";
        for (const auto& st : structures)
            for (const auto& row : structure_costs(*setup.ctx, setup.providers, st))
                shares_csv << csv_quote(structure_key(st)) << ',' << row.id << ','
                           << fmt_num(row.allocation) << ',' << fmt_num(row.fees) << ','
                           << fmt_num(row.total) << '\n';
    }

    std::string dynamics_note;
    if (n <= 5) {
        const auto T = transition_matrix(costs, cfg.coalition.lambda, cfg.coalition.irrationality);
        const auto stat = stationary_distribution(T);

        auto stationary_csv = open_csv(out_dir, "stationary.csv");
        stationary_csv << "class,profile_mask,structure,consistent,pi\n";
        for (std::size_t c = 0; c < stat.recurrent_classes.size(); ++c)
            for (std::size_t i = 0; i < stat.recurrent_classes[c].size(); ++i) {
                const std::uint32_t mask =
                    static_cast<std::uint32_t>(stat.recurrent_classes[c][i]);
                const auto closed = structure_from_profile(StrategyProfile(n, mask));
                stationary_csv << c << ',' << mask << ',' << csv_quote(structure_key(closed.structure))
                               << ',' << yesno(closed.consistent) << ','
                               << fmt_num(stat.class_pis[c][i]) << '\n';
            }
        dynamics_note = std::string(" stationary=") + (stat.unique ? "unique" : "split") +
                        (T.renormalized ? " (renormalized rows)" : "");

        if (cfg.coalition.sim_steps > 0) {
            const auto sim = simulate_dynamics(costs, cfg.coalition.lambda,
                                               cfg.coalition.irrationality,
                                               cfg.coalition.sim_steps, seed, 0);
            auto sim_csv = open_csv(out_dir, "simulation.csv");
            sim_csv << "profile_mask,structure,consistent,occupancy\n";
            for (std::size_t mask = 0; mask < sim.occupancy.size(); ++mask) {
                const auto closed =
                    structure_from_profile(StrategyProfile(n, static_cast<std::uint32_t>(mask)));
                sim_csv << mask << ',' << csv_quote(structure_key(closed.structure)) << ','
                        << yesno(closed.consistent) << ',' << fmt_num(sim.occupancy[mask])
                        << '\n';
            }
        }
    } else {
        dynamics_note = " dynamics=skipped (more than 5 providers)";
    }

    if (!cfg.coalition.fee_scales.empty()) {
        if (!setup.ctx)
            throw ConfigError("config: fee_scales need planned economics, not injected rows");
        auto fee_csv = open_csv(out_dir, "feesweep.csv");
        fee_csv << "scale,stable_structures,best_structure,best_total\n";
        for (double scale : cfg.coalition.fee_scales) {
            if (scale < 0) throw ConfigError("config: fee scale must be nonnegative");
            std::vector<Provider> scaled = setup.providers;
            for (auto& p : scaled) {
                p.qkd_share_price *= scale;
                p.km_share_price *= scale;
                p.coop_fee *= scale;
            }
            EconomicsPayoffs scaled_payoffs(setup.ctx, scaled);
            ProfileCosts scaled_costs(scaled_payoffs);
            std::string stable_list;
            std::string best_key;
            double best_total = 0;
            for (const auto& st : structures) {
                if (is_equilibrium(scaled_costs, profile_for_structure(st).mask())) {
                    if (!stable_list.empty()) stable_list += '|';
                    stable_list += structure_key(st);
                }
                double total = 0;
                for (double v : scaled_payoffs.costs(st)) total += v;
                if (best_key.empty() || total < best_total) {
                    best_key = structure_key(st);
                    best_total = total;
                }
            }
            fee_csv << fmt_num(scale) << ',' << csv_quote(stable_list) << ',' << csv_quote(best_key) << ','
                    << fmt_num(best_total) << '\n';
        }
    }

    std::string stable_list;
    for (const auto& key : stable) {
        if (!stable_list.empty()) stable_list += '|';
        stable_list += key;
    }
    return "coalition: providers=" + std::to_string(n) + " stable=" +
           (stable_list.empty() ? "none" : stable_list) + dynamics_note;
}

} // namespace qkdplan
