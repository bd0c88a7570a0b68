#include "gridsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gridsim/parallel.hpp"

namespace gridsim {

std::optional<BaselineKind> baseline_from_name(const std::string& name) {
    if (name == "random")
        return BaselineKind::random;
    if (name == "cost")
        return BaselineKind::cost;
    if (name == "elastic")
        return BaselineKind::elastic;
    return std::nullopt;
}

DaAction baseline_act(const DaState& s, BaselineKind kind, const ActionCatalog& catalog,
                      Rng& rng) {
    const double peak = peak_effective_demand(s);
    std::vector<int> eligible;
    for (int a = 0; a < catalog.size(); ++a)
        if (catalog.sum_g_max[a] >= peak)
            eligible.push_back(a);
    if (eligible.empty()) {
        int best = 0;
        for (int a = 1; a < catalog.size(); ++a)
            if (catalog.sum_g_max[a] > catalog.sum_g_max[best])
                best = a;
        return catalog.action(best);
    }
    int choice = eligible.front();
    switch (kind) {
    case BaselineKind::random: {
        std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
        choice = eligible[pick(rng)];
        break;
    }
    case BaselineKind::cost:
        for (int a : eligible)
            if (catalog.capacity_cost[a] < catalog.capacity_cost[choice])
                choice = a;
        break;
    case BaselineKind::elastic:
        for (int a : eligible)
            if (catalog.elasticity[a] > catalog.elasticity[choice])
                choice = a;
        break;
    }
    return catalog.action(choice);
}

DaPolicy make_baseline_policy(BaselineKind kind, const ActionCatalog& catalog) {
    return [kind, &catalog](const DaState& s, Rng& rng) {
        return baseline_act(s, kind, catalog, rng);
    };
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const size_t n = sorted.size();
    if (n == 1)
        return sorted.front();
    const double h = p * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RolloutStats evaluate_policy(const Simulator& sim, const DaPolicy& policy, int episodes,
                             int workers, std::uint64_t seed) {
    std::vector<double> means(episodes);
    parallel_for(episodes, workers, [&](int e) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(e)};
        Rng rng(seq);
        const DaState initial = sim.sample_initial_da_state(rng);
        const EpisodeTrace trace = sim.run_episode(initial, policy, rng);
        double sum = 0.0;
        for (const auto& st : trace.steps)
            sum += st.reward;
        means[e] = sum / static_cast<double>(trace.steps.size());
    });
    std::sort(means.begin(), means.end());
    RolloutStats stats;
    stats.episode_means = std::move(means);
    stats.mean = 0.0;
    for (double m : stats.episode_means)
        stats.mean += m;
    stats.mean /= static_cast<double>(stats.episode_means.size());
    stats.q1 = quantile_sorted(stats.episode_means, 0.25);
    stats.median = quantile_sorted(stats.episode_means, 0.5);
    stats.q3 = quantile_sorted(stats.episode_means, 0.75);
    stats.min = stats.episode_means.front();
    stats.max = stats.episode_means.back();
    return stats;
}

void write_stats_csv(std::ostream& os, const RolloutStats& stats) {
    os << "episode,mean_reward\n";
    for (size_t e = 0; e < stats.episode_means.size(); ++e)
        os << e << "," << stats.episode_means[e] << "\n";
    os << "summary,mean," << stats.mean << "\n";
    os << "summary,q1," << stats.q1 << "\n";
    os << "summary,median," << stats.median << "\n";
    os << "summary,q3," << stats.q3 << "\n";
    os << "summary,min," << stats.min << "\n";
    os << "summary,max," << stats.max << "\n";
}

namespace {

[[noreturn]] void config_fail(const std::string& name, int lineno, const std::string& msg) {
    std::ostringstream os;
    os << name << ":" << lineno << ": " << msg;
    throw std::runtime_error(os.str());
}

} // namespace

RunConfig parse_run_config(std::istream& is, const std::string& name) {
    RunConfig rc;
    std::string raw, section;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::istringstream ls(raw);
        std::string key;
        if (!(ls >> key))
            continue;
        if (key == "CONFIG") {
            section = key;
            continue;
        }
        if (section != "CONFIG")
            config_fail(name, lineno, "unknown section or record before CONFIG: " + key);
        auto num = [&](double& out) {
            if (!(ls >> out))
                config_fail(name, lineno, "missing numeric value for " + key);
        };
        auto integer = [&](int& out) {
            double v;
            num(v);
            out = static_cast<int>(v);
        };
        ScenarioConfig& sc = rc.scenario;
        IapiConfig& ic = rc.iapi;
        if (key == "base_demand") num(sc.base_demand);
        else if (key == "profile_amp") num(sc.profile_amp);
        else if (key == "wind_cf") num(sc.wind_cf);
        else if (key == "profiles") {
            sc.profiles.clear();
            std::string p;
            while (ls >> p)
                sc.profiles.push_back(p);
            if (sc.profiles.empty())
                config_fail(name, lineno, "profiles needs at least one name");
        }
        else if (key == "initial_noise") num(sc.initial_noise);
        else if (key == "day_bias") num(sc.day_bias);
        else if (key == "sigma_d0") num(sc.sigma_d0);
        else if (key == "sigma_w0") num(sc.sigma_w0);
        else if (key == "sigma_eps") num(sc.sigma_eps);
        else if (key == "fail_prob") num(sc.fail_prob_override);
        else if (key == "repair_steps") integer(sc.repair_override);
        else if (key == "horizon_days") integer(sc.horizon_days);
        else if (key == "candidates") integer(ic.n_candidates);
        else if (key == "elite_frac") num(ic.elite_frac);
        else if (key == "episodes") integer(ic.n_episodes);
        else if (key == "gamma") num(ic.gamma);
        else if (key == "alpha0") num(ic.alpha0);
        else if (key == "tau") num(ic.tau);
        else if (key == "theta_bound") num(ic.theta_bound);
        else if (key == "sigma0") num(ic.sigma0);
        else if (key == "sigma_min") num(ic.sigma_min);
        else if (key == "epsilon") num(ic.epsilon);
        else if (key == "max_iters") integer(ic.max_iters);
        else if (key == "cumulative_pool") {
            int v;
            integer(v);
            ic.cumulative_pool = v != 0;
        }
        else if (key == "catalog_k") integer(rc.catalog_k);
        else config_fail(name, lineno, "unknown config key: " + key);
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    return parse_run_config(in, path);
}

void write_policy(std::ostream& os, const ActionCatalog& catalog, const Eigen::VectorXd& psi) {
    write_catalog(os, catalog);
    os << "PSI\n";
    os.precision(17);
    for (int i = 0; i < psi.size(); ++i)
        os << (i ? " " : "") << psi[i];
    os << "\n";
}

PolicyFile read_policy(std::istream& is, const GridCase& gc) {
    // split the stream at the PSI header; the front half is a catalog
    std::ostringstream catalog_text;
    std::string raw;
    bool in_psi = false;
    std::vector<double> psi;
    while (std::getline(is, raw)) {
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::istringstream probe(raw);
        std::string first;
        if (probe >> first && first == "PSI") {
            in_psi = true;
            continue;
        }
        if (!in_psi) {
            catalog_text << raw << "\n";
        } else {
            std::istringstream rs(raw);
            double v;
            while (rs >> v)
                psi.push_back(v);
        }
    }
    std::istringstream cs(catalog_text.str());
    PolicyFile pf;
    pf.catalog = read_catalog(cs, gc);
    if (static_cast<int>(psi.size()) != pf.catalog.size() + 4)
        throw std::runtime_error("policy file: psi length must be K + 4");
    pf.psi = Eigen::Map<Eigen::VectorXd>(psi.data(), static_cast<int>(psi.size()));
    return pf;
}

InjectionFile load_injections(const std::string& path, const GridCase& gc) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open injection file: " + path);
    InjectionFile f;
    f.profile.load = Eigen::VectorXd::Zero(gc.n_buses());
    f.profile.wind = Eigen::VectorXd::Zero(gc.n_buses());
    f.profile.generation = Eigen::VectorXd::Zero(gc.n_generators());
    f.profile.active.assign(gc.n_generators(), false);
    f.outage_mask.assign(gc.n_lines(), false);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::istringstream ls(raw);
        std::string first;
        if (!(ls >> first))
            continue;
        if (first == "DEMAND" || first == "WIND" || first == "GEN" || first == "OUTAGE") {
            section = first;
            continue;
        }
        if (section.empty() || std::isalpha(static_cast<unsigned char>(first[0])))
            config_fail(path, lineno, "unknown section name: " + first);
        std::istringstream rs(raw);
        int id;
        rs >> id;
        if (section == "OUTAGE") {
            if (id < 0 || id >= gc.n_lines())
                config_fail(path, lineno, "line id out of range");
            f.outage_mask[id] = true;
            continue;
        }
        double mw;
        if (!(rs >> mw))
            config_fail(path, lineno, "missing MW value");
        if (section == "DEMAND") {
            if (id < 0 || id >= gc.n_buses())
                config_fail(path, lineno, "bus id out of range");
            f.profile.load[id] = mw;
        } else if (section == "WIND") {
            if (id < 0 || id >= gc.n_wind())
                config_fail(path, lineno, "wind unit id out of range");
            f.profile.wind[gc.wind[id].bus] += mw;
        } else { // GEN
            if (id < 0 || id >= gc.n_generators())
                config_fail(path, lineno, "generator id out of range");
            f.profile.generation[id] = mw;
            f.profile.active[id] = true;
        }
    }
    return f;
}

} // namespace gridsim
