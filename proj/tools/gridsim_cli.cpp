// Command-line front end: power-flow screening, environment rollouts,
// policy training and evaluation over grid case files.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gridsim/harness.hpp"

namespace fs = std::filesystem;
using namespace gridsim;

namespace {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw ValidationError("cannot open output file: " + path.string());
    os.precision(17);
    return os;
}

GridCase load_case_checked(const std::string& path) {
    if (path.empty())
        throw ValidationError("--case is required");
    return load_case(path);
}

RunConfig load_config_opt(const std::string& path) {
    if (path.empty())
        return RunConfig{};
    try {
        return load_run_config(path);
    } catch (const std::runtime_error& e) {
        throw ValidationError(e.what());
    }
}

// Demand range the action catalog must span: the extremes of the
// forecast library, padded for day-over-day drift.
std::pair<double, double> demand_range(const Simulator& sim) {
    double peak = 0.0, valley = std::numeric_limits<double>::infinity();
    for (const auto& s : sim.profile_library()) {
        peak = std::max(peak, peak_effective_demand(s));
        valley = std::min(valley, min_effective_demand(s));
    }
    const double pad = 1.0 + 4.0 * sim.config().initial_noise +
                       4.0 * sim.config().day_bias * sim.config().horizon_days;
    double total = 0.0;
    for (const auto& g : sim.grid().generators)
        total += g.g_max;
    return {std::min(peak * pad, total), std::max(valley, 0.0)};
}

ActionCatalog default_catalog(const Simulator& sim, int k, std::uint64_t seed) {
    const auto [peak, valley] = demand_range(sim);
    const int n = sim.grid().n_generators();
    if (n < 30)
        k = std::min(k, (1 << n) - 1); // small fleets cap the subset count
    Rng rng(seed ^ 0xc2b2ae3d27d4eb4full);
    return build_action_catalog(sim.grid(), k, peak, valley, rng);
}

// --policy is either a baseline name or a path to a policy file.
std::pair<DaPolicy, const ActionCatalog*>
resolve_policy(const std::string& spec, const GridCase& gc, const ActionCatalog& fallback,
               PolicyFile& storage) {
    if (auto kind = baseline_from_name(spec))
        return {make_baseline_policy(*kind, fallback), &fallback};
    std::ifstream in(spec);
    if (!in)
        throw ValidationError("--policy must name a baseline (random/cost/elastic) or a "
                              "readable policy file: " + spec);
    try {
        storage = read_policy(in, gc);
    } catch (const std::runtime_error& e) {
        throw ValidationError(e.what());
    }
    return {make_da_policy(storage.psi, storage.catalog), &storage.catalog};
}

int cmd_pf_check(const std::string& case_path, const std::string& inject_path,
                 const std::string& out_path) {
    const GridCase gc = load_case_checked(case_path);
    if (inject_path.empty())
        throw ValidationError("--inject is required");
    InjectionFile f;
    try {
        f = load_injections(inject_path, gc);
    } catch (const std::runtime_error& e) {
        throw ValidationError(e.what());
    }
    const FeasibilityVerdict v = check_feasibility(gc, f.outage_mask, f.profile);
    const double r = n1_reward(gc, f.outage_mask, f.profile);
    std::printf("feasible %s\n", v.feasible ? "yes" : "no");
    if (!v.feasible)
        std::printf("violation %s\n", violation_name(v.violation));
    std::printf("reward %.3f\n", r);
    if (!out_path.empty()) {
        auto os = open_out(out_path);
        dump_flow_csv(os, gc, solve_dc(gc, f.outage_mask, f.profile));
    }
    return 0;
}

int cmd_catalog(const std::string& case_path, const std::string& config_path,
                std::uint64_t seed, const std::string& out_path) {
    const GridCase gc = load_case_checked(case_path);
    const RunConfig rc = load_config_opt(config_path);
    Simulator sim(gc, rc.scenario);
    const ActionCatalog cat = default_catalog(sim, rc.catalog_k, seed);
    if (out_path.empty()) {
        write_catalog(std::cout, cat);
    } else {
        auto os = open_out(out_path);
        write_catalog(os, cat);
    }
    return 0;
}

int cmd_simulate(const std::string& case_path, const std::string& config_path,
                 const std::string& policy_spec, int episodes, std::uint64_t seed,
                 const std::string& out_path) {
    const GridCase gc = load_case_checked(case_path);
    const RunConfig rc = load_config_opt(config_path);
    Simulator sim(gc, rc.scenario);
    const ActionCatalog cat = default_catalog(sim, rc.catalog_k, seed);
    PolicyFile storage;
    auto [policy, _] = resolve_policy(policy_spec, gc, cat, storage);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        os = &file;
    }
    for (int e = 0; e < episodes; ++e) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(e)};
        Rng rng(seq);
        const DaState initial = sim.sample_initial_da_state(rng);
        write_trace_jsonl(*os, sim.run_episode(initial, policy, rng));
    }
    return 0;
}

int cmd_train(const std::string& case_path, const std::string& config_path, std::uint64_t seed,
              int workers, const std::string& out_dir) {
    const GridCase gc = load_case_checked(case_path);
    if (out_dir.empty())
        throw ValidationError("--out directory is required");
    RunConfig rc = load_config_opt(config_path);
    rc.iapi.workers = workers;
    Simulator sim(gc, rc.scenario);
    const ActionCatalog cat = default_catalog(sim, rc.catalog_k, seed);
    const IapiReport report = run_iapi(rc.iapi, sim, cat, seed);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    {
        auto os = open_out(dir / "report.json");
        write_report_json(os, report);
    }
    {
        auto os = open_out(dir / "convergence.csv");
        write_convergence_csv(os, report);
    }
    {
        auto os = open_out(dir / "psi_history.csv");
        write_psi_history_csv(os, report);
    }
    {
        auto os = open_out(dir / "policy.txt");
        write_policy(os, cat, report.best_psi);
    }
    std::printf("iterations %zu\n", report.iterations.size());
    std::printf("converged %s\n", report.converged ? "yes" : "no");
    return 0;
}

int cmd_evaluate(const std::string& case_path, const std::string& config_path,
                 const std::string& policy_spec, int episodes, std::uint64_t seed, int workers,
                 const std::string& out_path) {
    const GridCase gc = load_case_checked(case_path);
    const RunConfig rc = load_config_opt(config_path);
    Simulator sim(gc, rc.scenario);
    const ActionCatalog cat = default_catalog(sim, rc.catalog_k, seed);
    PolicyFile storage;
    auto [policy, _] = resolve_policy(policy_spec, gc, cat, storage);
    const RolloutStats stats = evaluate_policy(sim, policy, episodes, workers, seed);
    if (out_path.empty()) {
        std::cout.precision(17);
        write_stats_csv(std::cout, stats);
    } else {
        auto os = open_out(out_path);
        write_stats_csv(os, stats);
    }
    std::printf("mean %.6f\n", stats.mean);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid reliability simulator: DC power-flow screening, day-ahead "
                 "commitment policies and real-time rollouts"};
    app.require_subcommand(1);

    std::string case_path, config_path, inject_path, out_path, policy_spec = "random";
    std::uint64_t seed = 0;
    int workers = 1, episodes = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--case", case_path, "grid case file");
        sub->add_option("--config", config_path, "run configuration file");
        sub->add_option("--seed", seed, "master random seed");
        sub->add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_path, "output file (or directory for train)");
    };

    CLI::App* pf = app.add_subcommand("pf-check", "feasibility screen of one injection snapshot");
    add_common(pf);
    pf->add_option("--inject", inject_path, "injection snapshot file");

    CLI::App* cat = app.add_subcommand("catalog", "build and dump an action catalog");
    add_common(cat);

    CLI::App* sim = app.add_subcommand("simulate", "roll out a policy, emit a JSONL trace");
    add_common(sim);
    sim->add_option("--policy", policy_spec, "baseline name or policy file");
    sim->add_option("--episodes", episodes, "episode count")->check(CLI::PositiveNumber);

    CLI::App* train = app.add_subcommand("train", "run the training loop");
    add_common(train);

    CLI::App* eval = app.add_subcommand("evaluate", "roll out a policy, emit reward statistics");
    add_common(eval);
    eval->add_option("--policy", policy_spec, "baseline name or policy file");
    eval->add_option("--episodes", episodes, "episode count")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (pf->parsed())
            return cmd_pf_check(case_path, inject_path, out_path);
        if (cat->parsed())
            return cmd_catalog(case_path, config_path, seed, out_path);
        if (sim->parsed())
            return cmd_simulate(case_path, config_path, policy_spec, episodes, seed, out_path);
        if (train->parsed())
            return cmd_train(case_path, config_path, seed, workers, out_path);
        if (eval->parsed())
            return cmd_evaluate(case_path, config_path, policy_spec, episodes, seed, workers,
                                out_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CaseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
