#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridsim/env.hpp"
#include "gridsim/features.hpp"
#include "gridsim/learning.hpp"

namespace gridsim {

enum class BaselineKind { random, cost, elastic };

std::optional<BaselineKind> baseline_from_name(const std::string& name);

/// Eligible subsets can cover the day's peak effective demand. Random
/// picks uniformly among them, Cost minimizes capacity-weighted cost,
/// Elastic maximizes the capacity/floor ratio. With no eligible subset,
/// all kinds fall back to the largest-capacity one.
DaAction baseline_act(const DaState& s, BaselineKind kind, const ActionCatalog& catalog,
                      Rng& rng);

DaPolicy make_baseline_policy(BaselineKind kind, const ActionCatalog& catalog);

struct RolloutStats {
    std::vector<double> episode_means; // sorted ascending
    double mean = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Seeded concurrent rollouts; episode e uses a stream derived from
/// (seed, e), so the stats do not depend on the worker count.
RolloutStats evaluate_policy(const Simulator& sim, const DaPolicy& policy, int episodes,
                             int workers, std::uint64_t seed);

/// Linearly interpolated quantile of a sorted sample (the common
/// "R-7" definition: index h = (n-1)p).
double quantile_sorted(const std::vector<double>& sorted, double p);

void write_stats_csv(std::ostream& os, const RolloutStats& stats);

/// Run configuration: scenario + learning knobs, parsed from a CONFIG
/// section in the case-file text family.
struct RunConfig {
    ScenarioConfig scenario;
    IapiConfig iapi;
    int catalog_k = 20;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(std::istream& is, const std::string& name);

/// Policy file: SUBSET section (the catalog) followed by a PSI section
/// with one row of K+4 weights.
struct PolicyFile {
    ActionCatalog catalog;
    Eigen::VectorXd psi;
};

void write_policy(std::ostream& os, const ActionCatalog& catalog, const Eigen::VectorXd& psi);
PolicyFile read_policy(std::istream& is, const GridCase& gc);

/// Injection file for pf-check: DEMAND/WIND/GEN/OUTAGE sections.
struct InjectionFile {
    InjectionProfile profile;
    std::vector<bool> outage_mask;
};

InjectionFile load_injections(const std::string& path, const GridCase& gc);

} // namespace gridsim
