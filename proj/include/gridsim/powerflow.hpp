#pragma once

#include <Eigen/Dense>
#include <optional>
#include <ostream>
#include <vector>

#include "gridsim/case.hpp"

namespace gridsim {

/// Nodal operating point handed to the DC solver. Components are kept
/// separate (not pre-summed) because feasibility needs per-generator
/// limits and per-island load totals, not just the net injection.
struct InjectionProfile {
    Eigen::VectorXd load;       // per bus, MW
    Eigen::VectorXd wind;       // per bus, MW (units aggregated per bus)
    Eigen::VectorXd generation; // per controllable generator, MW
    std::vector<bool> active;   // per controllable generator
};

/// generation + wind - load, per bus.
Eigen::VectorXd net_injection(const GridCase& gc, const InjectionProfile& p);

struct IslandSlack {
    int slack_bus = -1;
    int slack_gen = -1;       // -1 if the island has no active generator
    double adjustment = 0.0;  // MW added at the slack bus to balance the island
};

struct FlowSolution {
    Eigen::VectorXd angles;     // radians, reference bus at 0
    Eigen::VectorXd line_flows; // MW, oriented from_bus -> to_bus; 0 on outaged lines
    std::vector<IslandSlack> islands;
};

enum class Violation {
    none,
    island_without_generation,
    slack_limit_exceeded,
    line_overload,
    singular_system,
};

const char* violation_name(Violation v);

struct FeasibilityVerdict {
    bool feasible = false;
    Violation violation = Violation::none;
};

class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// DC power flow on the surviving topology. One slack bus per island
/// absorbs the island imbalance; reduced susceptance system solved per
/// island. Throws SolveError if an island's reduced matrix is singular
/// (rank decided by Eigen's FullPivLU default threshold).
FlowSolution solve_dc(const GridCase& gc, const std::vector<bool>& outage_mask,
                      const InjectionProfile& p);

/// Feasibility = (a) every island with positive load hosts an active
/// generator, (b) slack stays within its generator limits, (c) no line
/// exceeds its thermal limit, (d) the solve succeeded. Violations are
/// counted beyond a 1e-6 MW tolerance to avoid flapping at the limit.
FeasibilityVerdict check_feasibility(const GridCase& gc, const std::vector<bool>& outage_mask,
                                     const InjectionProfile& p);

/// Fraction of the fixed contingency list (all lines) that remains
/// feasible with outages = base \cup {realized} \cup {c}.
double n1_reward(const GridCase& gc, const std::vector<bool>& base_outage_mask,
                 const InjectionProfile& p, std::optional<int> realized_outage = std::nullopt);

/// Diagnostic CSV dump: bus,angle rows then line,flow rows.
void dump_flow_csv(std::ostream& os, const GridCase& gc, const FlowSolution& sol);

} // namespace gridsim
