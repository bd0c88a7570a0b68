#include "gridsim/powerflow.hpp"

#include <cmath>
#include <limits>

namespace gridsim {

namespace {

constexpr double kTolMw = 1e-6;

struct InternalResult {
    FlowSolution sol;
    Violation violation = Violation::none;
};

// Slack generator for an island: active generator with the largest g_max,
// ties broken by lowest bus id, then lowest generator id.
IslandSlack pick_slack(const GridCase& gc, const std::vector<int>& island_buses,
                       const std::vector<int>& island_label, int island,
                       const InjectionProfile& p) {
    IslandSlack s;
    double best = -1.0;
    for (const auto& g : gc.generators) {
        if (island_label[g.bus] != island)
            continue;
        if (!p.active[g.id])
            continue;
        bool better = g.g_max > best ||
                      (g.g_max == best && (g.bus < s.slack_bus ||
                                           (g.bus == s.slack_bus && g.id < s.slack_gen)));
        if (better) {
            best = g.g_max;
            s.slack_bus = g.bus;
            s.slack_gen = g.id;
        }
    }
    if (s.slack_gen < 0)
        s.slack_bus = island_buses.front(); // lowest id; pure angle reference
    return s;
}

InternalResult solve_internal(const GridCase& gc, const std::vector<bool>& outage_mask,
                              const InjectionProfile& p) {
    const int nb = gc.n_buses();
    InternalResult res;
    res.sol.angles = Eigen::VectorXd::Zero(nb);
    res.sol.line_flows = Eigen::VectorXd::Zero(gc.n_lines());

    const Eigen::VectorXd inj = net_injection(gc, p);
    const Islands islands = connected_components(gc, outage_mask);

    for (int isl = 0; isl < islands.count(); ++isl) {
        const auto& buses = islands.groups[isl];
        const int m = static_cast<int>(buses.size());

        IslandSlack slack = pick_slack(gc, buses, islands.label, isl, p);
        double imbalance = 0.0;
        for (int b : buses)
            imbalance += inj[b];
        slack.adjustment = -imbalance;
        res.sol.islands.push_back(slack);

        if (m == 1)
            continue;

        std::vector<int> local(nb, -1);
        for (int i = 0; i < m; ++i)
            local[buses[i]] = i;

        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
        for (const auto& l : gc.lines) {
            if (outage_mask[l.id] || islands.label[l.from_bus] != isl)
                continue;
            int a = local[l.from_bus], b = local[l.to_bus];
            lap(a, a) += l.susceptance;
            lap(b, b) += l.susceptance;
            lap(a, b) -= l.susceptance;
            lap(b, a) -= l.susceptance;
        }

        // ground the slack bus: drop its row and column
        const int sl = local[slack.slack_bus];
        Eigen::MatrixXd red(m - 1, m - 1);
        Eigen::VectorXd rhs(m - 1);
        for (int i = 0, ri = 0; i < m; ++i) {
            if (i == sl)
                continue;
            rhs[ri] = inj[buses[i]];
            for (int j = 0, rj = 0; j < m; ++j) {
                if (j == sl)
                    continue;
                red(ri, rj) = lap(i, j);
                ++rj;
            }
            ++ri;
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(red);
        if (!lu.isInvertible()) {
            res.violation = Violation::singular_system;
            return res;
        }
        Eigen::VectorXd theta = lu.solve(rhs);
        for (int i = 0, ri = 0; i < m; ++i) {
            if (i == sl)
                continue;
            res.sol.angles[buses[i]] = theta[ri++];
        }
    }

    for (const auto& l : gc.lines) {
        if (outage_mask[l.id])
            continue;
        res.sol.line_flows[l.id] =
            l.susceptance * (res.sol.angles[l.from_bus] - res.sol.angles[l.to_bus]);
    }

    // pin the global reference bus to angle 0 within its island
    const double ref_shift = res.sol.angles[gc.reference_bus];
    if (ref_shift != 0.0) {
        const Islands islands2 = connected_components(gc, outage_mask);
        const int ref_isl = islands2.label[gc.reference_bus];
        for (int b = 0; b < nb; ++b)
            if (islands2.label[b] == ref_isl)
                res.sol.angles[b] -= ref_shift;
    }
    return res;
}

} // namespace

const char* violation_name(Violation v) {
    switch (v) {
    case Violation::none: return "none";
    case Violation::island_without_generation: return "island-without-generation";
    case Violation::slack_limit_exceeded: return "slack-limit-exceeded";
    case Violation::line_overload: return "line-overload";
    case Violation::singular_system: return "singular-system";
    }
    return "?";
}

Eigen::VectorXd net_injection(const GridCase& gc, const InjectionProfile& p) {
    Eigen::VectorXd inj = p.wind - p.load;
    for (const auto& g : gc.generators)
        inj[g.bus] += p.generation[g.id];
    return inj;
}

FlowSolution solve_dc(const GridCase& gc, const std::vector<bool>& outage_mask,
                      const InjectionProfile& p) {
    InternalResult res = solve_internal(gc, outage_mask, p);
    if (res.violation == Violation::singular_system)
        throw SolveError("solve_dc: singular island system");
    return res.sol;
}

FeasibilityVerdict check_feasibility(const GridCase& gc, const std::vector<bool>& outage_mask,
                                     const InjectionProfile& p) {
    const Islands islands = connected_components(gc, outage_mask);
    // (a) islands with load (or any imbalance) need an active generator
    {
        const Eigen::VectorXd inj = net_injection(gc, p);
        for (int isl = 0; isl < islands.count(); ++isl) {
            bool has_active = false;
            for (const auto& g : gc.generators)
                if (p.active[g.id] && islands.label[g.bus] == isl)
                    has_active = true;
            if (has_active)
                continue;
            double load = 0.0, imbalance = 0.0;
            for (int b : islands.groups[isl]) {
                load += p.load[b];
                imbalance += inj[b];
            }
            if (load > kTolMw || std::abs(imbalance) > kTolMw)
                return {false, Violation::island_without_generation};
        }
    }

    InternalResult res = solve_internal(gc, outage_mask, p);
    if (res.violation != Violation::none)
        return {false, res.violation};

    // (b) slack generator stays within its limits after absorbing the imbalance
    for (const auto& isl : res.sol.islands) {
        if (isl.slack_gen < 0)
            continue;
        const Generator& g = gc.generators[isl.slack_gen];
        const double out = p.generation[g.id] + isl.adjustment;
        if (out < g.g_min - kTolMw || out > g.g_max + kTolMw)
            return {false, Violation::slack_limit_exceeded};
    }

    // (c) thermal limits
    for (const auto& l : gc.lines) {
        if (outage_mask[l.id])
            continue;
        if (std::abs(res.sol.line_flows[l.id]) > l.thermal_limit + kTolMw)
            return {false, Violation::line_overload};
    }
    return {true, Violation::none};
}

double n1_reward(const GridCase& gc, const std::vector<bool>& base_outage_mask,
                 const InjectionProfile& p, std::optional<int> realized_outage) {
    std::vector<bool> base = base_outage_mask;
    base.resize(gc.lines.size(), false);
    if (realized_outage)
        base[*realized_outage] = true;
    int passed = 0;
    std::vector<bool> mask = base;
    for (const auto& c : gc.lines) {
        const bool already = base[c.id];
        mask[c.id] = true;
        if (check_feasibility(gc, mask, p).feasible)
            ++passed;
        mask[c.id] = already;
    }
    return static_cast<double>(passed) / static_cast<double>(gc.n_lines());
}

void dump_flow_csv(std::ostream& os, const GridCase& gc, const FlowSolution& sol) {
    os << "bus,angle\n";
    for (int b = 0; b < gc.n_buses(); ++b)
        os << b << "," << sol.angles[b] << "\n";
    os << "line,flow\n";
    for (int l = 0; l < gc.n_lines(); ++l)
        os << l << "," << sol.line_flows[l] << "\n";
}

} // namespace gridsim
