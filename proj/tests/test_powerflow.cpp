#include <doctest.h>

#include <random>
#include <sstream>

#include "gridsim/case.hpp"
#include "gridsim/powerflow.hpp"

using namespace gridsim;

namespace {

GridCase from_string(const std::string& text) {
    std::istringstream is(text);
    return parse_case(is, "inline");
}

// Independent dense oracle: assemble the full Laplacian, replace the
// slack row by the identity constraint theta_slack = 0, and solve the
// unreduced system per island.
Eigen::VectorXd oracle_angles(const GridCase& gc, const std::vector<bool>& mask,
                              const InjectionProfile& p, const FlowSolution& sol) {
    const int nb = gc.n_buses();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nb, nb);
    for (const auto& l : gc.lines) {
        if (mask[l.id])
            continue;
        lap(l.from_bus, l.from_bus) += l.susceptance;
        lap(l.to_bus, l.to_bus) += l.susceptance;
        lap(l.from_bus, l.to_bus) -= l.susceptance;
        lap(l.to_bus, l.from_bus) -= l.susceptance;
    }
    Eigen::VectorXd rhs = net_injection(gc, p);
    for (const auto& isl : sol.islands) {
        rhs[isl.slack_bus] += isl.adjustment;
        lap.row(isl.slack_bus).setZero();
        lap(isl.slack_bus, isl.slack_bus) = 1.0;
        rhs[isl.slack_bus] = sol.angles[isl.slack_bus]; // pin to the solver's gauge
    }
    return lap.colPivHouseholderQr().solve(rhs);
}

InjectionProfile simple_profile(const GridCase& gc, const Eigen::VectorXd& net) {
    // one fictitious always-active generator view: put all positive net
    // injection as generation on the generator buses present in the case
    InjectionProfile p;
    p.load = (-net).cwiseMax(0.0);
    p.wind = Eigen::VectorXd::Zero(gc.n_buses());
    p.generation = Eigen::VectorXd::Zero(gc.n_generators());
    p.active.assign(gc.n_generators(), true);
    Eigen::VectorXd pos = net.cwiseMax(0.0);
    std::vector<bool> assigned(gc.n_buses(), false);
    for (const auto& g : gc.generators)
        if (!assigned[g.bus]) {
            p.generation[g.id] = pos[g.bus];
            assigned[g.bus] = true;
        }
    // any positive injection on a bus without a generator becomes wind
    for (int b = 0; b < gc.n_buses(); ++b)
        if (!assigned[b])
            p.wind[b] = pos[b];
    return p;
}

const char* kTwoBus = R"(
BUS
0 0
1 1
LINE
0 0 1 10 150 0 5
GEN
0 0 0 500 1
)";

const char* kTriangle = R"(
BUS
0 0
1 1
2 1
LINE
0 0 1 100 999 0 5
1 0 2 100 999 0 5
2 1 2 100 999 0 5
GEN
0 0 0 500 1
)";

} // namespace

TEST_CASE("two-bus flow equals the transfer") {
    const GridCase gc = from_string(kTwoBus);
    InjectionProfile p;
    p.load = Eigen::VectorXd::Zero(2);
    p.load[1] = 100.0;
    p.wind = Eigen::VectorXd::Zero(2);
    p.generation = Eigen::VectorXd::Zero(1);
    p.generation[0] = 100.0;
    p.active = {true};
    const FlowSolution sol = solve_dc(gc, {false}, p);
    CHECK(sol.line_flows[0] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(sol.angles[0] == 0.0);
}

TEST_CASE("symmetric triangle splits the transfer") {
    const GridCase gc = from_string(kTriangle);
    InjectionProfile p;
    p.load = Eigen::VectorXd::Zero(3);
    p.load[1] = 45.0;
    p.load[2] = 45.0;
    p.wind = Eigen::VectorXd::Zero(3);
    p.generation = Eigen::VectorXd::Zero(1);
    p.generation[0] = 90.0;
    p.active = {true};
    const FlowSolution sol = solve_dc(gc, {false, false, false}, p);
    // frozen from the dense 2x2 reduced solve: flows 45, 45, 0
    CHECK(sol.line_flows[0] == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(sol.line_flows[1] == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(sol.line_flows[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero injections give the zero solution") {
    const GridCase gc = from_string(kTriangle);
    InjectionProfile p;
    p.load = Eigen::VectorXd::Zero(3);
    p.wind = Eigen::VectorXd::Zero(3);
    p.generation = Eigen::VectorXd::Zero(1);
    p.active = {true};
    const FlowSolution sol = solve_dc(gc, {false, false, false}, p);
    CHECK(sol.angles.norm() == 0.0);
    CHECK(sol.line_flows.norm() == 0.0);
}

TEST_CASE("conservation, antisymmetry and oracle equivalence on random cases") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> nbd(4, 30);
        const int nb = nbd(rng);
        std::ostringstream os;
        os << "BUS\n";
        for (int b = 0; b < nb; ++b)
            os << b << " " << (b > 0 ? 1 : 0) << "\n";
        os << "LINE\n";
        std::uniform_real_distribution<double> sus(50.0, 500.0);
        std::uniform_int_distribution<int> pick(0, nb - 1);
        int lid = 0;
        for (int b = 1; b < nb; ++b) // random spanning tree
            os << lid++ << " " << (pick(rng) % b) << " " << b << " " << sus(rng)
               << " 1e9 0 5\n";
        for (int extra = 0; extra < nb / 2; ++extra) {
            int a = pick(rng), b = pick(rng);
            if (a == b)
                continue;
            os << lid++ << " " << a << " " << b << " " << sus(rng) << " 1e9 0 5\n";
        }
        os << "GEN\n0 0 0 1e9 1\n";
        const GridCase gc = from_string(os.str());

        Eigen::VectorXd net(nb);
        std::uniform_real_distribution<double> load(10.0, 120.0);
        double total = 0.0;
        for (int b = 1; b < nb; ++b) {
            net[b] = -load(rng);
            total -= net[b];
        }
        net[0] = total;
        const InjectionProfile p = simple_profile(gc, net);

        std::vector<bool> mask(gc.n_lines(), false);
        const FlowSolution sol = solve_dc(gc, mask, p);

        // KCL: signed incident flows equal the adjusted injection per bus
        Eigen::VectorXd residual = net_injection(gc, p);
        for (const auto& isl : sol.islands)
            residual[isl.slack_bus] += isl.adjustment;
        for (const auto& l : gc.lines) {
            residual[l.from_bus] -= sol.line_flows[l.id];
            residual[l.to_bus] += sol.line_flows[l.id];
        }
        CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-6);

        // slack adjustments balance each island
        double adj = 0.0;
        for (const auto& isl : sol.islands)
            adj += isl.adjustment;
        CHECK(std::abs(net_injection(gc, p).sum() + adj) < 1e-6);

        // oracle equivalence
        const Eigen::VectorXd oracle = oracle_angles(gc, mask, p, sol);
        for (const auto& l : gc.lines) {
            const double want = l.susceptance * (oracle[l.from_bus] - oracle[l.to_bus]);
            CHECK(sol.line_flows[l.id] ==
                  doctest::Approx(want).epsilon(1e-9).scale(std::abs(want) + 1.0));
        }

        // antisymmetry: reversing a line's orientation negates its flow
        GridCase flipped = gc;
        std::swap(flipped.lines[0].from_bus, flipped.lines[0].to_bus);
        const FlowSolution sol2 = solve_dc(flipped, mask, p);
        CHECK(sol2.line_flows[0] == doctest::Approx(-sol.line_flows[0]).epsilon(1e-9));
    }
}

TEST_CASE("feasibility verdicts") {
    const GridCase gc = from_string(kTriangle);
    InjectionProfile p;
    p.load = Eigen::VectorXd::Zero(3);
    p.load[1] = 45.0;
    p.load[2] = 45.0;
    p.wind = Eigen::VectorXd::Zero(3);
    p.generation = Eigen::VectorXd::Zero(1);
    p.generation[0] = 90.0;
    p.active = {true};

    SUBCASE("healthy case is feasible") {
        const auto v = check_feasibility(gc, {false, false, false}, p);
        CHECK(v.feasible);
        CHECK(v.violation == Violation::none);
    }
    SUBCASE("isolated load-only bus") {
        // lines 0 (0-1) and 2 (1-2) out: bus 1 islands with 45 MW load
        const auto v = check_feasibility(gc, {true, false, true}, p);
        CHECK(!v.feasible);
        CHECK(v.violation == Violation::island_without_generation);
    }
    SUBCASE("thermal limit cuts the triangle") {
        GridCase tight = gc;
        tight.lines[0].thermal_limit = 40.0; // flow is 45 by the dense oracle
        const auto v = check_feasibility(tight, {false, false, false}, p);
        CHECK(!v.feasible);
        CHECK(v.violation == Violation::line_overload);
    }
    SUBCASE("slack outside generator limits") {
        GridCase tight = gc;
        tight.generators[0].g_max = 100.0;
        InjectionProfile q = p;
        q.generation[0] = 70.0; // 20 MW short; slack must rise to 90, fine
        CHECK(check_feasibility(tight, {false, false, false}, q).feasible);
        q.generation[0] = 20.0; // slack must rise to 90 from 20: adjustment 70 ok
        CHECK(check_feasibility(tight, {false, false, false}, q).feasible);
        tight.generators[0].g_max = 80.0; // now 90 exceeds g_max
        const auto v = check_feasibility(tight, {false, false, false}, q);
        CHECK(!v.feasible);
        CHECK(v.violation == Violation::slack_limit_exceeded);
    }
}

TEST_CASE("n1_reward matches brute-force enumeration") {
    const GridCase gc = load_case(std::string(GRIDSIM_DATA_DIR) + "/case6.case");
    InjectionProfile p;
    p.load = Eigen::VectorXd::Zero(6);
    p.load[3] = 70.0;
    p.load[4] = 70.0;
    p.load[5] = 70.0;
    p.wind = Eigen::VectorXd::Zero(6);
    p.wind[4] = 20.0;
    p.wind[5] = 15.0;
    p.generation = Eigen::VectorXd::Zero(3);
    p.generation[0] = 95.0;
    p.generation[1] = 50.0;
    p.generation[2] = 30.0;
    p.active = {true, true, true};

    std::vector<bool> base(gc.n_lines(), false);
    SUBCASE("healthy base passes every screen") {
        CHECK(n1_reward(gc, base, p) == doctest::Approx(1.0));
    }
    SUBCASE("reward equals the enumerated pass fraction") {
        // stress: take out line 1 (0-3) as the base topology
        base[1] = true;
        int passed = 0;
        for (const auto& c : gc.lines) {
            std::vector<bool> mask = base;
            mask[c.id] = true;
            if (check_feasibility(gc, mask, p).feasible)
                ++passed;
        }
        const double want = static_cast<double>(passed) / gc.n_lines();
        CHECK(n1_reward(gc, base, p) == doctest::Approx(want));
    }
    SUBCASE("reward recomputed consistently as base outages grow") {
        double prev = n1_reward(gc, base, p);
        for (int l : {1, 9, 4}) {
            base[l] = true;
            const double r = n1_reward(gc, base, p);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            CHECK(r == n1_reward(gc, base, p)); // no caching artifacts
            prev = r;
        }
        (void)prev;
    }
}
