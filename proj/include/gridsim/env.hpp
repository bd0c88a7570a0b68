#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gridsim/case.hpp"
#include "gridsim/powerflow.hpp"

namespace gridsim {

using Rng = std::mt19937_64;

/// 24-step forecast of nodal demand and per-unit wind generation.
struct DaState {
    Eigen::MatrixXd demand_forecast; // T_D x n_buses, MW
    Eigen::MatrixXd wind_forecast;   // T_D x n_wind, MW
    int day_index = 0;
};

struct DaAction {
    int subset_index = 0;
    std::vector<bool> active; // per controllable generator
};

/// RT state (d, w, g, e) plus the forecast-error random walk it carries.
struct RtState {
    Eigen::VectorXd demand;     // per bus
    Eigen::VectorXd wind;       // per wind unit
    Eigen::VectorXd generation; // per controllable generator
    std::vector<int> line_countdown;
    int hour = 0;
    Eigen::VectorXd demand_bias;    // delta^d
    Eigen::VectorXd wind_bias;      // delta^w
    Eigen::VectorXd demand_eps_std; // per-component std of the walk step
    Eigen::VectorXd wind_eps_std;
    std::vector<bool> active; // generators chosen by the day's DA action
};

// Post-decision state: same shape, generation already redispatched.
using RtPostState = RtState;

struct ExogenousEvent {
    std::optional<int> failed_line;
};

struct ScenarioConfig {
    int t_d = 24;
    int horizon_days = 3;
    double base_demand = 70.0; // MW per load bus at profile level 1.0
    double profile_amp = 0.3;
    double wind_cf = 0.35; // capacity factor of the wind shapes
    std::vector<std::string> profiles = {"flat", "peak", "double_peak"};
    double initial_noise = 0.05; // per-entry noise on the sampled DA profile
    double day_bias = 0.02;      // day-over-day profile shift scale
    double sigma_d0 = 0.01;      // RT demand forecast error scale
    double sigma_w0 = 0.05;      // RT wind forecast error scale
    double sigma_eps = 0.05;     // random-walk step scale (times |delta_0|)
    double fail_prob_override = -1.0; // < 0: use per-line values from the case
    int repair_override = -1;         // < 0: use per-line values from the case
};

struct StepRecord {
    int day = 0;
    int hour = 0;
    double reward = 0.0;
    std::optional<int> failed_line;
    double total_demand = 0.0;
    double total_generation = 0.0;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    std::vector<RtState> states; // pre-decision RT states, in visit order
    std::vector<DaAction> da_actions;
};

using DaPolicy = std::function<DaAction(const DaState&, Rng&)>;

/// Max over hours of total forecast demand minus total forecast wind.
double peak_effective_demand(const DaState& s);
double min_effective_demand(const DaState& s);
double mean_effective_demand(const DaState& s);

/// The interleaved DA/RT environment over one grid case. All sampling
/// methods are const; randomness comes from the caller's Rng, so the
/// simulator is freely shared across workers.
class Simulator {
public:
    Simulator(const GridCase& gc, ScenarioConfig cfg);

    const GridCase& grid() const { return *case_; }
    const ScenarioConfig& config() const { return cfg_; }
    const std::vector<DaState>& profile_library() const { return library_; }

    DaState sample_initial_da_state(Rng& rng) const;
    DaState da_transition(const DaState& s, Rng& rng) const;

    RtState init_rt_day(const DaState& da, const DaAction& action,
                        const std::optional<RtState>& prev, Rng& rng) const;
    RtPostState dispatch_heuristic(const RtState& s, const DaAction& action) const;
    ExogenousEvent sample_contingency(const RtPostState& post, Rng& rng) const;
    std::pair<double, RtState> rt_step(const RtPostState& post, const ExogenousEvent& ev,
                                       const DaState& da, const DaAction& action, Rng& rng) const;

    double reward(const RtPostState& post, const ExogenousEvent& ev) const;
    InjectionProfile injection_profile(const RtState& s) const;

    EpisodeTrace run_episode(const DaState& initial, const DaPolicy& policy, Rng& rng) const;

    double line_fail_prob(int line) const;
    int line_repair_steps(int line) const;

private:
    std::vector<int> step_countdown(const std::vector<int>& countdown,
                                    const ExogenousEvent& ev) const;
    RtState make_rt_state(const DaState& da, int hour, const Eigen::VectorXd& demand_bias,
                          const Eigen::VectorXd& wind_bias, const RtState& carry) const;

    const GridCase* case_;
    ScenarioConfig cfg_;
    std::vector<DaState> library_;
};

/// Line-oriented JSON stream, one record per RT step.
void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace);

} // namespace gridsim
