#include "gridsim/env.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>

namespace gridsim {

namespace {

double demand_shape(const std::string& name, int hour) {
    const double h = static_cast<double>(hour);
    if (name == "flat")
        return 1.0;
    if (name == "peak")
        return 1.0 + std::exp(-(h - 17.0) * (h - 17.0) / 18.0);
    if (name == "double_peak")
        return 1.0 + 0.7 * std::exp(-(h - 9.0) * (h - 9.0) / 12.0) +
               0.7 * std::exp(-(h - 19.0) * (h - 19.0) / 12.0);
    throw std::invalid_argument("unknown profile shape: " + name);
}

double wind_shape(const std::string& name, int hour) {
    const double h = static_cast<double>(hour);
    if (name == "flat")
        return 1.0;
    if (name == "peak") // nightly breeze tapering through the day
        return 0.7 + 0.5 * std::exp(-(h - 3.0) * (h - 3.0) / 32.0);
    if (name == "double_peak")
        return 0.8 + 0.4 * std::cos(2.0 * std::numbers::pi * h / 24.0);
    throw std::invalid_argument("unknown profile shape: " + name);
}

} // namespace

double peak_effective_demand(const DaState& s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < s.demand_forecast.rows(); ++h)
        best = std::max(best, s.demand_forecast.row(h).sum() - s.wind_forecast.row(h).sum());
    return best;
}

double min_effective_demand(const DaState& s) {
    double best = std::numeric_limits<double>::infinity();
    for (int h = 0; h < s.demand_forecast.rows(); ++h)
        best = std::min(best, s.demand_forecast.row(h).sum() - s.wind_forecast.row(h).sum());
    return best;
}

double mean_effective_demand(const DaState& s) {
    return (s.demand_forecast.sum() - s.wind_forecast.sum()) /
           static_cast<double>(s.demand_forecast.rows());
}

Simulator::Simulator(const GridCase& gc, ScenarioConfig cfg) : case_(&gc), cfg_(std::move(cfg)) {
    if (cfg_.profiles.empty())
        throw std::invalid_argument("profile library must be non-empty");
    const int nb = gc.n_buses();
    const int nw = gc.n_wind();
    for (const auto& name : cfg_.profiles) {
        DaState p;
        p.demand_forecast = Eigen::MatrixXd::Zero(cfg_.t_d, nb);
        p.wind_forecast = Eigen::MatrixXd::Zero(cfg_.t_d, nw);
        for (int h = 0; h < cfg_.t_d; ++h) {
            const double ds = 1.0 + cfg_.profile_amp * (demand_shape(name, h) - 1.0);
            for (int b = 0; b < nb; ++b)
                if (gc.buses[b].has_load)
                    p.demand_forecast(h, b) = cfg_.base_demand * ds;
            for (int u = 0; u < nw; ++u)
                p.wind_forecast(h, u) =
                    std::min(gc.wind[u].capacity, gc.wind[u].capacity * cfg_.wind_cf * wind_shape(name, h));
        }
        library_.push_back(std::move(p));
    }
}

double Simulator::line_fail_prob(int line) const {
    return cfg_.fail_prob_override >= 0.0 ? cfg_.fail_prob_override : case_->lines[line].fail_prob;
}

int Simulator::line_repair_steps(int line) const {
    return cfg_.repair_override >= 0 ? cfg_.repair_override : case_->lines[line].repair_steps;
}

DaState Simulator::sample_initial_da_state(Rng& rng) const {
    std::uniform_int_distribution<size_t> pick(0, library_.size() - 1);
    DaState s = library_[pick(rng)];
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int h = 0; h < s.demand_forecast.rows(); ++h)
        for (int b = 0; b < s.demand_forecast.cols(); ++b) {
            double& v = s.demand_forecast(h, b);
            v = std::max(0.0, v + cfg_.initial_noise * v * unit(rng));
        }
    for (int h = 0; h < s.wind_forecast.rows(); ++h)
        for (int u = 0; u < s.wind_forecast.cols(); ++u) {
            double& v = s.wind_forecast(h, u);
            v = std::clamp(v + cfg_.initial_noise * v * unit(rng), 0.0, case_->wind[u].capacity);
        }
    s.day_index = 0;
    return s;
}

DaState Simulator::da_transition(const DaState& s, Rng& rng) const {
    DaState next = s;
    std::normal_distribution<double> unit(0.0, 1.0);
    const double invT = 1.0 / static_cast<double>(s.demand_forecast.rows());
    // one bias per bus/unit, held constant across the 24 hours
    for (int b = 0; b < s.demand_forecast.cols(); ++b) {
        const double scale = cfg_.day_bias * s.demand_forecast.col(b).sum() * invT;
        const double bias = scale * unit(rng);
        for (int h = 0; h < s.demand_forecast.rows(); ++h)
            next.demand_forecast(h, b) = std::max(0.0, s.demand_forecast(h, b) + bias);
    }
    for (int u = 0; u < s.wind_forecast.cols(); ++u) {
        const double scale = cfg_.day_bias * s.wind_forecast.col(u).sum() * invT;
        const double bias = scale * unit(rng);
        for (int h = 0; h < s.wind_forecast.rows(); ++h)
            next.wind_forecast(h, u) =
                std::clamp(s.wind_forecast(h, u) + bias, 0.0, case_->wind[u].capacity);
    }
    next.day_index = s.day_index + 1;
    return next;
}

RtState Simulator::init_rt_day(const DaState& da, const DaAction& action,
                               const std::optional<RtState>& prev, Rng& rng) const {
    const int nb = case_->n_buses();
    const int nw = case_->n_wind();
    RtState s;
    s.hour = 0;
    s.active = action.active;
    s.line_countdown = prev ? prev->line_countdown : std::vector<int>(case_->n_lines(), 0);

    std::normal_distribution<double> unit(0.0, 1.0);
    s.demand_bias = Eigen::VectorXd::Zero(nb);
    for (int b = 0; b < nb; ++b)
        s.demand_bias[b] = cfg_.sigma_d0 * da.demand_forecast(0, b) * unit(rng);
    s.wind_bias = Eigen::VectorXd::Zero(nw);
    for (int u = 0; u < nw; ++u)
        s.wind_bias[u] = cfg_.sigma_w0 * da.wind_forecast(0, u) * unit(rng);
    s.demand_eps_std = cfg_.sigma_eps * s.demand_bias.cwiseAbs();
    s.wind_eps_std = cfg_.sigma_eps * s.wind_bias.cwiseAbs();

    s.demand = (da.demand_forecast.row(0).transpose() + s.demand_bias).cwiseMax(0.0);
    s.wind = Eigen::VectorXd::Zero(nw);
    for (int u = 0; u < nw; ++u)
        s.wind[u] = std::clamp(da.wind_forecast(0, u) + s.wind_bias[u], 0.0, case_->wind[u].capacity);

    s.generation = Eigen::VectorXd::Zero(case_->n_generators());
    s.generation = dispatch_heuristic(s, action).generation;
    return s;
}

RtPostState Simulator::dispatch_heuristic(const RtState& s, const DaAction& action) const {
    RtPostState post = s;
    post.active = action.active;
    const double target = s.demand.sum() - s.wind.sum();

    double sum_min = 0.0, sum_max = 0.0;
    for (const auto& g : case_->generators)
        if (action.active[g.id]) {
            sum_min += g.g_min;
            sum_max += g.g_max;
        }
    const double want = std::clamp(target, sum_min, sum_max);

    // proportional-to-capacity dispatch with limits: g_i = clamp(lam*g_max, g_min, g_max),
    // lam solved by bisection; this is the fixed point of clip-and-redistribute
    auto total_at = [&](double lam) {
        double tot = 0.0;
        for (const auto& g : case_->generators)
            if (action.active[g.id])
                tot += std::clamp(lam * g.g_max, g.g_min, g.g_max);
        return tot;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total_at(mid) < want ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (const auto& g : case_->generators)
        post.generation[g.id] =
            action.active[g.id] ? std::clamp(lam * g.g_max, g.g_min, g.g_max) : 0.0;
    return post;
}

ExogenousEvent Simulator::sample_contingency(const RtPostState& post, Rng& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<int> fired;
    for (const auto& l : case_->lines) {
        if (post.line_countdown[l.id] > 0)
            continue; // failed lines cannot fail again
        const double p = line_fail_prob(l.id);
        if (p > 0.0 && u01(rng) < p)
            fired.push_back(l.id);
    }
    ExogenousEvent ev;
    if (fired.size() == 1) {
        ev.failed_line = fired.front();
    } else if (fired.size() > 1) {
        std::uniform_int_distribution<size_t> pick(0, fired.size() - 1);
        ev.failed_line = fired[pick(rng)];
    }
    return ev;
}

InjectionProfile Simulator::injection_profile(const RtState& s) const {
    InjectionProfile p;
    p.load = s.demand;
    p.wind = Eigen::VectorXd::Zero(case_->n_buses());
    for (const auto& w : case_->wind)
        p.wind[w.bus] += s.wind[w.id];
    p.generation = s.generation;
    p.active = s.active;
    return p;
}

double Simulator::reward(const RtPostState& post, const ExogenousEvent& ev) const {
    return n1_reward(*case_, outage_mask_from_countdown(post.line_countdown),
                     injection_profile(post), ev.failed_line);
}

std::vector<int> Simulator::step_countdown(const std::vector<int>& countdown,
                                           const ExogenousEvent& ev) const {
    std::vector<int> next = countdown;
    for (auto& c : next)
        if (c > 0)
            --c;
    if (ev.failed_line)
        next = apply_outage(std::move(next), *ev.failed_line, line_repair_steps(*ev.failed_line));
    return next;
}

std::pair<double, RtState> Simulator::rt_step(const RtPostState& post, const ExogenousEvent& ev,
                                              const DaState& da, const DaAction& action,
                                              Rng& rng) const {
    if (post.hour + 1 >= cfg_.t_d)
        throw std::logic_error("rt_step past day boundary; use init_rt_day");
    const double r = reward(post, ev);

    RtState next = post;
    next.line_countdown = step_countdown(post.line_countdown, ev);
    next.hour = post.hour + 1;

    std::normal_distribution<double> unit(0.0, 1.0);
    for (int b = 0; b < next.demand_bias.size(); ++b)
        next.demand_bias[b] += next.demand_eps_std[b] * unit(rng);
    for (int u = 0; u < next.wind_bias.size(); ++u)
        next.wind_bias[u] += next.wind_eps_std[u] * unit(rng);

    next.demand = (da.demand_forecast.row(next.hour).transpose() + next.demand_bias).cwiseMax(0.0);
    for (int u = 0; u < next.wind.size(); ++u)
        next.wind[u] = std::clamp(da.wind_forecast(next.hour, u) + next.wind_bias[u], 0.0,
                                  case_->wind[u].capacity);
    next.active = action.active;
    // generation carried over; the next dispatch moves it
    return {r, next};
}

EpisodeTrace Simulator::run_episode(const DaState& initial, const DaPolicy& policy,
                                    Rng& rng) const {
    EpisodeTrace trace;
    DaState da = initial;
    std::optional<RtState> carry;
    for (int day = 0; day < cfg_.horizon_days; ++day) {
        const DaAction action = policy(da, rng);
        trace.da_actions.push_back(action);
        RtState rt = init_rt_day(da, action, carry, rng);
        for (int h = 0; h < cfg_.t_d; ++h) {
            trace.states.push_back(rt);
            const RtPostState post = dispatch_heuristic(rt, action);
            const ExogenousEvent ev = sample_contingency(post, rng);
            StepRecord rec;
            rec.day = day;
            rec.hour = h;
            rec.failed_line = ev.failed_line;
            rec.total_demand = rt.demand.sum();
            rec.total_generation = post.generation.sum();
            if (h + 1 < cfg_.t_d) {
                auto [r, next] = rt_step(post, ev, da, action, rng);
                rec.reward = r;
                rt = std::move(next);
            } else {
                rec.reward = reward(post, ev);
                RtState last = post;
                last.line_countdown = step_countdown(post.line_countdown, ev);
                carry = std::move(last);
            }
            trace.steps.push_back(rec);
        }
        da = da_transition(da, rng);
    }
    return trace;
}

void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace) {
    for (const auto& s : trace.steps) {
        nlohmann::json j;
        j["day"] = s.day;
        j["hour"] = s.hour;
        j["reward"] = s.reward;
        j["failed_line"] = s.failed_line ? nlohmann::json(*s.failed_line) : nlohmann::json();
        j["total_demand"] = s.total_demand;
        j["total_generation"] = s.total_generation;
        os << j.dump() << "\n";
    }
}

} // namespace gridsim
