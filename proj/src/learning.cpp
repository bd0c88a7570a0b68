#include "gridsim/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

#include "gridsim/parallel.hpp"

namespace gridsim {

DaAction da_policy_act(const DaState& s, const Eigen::VectorXd& psi,
                       const ActionCatalog& catalog, Rng& rng) {
    const int k = catalog.size();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> tied;
    for (int a = 0; a < k; ++a) {
        const double score = psi.dot(da_features(s, a, catalog));
        if (score > best) {
            best = score;
            tied.clear();
            tied.push_back(a);
        } else if (score == best) {
            tied.push_back(a);
        }
    }
    int choice = tied.front();
    if (tied.size() > 1) {
        std::uniform_int_distribution<size_t> pick(0, tied.size() - 1);
        choice = tied[pick(rng)];
    }
    return catalog.action(choice);
}

DaPolicy make_da_policy(const Eigen::VectorXd& psi, const ActionCatalog& catalog) {
    return [psi, &catalog](const DaState& s, Rng& rng) {
        return da_policy_act(s, psi, catalog, rng);
    };
}

namespace {

CandidateResult td0_pass(const Eigen::VectorXd& psi, const Simulator& sim,
                         const ActionCatalog& catalog, const IapiConfig& cfg, double alpha0,
                         Rng& rng) {
    CandidateResult res;
    Td0 td(kRtFeatureDim, cfg.gamma, alpha0, cfg.tau);
    const DaPolicy policy = make_da_policy(psi, catalog);
    bool diverged = false;
    for (int ep = 0; ep < cfg.n_episodes && !diverged; ++ep) {
        const DaState initial = sim.sample_initial_da_state(rng);
        const EpisodeTrace trace = sim.run_episode(initial, policy, rng);
        std::vector<Eigen::VectorXd> phis;
        phis.reserve(trace.states.size());
        for (const auto& s : trace.states)
            phis.push_back(rt_features(s, sim.grid()));
        for (size_t t = 0; t + 1 < phis.size(); ++t) {
            td.observe(phis[t], trace.steps[t].reward, phis[t + 1]);
            if (td.theta().lpNorm<Eigen::Infinity>() > cfg.theta_bound) {
                diverged = true;
                break;
            }
        }
        for (auto& phi : phis)
            res.visited.push_back(std::move(phi));
    }
    res.theta = td.theta();
    res.transitions = td.transitions();
    res.diverged = diverged;
    return res;
}

} // namespace

CandidateResult td0_evaluate(const Eigen::VectorXd& psi, const Simulator& sim,
                             const ActionCatalog& catalog, const IapiConfig& cfg, Rng& rng) {
    CandidateResult res = td0_pass(psi, sim, catalog, cfg, cfg.alpha0, rng);
    if (res.diverged)
        res = td0_pass(psi, sim, catalog, cfg, 0.5 * cfg.alpha0, rng);
    return res;
}

std::vector<int> rank_policies(const std::vector<Eigen::VectorXd>& thetas,
                               const std::vector<Eigen::VectorXd>& pool,
                               std::vector<double>* values_out) {
    if (pool.empty())
        throw std::invalid_argument("rank_policies: empty test pool");
    const int n = static_cast<int>(thetas.size());
    // mean feature vector first; v_hat_i is then a single dot product
    Eigen::VectorXd mean_phi = Eigen::VectorXd::Zero(pool.front().size());
    for (const auto& phi : pool)
        mean_phi += phi;
    mean_phi /= static_cast<double>(pool.size());

    std::vector<double> values(n);
    for (int i = 0; i < n; ++i)
        values[i] = thetas[i].dot(mean_phi);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] > values[b]; });
    if (values_out)
        *values_out = std::move(values);
    return order;
}

Eigen::VectorXd SamplingDistribution::sample(Rng& rng) const {
    std::uniform_int_distribution<size_t> pick(0, means.size() - 1);
    const Eigen::VectorXd& mu = means[pick(rng)];
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd x(mu.size());
    for (int i = 0; i < mu.size(); ++i)
        x[i] = mu[i] + std::sqrt(variance[i]) * unit(rng);
    return x;
}

SamplingDistribution initial_distribution(int dim, double sigma0) {
    SamplingDistribution d;
    // psi = 0 makes all inner products equal; ties resolve uniformly
    d.means.push_back(Eigen::VectorXd::Zero(dim));
    d.variance = Eigen::VectorXd::Constant(dim, sigma0 * sigma0);
    d.iteration = 0;
    return d;
}

SamplingDistribution cross_entropy_update(const SamplingDistribution& dist,
                                          const std::vector<Eigen::VectorXd>& elites,
                                          double sigma_min) {
    if (elites.empty())
        throw std::invalid_argument("cross_entropy_update: empty elite set");
    SamplingDistribution next;
    next.means = elites;
    const int dim = static_cast<int>(elites.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& e : elites)
        mean += e;
    mean /= static_cast<double>(elites.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& e : elites)
        var += (e - mean).cwiseAbs2();
    var /= static_cast<double>(elites.size()); // population convention
    next.variance = var.cwiseMax(sigma_min * sigma_min);
    next.iteration = dist.iteration + 1;
    return next;
}

bool check_convergence(const std::vector<double>& prev, const std::vector<double>& curr,
                       double epsilon) {
    if (prev.size() != curr.size())
        throw std::invalid_argument("check_convergence: elite list length mismatch");
    double stat = 0.0;
    for (size_t i = 0; i < prev.size(); ++i)
        stat += (curr[i] - prev[i]) * (curr[i] - prev[i]);
    stat /= static_cast<double>(prev.size());
    return stat < epsilon;
}

IapiReport run_iapi(const IapiConfig& cfg, int psi_dim, const CandidateEvaluator& evaluate,
                    std::uint64_t master_seed) {
    IapiReport report;
    SamplingDistribution dist = initial_distribution(psi_dim, cfg.sigma0);
    std::vector<double> prev_elite_values;
    std::vector<Eigen::VectorXd> pool; // survives iterations only in cumulative mode

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const int n = cfg.n_candidates;
        // candidate draws come from a single stream so the report is
        // reproducible regardless of worker count
        Rng draw_rng(master_seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(iter + 1));
        std::vector<Eigen::VectorXd> psis(n);
        for (int i = 0; i < n; ++i)
            psis[i] = dist.sample(draw_rng);

        std::vector<CandidateResult> results(n);
        parallel_for(n, cfg.workers, [&](int i) {
            std::seed_seq seq{master_seed, static_cast<std::uint64_t>(iter),
                              static_cast<std::uint64_t>(i)};
            Rng rng(seq);
            results[i] = evaluate(psis[i], rng);
        });

        if (!cfg.cumulative_pool)
            pool.clear();
        for (const auto& r : results)
            for (const auto& phi : r.visited)
                pool.push_back(phi);

        std::vector<Eigen::VectorXd> thetas(n);
        for (int i = 0; i < n; ++i)
            thetas[i] = results[i].theta;
        std::vector<double> values;
        const std::vector<int> order = rank_policies(thetas, pool, &values);

        const int n_top = std::min(cfg.elite_size(), n);
        IterationRecord rec;
        rec.psis = psis;
        rec.values = values;
        rec.elite.assign(n, 0);
        std::vector<Eigen::VectorXd> elites;
        std::vector<double> elite_values;
        for (int j = 0; j < n_top; ++j) {
            rec.elite[order[j]] = 1;
            elites.push_back(psis[order[j]]);
            elite_values.push_back(values[order[j]]);
        }
        for (const auto& r : results)
            rec.any_diverged = rec.any_diverged || r.diverged;

        double mean = 0.0;
        for (double v : elite_values)
            mean += v;
        mean /= static_cast<double>(n_top);
        double var = 0.0;
        for (double v : elite_values)
            var += (v - mean) * (v - mean);
        var /= static_cast<double>(n_top);
        rec.elite_mean = mean;
        rec.elite_std = std::sqrt(var);

        bool converged = false;
        if (prev_elite_values.empty()) {
            rec.conv_stat = std::numeric_limits<double>::infinity();
        } else {
            double stat = 0.0;
            for (size_t i = 0; i < elite_values.size(); ++i)
                stat += (elite_values[i] - prev_elite_values[i]) *
                        (elite_values[i] - prev_elite_values[i]);
            stat /= static_cast<double>(elite_values.size());
            rec.conv_stat = stat;
            converged = stat < cfg.epsilon;
        }

        report.iterations.push_back(std::move(rec));
        report.best_psi = psis[order[0]];
        if (converged) {
            report.converged = true;
            break;
        }
        prev_elite_values = elite_values;
        dist = cross_entropy_update(dist, elites, cfg.sigma_min);
    }
    return report;
}

IapiReport run_iapi(const IapiConfig& cfg, const Simulator& sim, const ActionCatalog& catalog,
                    std::uint64_t master_seed) {
    const int dim = catalog.size() + 4;
    CandidateEvaluator eval = [&](const Eigen::VectorXd& psi, Rng& rng) {
        return td0_evaluate(psi, sim, catalog, cfg, rng);
    };
    return run_iapi(cfg, dim, eval, master_seed);
}

void write_report_json(std::ostream& os, const IapiReport& report) {
    nlohmann::json j;
    j["converged"] = report.converged;
    j["best_psi"] = std::vector<double>(report.best_psi.data(),
                                        report.best_psi.data() + report.best_psi.size());
    auto& iters = j["iterations"] = nlohmann::json::array();
    for (const auto& rec : report.iterations) {
        nlohmann::json ji;
        auto& psis = ji["psi"] = nlohmann::json::array();
        for (const auto& p : rec.psis)
            psis.push_back(std::vector<double>(p.data(), p.data() + p.size()));
        ji["v"] = rec.values;
        ji["elite"] = std::vector<int>(rec.elite.begin(), rec.elite.end());
        ji["elite_mean"] = rec.elite_mean;
        ji["elite_std"] = rec.elite_std;
        ji["conv_stat"] = std::isfinite(rec.conv_stat) ? nlohmann::json(rec.conv_stat)
                                                       : nlohmann::json();
        ji["any_diverged"] = rec.any_diverged;
        iters.push_back(std::move(ji));
    }
    os << j.dump(2) << "\n";
}

void write_convergence_csv(std::ostream& os, const IapiReport& report) {
    os << "iteration,elite_mean,elite_std\n";
    for (size_t k = 0; k < report.iterations.size(); ++k)
        os << k << "," << report.iterations[k].elite_mean << ","
           << report.iterations[k].elite_std << "\n";
}

void write_psi_history_csv(std::ostream& os, const IapiReport& report) {
    os << "iteration,candidate,elite,v";
    if (!report.iterations.empty() && !report.iterations.front().psis.empty())
        for (int d = 0; d < report.iterations.front().psis.front().size(); ++d)
            os << ",psi" << d;
    os << "\n";
    for (size_t k = 0; k < report.iterations.size(); ++k) {
        const auto& rec = report.iterations[k];
        for (size_t i = 0; i < rec.psis.size(); ++i) {
            os << k << "," << i << "," << int(rec.elite[i]) << "," << rec.values[i];
            for (int d = 0; d < rec.psis[i].size(); ++d)
                os << "," << rec.psis[i][d];
            os << "\n";
        }
    }
}

} // namespace gridsim
