#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "gridsim/env.hpp"
#include "gridsim/features.hpp"

namespace gridsim {

struct IapiConfig {
    int n_candidates = 200;
    double elite_frac = 0.2;
    int n_episodes = 50;
    double gamma = 0.95;
    double alpha0 = 0.01;
    double tau = 1e4; // step-size decay, alpha_n = alpha0 / (1 + n/tau)
    double theta_bound = 1e3;
    double sigma0 = 1.0;      // initial sampling std around psi = 0
    double sigma_min = 0.05;  // per-coordinate std floor of the mixture
    double epsilon = 1e-4;
    int max_iters = 30;
    bool cumulative_pool = false;
    int workers = 1;

    int elite_size() const {
        return static_cast<int>(std::ceil(elite_frac * n_candidates));
    }
};

/// Argmax over the catalog of psi . Phi(s, a); exact ties broken
/// uniformly at random.
DaAction da_policy_act(const DaState& s, const Eigen::VectorXd& psi,
                       const ActionCatalog& catalog, Rng& rng);

DaPolicy make_da_policy(const Eigen::VectorXd& psi, const ActionCatalog& catalog);

/// Linear TD(0) with decaying step size. The caller feeds consecutive
/// (phi, r, phi') transitions; pass a zero phi' for terminal steps.
class Td0 {
public:
    Td0(int dim, double gamma, double alpha0, double tau)
        : theta_(Eigen::VectorXd::Zero(dim)), gamma_(gamma), alpha0_(alpha0), tau_(tau) {}

    void observe(const Eigen::VectorXd& phi, double r, const Eigen::VectorXd& phi_next) {
        const double alpha = alpha0_ / (1.0 + static_cast<double>(n_) / tau_);
        const double delta = r + gamma_ * theta_.dot(phi_next) - theta_.dot(phi);
        theta_ += alpha * delta * phi;
        ++n_;
    }

    const Eigen::VectorXd& theta() const { return theta_; }
    long transitions() const { return n_; }

private:
    Eigen::VectorXd theta_;
    double gamma_, alpha0_, tau_;
    long n_ = 0;
};

struct CandidateResult {
    Eigen::VectorXd theta;
    std::vector<Eigen::VectorXd> visited; // RT feature vectors, pool contribution
    bool diverged = false;
    long transitions = 0;
};

/// Runs n_episodes under pi(psi) and fits theta by TD(0) over all
/// consecutive state pairs. On a divergence (|theta|_inf beyond the
/// bound) the evaluation restarts once with alpha0 halved.
CandidateResult td0_evaluate(const Eigen::VectorXd& psi, const Simulator& sim,
                             const ActionCatalog& catalog, const IapiConfig& cfg, Rng& rng);

/// v_hat_i = mean over the pool of theta_i . phi(s); descending order,
/// ties by candidate index.
std::vector<int> rank_policies(const std::vector<Eigen::VectorXd>& thetas,
                               const std::vector<Eigen::VectorXd>& pool,
                               std::vector<double>* values_out = nullptr);

/// Equal-weight Gaussian mixture with shared diagonal variance.
struct SamplingDistribution {
    std::vector<Eigen::VectorXd> means;
    Eigen::VectorXd variance; // shared across components
    int iteration = 0;

    Eigen::VectorXd sample(Rng& rng) const;
};

SamplingDistribution initial_distribution(int dim, double sigma0);

/// New components = elites; shared variance = per-coordinate population
/// variance of the elite set, floored at sigma_min^2.
SamplingDistribution cross_entropy_update(const SamplingDistribution& dist,
                                          const std::vector<Eigen::VectorXd>& elites,
                                          double sigma_min);

/// Mean squared rank-paired difference of elite values below epsilon.
/// Both lists must be sorted descending and of equal length.
bool check_convergence(const std::vector<double>& prev_elite_values,
                       const std::vector<double>& curr_elite_values, double epsilon);

struct IterationRecord {
    std::vector<Eigen::VectorXd> psis;
    std::vector<double> values;  // v_hat per candidate
    std::vector<char> elite;     // 1 if candidate is in the elite set
    double elite_mean = 0.0;
    double elite_std = 0.0;
    double conv_stat = 0.0; // vs previous iteration; inf on the first
    bool any_diverged = false;
};

struct IapiReport {
    std::vector<IterationRecord> iterations;
    Eigen::VectorXd best_psi;
    bool converged = false;
};

using CandidateEvaluator =
    std::function<CandidateResult(const Eigen::VectorXd& psi, Rng& rng)>;

/// The IAPI loop with a pluggable candidate evaluator. Per-candidate Rng
/// streams are seeded from (master_seed, iteration, index), so results
/// are identical for any worker count.
IapiReport run_iapi(const IapiConfig& cfg, int psi_dim, const CandidateEvaluator& evaluate,
                    std::uint64_t master_seed);

/// Convenience wrapper using td0_evaluate over the given environment.
IapiReport run_iapi(const IapiConfig& cfg, const Simulator& sim, const ActionCatalog& catalog,
                    std::uint64_t master_seed);

void write_report_json(std::ostream& os, const IapiReport& report);
void write_convergence_csv(std::ostream& os, const IapiReport& report);
void write_psi_history_csv(std::ostream& os, const IapiReport& report);

} // namespace gridsim
