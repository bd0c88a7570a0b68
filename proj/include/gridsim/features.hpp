#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "gridsim/case.hpp"
#include "gridsim/env.hpp"

namespace gridsim {

/// Fixed set of K generator subsets the DA policy chooses among,
/// with per-subset aggregates used by features and baselines.
struct ActionCatalog {
    std::vector<std::vector<bool>> subsets; // K x n_generators
    std::vector<double> sum_g_min;
    std::vector<double> sum_g_max;
    std::vector<double> capacity_cost; // sum of cost_i * g_max_i
    std::vector<double> elasticity;    // sum_g_max / max(sum_g_min, 1 MW)

    int size() const { return static_cast<int>(subsets.size()); }
    DaAction action(int index) const { return {index, subsets[index]}; }
};

/// Samples K distinct non-empty subsets whose capacities span
/// [min_demand, max_demand]: at least one subset can cover the peak and
/// at least one can back down to the valley. Throws std::runtime_error
/// if coverage is not met within a bounded number of resamples.
ActionCatalog build_action_catalog(const GridCase& gc, int k, double max_demand,
                                   double min_demand, Rng& rng);

void write_catalog(std::ostream& os, const ActionCatalog& catalog);
ActionCatalog read_catalog(std::istream& is, const GridCase& gc);

/// Phi(s, a): (1, U_v, L_v, P, one-hot action block), length K + 4.
/// With effective=true (default) the eligibility flags and the barrier
/// use demand minus forecast wind.
Eigen::VectorXd da_features(const DaState& s, int action_index, const ActionCatalog& catalog,
                            bool effective = true);

constexpr int kRtFeatureDim = 10;

/// phi(s): all degree <= 2 monomials of (D, e_d, e_g), where D is total
/// effective demand normalized by the case's total g_max and e_d, e_g
/// are Shannon entropies (natural log) of the nodal demand and nodal
/// controllable-generation distributions.
Eigen::VectorXd rt_features(const RtState& s, const GridCase& gc);

/// Entropy of v/sum(v) over positive entries; 0 for an all-zero vector.
double shannon_entropy(const Eigen::VectorXd& v);

} // namespace gridsim
