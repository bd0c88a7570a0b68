#include "gridsim/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gridsim {

namespace {

constexpr double kBarrierFloor = 1e-3;
constexpr double kElasticityFloorMw = 1.0;

void finalize_aggregates(ActionCatalog& cat, const GridCase& gc) {
    cat.sum_g_min.clear();
    cat.sum_g_max.clear();
    cat.capacity_cost.clear();
    cat.elasticity.clear();
    for (const auto& subset : cat.subsets) {
        double mn = 0.0, mx = 0.0, cost = 0.0;
        for (const auto& g : gc.generators)
            if (subset[g.id]) {
                mn += g.g_min;
                mx += g.g_max;
                cost += g.cost * g.g_max;
            }
        cat.sum_g_min.push_back(mn);
        cat.sum_g_max.push_back(mx);
        cat.capacity_cost.push_back(cost);
        cat.elasticity.push_back(mx / std::max(mn, kElasticityFloorMw));
    }
}

} // namespace

ActionCatalog build_action_catalog(const GridCase& gc, int k, double max_demand,
                                   double min_demand, Rng& rng) {
    if (k < 1)
        throw std::invalid_argument("catalog needs K >= 1");
    const int ng = gc.n_generators();
    if (ng <= 20 && k > (1 << ng) - 1)
        throw std::runtime_error("K exceeds the number of distinct non-empty subsets");

    std::vector<int> order(ng);
    std::iota(order.begin(), order.end(), 0);
    std::uniform_int_distribution<int> size_dist(1, ng);

    constexpr int kCatalogAttempts = 200;
    for (int attempt = 0; attempt < kCatalogAttempts; ++attempt) {
        ActionCatalog cat;
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            bool found = false;
            for (int tries = 0; tries < 1000 && !found; ++tries) {
                const int size = size_dist(rng);
                std::shuffle(order.begin(), order.end(), rng);
                std::vector<bool> subset(ng, false);
                for (int j = 0; j < size; ++j)
                    subset[order[j]] = true;
                if (std::find(cat.subsets.begin(), cat.subsets.end(), subset) ==
                    cat.subsets.end()) {
                    cat.subsets.push_back(std::move(subset));
                    found = true;
                }
            }
            ok = found;
        }
        if (!ok)
            continue;
        finalize_aggregates(cat, gc);
        const bool covers_peak =
            *std::max_element(cat.sum_g_max.begin(), cat.sum_g_max.end()) >= max_demand;
        const bool covers_valley =
            *std::min_element(cat.sum_g_min.begin(), cat.sum_g_min.end()) <= min_demand;
        if (covers_peak && covers_valley)
            return cat;
    }
    throw std::runtime_error("could not sample a catalog covering the demand range");
}

void write_catalog(std::ostream& os, const ActionCatalog& catalog) {
    os << "SUBSET\n";
    for (const auto& subset : catalog.subsets) {
        for (size_t i = 0; i < subset.size(); ++i)
            os << (i ? " " : "") << (subset[i] ? 1 : 0);
        os << "\n";
    }
}

ActionCatalog read_catalog(std::istream& is, const GridCase& gc) {
    ActionCatalog cat;
    std::string raw, section;
    while (std::getline(is, raw)) {
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::istringstream ls(raw);
        std::string first;
        if (!(ls >> first))
            continue;
        if (first == "SUBSET") {
            section = first;
            continue;
        }
        if (section != "SUBSET")
            throw std::runtime_error("catalog file: unknown section " + first);
        std::istringstream rs(raw);
        std::vector<bool> subset;
        int bit;
        while (rs >> bit)
            subset.push_back(bit != 0);
        if (static_cast<int>(subset.size()) != gc.n_generators())
            throw std::runtime_error("catalog row length does not match generator count");
        if (std::none_of(subset.begin(), subset.end(), [](bool b) { return b; }))
            throw std::runtime_error("catalog subsets must be non-empty");
        cat.subsets.push_back(std::move(subset));
    }
    if (cat.subsets.empty())
        throw std::runtime_error("catalog file has no subsets");
    finalize_aggregates(cat, gc);
    return cat;
}

Eigen::VectorXd da_features(const DaState& s, int action_index, const ActionCatalog& catalog,
                            bool effective) {
    const int k = catalog.size();
    if (action_index < 0 || action_index >= k)
        throw std::out_of_range("da_features: action index out of range");

    double peak, valley, mean;
    if (effective) {
        peak = peak_effective_demand(s);
        valley = min_effective_demand(s);
        mean = mean_effective_demand(s);
    } else {
        peak = -std::numeric_limits<double>::infinity();
        valley = std::numeric_limits<double>::infinity();
        for (int h = 0; h < s.demand_forecast.rows(); ++h) {
            const double tot = s.demand_forecast.row(h).sum();
            peak = std::max(peak, tot);
            valley = std::min(valley, tot);
        }
        mean = s.demand_forecast.sum() / static_cast<double>(s.demand_forecast.rows());
    }

    const double gmx = catalog.sum_g_max[action_index];
    const double gmn = catalog.sum_g_min[action_index];
    const double margin_up = (gmx - mean) / gmx;
    const double margin_down = (mean - gmn) / gmx;
    const double barrier = std::log(std::max(margin_up, kBarrierFloor)) +
                           std::log(std::max(margin_down, kBarrierFloor));

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(k + 4);
    phi[0] = 1.0;
    phi[1] = gmx >= peak ? 1.0 : 0.0;    // U_v
    phi[2] = gmn <= valley ? 1.0 : 0.0;  // L_v
    phi[3] = barrier;                    // P
    phi[4 + action_index] = 1.0;
    return phi;
}

double shannon_entropy(const Eigen::VectorXd& v) {
    const double total = v.sum();
    if (!(total > 0.0))
        return 0.0;
    double e = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        const double p = v[i] / total;
        if (p > 0.0)
            e -= p * std::log(p);
    }
    return e;
}

Eigen::VectorXd rt_features(const RtState& s, const GridCase& gc) {
    Eigen::VectorXd gen_per_bus = Eigen::VectorXd::Zero(gc.n_buses());
    for (const auto& g : gc.generators)
        gen_per_bus[g.bus] += s.generation[g.id];

    const double d = (s.demand.sum() - s.wind.sum()) / gc.total_g_max();
    const double ed = shannon_entropy(s.demand);
    const double eg = shannon_entropy(gen_per_bus);

    Eigen::VectorXd phi(kRtFeatureDim);
    phi << 1.0, d, ed, eg, d * d, ed * ed, eg * eg, d * ed, d * eg, ed * eg;
    return phi;
}

} // namespace gridsim
