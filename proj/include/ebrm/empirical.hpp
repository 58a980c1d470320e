#pragma once

#include <cstdint>
#include <vector>

#include "ebrm/chain.hpp"
#include "ebrm/distributions.hpp"

namespace ebrm::empirical {

/// One outcome list: the (r, s') pairs observed at a state-action pair.
/// An unobserved pair carries the single fallback outcome (0, s), which
/// stands in for its empirical transition; `count` stays 0 for it.
struct OutcomeList {
    std::size_t count = 0;          // N(s, a)
    std::vector<double> rewards;    // flat, stride = dim
    std::vector<int> s_next;
    bool fallback = false;
};

/// Empirical state-action frequencies and per-pair outcome lists
/// estimated from an offline dataset.
struct EmpiricalMDP {
    int n_states = 0;
    std::size_t dim = 1;
    std::size_t total_n = 0;
    std::vector<OutcomeList> outcomes; // 2 * n_states cells
    std::vector<double> b_hat;         // N(s, a) / N

    [[nodiscard]] const OutcomeList& at(int s, int a) const {
        return outcomes[chain::cell_index(s, a, n_states)];
    }
    [[nodiscard]] double weight(int s, int a) const {
        return b_hat[chain::cell_index(s, a, n_states)];
    }
    [[nodiscard]] std::size_t observed_pairs() const;
};

EmpiricalMDP fit(const chain::OfflineDataset& dataset);

/// Contiguous near-equal slices (remainder goes to the last slice), each
/// fitted independently.
std::vector<EmpiricalMDP> split_fit(const chain::OfflineDataset& dataset, std::size_t m);

/// The mixture T-hat^pi Upsilon_theta(s, a): one component per observed
/// outcome and per target action with positive probability, shifted by
/// the reward and scaled by gamma.
dist::GaussianMixture estimated_bellman_mixture(const chain::GaussianTable& model,
                                                const EmpiricalMDP& emp,
                                                const chain::TabularPolicy& target,
                                                double gamma, int s, int a);

/// m-step trajectory summaries grouped by their initial pair: discounted
/// reward sum G (stride dim), terminal state and action.
struct TrajectoryGroup {
    std::vector<double> g; // size() == size * dim
    std::vector<int> s_m;
    std::vector<int> a_m;

    [[nodiscard]] std::size_t size() const noexcept { return s_m.size(); }
};

struct BootstrapBatch {
    std::size_t m = 1;
    std::size_t dim = 1;
    int n_states = 0;
    std::vector<TrajectoryGroup> groups; // 2 * n_states cells
    std::size_t fallback_fires = 0;

    [[nodiscard]] const TrajectoryGroup& at(int s, int a) const {
        return groups[chain::cell_index(s, a, n_states)];
    }
};

/// Resample M m-step trajectories under the empirical transition and the
/// target policy. Initial pairs are allocated by stratified quota
/// max(1, round(M * b_hat)) over observed pairs, so no observed pair is
/// starved. Per-group sub-seeds derive from (seed, s, a).
BootstrapBatch sample_trajectories(const EmpiricalMDP& emp, const chain::TabularPolicy& target,
                                   double gamma, std::size_t m, std::size_t M, std::uint64_t seed);

/// As sample_trajectories, but transition step j draws from emps[j-1];
/// pairs the j-th estimated operator with the j-th data slice. Initial
/// quotas come from emps[0]. A pair unobserved in some step's slice uses
/// that slice's fallback outcome (0, s), counted in fallback_fires.
BootstrapBatch sample_trajectories_split(const std::vector<EmpiricalMDP>& emps,
                                         const chain::TabularPolicy& target, double gamma,
                                         std::size_t M, std::uint64_t seed);

} // namespace ebrm::empirical
