#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "ebrm/distributions.hpp"
#include "ebrm/rng.hpp"

namespace ebrm::chain {

/// The 1-D chain MDP: states 1..n_states, actions {-1, +1}. Moving past
/// either end keeps the agent in place; the reward depends on the
/// attempted cell k = s + a.
struct ChainConfig {
    int n_states = 30;
    double A0 = 100.0;
    double p0 = 0.9;
    double sigma0_sq = 20.0;
    double gamma = 0.99;

    void validate() const;
};

/// Per-state probability of taking action +1. States are 1-based.
struct TabularPolicy {
    std::vector<double> prob_right;

    static TabularPolicy uniform(int n_states);
    static TabularPolicy deterministic_right(int n_states);

    [[nodiscard]] int n_states() const noexcept { return static_cast<int>(prob_right.size()); }
    [[nodiscard]] bool is_deterministic_right() const noexcept;
    [[nodiscard]] double prob(int action, int s) const; // action in {-1, +1}
    [[nodiscard]] int sample_action(int s, rng::Stream& rs) const;
};

// Cell indexing shared by every per-(state, action) table: states are
// 1-based, action -1 maps to slot 0 and action +1 to slot 1.
inline int action_slot(int action) { return action < 0 ? 0 : 1; }
inline int slot_action(int slot) { return slot == 0 ? -1 : +1; }
inline std::size_t cell_index(int s, int action, [[maybe_unused]] int n_states) {
    return static_cast<std::size_t>(s - 1) * 2 + static_cast<std::size_t>(action_slot(action));
}

template <typename Dist>
struct Table {
    int n_states = 0;
    std::vector<Dist> cells; // size 2 * n_states

    Table() = default;
    explicit Table(int n) : n_states(n), cells(static_cast<std::size_t>(2 * n)) {}

    Dist& cell(int s, int action) { return cells[cell_index(s, action, n_states)]; }
    const Dist& cell(int s, int action) const { return cells[cell_index(s, action, n_states)]; }
};

using GaussianTable = Table<dist::ScalarGaussian>;
using MixtureTable = Table<dist::GaussianMixture>;
using ParticleTable = Table<dist::ParticleSet>;
using BivariateTable = Table<dist::BivariateGaussian>;

/// Per-(s, a) return distributions, homogeneous representation per table.
using ReturnTable = std::variant<GaussianTable, MixtureTable, ParticleTable, BivariateTable>;

/// Offline records (s, a, r, s'). Rewards are stored flat with stride
/// `dim` (dim = 1 for the chain).
struct OfflineDataset {
    int n_states = 0;
    std::size_t dim = 1;
    std::vector<int> s;
    std::vector<int> a;
    std::vector<double> r; // size() == s.size() * dim
    std::vector<int> s_next;

    [[nodiscard]] std::size_t size() const noexcept { return s.size(); }
    [[nodiscard]] const double* reward(std::size_t i) const noexcept { return r.data() + i * dim; }
};

/// Mean reward when attempting cell k: A0 * p0^k for k <= n_states, 0 at
/// the out-of-range cell n_states + 1.
double reward_mean(const ChainConfig& cfg, int k);

struct StepResult {
    double r;
    int s_next;
};

StepResult step(const ChainConfig& cfg, int s, int action, rng::Stream& rs);

/// N i.i.d. records: s uniform over states, a from the behavior policy,
/// (r, s') from the transition. Deterministic given the seed.
OfflineDataset generate_dataset(const ChainConfig& cfg, const TabularPolicy& behavior,
                                std::size_t n, std::uint64_t seed);

/// Closed-form return table for the deterministic right policy. Other
/// policies are unsupported here; see iterate_to_fixed_point.
GaussianTable true_return_table(const ChainConfig& cfg, const TabularPolicy& target);

/// One exact application of the distributional Bellman operator under the
/// true transition. Gaussian tables stay Gaussian under a deterministic
/// target policy; otherwise the result is a mixture table.
ReturnTable exact_bellman_apply(const ReturnTable& table, const ChainConfig& cfg,
                                const TabularPolicy& target);

/// Gaussian-table fast path for a deterministic-right target.
GaussianTable exact_bellman_apply(const GaussianTable& table, const ChainConfig& cfg,
                                  const TabularPolicy& target);

/// Return table for any deterministic policy, by iterating the exact
/// operator from Dirac(0) until gamma^T < 1e-12.
GaussianTable iterate_to_fixed_point(const ChainConfig& cfg, const TabularPolicy& target);

/// Chain-model Gaussian table from arbitrary (A0, p0) and a common return
/// variance; the closed-form means of the right-deterministic policy.
GaussianTable chain_gaussian_table(int n_states, double A0, double p0, double gamma, double return_var);

void write_csv(const OfflineDataset& ds, std::ostream& os);
OfflineDataset read_csv(std::istream& is, int n_states);
void write_csv_file(const OfflineDataset& ds, const std::string& path);
OfflineDataset read_csv_file(const std::string& path, int n_states);

} // namespace ebrm::chain
