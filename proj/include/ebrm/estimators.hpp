#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ebrm/chain.hpp"
#include "ebrm/empirical.hpp"
#include "ebrm/models.hpp"
#include "ebrm/nelder_mead.hpp"

namespace ebrm::estimators {

struct EstimationResult {
    models::ParamVector theta;
    double objective_value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::map<std::string, double> diagnostics;
};

/// Monte-Carlo settings for objectives that have no closed form
/// (bivariate models). Fixed seed keeps the objective deterministic
/// across optimizer iterations.
struct McOptions {
    std::size_t n = 4096;
    std::uint64_t seed = 0x5eedULL;
};

/// Single-step estimated Bellman residual (weighted energy between the
/// model and the estimated-operator mixture). Unobserved pairs carry
/// zero weight and contribute nothing.
double objective_single_step(const models::ParamVector& theta, const empirical::EmpiricalMDP& emp,
                             const models::ModelSpec& spec, const chain::TabularPolicy& target,
                             double gamma);

/// Bootstrap m-step residual against a frozen trajectory batch. One
/// mixture component per trajectory: N(G + gamma^m mean(s_m, a_m),
/// gamma^{2m} var(s_m, a_m)), uniform weights inside a group.
double objective_bootstrap(const models::ParamVector& theta, const empirical::BootstrapBatch& batch,
                           const std::vector<double>& weights, const models::ModelSpec& spec,
                           double gamma, const McOptions& mc = {});

/// Per-record closed-form residual for deterministic transitions
/// (continuous-state analogue); averages 2 x1 - x2 - x3 over records.
double objective_deterministic(const models::ParamVector& theta, const chain::OfflineDataset& dataset,
                               const models::ModelSpec& spec, const chain::TabularPolicy& target,
                               double gamma);

/// Data-driven starting points in theta space (interior defaults plus a
/// moment-matched start from the observed rewards).
std::vector<models::ParamVector> default_starts(const models::ModelSpec& spec,
                                                const chain::OfflineDataset& dataset, double gamma);

EstimationResult ebrm_single(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                             const chain::TabularPolicy& target, double gamma,
                             const optimize::OptimizerConfig& opt);

EstimationResult ebrm_multi_bootstrap(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                                      const chain::TabularPolicy& target, double gamma, std::size_t m,
                                      std::size_t M, std::uint64_t seed,
                                      const optimize::OptimizerConfig& opt);

EstimationResult ebrm_multi_split(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                                  const chain::TabularPolicy& target, double gamma, std::size_t m,
                                  std::size_t M, std::uint64_t seed, const optimize::OptimizerConfig& opt);

/// One confidence-interval sample for Lepski's rule: grid level index k
/// (0-based over the levels above m_0 = 1) and bootstrap replicate j.
using LepskiSampler = std::function<double(std::size_t k, std::size_t j)>;

/// Descending intersection of intervals [mean +- 1.96 sd] over J
/// replicates per level. Returns the level at which the running
/// intersection first becomes empty, or 1 when it never does (the m_0
/// exit of the pseudo-code).
std::size_t lepski_core(const std::vector<std::size_t>& levels, std::size_t J,
                        const LepskiSampler& e_hat);

struct LepskiResult {
    std::size_t selected_m = 1;
    std::size_t estimations = 0;
};

/// Lepski step-level selection: single-step fit, then J bootstrap
/// estimates per level from the top down; intervals over
/// e_hat = weighted energy between the single-step and bootstrap fits.
LepskiResult lepski_select(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                           const chain::TabularPolicy& target, double gamma,
                           const std::vector<std::size_t>& grid, std::size_t J, std::size_t M,
                           std::uint64_t seed, const optimize::OptimizerConfig& opt);

/// Quantile table fitted by quantile-regression TD updates.
struct QuantileTable {
    int n_states = 0;
    std::size_t n_tau = 0;
    std::vector<double> taus;
    std::vector<double> values; // cell-major, n_tau per cell, sorted ascending per cell

    [[nodiscard]] double value(int s, int a, std::size_t i) const {
        return values[chain::cell_index(s, a, n_states) * n_tau + i];
    }
    [[nodiscard]] chain::ParticleTable to_particle_table() const;
};

QuantileTable qrtd_fit(const chain::OfflineDataset& dataset, std::size_t n_tau, double alpha0,
                       std::size_t epochs, const chain::TabularPolicy& target, double gamma,
                       std::uint64_t seed);

/// Partition heuristic for fitted likelihood estimation:
/// T(N) solves T(N0) = T0 under the (1/gamma)^{1 - 1/(2l)} base rule,
/// and the used count is T* = max(T_tilde, floor(T(N))).
struct FlePartition {
    double l = 10.0;
    std::size_t N0 = 2000;
    std::size_t T0 = 25;
    std::size_t T_tilde = 15;
};

std::size_t fle_partition_count(const FlePartition& p, std::size_t n, double gamma);

EstimationResult fle_fit(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                         const chain::TabularPolicy& target, double gamma, const FlePartition& partition,
                         std::uint64_t seed, const optimize::OptimizerConfig& opt);

} // namespace ebrm::estimators
