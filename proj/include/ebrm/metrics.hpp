#pragma once

#include <cstdint>
#include <vector>

#include "ebrm/chain.hpp"
#include "ebrm/models.hpp"
#include "ebrm/nelder_mead.hpp"

namespace ebrm::metrics {

/// Non-negative per-(s, a) weights summing to one.
struct WeightTable {
    int n_states = 0;
    std::vector<double> weights; // 2 * n_states cells

    static WeightTable uniform(int n_states);
    static WeightTable from_b_hat(int n_states, const std::vector<double>& b_hat);
    void validate() const;

    [[nodiscard]] double at(int s, int a) const {
        return weights[chain::cell_index(s, a, n_states)];
    }
};

/// Weighted per-pair energy distance between two return tables; the pair
/// of representations picks the closed form (Gaussian/Gaussian,
/// Gaussian/mixture, mixture/mixture, particle/particle,
/// Gaussian/particle in either order).
double expected_energy(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w);

/// Weighted per-pair Wasserstein-1 distance; defined pairings are
/// Gaussian/Gaussian, equal-size particle/particle, Gaussian/particle.
double expected_w1(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w);

/// Wasserstein-1 between the w-weighted marginal mixtures, approximated
/// with n sorted samples from each side. Deterministic given the seed.
double marginal_w1(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w,
                   std::size_t n, std::uint64_t seed);

struct BestApprox {
    models::ParamVector theta;
    double min_value = 0.0;
    optimize::OptimResult opt;
};

/// Best approximation of a Gaussian truth table within the model family:
/// argmin over theta of expected_energy(instantiate(theta), truth, w).
BestApprox best_approx(const models::ModelSpec& spec, const chain::GaussianTable& truth,
                       const WeightTable& w, const optimize::OptimizerConfig& opt);

/// Population m-step Bellman residual F_m(theta) for the chain families:
/// iterate the exact operator m times and take the weighted energy.
double population_multistep_objective(const models::ParamVector& theta, const models::ModelSpec& spec,
                                      const chain::ChainConfig& cfg, const chain::TabularPolicy& target,
                                      std::size_t m, const WeightTable& w);

/// Bivariate-correlation variant: F_m(rho) against reward correlation
/// rho0 at reward scale sigma0_sq, via seeded Monte Carlo with n draws.
double population_multistep_objective_bivariate(double rho, const models::BivariateCorr& spec,
                                                double rho0, double sigma0_sq, std::size_t m,
                                                std::size_t n, std::uint64_t seed);

/// Series constant B1(gamma; beta0, q) = (1 / (1 - gamma^beta0)) *
/// sum_k 4^{qk} gamma^{(2^{k-1} - 1) beta0}, truncated when the term
/// drops below 1e-15 (or at 10^4 terms).
double bound_B1(double gamma, double beta0, double q);

} // namespace ebrm::metrics
