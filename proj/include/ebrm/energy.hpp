#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ebrm/distributions.hpp"
#include "ebrm/rng.hpp"

namespace ebrm::energy {

/// E|X| for X ~ N(mu, sigma^2). sigma = 0 returns |mu|.
double mean_abs_normal(double mu, double sigma);

/// Energy distance between two 1-D Gaussians,
/// 2E|X-Y| - E|X-X'| - E|Y-Y'| via the difference distributions.
double energy_gg(const dist::ScalarGaussian& p, const dist::ScalarGaussian& q);

/// Energy distance between a Gaussian and a Gaussian mixture. The mixture
/// self-term runs over all ordered component pairs including j = k,
/// matching independent draws from the mixture.
double energy_gm(const dist::ScalarGaussian& p, const dist::GaussianMixture& m);

/// Energy distance between two Gaussian mixtures.
double energy_mm(const dist::GaussianMixture& a, const dist::GaussianMixture& b);

/// Array form of energy_gm used by the objective hot paths; the mixture
/// arrives as parallel (weight, mean, var) arrays of length n. Summation
/// order matches energy_gm exactly.
double energy_gauss_mixture_arrays(double pmean, double pvar, const double* w, const double* mean,
                                   const double* var, std::size_t n);

/// Energy distance between weighted particle sets of equal dimension,
/// with full double sums (V-statistic, diagonal included).
double energy_pp(const dist::ParticleSet& a, const dist::ParticleSet& b);

/// Energy distance between a 1-D Gaussian and a 1-D particle set.
double energy_gp(const dist::ScalarGaussian& p, const dist::ParticleSet& q);

/// A sampler writes one draw of fixed dimension into `out`.
using VectorSampler = std::function<void(rng::Stream&, double* out)>;

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo energy distance between two distributions given only by
/// samplers. Draws two independent n-samples from each side and averages
/// the pairwise three-term statistic; the standard error comes from
/// batch means (up to 100 batches). Deterministic given the seed.
McEstimate energy_mc(const VectorSampler& sampler_a, const VectorSampler& sampler_b,
                     std::size_t dim, std::size_t n, std::uint64_t seed);

/// Exact Wasserstein-1 distance between 1-D Gaussians (comonotone
/// coupling): E|dmu + dsigma * Z|.
double w1_gaussian(const dist::ScalarGaussian& p, const dist::ScalarGaussian& q);

/// Wasserstein-1 between equal-size sorted samples: mean |a[i] - b[i]|.
double w1_empirical(const std::vector<double>& a_sorted, const std::vector<double>& b_sorted);

/// Exact Wasserstein-1 between a 1-D Gaussian and a weighted 1-D particle
/// set, integrating |F_g^{-1}(u) - x_i| over the particle's quantile bands.
double w1_gp(const dist::ScalarGaussian& g, const dist::ParticleSet& p);

/// Inverse standard normal CDF (Wichura AS241, double precision).
double normal_quantile(double u);

} // namespace ebrm::energy
