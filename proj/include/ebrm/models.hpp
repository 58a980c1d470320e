#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ebrm/chain.hpp"

namespace ebrm::models {

using ParamVector = std::vector<double>;

/// Correctly specified chain family: theta = (A0, p0, sigma2_base), or
/// (A0, p0) with the variance pinned to known_sigma0_sq.
struct ChainRealizable {
    double gamma = 0.99;
    int n_states = 30;
    bool estimate_variance = true;
    double known_sigma0_sq = 20.0;
};

/// Misspecified linear family: theta = (beta_l, beta_r, beta_1, sigma2)
/// with beta_1 < 0 and common return variance sigma2 / (1 - gamma^2).
struct LinearMisspec {
    double gamma = 0.99;
    int n_states = 30;
};

/// Bivariate correlation family: theta = (rho); every pair carries
/// N2(0, sigma1_sq * [[1, rho], [rho, 1]] / (1 - gamma^2)).
struct BivariateCorr {
    double gamma = 0.99;
    int n_states = 30;
    double sigma1_sq = 10.0;
};

using ModelSpec = std::variant<ChainRealizable, LinearMisspec, BivariateCorr>;

[[nodiscard]] std::size_t param_count(const ModelSpec& spec);
[[nodiscard]] std::string param_name(const ModelSpec& spec, std::size_t i);

/// Throws std::invalid_argument when theta violates the constraint set.
void check_constraints(const ModelSpec& spec, const ParamVector& theta);

[[nodiscard]] chain::ReturnTable instantiate(const ModelSpec& spec, const ParamVector& theta);

/// Gaussian-table shortcut for the two scalar families.
[[nodiscard]] chain::GaussianTable instantiate_gaussian(const ModelSpec& spec, const ParamVector& theta);

/// Smooth bijection onto R^p: log for variances, logit for p0, -exp for
/// the negative slope, scaled logistic for rho.
[[nodiscard]] std::vector<double> to_unconstrained(const ModelSpec& spec, const ParamVector& theta);
[[nodiscard]] ParamVector from_unconstrained(const ModelSpec& spec, const std::vector<double>& x);

} // namespace ebrm::models
