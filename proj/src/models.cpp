#include "ebrm/models.hpp"

#include <cmath>
#include <stdexcept>

namespace ebrm::models {

namespace {

void need_params(const ModelSpec& spec, const ParamVector& theta) {
    if (theta.size() != param_count(spec))
        throw std::invalid_argument("model: wrong parameter count");
    for (double v : theta)
        if (!std::isfinite(v)) throw std::invalid_argument("model: non-finite parameter");
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

std::size_t param_count(const ModelSpec& spec) {
    if (const auto* c = std::get_if<ChainRealizable>(&spec)) return c->estimate_variance ? 3 : 2;
    if (std::holds_alternative<LinearMisspec>(spec)) return 4;
    return 1;
}

std::string param_name(const ModelSpec& spec, std::size_t i) {
    if (std::holds_alternative<ChainRealizable>(spec)) {
        const char* names[] = {"A0", "p0", "sigma2"};
        return names[i];
    }
    if (std::holds_alternative<LinearMisspec>(spec)) {
        const char* names[] = {"beta_l", "beta_r", "beta_1", "sigma2"};
        return names[i];
    }
    return "rho";
}

void check_constraints(const ModelSpec& spec, const ParamVector& theta) {
    need_params(spec, theta);
    if (const auto* c = std::get_if<ChainRealizable>(&spec)) {
        if (!(theta[1] > 0.0 && theta[1] < 1.0))
            throw std::invalid_argument("ChainRealizable: p0 must be in (0, 1)");
        if (c->estimate_variance && !(theta[2] > 0.0))
            throw std::invalid_argument("ChainRealizable: sigma2 must be > 0");
        return;
    }
    if (std::holds_alternative<LinearMisspec>(spec)) {
        // beta_1 = 0 is a valid model point; the unconstrained transform
        // excludes it, so the optimizer stays in the open half-line.
        if (!(theta[2] <= 0.0)) throw std::invalid_argument("LinearMisspec: beta_1 must be <= 0");
        if (!(theta[3] > 0.0)) throw std::invalid_argument("LinearMisspec: sigma2 must be > 0");
        return;
    }
    if (!(theta[0] > -1.0 && theta[0] < 1.0))
        throw std::invalid_argument("BivariateCorr: rho must be interior to [-1, 1]");
}

chain::GaussianTable instantiate_gaussian(const ModelSpec& spec, const ParamVector& theta) {
    check_constraints(spec, theta);
    if (const auto* c = std::get_if<ChainRealizable>(&spec)) {
        const double sigma2 = c->estimate_variance ? theta[2] : c->known_sigma0_sq;
        const double return_var = sigma2 / (1.0 - c->gamma * c->gamma);
        return chain::chain_gaussian_table(c->n_states, theta[0], theta[1], c->gamma, return_var);
    }
    if (const auto* l = std::get_if<LinearMisspec>(&spec)) {
        const double return_var = theta[3] / (1.0 - l->gamma * l->gamma);
        chain::GaussianTable table(l->n_states);
        for (int i = 1; i <= l->n_states; ++i) {
            table.cell(i, -1) = dist::ScalarGaussian(theta[0] + theta[2] * i, return_var);
            table.cell(i, +1) = dist::ScalarGaussian(theta[1] + theta[2] * i, return_var);
        }
        return table;
    }
    throw std::invalid_argument("instantiate_gaussian: bivariate model is not a scalar table");
}

chain::ReturnTable instantiate(const ModelSpec& spec, const ParamVector& theta) {
    if (const auto* b = std::get_if<BivariateCorr>(&spec)) {
        check_constraints(spec, theta);
        const double scale = b->sigma1_sq / (1.0 - b->gamma * b->gamma);
        chain::BivariateTable table(b->n_states);
        for (auto& cell : table.cells) cell = dist::BivariateGaussian(0.0, 0.0, scale, theta[0]);
        return table;
    }
    return instantiate_gaussian(spec, theta);
}

std::vector<double> to_unconstrained(const ModelSpec& spec, const ParamVector& theta) {
    check_constraints(spec, theta);
    std::vector<double> x(theta.size());
    if (const auto* c = std::get_if<ChainRealizable>(&spec)) {
        x[0] = theta[0];
        x[1] = logit(theta[1]);
        if (c->estimate_variance) x[2] = std::log(theta[2]);
        return x;
    }
    if (std::holds_alternative<LinearMisspec>(spec)) {
        if (theta[2] == 0.0)
            throw std::invalid_argument("to_unconstrained: beta_1 = 0 sits on the boundary");
        x[0] = theta[0];
        x[1] = theta[1];
        x[2] = std::log(-theta[2]);
        x[3] = std::log(theta[3]);
        return x;
    }
    // rho = 2 logistic(x) - 1, so x = logit((rho + 1) / 2)
    x[0] = logit(0.5 * (theta[0] + 1.0));
    return x;
}

ParamVector from_unconstrained(const ModelSpec& spec, const std::vector<double>& x) {
    if (x.size() != param_count(spec))
        throw std::invalid_argument("from_unconstrained: wrong coordinate count");
    ParamVector theta(x.size());
    if (const auto* c = std::get_if<ChainRealizable>(&spec)) {
        theta[0] = x[0];
        theta[1] = logistic(x[1]);
        if (c->estimate_variance) theta[2] = std::exp(x[2]);
    } else if (std::holds_alternative<LinearMisspec>(spec)) {
        theta[0] = x[0];
        theta[1] = x[1];
        theta[2] = -std::exp(x[2]);
        theta[3] = std::exp(x[3]);
    } else {
        theta[0] = 2.0 * logistic(x[0]) - 1.0;
    }
    check_constraints(spec, theta);
    return theta;
}

} // namespace ebrm::models
