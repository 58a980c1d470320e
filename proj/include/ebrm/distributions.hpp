#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ebrm::dist {

/// 1-D Gaussian return distribution. var = 0 is allowed and denotes a
/// Dirac mass at `mean`.
struct ScalarGaussian {
    double mean = 0.0;
    double var = 1.0;

    ScalarGaussian() = default;
    ScalarGaussian(double mean_, double var_) : mean(mean_), var(var_) {
        if (!(var >= 0.0) || !std::isfinite(mean) || !std::isfinite(var))
            throw std::invalid_argument("ScalarGaussian: need finite mean and var >= 0");
    }

    [[nodiscard]] double sd() const noexcept { return std::sqrt(var); }
    [[nodiscard]] bool is_dirac() const noexcept { return var == 0.0; }
};

/// Finite mixture of 1-D Gaussians. Weights are positive and sum to one.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<ScalarGaussian> components;

    GaussianMixture() = default;
    GaussianMixture(std::vector<double> w, std::vector<ScalarGaussian> c)
        : weights(std::move(w)), components(std::move(c)) {
        validate();
    }

    void validate() const {
        if (components.empty() || weights.size() != components.size())
            throw std::invalid_argument("GaussianMixture: empty or mismatched component list");
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    }

    [[nodiscard]] std::size_t size() const noexcept { return components.size(); }
};

/// Weighted empirical distribution over points in R^d (row-major storage,
/// stride = dim).
struct ParticleSet {
    std::size_t dim = 1;
    std::vector<double> points; // size() == weights.size() * dim
    std::vector<double> weights;

    ParticleSet() = default;
    ParticleSet(std::size_t d, std::vector<double> pts, std::vector<double> w)
        : dim(d), points(std::move(pts)), weights(std::move(w)) {
        validate();
    }

    /// Uniform-weight 1-D particle set.
    static ParticleSet from_values(const std::vector<double>& values) {
        ParticleSet p;
        p.dim = 1;
        p.points = values;
        p.weights.assign(values.size(), 1.0 / static_cast<double>(values.size()));
        p.validate();
        return p;
    }

    void validate() const {
        if (dim < 1 || weights.empty() || points.size() != weights.size() * dim)
            throw std::invalid_argument("ParticleSet: inconsistent sizes");
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw std::invalid_argument("ParticleSet: weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("ParticleSet: weights must sum to 1");
    }

    [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
    [[nodiscard]] const double* point(std::size_t i) const noexcept { return points.data() + i * dim; }
};

/// Centered-correlation bivariate Gaussian: covariance sigma2 * [[1, rho], [rho, 1]].
struct BivariateGaussian {
    double mean0 = 0.0;
    double mean1 = 0.0;
    double sigma2 = 1.0;
    double rho = 0.0;

    BivariateGaussian() = default;
    BivariateGaussian(double m0, double m1, double s2, double r)
        : mean0(m0), mean1(m1), sigma2(s2), rho(r) {
        if (!(sigma2 > 0.0)) throw std::invalid_argument("BivariateGaussian: sigma2 must be > 0");
        if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("BivariateGaussian: rho outside [-1, 1]");
    }
};

} // namespace ebrm::dist
