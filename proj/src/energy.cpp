#include "ebrm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ebrm::energy {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

inline double sq(double x) { return x * x; }

inline double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Hot-path variant of mean_abs_normal without the argument check.
inline double man_unchecked(double mu, double sigma) {
    if (sigma == 0.0) return std::abs(mu);
    const double z = mu / sigma;
    return mu * std::erf(z / kSqrt2) + sigma * kSqrt2OverPi * std::exp(-0.5 * z * z);
}

inline double vec_dist(const double* x, const double* y, std::size_t d) {
    if (d == 1) return std::abs(x[0] - y[0]);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += sq(x[k] - y[k]);
    return std::sqrt(s);
}

} // namespace

double mean_abs_normal(double mu, double sigma) {
    if (!(sigma >= 0.0)) throw std::domain_error("mean_abs_normal: sigma must be >= 0");
    return man_unchecked(mu, sigma);
}

double energy_gg(const dist::ScalarGaussian& p, const dist::ScalarGaussian& q) {
    const double cross = man_unchecked(p.mean - q.mean, std::sqrt(p.var + q.var));
    const double self_p = std::sqrt(2.0 * p.var) * kSqrt2OverPi;
    const double self_q = std::sqrt(2.0 * q.var) * kSqrt2OverPi;
    return 2.0 * cross - self_p - self_q;
}

double energy_gauss_mixture_arrays(double pmean, double pvar, const double* w, const double* mean,
                                   const double* var, std::size_t n) {
    double cross = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        cross += w[j] * man_unchecked(pmean - mean[j], std::sqrt(pvar + var[j]));
    const double self_p = std::sqrt(2.0 * pvar) * kSqrt2OverPi;

    // Mixture self-term over all ordered pairs; diagonal terms are
    // E|N(0, 2 var_j)| and off-diagonal pairs are counted twice.
    double self_m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        self_m += sq(w[j]) * std::sqrt(2.0 * var[j]) * kSqrt2OverPi;
        for (std::size_t k = j + 1; k < n; ++k)
            self_m += 2.0 * w[j] * w[k] * man_unchecked(mean[j] - mean[k], std::sqrt(var[j] + var[k]));
    }
    return 2.0 * cross - self_p - self_m;
}

double energy_gm(const dist::ScalarGaussian& p, const dist::GaussianMixture& m) {
    const std::size_t n = m.size();
    std::vector<double> mean(n), var(n);
    for (std::size_t j = 0; j < n; ++j) {
        mean[j] = m.components[j].mean;
        var[j] = m.components[j].var;
    }
    return energy_gauss_mixture_arrays(p.mean, p.var, m.weights.data(), mean.data(), var.data(), n);
}

namespace {

double mixture_self_term(const dist::GaussianMixture& m) {
    const std::size_t n = m.size();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& gj = m.components[j];
        s += sq(m.weights[j]) * std::sqrt(2.0 * gj.var) * kSqrt2OverPi;
        for (std::size_t k = j + 1; k < n; ++k) {
            const auto& gk = m.components[k];
            s += 2.0 * m.weights[j] * m.weights[k] *
                 man_unchecked(gj.mean - gk.mean, std::sqrt(gj.var + gk.var));
        }
    }
    return s;
}

} // namespace

double energy_mm(const dist::GaussianMixture& a, const dist::GaussianMixture& b) {
    double cross = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& gi = a.components[i];
        for (std::size_t j = 0; j < b.size(); ++j) {
            const auto& gj = b.components[j];
            cross += a.weights[i] * b.weights[j] *
                     man_unchecked(gi.mean - gj.mean, std::sqrt(gi.var + gj.var));
        }
    }
    return 2.0 * cross - mixture_self_term(a) - mixture_self_term(b);
}

double energy_pp(const dist::ParticleSet& a, const dist::ParticleSet& b) {
    if (a.dim != b.dim) throw std::invalid_argument("energy_pp: dimension mismatch");
    const std::size_t d = a.dim;

    double cross = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            cross += a.weights[i] * b.weights[j] * vec_dist(a.point(i), b.point(j), d);

    auto self_term = [d](const dist::ParticleSet& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = i + 1; j < p.size(); ++j)
                s += 2.0 * p.weights[i] * p.weights[j] * vec_dist(p.point(i), p.point(j), d);
        return s; // diagonal contributes zero distance
    };
    return 2.0 * cross - self_term(a) - self_term(b);
}

double energy_gp(const dist::ScalarGaussian& p, const dist::ParticleSet& q) {
    if (q.dim != 1) throw std::invalid_argument("energy_gp: particle set must be 1-D");
    const double sd = p.sd();
    double cross = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        cross += q.weights[i] * man_unchecked(p.mean - q.points[i], sd);
    const double self_p = std::sqrt(2.0 * p.var) * kSqrt2OverPi;
    double self_q = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = i + 1; j < q.size(); ++j)
            self_q += 2.0 * q.weights[i] * q.weights[j] * std::abs(q.points[i] - q.points[j]);
    return 2.0 * cross - self_p - self_q;
}

McEstimate energy_mc(const VectorSampler& sampler_a, const VectorSampler& sampler_b,
                     std::size_t dim, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("energy_mc: need n >= 2");

    rng::Stream root(seed);
    rng::Stream sa = root.child(1);
    rng::Stream sa2 = root.child(2);
    rng::Stream sb = root.child(3);
    rng::Stream sb2 = root.child(4);

    const std::size_t n_batches = std::min<std::size_t>(100, n);
    std::vector<double> batch_sum(n_batches, 0.0);
    std::vector<std::size_t> batch_count(n_batches, 0);

    std::vector<double> x(dim), x2(dim), y(dim), y2(dim);
    for (std::size_t i = 0; i < n; ++i) {
        sampler_a(sa, x.data());
        sampler_a(sa2, x2.data());
        sampler_b(sb, y.data());
        sampler_b(sb2, y2.data());
        const double term = 2.0 * vec_dist(x.data(), y.data(), dim) -
                            vec_dist(x.data(), x2.data(), dim) -
                            vec_dist(y.data(), y2.data(), dim);
        batch_sum[i % n_batches] += term;
        ++batch_count[i % n_batches];
    }

    double mean = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) mean += batch_sum[b] / static_cast<double>(batch_count[b]);
    mean /= static_cast<double>(n_batches);

    double var = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        const double mb = batch_sum[b] / static_cast<double>(batch_count[b]);
        var += sq(mb - mean);
    }
    var /= static_cast<double>(n_batches - 1);

    McEstimate out;
    out.estimate = mean;
    out.std_error = std::sqrt(var / static_cast<double>(n_batches));
    return out;
}

double w1_gaussian(const dist::ScalarGaussian& p, const dist::ScalarGaussian& q) {
    return man_unchecked(p.mean - q.mean, std::abs(p.sd() - q.sd()));
}

double w1_empirical(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("w1_empirical: need equal non-zero lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i + 1 < a.size() && (a[i] > a[i + 1] || b[i] > b[i + 1]))
            throw std::invalid_argument("w1_empirical: inputs must be sorted ascending");
        s += std::abs(a[i] - b[i]);
    }
    return s / static_cast<double>(a.size());
}

double w1_gp(const dist::ScalarGaussian& g, const dist::ParticleSet& p) {
    if (p.dim != 1) throw std::invalid_argument("w1_gp: particle set must be 1-D");

    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&p](std::size_t i, std::size_t j) { return p.points[i] < p.points[j]; });

    const double mu = g.mean;
    const double sd = g.sd();

    // integral of the Gaussian quantile function over (a, b]
    auto quantile_integral = [&](double a, double b) {
        const double pa = (a <= 0.0) ? 0.0 : norm_pdf(normal_quantile(a));
        const double pb = (b >= 1.0) ? 0.0 : norm_pdf(normal_quantile(b));
        return mu * (b - a) + sd * (pa - pb);
    };

    double total = 0.0;
    double c = 0.0;
    for (std::size_t idx : order) {
        const double x = p.points[idx];
        const double a = c;
        const double b = c + p.weights[idx];
        if (sd == 0.0) {
            total += std::abs(mu - x) * (b - a);
        } else {
            const double uc = norm_cdf((x - mu) / sd); // where quantile curve crosses x
            if (uc <= a) {
                total += quantile_integral(a, b) - x * (b - a);
            } else if (uc >= b) {
                total += x * (b - a) - quantile_integral(a, b);
            } else {
                total += x * (uc - a) - quantile_integral(a, uc);
                total += quantile_integral(uc, b) - x * (b - uc);
            }
        }
        c = b;
    }
    return total;
}

double normal_quantile(double u) {
    // Wichura's algorithm AS241 (PPND16).
    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0) return -std::numeric_limits<double>::infinity();
        if (u == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_quantile: u outside [0, 1]");
    }
    const double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                    4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                  1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                    2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                  4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                     1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                   4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                   2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                   5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                   5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

} // namespace ebrm::energy
