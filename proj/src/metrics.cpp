#include "ebrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ebrm/energy.hpp"

namespace ebrm::metrics {

WeightTable WeightTable::uniform(int n_states) {
    WeightTable w;
    w.n_states = n_states;
    w.weights.assign(static_cast<std::size_t>(2 * n_states), 1.0 / (2.0 * n_states));
    return w;
}

WeightTable WeightTable::from_b_hat(int n_states, const std::vector<double>& b_hat) {
    WeightTable w;
    w.n_states = n_states;
    w.weights = b_hat;
    w.validate();
    return w;
}

void WeightTable::validate() const {
    if (weights.size() != static_cast<std::size_t>(2 * n_states))
        throw std::invalid_argument("WeightTable: size mismatch");
    double total = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) throw std::invalid_argument("WeightTable: negative weight");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("WeightTable: weights must sum to 1");
}

namespace {

template <typename F>
double weighted_sum(const WeightTable& w, F&& per_cell) {
    double total = 0.0;
    for (std::size_t c = 0; c < w.weights.size(); ++c) {
        if (w.weights[c] == 0.0) continue;
        total += w.weights[c] * per_cell(c);
    }
    return total;
}

int table_states(const chain::ReturnTable& t) {
    return std::visit([](const auto& tab) { return tab.n_states; }, t);
}

} // namespace

double expected_energy(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w) {
    w.validate();
    if (table_states(a) != w.n_states || table_states(b) != w.n_states)
        throw std::invalid_argument("expected_energy: table/weight shape mismatch");

    using chain::GaussianTable;
    using chain::MixtureTable;
    using chain::ParticleTable;

    if (const auto* ga = std::get_if<GaussianTable>(&a)) {
        if (const auto* gb = std::get_if<GaussianTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_gg(ga->cells[c], gb->cells[c]); });
        if (const auto* mb = std::get_if<MixtureTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_gm(ga->cells[c], mb->cells[c]); });
        if (const auto* pb = std::get_if<ParticleTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_gp(ga->cells[c], pb->cells[c]); });
    }
    if (const auto* ma = std::get_if<MixtureTable>(&a)) {
        if (const auto* gb = std::get_if<GaussianTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_gm(gb->cells[c], ma->cells[c]); });
        if (const auto* mb = std::get_if<MixtureTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_mm(ma->cells[c], mb->cells[c]); });
    }
    if (const auto* pa = std::get_if<ParticleTable>(&a)) {
        if (const auto* pb = std::get_if<ParticleTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_pp(pa->cells[c], pb->cells[c]); });
        if (const auto* gb = std::get_if<GaussianTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::energy_gp(gb->cells[c], pa->cells[c]); });
    }
    throw std::invalid_argument("expected_energy: no defined pairing for these representations");
}

double expected_w1(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w) {
    w.validate();
    if (table_states(a) != w.n_states || table_states(b) != w.n_states)
        throw std::invalid_argument("expected_w1: table/weight shape mismatch");

    using chain::GaussianTable;
    using chain::ParticleTable;

    if (const auto* ga = std::get_if<GaussianTable>(&a)) {
        if (const auto* gb = std::get_if<GaussianTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::w1_gaussian(ga->cells[c], gb->cells[c]); });
        if (const auto* pb = std::get_if<ParticleTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::w1_gp(ga->cells[c], pb->cells[c]); });
    }
    if (const auto* pa = std::get_if<ParticleTable>(&a)) {
        if (const auto* gb = std::get_if<GaussianTable>(&b))
            return weighted_sum(w, [&](std::size_t c) { return energy::w1_gp(gb->cells[c], pa->cells[c]); });
        if (const auto* pb = std::get_if<ParticleTable>(&b)) {
            return weighted_sum(w, [&](std::size_t c) {
                auto xs = pa->cells[c].points;
                auto ys = pb->cells[c].points;
                std::sort(xs.begin(), xs.end());
                std::sort(ys.begin(), ys.end());
                return energy::w1_empirical(xs, ys);
            });
        }
    }
    throw std::invalid_argument("expected_w1: no defined pairing for these representations");
}

namespace {

/// Draw one value from the w-weighted marginal mixture of a table.
double sample_marginal(const chain::ReturnTable& t, const WeightTable& w, rng::Stream& rs) {
    double u = rs.uniform01();
    std::size_t c = 0;
    for (; c + 1 < w.weights.size(); ++c) {
        u -= w.weights[c];
        if (u <= 0.0) break;
    }
    if (const auto* g = std::get_if<chain::GaussianTable>(&t)) {
        const auto& cell = g->cells[c];
        return rs.normal(cell.mean, cell.sd());
    }
    if (const auto* m = std::get_if<chain::MixtureTable>(&t)) {
        const auto& mix = m->cells[c];
        double v = rs.uniform01();
        std::size_t j = 0;
        for (; j + 1 < mix.size(); ++j) {
            v -= mix.weights[j];
            if (v <= 0.0) break;
        }
        return rs.normal(mix.components[j].mean, mix.components[j].sd());
    }
    if (const auto* p = std::get_if<chain::ParticleTable>(&t)) {
        const auto& ps = p->cells[c];
        if (ps.dim != 1) throw std::invalid_argument("marginal_w1: needs 1-D particles");
        double v = rs.uniform01();
        std::size_t j = 0;
        for (; j + 1 < ps.size(); ++j) {
            v -= ps.weights[j];
            if (v <= 0.0) break;
        }
        return ps.points[j];
    }
    throw std::invalid_argument("marginal_w1: unsupported table kind");
}

} // namespace

double marginal_w1(const chain::ReturnTable& a, const chain::ReturnTable& b, const WeightTable& w,
                   std::size_t n, std::uint64_t seed) {
    if (n < 1000) throw std::invalid_argument("marginal_w1: need n >= 1000");
    w.validate();
    rng::Stream root(seed);
    rng::Stream sa = root.child(1);
    rng::Stream sb = root.child(2);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = sample_marginal(a, w, sa);
    for (std::size_t i = 0; i < n; ++i) ys[i] = sample_marginal(b, w, sb);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    return energy::w1_empirical(xs, ys);
}

BestApprox best_approx(const models::ModelSpec& spec, const chain::GaussianTable& truth,
                       const WeightTable& w, const optimize::OptimizerConfig& opt) {
    const chain::ReturnTable truth_table = truth;
    auto objective = [&](const std::vector<double>& x) {
        const auto theta = models::from_unconstrained(spec, x);
        return expected_energy(models::instantiate_gaussian(spec, theta), truth_table, w);
    };

    std::vector<std::vector<double>> starts;
    for (const auto& init : opt.init) starts.push_back(models::to_unconstrained(spec, init));
    if (starts.empty()) {
        // moment-matched start: intercepts near the weighted mean of the
        // truth, slope and variance at interior defaults
        double mean = 0.0;
        double var = 0.0;
        for (std::size_t c = 0; c < truth.cells.size(); ++c) mean += w.weights[c] * truth.cells[c].mean;
        for (std::size_t c = 0; c < truth.cells.size(); ++c) var += w.weights[c] * truth.cells[c].var;
        if (std::holds_alternative<models::LinearMisspec>(spec)) {
            const auto& l = std::get<models::LinearMisspec>(spec);
            const double sigma2 = std::max(1e-3, var * (1.0 - l.gamma * l.gamma));
            starts.push_back(models::to_unconstrained(spec, {mean, mean, -1.0, sigma2}));
            starts.push_back(models::to_unconstrained(spec, {mean * 1.5, mean * 1.5, -mean / 15.0 - 1.0, sigma2}));
        } else if (std::holds_alternative<models::ChainRealizable>(spec)) {
            const auto& c = std::get<models::ChainRealizable>(spec);
            models::ParamVector t0{std::max(1.0, mean * (1.0 - c.gamma * 0.5)), 0.5};
            if (c.estimate_variance) t0.push_back(std::max(1e-3, var * (1.0 - c.gamma * c.gamma)));
            starts.push_back(models::to_unconstrained(spec, t0));
        } else {
            starts.push_back(models::to_unconstrained(spec, {0.0}));
        }
    }

    auto r = optimize::minimize_multistart(objective, starts, opt);
    BestApprox out;
    out.theta = models::from_unconstrained(spec, r.x);
    out.min_value = objective(r.x);
    out.opt = std::move(r);
    return out;
}

double population_multistep_objective(const models::ParamVector& theta, const models::ModelSpec& spec,
                                      const chain::ChainConfig& cfg, const chain::TabularPolicy& target,
                                      std::size_t m, const WeightTable& w) {
    const chain::GaussianTable model = models::instantiate_gaussian(spec, theta);
    chain::GaussianTable iterated = model;
    for (std::size_t t = 0; t < m; ++t) iterated = chain::exact_bellman_apply(iterated, cfg, target);
    return expected_energy(chain::ReturnTable(model), chain::ReturnTable(iterated), w);
}

double population_multistep_objective_bivariate(double rho, const models::BivariateCorr& spec,
                                                double rho0, double sigma0_sq, std::size_t m,
                                                std::size_t n, std::uint64_t seed) {
    models::check_constraints(spec, {rho});
    const double g2 = spec.gamma * spec.gamma;
    const double model_scale = spec.sigma1_sq / (1.0 - g2);
    // (T^pi)^m applied to the model: m reward convolutions plus the
    // gamma^m-scaled model tail.
    const double gm2 = std::pow(g2, static_cast<double>(m));
    const double reward_scale = sigma0_sq * (1.0 - gm2) / (1.0 - g2);
    const double tail_scale = gm2 * model_scale;

    // covariance [[v0, cv], [cv, v1]] with equal diagonals here
    const double model_v = model_scale;
    const double model_c = model_scale * rho;
    const double iter_v = reward_scale + tail_scale;
    const double iter_c = reward_scale * rho0 + tail_scale * rho;

    auto sampler = [](double v, double cov) {
        const double sd = std::sqrt(v);
        const double r = cov / v;
        const double resid = std::sqrt(std::max(0.0, v * (1.0 - r * r)));
        return [sd, r, resid](rng::Stream& rs, double* out) {
            const double z0 = rs.normal();
            const double z1 = rs.normal();
            out[0] = sd * z0;
            out[1] = r * sd * z0 + resid * z1;
        };
    };
    const auto est = energy::energy_mc(sampler(model_v, model_c), sampler(iter_v, iter_c), 2, n, seed);
    return est.estimate;
}

double bound_B1(double gamma, double beta0, double q) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::domain_error("bound_B1: gamma must be in [0, 1)");
    if (!(beta0 > 0.0) || !(q >= 0.0)) throw std::domain_error("bound_B1: need beta0 > 0 and q >= 0");
    double sum = 0.0;
    for (int k = 1; k <= 10000; ++k) {
        const double exponent = (std::pow(2.0, k - 1) - 1.0) * beta0;
        const double term = std::pow(4.0, q * k) * std::pow(gamma, exponent);
        sum += term;
        if (term < 1e-15) break;
    }
    return sum / (1.0 - std::pow(gamma, beta0));
}

} // namespace ebrm::metrics
