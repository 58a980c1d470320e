#include "ebrm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ebrm/energy.hpp"

namespace ebrm::estimators {

namespace {

struct Scratch {
    std::vector<double> w;
    std::vector<double> mean;
    std::vector<double> var;

    void resize(std::size_t n) {
        w.resize(n);
        mean.resize(n);
        var.resize(n);
    }
};

/// Shared wrapper: minimize a theta-space objective in unconstrained
/// coordinates from several starts; objective_value is re-evaluated at
/// the returned theta.
EstimationResult minimize_in_model_space(const std::function<double(const models::ParamVector&)>& objective,
                                         const models::ModelSpec& spec,
                                         const std::vector<models::ParamVector>& starts,
                                         const optimize::OptimizerConfig& opt) {
    std::vector<std::vector<double>> x0;
    for (const auto& t : starts) x0.push_back(models::to_unconstrained(spec, t));
    for (const auto& t : opt.init) x0.push_back(models::to_unconstrained(spec, t));

    auto f = [&](const std::vector<double>& x) {
        return objective(models::from_unconstrained(spec, x));
    };
    auto r = optimize::minimize_multistart(f, x0, opt);

    EstimationResult out;
    out.theta = models::from_unconstrained(spec, r.x);
    out.objective_value = objective(out.theta);
    out.evaluations = r.evaluations;
    out.converged = r.converged;
    out.diagnostics["restart_winner"] = static_cast<double>(r.winner);
    return out;
}

} // namespace

double objective_single_step(const models::ParamVector& theta, const empirical::EmpiricalMDP& emp,
                             const models::ModelSpec& spec, const chain::TabularPolicy& target,
                             double gamma) {
    if (emp.dim != 1) throw std::invalid_argument("objective_single_step: needs 1-D rewards");
    const chain::GaussianTable model = models::instantiate_gaussian(spec, theta);
    Scratch sc;
    double total = 0.0;
    for (int s = 1; s <= emp.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = chain::slot_action(slot);
            const double bw = emp.weight(s, a);
            if (bw == 0.0) continue;
            const auto& cell = emp.at(s, a);
            const double inv_n = 1.0 / static_cast<double>(cell.s_next.size());
            std::size_t n = 0;
            sc.resize(cell.s_next.size() * 2);
            for (std::size_t i = 0; i < cell.s_next.size(); ++i) {
                const int sn = cell.s_next[i];
                for (int slot2 = 0; slot2 < 2; ++slot2) {
                    const int a2 = chain::slot_action(slot2);
                    const double pa = target.prob(a2, sn);
                    if (pa == 0.0) continue;
                    const auto& z = model.cell(sn, a2);
                    sc.w[n] = pa * inv_n;
                    sc.mean[n] = cell.rewards[i] + gamma * z.mean;
                    sc.var[n] = gamma * gamma * z.var;
                    ++n;
                }
            }
            const auto& p = model.cell(s, a);
            total += bw * energy::energy_gauss_mixture_arrays(p.mean, p.var, sc.w.data(), sc.mean.data(),
                                                              sc.var.data(), n);
        }
    }
    return total;
}

double objective_bootstrap(const models::ParamVector& theta, const empirical::BootstrapBatch& batch,
                           const std::vector<double>& weights, const models::ModelSpec& spec,
                           double gamma, const McOptions& mc) {
    if (weights.size() != batch.groups.size())
        throw std::invalid_argument("objective_bootstrap: weight/group shape mismatch");
    const double gm = std::pow(gamma, static_cast<double>(batch.m));
    const double gm2 = gm * gm;

    if (const auto* bspec = std::get_if<models::BivariateCorr>(&spec)) {
        // no closed form in 2-D: seeded Monte Carlo per pair
        if (batch.dim != 2) throw std::invalid_argument("objective_bootstrap: bivariate model needs d = 2");
        models::check_constraints(spec, theta);
        const double rho = theta[0];
        const double scale = bspec->sigma1_sq / (1.0 - bspec->gamma * bspec->gamma);
        auto gauss2 = [rho](double var, const double* shift) {
            const double sd = std::sqrt(var);
            const double resid = sd * std::sqrt(std::max(0.0, 1.0 - rho * rho));
            return [=](rng::Stream& rs, double* out) {
                const double z0 = rs.normal();
                const double z1 = rs.normal();
                out[0] = shift[0] + sd * z0;
                out[1] = shift[1] + rho * sd * z0 + resid * z1;
            };
        };
        static constexpr double kZero2[2] = {0.0, 0.0};
        rng::Stream root(mc.seed);
        double total = 0.0;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            if (weights[c] == 0.0) continue;
            const auto& group = batch.groups[c];
            if (group.size() == 0) throw std::invalid_argument("objective_bootstrap: empty group");
            auto mixture_sampler = [&](rng::Stream& rs, double* out) {
                const std::size_t i = rs.below(group.size());
                double shift[2] = {group.g[i * 2] /* + gm * 0 */, group.g[i * 2 + 1]};
                gauss2(gm2 * scale, shift)(rs, out);
            };
            const auto est = energy::energy_mc(gauss2(scale, kZero2), mixture_sampler, 2, mc.n,
                                               root.child(c).next_u64());
            total += weights[c] * est.estimate;
        }
        return total;
    }

    const chain::GaussianTable model = models::instantiate_gaussian(spec, theta);
    Scratch sc;
    double total = 0.0;
    for (int s = 1; s <= batch.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = chain::slot_action(slot);
            const std::size_t c = chain::cell_index(s, a, batch.n_states);
            if (weights[c] == 0.0) continue;
            const auto& group = batch.groups[c];
            const std::size_t n = group.size();
            if (n == 0) throw std::invalid_argument("objective_bootstrap: empty group for an observed pair");
            sc.resize(n);
            const double uw = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& z = model.cell(group.s_m[i], group.a_m[i]);
                sc.w[i] = uw;
                sc.mean[i] = group.g[i] + gm * z.mean;
                sc.var[i] = gm2 * z.var;
            }
            const auto& p = model.cell(s, a);
            total += weights[c] * energy::energy_gauss_mixture_arrays(p.mean, p.var, sc.w.data(),
                                                                      sc.mean.data(), sc.var.data(), n);
        }
    }
    return total;
}

double objective_deterministic(const models::ParamVector& theta, const chain::OfflineDataset& dataset,
                               const models::ModelSpec& spec, const chain::TabularPolicy& target,
                               double gamma) {
    if (dataset.dim != 1) throw std::invalid_argument("objective_deterministic: needs 1-D rewards");
    const chain::GaussianTable model = models::instantiate_gaussian(spec, theta);
    const double sqrt_2_over_pi = std::sqrt(2.0 / std::numbers::pi);
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& p = model.cell(dataset.s[i], dataset.a[i]);
        const double r = dataset.r[i];
        const int sn = dataset.s_next[i];

        double x1 = 0.0;
        for (int slot = 0; slot < 2; ++slot) {
            const int a2 = chain::slot_action(slot);
            const double pa = target.prob(a2, sn);
            if (pa == 0.0) continue;
            const auto& q = model.cell(sn, a2);
            x1 += pa * energy::mean_abs_normal(p.mean - r - gamma * q.mean,
                                               std::sqrt(p.var + gamma * gamma * q.var));
        }

        const double x2 = std::sqrt(2.0 * p.var) * sqrt_2_over_pi;

        double x3 = 0.0;
        for (int sa = 0; sa < 2; ++sa) {
            const int aa = chain::slot_action(sa);
            const double pa = target.prob(aa, sn);
            if (pa == 0.0) continue;
            for (int sb = 0; sb < 2; ++sb) {
                const int ab = chain::slot_action(sb);
                const double pb = target.prob(ab, sn);
                if (pb == 0.0) continue;
                const auto& za = model.cell(sn, aa);
                const auto& zb = model.cell(sn, ab);
                x3 += pa * pb * gamma *
                      energy::mean_abs_normal(za.mean - zb.mean, std::sqrt(za.var + zb.var));
            }
        }
        total += 2.0 * x1 - x2 - x3;
    }
    return total / static_cast<double>(dataset.size());
}

std::vector<models::ParamVector> default_starts(const models::ModelSpec& spec,
                                                const chain::OfflineDataset& dataset, double gamma) {
    double mean_r = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        mean_r += dataset.r[i * dataset.dim];
        max_abs = std::max(max_abs, std::abs(dataset.r[i * dataset.dim]));
    }
    mean_r /= static_cast<double>(dataset.size());
    double var_r = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double d = dataset.r[i * dataset.dim] - mean_r;
        var_r += d * d;
    }
    var_r = std::max(1e-3, var_r / static_cast<double>(dataset.size()));

    std::vector<models::ParamVector> starts;
    if (const auto* c = std::get_if<models::ChainRealizable>(&spec)) {
        models::ParamVector t1{std::max(1e-3, max_abs), 0.5};
        models::ParamVector t2{std::max(1e-3, max_abs), 0.8};
        if (c->estimate_variance) {
            t1.push_back(var_r);
            t2.push_back(var_r);
        }
        starts.push_back(std::move(t1));
        starts.push_back(std::move(t2));
    } else if (std::holds_alternative<models::LinearMisspec>(spec)) {
        // moment-matched intercepts: observed reward mean scaled to a return
        const double level = mean_r / (1.0 - gamma);
        starts.push_back({level, level, -1.0, var_r});
        starts.push_back({level, level, -std::abs(level) / 15.0 - 1.0, var_r});
    } else {
        starts.push_back({0.0});
    }
    return starts;
}

EstimationResult ebrm_single(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                             const chain::TabularPolicy& target, double gamma,
                             const optimize::OptimizerConfig& opt) {
    const auto emp = empirical::fit(dataset);
    auto objective = [&](const models::ParamVector& theta) {
        return objective_single_step(theta, emp, spec, target, gamma);
    };
    auto res = minimize_in_model_space(objective, spec, default_starts(spec, dataset, gamma), opt);
    res.diagnostics["observed_pairs"] = static_cast<double>(emp.observed_pairs());
    return res;
}

EstimationResult ebrm_multi_bootstrap(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                                      const chain::TabularPolicy& target, double gamma, std::size_t m,
                                      std::size_t M, std::uint64_t seed,
                                      const optimize::OptimizerConfig& opt) {
    const auto emp = empirical::fit(dataset);
    // the batch is sampled once and frozen across optimizer iterations
    const auto batch = empirical::sample_trajectories(emp, target, gamma, m, M, seed);
    auto objective = [&](const models::ParamVector& theta) {
        return objective_bootstrap(theta, batch, emp.b_hat, spec, gamma);
    };
    auto res = minimize_in_model_space(objective, spec, default_starts(spec, dataset, gamma), opt);
    res.diagnostics["fallback_fires"] = static_cast<double>(batch.fallback_fires);
    return res;
}

EstimationResult ebrm_multi_split(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                                  const chain::TabularPolicy& target, double gamma, std::size_t m,
                                  std::size_t M, std::uint64_t seed, const optimize::OptimizerConfig& opt) {
    const auto emps = empirical::split_fit(dataset, m);
    const auto batch = empirical::sample_trajectories_split(emps, target, gamma, M, seed);
    // weights come from the first slice, matching the batch's quotas
    auto objective = [&](const models::ParamVector& theta) {
        return objective_bootstrap(theta, batch, emps.front().b_hat, spec, gamma);
    };
    auto res = minimize_in_model_space(objective, spec, default_starts(spec, dataset, gamma), opt);
    res.diagnostics["fallback_fires"] = static_cast<double>(batch.fallback_fires);
    return res;
}

std::size_t lepski_core(const std::vector<std::size_t>& levels, std::size_t J,
                        const LepskiSampler& e_hat) {
    if (levels.empty()) throw std::invalid_argument("lepski_core: empty level list");
    if (J < 2) throw std::invalid_argument("lepski_core: need J >= 2");
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = levels.size(); k-- > 0;) {
        double mean = 0.0;
        std::vector<double> es(J);
        for (std::size_t j = 0; j < J; ++j) {
            es[j] = e_hat(k, j);
            mean += es[j];
        }
        mean /= static_cast<double>(J);
        double var = 0.0;
        for (double e : es) var += (e - mean) * (e - mean);
        const double sd = std::sqrt(var / static_cast<double>(J - 1));
        lo = std::max(lo, mean - 1.96 * sd);
        hi = std::min(hi, mean + 1.96 * sd);
        if (lo > hi) return levels[k];
    }
    return 1; // running intersection never emptied: the m_0 = 1 exit
}

LepskiResult lepski_select(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                           const chain::TabularPolicy& target, double gamma,
                           const std::vector<std::size_t>& grid, std::size_t J, std::size_t M,
                           std::uint64_t seed, const optimize::OptimizerConfig& opt) {
    if (!std::is_sorted(grid.begin(), grid.end()) ||
        std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        throw std::invalid_argument("lepski_select: grid must be strictly ascending");
    std::vector<std::size_t> levels = grid;
    if (!levels.empty() && levels.front() == 1) levels.erase(levels.begin());
    if (levels.empty()) throw std::invalid_argument("lepski_select: grid has no levels above m0 = 1");

    const auto emp = empirical::fit(dataset);
    const auto single = ebrm_single(dataset, spec, target, gamma, opt);
    const chain::GaussianTable base_table = models::instantiate_gaussian(spec, single.theta);

    const rng::Stream root(seed);
    LepskiResult result;
    result.estimations = 1;
    auto e_hat = [&](std::size_t k, std::size_t j) {
        const std::uint64_t sub = root.child(k * 1000 + j + 1).next_u64();
        const auto boot = ebrm_multi_bootstrap(dataset, spec, target, gamma, levels[k], M, sub, opt);
        ++result.estimations;
        const chain::GaussianTable boot_table = models::instantiate_gaussian(spec, boot.theta);
        double e = 0.0;
        for (std::size_t c = 0; c < emp.b_hat.size(); ++c) {
            if (emp.b_hat[c] == 0.0) continue;
            e += emp.b_hat[c] * energy::energy_gg(base_table.cells[c], boot_table.cells[c]);
        }
        return e;
    };
    result.selected_m = lepski_core(levels, J, e_hat);
    return result;
}

chain::ParticleTable QuantileTable::to_particle_table() const {
    chain::ParticleTable out(n_states);
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
        std::vector<double> pts(values.begin() + static_cast<std::ptrdiff_t>(c * n_tau),
                                values.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_tau));
        out.cells[c] = dist::ParticleSet::from_values(pts);
    }
    return out;
}

QuantileTable qrtd_fit(const chain::OfflineDataset& dataset, std::size_t n_tau, double alpha0,
                       std::size_t epochs, const chain::TabularPolicy& target, double gamma,
                       std::uint64_t seed) {
    if (!(alpha0 > 0.0)) throw std::invalid_argument("qrtd_fit: need alpha0 > 0");
    if (n_tau < 1) throw std::invalid_argument("qrtd_fit: need n_tau >= 1");
    QuantileTable table;
    table.n_states = dataset.n_states;
    table.n_tau = n_tau;
    table.taus.resize(n_tau);
    for (std::size_t i = 0; i < n_tau; ++i)
        table.taus[i] = static_cast<double>(i + 1) / static_cast<double>(n_tau + 1);
    table.values.assign(static_cast<std::size_t>(2 * dataset.n_states) * n_tau, 0.0);

    rng::Stream root(seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng::Stream rs = root.child(epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rs.below(i)]);
        for (std::size_t idx : order) {
            const std::size_t cell = chain::cell_index(dataset.s[idx], dataset.a[idx], dataset.n_states);
            const double r = dataset.r[idx];
            const int sn = dataset.s_next[idx];
            for (std::size_t rep = 0; rep < n_tau; ++rep) {
                const std::size_t i_q = rs.below(n_tau);
                const int a2 = target.sample_action(sn, rs);
                const std::size_t next_cell = chain::cell_index(sn, a2, dataset.n_states);
                const double z_next = table.values[next_cell * n_tau + rs.below(n_tau)];
                double& th = table.values[cell * n_tau + i_q];
                const double indicator = (r + gamma * z_next < th) ? 1.0 : 0.0;
                th += alpha0 * (table.taus[i_q] - indicator);
            }
        }
    }

    for (std::size_t c = 0; c < static_cast<std::size_t>(2 * dataset.n_states); ++c)
        std::sort(table.values.begin() + static_cast<std::ptrdiff_t>(c * n_tau),
                  table.values.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_tau));
    return table;
}

std::size_t fle_partition_count(const FlePartition& p, std::size_t n, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("fle_partition_count: gamma in (0, 1)");
    if (!(p.l > 0.0)) throw std::invalid_argument("fle_partition_count: need l > 0");
    const double base_log = (1.0 - 1.0 / (2.0 * p.l)) * std::log(1.0 / gamma);
    auto growth = [&](double nn) { return std::log(nn / std::log(nn)) / (2.0 * p.l); };
    const double t_of_n = static_cast<double>(p.T0) +
                          (growth(static_cast<double>(n)) - growth(static_cast<double>(p.N0))) / base_log;
    const double floored = std::floor(t_of_n);
    return std::max<std::size_t>(p.T_tilde, floored <= 0.0 ? 0 : static_cast<std::size_t>(floored));
}

EstimationResult fle_fit(const chain::OfflineDataset& dataset, const models::ModelSpec& spec,
                         const chain::TabularPolicy& target, double gamma, const FlePartition& partition,
                         std::uint64_t seed, const optimize::OptimizerConfig& opt) {
    if (dataset.dim != 1) throw std::invalid_argument("fle_fit: needs 1-D rewards");
    const std::size_t t_star = fle_partition_count(partition, dataset.size(), gamma);
    if (dataset.size() < t_star) throw std::invalid_argument("fle_fit: N below the partition count");
    const std::size_t base = dataset.size() / t_star;

    rng::Stream root(seed);
    models::ParamVector theta = models::from_unconstrained(spec, std::vector<double>(models::param_count(spec), 0.0));

    std::size_t total_evals = 0;
    bool converged = false;
    double final_nll = 0.0;
    std::size_t begin = 0;
    for (std::size_t t = 0; t < t_star; ++t) {
        const std::size_t end = (t + 1 == t_star) ? dataset.size() : begin + base;
        const chain::GaussianTable prev = models::instantiate_gaussian(spec, theta);
        rng::Stream rs = root.child(t);

        // one pseudo-sample y = r + gamma z' per record in this slice
        std::vector<std::size_t> cells(end - begin);
        std::vector<double> ys(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const int sn = dataset.s_next[i];
            const int a2 = target.sample_action(sn, rs);
            const auto& z = prev.cell(sn, a2);
            ys[i - begin] = dataset.r[i] + gamma * rs.normal(z.mean, z.sd());
            cells[i - begin] = chain::cell_index(dataset.s[i], dataset.a[i], dataset.n_states);
        }

        auto nll = [&](const models::ParamVector& th) {
            const chain::GaussianTable tab = models::instantiate_gaussian(spec, th);
            double acc = 0.0;
            for (std::size_t i = 0; i < ys.size(); ++i) {
                const auto& g = tab.cells[cells[i]];
                const double d = ys[i] - g.mean;
                acc += 0.5 * std::log(g.var) + 0.5 * d * d / g.var;
            }
            return acc / static_cast<double>(ys.size());
        };

        auto res = minimize_in_model_space(nll, spec, {theta}, opt);
        theta = res.theta;
        total_evals += res.evaluations;
        converged = res.converged;
        final_nll = res.objective_value;
        begin = end;
    }

    EstimationResult out;
    out.theta = theta;
    out.objective_value = final_nll;
    out.evaluations = total_evals;
    out.converged = converged;
    out.diagnostics["partitions"] = static_cast<double>(t_star);
    return out;
}

} // namespace ebrm::estimators
