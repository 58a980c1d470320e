#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "ebrm/energy.hpp"
#include "ebrm/estimators.hpp"
#include "ebrm/metrics.hpp"

using namespace ebrm;

namespace {

chain::OfflineDataset make_dataset(int n_states, std::vector<std::array<double, 4>> rows) {
    chain::OfflineDataset ds;
    ds.n_states = n_states;
    ds.dim = 1;
    for (const auto& r : rows) {
        ds.s.push_back(static_cast<int>(r[0]));
        ds.a.push_back(static_cast<int>(r[1]));
        ds.r.push_back(r[2]);
        ds.s_next.push_back(static_cast<int>(r[3]));
    }
    return ds;
}

/// Brute-force single-step objective: build every estimated mixture
/// explicitly and enumerate the three energy expectations term by term.
double enumeration_single_step(const models::ParamVector& theta, const chain::OfflineDataset& ds,
                               const models::ModelSpec& spec, const chain::TabularPolicy& target,
                               double gamma) {
    const auto emp = empirical::fit(ds);
    const auto model = models::instantiate_gaussian(spec, theta);
    double total = 0.0;
    for (int s = 1; s <= ds.n_states; ++s) {
        for (int a : {-1, +1}) {
            const double bw = emp.weight(s, a);
            if (bw == 0.0) continue;
            const auto mix = empirical::estimated_bellman_mixture(model, emp, target, gamma, s, a);
            const auto& p = model.cell(s, a);
            double cross = 0.0;
            for (std::size_t j = 0; j < mix.size(); ++j)
                cross += mix.weights[j] * energy::mean_abs_normal(p.mean - mix.components[j].mean,
                                                                  std::sqrt(p.var + mix.components[j].var));
            const double self_p = energy::mean_abs_normal(0.0, std::sqrt(2.0 * p.var));
            double self_m = 0.0;
            for (std::size_t j = 0; j < mix.size(); ++j)
                for (std::size_t k = 0; k < mix.size(); ++k)
                    self_m += mix.weights[j] * mix.weights[k] *
                              energy::mean_abs_normal(mix.components[j].mean - mix.components[k].mean,
                                                      std::sqrt(mix.components[j].var + mix.components[k].var));
            total += bw * (2.0 * cross - self_p - self_m);
        }
    }
    return total;
}

/// Brute-force deterministic-transition objective from its three data
/// averages, written term by term.
double enumeration_deterministic(const models::ParamVector& theta, const chain::OfflineDataset& ds,
                                 const models::ModelSpec& spec, const chain::TabularPolicy& target,
                                 double gamma) {
    const auto model = models::instantiate_gaussian(spec, theta);
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = model.cell(ds.s[i], ds.a[i]);
        for (int a2 : {-1, +1}) {
            const double pa = target.prob(a2, ds.s_next[i]);
            if (pa == 0.0) continue;
            const auto& q = model.cell(ds.s_next[i], a2);
            x1 += pa * energy::mean_abs_normal(p.mean - ds.r[i] - gamma * q.mean,
                                               std::sqrt(p.var + gamma * gamma * q.var));
        }
        x2 += energy::mean_abs_normal(0.0, std::sqrt(2.0 * p.var));
        for (int aa : {-1, +1})
            for (int ab : {-1, +1}) {
                const double paa = target.prob(aa, ds.s_next[i]);
                const double pab = target.prob(ab, ds.s_next[i]);
                if (paa == 0.0 || pab == 0.0) continue;
                const auto& za = model.cell(ds.s_next[i], aa);
                const auto& zb = model.cell(ds.s_next[i], ab);
                x3 += paa * pab * gamma *
                      energy::mean_abs_normal(za.mean - zb.mean, std::sqrt(za.var + zb.var));
            }
    }
    const double n = static_cast<double>(ds.size());
    return (2.0 * x1 - x2 - x3) / n;
}

double inaccuracy_vs_truth(const models::ModelSpec& spec, const models::ParamVector& theta,
                           const chain::ChainConfig& cfg) {
    const auto target = chain::TabularPolicy::deterministic_right(cfg.n_states);
    const auto truth = chain::true_return_table(cfg, target);
    const auto w = metrics::WeightTable::uniform(cfg.n_states);
    return metrics::expected_energy(chain::ReturnTable(models::instantiate_gaussian(spec, theta)),
                                    chain::ReturnTable(truth), w);
}

} // namespace

TEST_CASE("single-step objective vanishes at the noiseless fixed point") {
    chain::ChainConfig cfg;
    cfg.sigma0_sq = 1e-300; // zero-variance limit with exact coverage
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 3000, 13);
    const auto emp = empirical::fit(ds);
    REQUIRE(emp.observed_pairs() == 60);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, false, cfg.sigma0_sq};
    CHECK(estimators::objective_single_step({100.0, 0.9}, emp, spec, target, cfg.gamma) <= 1e-9);
}

TEST_CASE("single-step objective matches the enumeration oracle") {
    const auto target = chain::TabularPolicy::deterministic_right(4);
    const auto ds = make_dataset(
        4, {{2, +1, 1.3, 3}, {2, +1, -0.4, 3}, {3, -1, 2.2, 2}, {1, +1, 0.9, 2}, {2, +1, 1.1, 3}});
    const auto emp = empirical::fit(ds);
    const models::ModelSpec spec = models::ChainRealizable{0.9, 4, true, 1.0};
    const models::ParamVector theta{2.0, 0.6, 1.5};
    const double direct = estimators::objective_single_step(theta, emp, spec, target, 0.9);
    const double oracle = enumeration_single_step(theta, ds, spec, target, 0.9);
    CHECK(std::abs(direct - oracle) <= 1e-12);

    // stochastic target exercises the action-weighted components
    chain::TabularPolicy mixed = chain::TabularPolicy::uniform(4);
    const double direct2 = estimators::objective_single_step(theta, emp, spec, mixed, 0.9);
    const double oracle2 = enumeration_single_step(theta, ds, spec, mixed, 0.9);
    CHECK(std::abs(direct2 - oracle2) <= 1e-12);
}

TEST_CASE("single-step objective grows away from the truth") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 5000, 14);
    const auto emp = empirical::fit(ds);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    const double at_truth = estimators::objective_single_step({100.0, 0.9, 20.0}, emp, spec, target, cfg.gamma);
    const double moved = estimators::objective_single_step({110.0, 0.9, 20.0}, emp, spec, target, cfg.gamma);
    CHECK(moved > at_truth);
}

TEST_CASE("ebrm_single recovers a noiseless identifiable truth") {
    chain::ChainConfig cfg;
    cfg.sigma0_sq = 1e-300;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 3000, 15);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, false, cfg.sigma0_sq};
    const auto res = estimators::ebrm_single(ds, spec, target, cfg.gamma, {});
    CHECK(std::abs(res.theta[0] - 100.0) < 1e-3);
    CHECK(std::abs(res.theta[1] - 0.9) < 1e-5);
    CHECK(res.objective_value <= 1e-8);
}

TEST_CASE("ebrm_single is consistent at moderate sample size") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 5000, 16);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    const auto res = estimators::ebrm_single(ds, spec, target, cfg.gamma, {});
    CHECK(std::abs(res.theta[0] - 100.0) / 100.0 <= 0.01);
    CHECK(std::abs(res.theta[1] - 0.9) <= 0.009);
    // reported objective is the value at theta-hat
    const auto emp = empirical::fit(ds);
    CHECK(std::abs(res.objective_value -
                   estimators::objective_single_step(res.theta, emp, spec, target, cfg.gamma)) <= 1e-9);
}

TEST_CASE("bootstrap objective with the enumeration batch equals single-step") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 600, 17);
    const auto emp = empirical::fit(ds);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};

    empirical::BootstrapBatch enumerated;
    enumerated.m = 1;
    enumerated.dim = 1;
    enumerated.n_states = 30;
    enumerated.groups.resize(emp.outcomes.size());
    for (std::size_t c = 0; c < emp.outcomes.size(); ++c) {
        if (emp.outcomes[c].count == 0) continue;
        auto& grp = enumerated.groups[c];
        const auto& cell = emp.outcomes[c];
        for (std::size_t i = 0; i < cell.s_next.size(); ++i) {
            grp.g.push_back(cell.rewards[i]);
            grp.s_m.push_back(cell.s_next[i]);
            grp.a_m.push_back(+1);
        }
    }
    const models::ParamVector theta{90.0, 0.8, 25.0};
    const double boot = estimators::objective_bootstrap(theta, enumerated, emp.b_hat, spec, cfg.gamma);
    const double single = estimators::objective_single_step(theta, emp, spec, target, cfg.gamma);
    CHECK(std::abs(boot - single) <= 1e-12);
}

TEST_CASE("bootstrap objective at negligible gamma^2m reduces to particles") {
    chain::ChainConfig cfg;
    cfg.gamma = 0.5;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 1500, 18);
    const auto emp = empirical::fit(ds);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    const models::ParamVector theta{95.0, 0.85, 22.0};

    const std::size_t m = 60; // gamma^{2m} ~ 7e-37
    const auto batch = empirical::sample_trajectories(emp, target, cfg.gamma, m, 1500, 77);
    const double full = estimators::objective_bootstrap(theta, batch, emp.b_hat, spec, cfg.gamma);

    const auto model = models::instantiate_gaussian(spec, theta);
    double particles_only = 0.0;
    for (int s = 1; s <= 30; ++s)
        for (int a : {-1, +1}) {
            const std::size_t c = chain::cell_index(s, a, 30);
            if (emp.b_hat[c] == 0.0) continue;
            const auto& grp = batch.groups[c];
            particles_only += emp.b_hat[c] *
                              energy::energy_gp(model.cell(s, a), dist::ParticleSet::from_values(grp.g));
        }
    CHECK(std::abs(full - particles_only) <= 1e-9);
}

TEST_CASE("multi-step estimators at m = 1") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 4000, 19);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};

    // split at m = 1 degenerates to the bootstrap estimator exactly
    const auto boot = estimators::ebrm_multi_bootstrap(ds, spec, target, cfg.gamma, 1, 4000, 5, {});
    const auto split = estimators::ebrm_multi_split(ds, spec, target, cfg.gamma, 1, 4000, 5, {});
    CHECK(boot.theta == split.theta);
    CHECK(boot.objective_value == split.objective_value);
    CHECK(boot.diagnostics.at("fallback_fires") == 0.0);

    // and is statistically indistinguishable from single-step
    const auto single = estimators::ebrm_single(ds, spec, target, cfg.gamma, {});
    CHECK(std::abs(boot.theta[0] - single.theta[0]) < 3.0);
    CHECK(std::abs(boot.theta[1] - single.theta[1]) < 0.02);
}

TEST_CASE("splitting halves the data but stays in range") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 10000, 20);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};

    const auto m1 = estimators::ebrm_multi_bootstrap(ds, spec, target, cfg.gamma, 1, 10000, 6, {});
    const auto m2 = estimators::ebrm_multi_split(ds, spec, target, cfg.gamma, 2, 10000, 6, {});
    const double e1 = inaccuracy_vs_truth(spec, m1.theta, cfg);
    const double e2 = inaccuracy_vs_truth(spec, m2.theta, cfg);
    CHECK(e2 <= std::max(3.0 * e1, 0.2)); // information halved per step, same order
}

TEST_CASE("deterministic objective") {
    const auto target = chain::TabularPolicy::deterministic_right(4);
    const models::ModelSpec dirac_spec = models::ChainRealizable{0.9, 4, false, 1e-300};

    // single record with a Dirac model: 2 |z(s,a) - r - gamma z(s', a')|
    const auto one = make_dataset(4, {{2, +1, 1.0, 3}});
    const auto model = models::instantiate_gaussian(dirac_spec, {10.0, 0.5});
    const double z_sa = model.cell(2, +1).mean;
    const double z_next = model.cell(3, +1).mean;
    const double expected = 2.0 * std::abs(z_sa - 1.0 - 0.9 * z_next);
    CHECK(estimators::objective_deterministic({10.0, 0.5}, one, dirac_spec, target, 0.9) ==
          doctest::Approx(expected).epsilon(1e-12));

    // five records against the enumeration oracle
    const auto ds = make_dataset(
        4, {{2, +1, 1.3, 3}, {2, -1, -0.4, 1}, {3, -1, 2.2, 2}, {1, +1, 0.9, 2}, {4, +1, 1.1, 4}});
    const models::ModelSpec spec = models::ChainRealizable{0.9, 4, true, 1.0};
    const models::ParamVector theta{2.0, 0.6, 1.5};
    const double got = estimators::objective_deterministic(theta, ds, spec, target, 0.9);
    CHECK(std::abs(got - enumeration_deterministic(theta, ds, spec, target, 0.9)) <= 1e-12);

    // permutation invariance of the record average
    auto perm = ds;
    std::reverse(perm.s.begin(), perm.s.end());
    std::reverse(perm.a.begin(), perm.a.end());
    std::reverse(perm.r.begin(), perm.r.end());
    std::reverse(perm.s_next.begin(), perm.s_next.end());
    CHECK(std::abs(got - estimators::objective_deterministic(theta, perm, spec, target, 0.9)) <= 1e-12);
}

TEST_CASE("lepski core on synthetic interval streams") {
    // disjoint intervals at the bottom level: the walk exits there
    const std::vector<std::size_t> levels{2, 4};
    auto streams = [](std::size_t k, std::size_t j) {
        return k == 1 ? 10.0 + 1e-7 * static_cast<double>(j) : 1e-7 * static_cast<double>(j);
    };
    CHECK(estimators::lepski_core(levels, 2, streams) == 2);

    // point intervals with distinct means exit at the first intersection
    const std::vector<std::size_t> grid{10, 20, 40, 80};
    auto points = [](std::size_t k, std::size_t) { return static_cast<double>(k); };
    CHECK(estimators::lepski_core(grid, 3, points) == 40);

    // identical streams never separate: the m0 = 1 exit
    auto flat = [](std::size_t, std::size_t) { return 5.0; };
    CHECK(estimators::lepski_core(grid, 3, flat) == 1);

    CHECK_THROWS_AS(estimators::lepski_core(grid, 1, flat), std::invalid_argument);
}

TEST_CASE("qrtd updates") {
    // constant reward, gamma = 0: quantiles contract into (r - a0, r + a0)
    const int n_states = 3;
    chain::OfflineDataset ds;
    ds.n_states = n_states;
    ds.dim = 1;
    for (int i = 0; i < 50; ++i) {
        ds.s.push_back(1);
        ds.a.push_back(+1);
        ds.r.push_back(5.0);
        ds.s_next.push_back(2);
    }
    const auto target = chain::TabularPolicy::deterministic_right(n_states);
    const auto table = estimators::qrtd_fit(ds, 99, 0.5, 2000, target, 0.0, 3);
    double worst = 0.0;
    for (std::size_t i = 0; i < 99; ++i) worst = std::max(worst, std::abs(table.value(1, +1, i) - 5.0));
    CHECK(worst < 0.5);

    // monotone after the final sort
    for (std::size_t i = 0; i + 1 < 99; ++i) CHECK(table.value(1, +1, i) <= table.value(1, +1, i + 1));

    // one sweep from zero moves touched quantiles toward the target
    const auto one = estimators::qrtd_fit(ds, 99, 0.5, 1, target, 0.0, 4);
    double max_v = 0.0;
    for (std::size_t i = 0; i < 99; ++i) max_v = std::max(max_v, one.value(1, +1, i));
    CHECK(max_v > 0.0);
    for (std::size_t i = 0; i < 99; ++i) CHECK(one.value(1, +1, i) >= 0.0);

    CHECK_THROWS_AS(estimators::qrtd_fit(ds, 99, 0.0, 1, target, 0.0, 3), std::invalid_argument);
}

TEST_CASE("fle partition rule") {
    estimators::FlePartition p; // l = 10, N0 = 2000, T0 = 25, T_tilde = 15
    CHECK(estimators::fle_partition_count(p, 2000, 0.99) == 25); // T(N0) = T0 by construction
    CHECK(estimators::fle_partition_count(p, 100, 0.99) == 15);  // the floor T-tilde dominates
    CHECK(estimators::fle_partition_count(p, 5000, 0.99) == 29);
    CHECK(estimators::fle_partition_count(p, 20000, 0.99) > 29);
}

TEST_CASE("fle_fit runs the realizable family") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto ds = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 2000, 21);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    optimize::OptimizerConfig opt;
    opt.restarts = 1;
    opt.max_iters = 400;
    const auto res = estimators::fle_fit(ds, spec, target, cfg.gamma, {}, 9, opt);
    CHECK(res.diagnostics.at("partitions") == 25.0);
    CHECK(inaccuracy_vs_truth(spec, res.theta, cfg) < 40.0);
}
