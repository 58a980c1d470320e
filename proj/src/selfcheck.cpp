#include "ebrm/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ebrm/chain.hpp"
#include "ebrm/empirical.hpp"
#include "ebrm/energy.hpp"
#include "ebrm/estimators.hpp"
#include "ebrm/metrics.hpp"
#include "ebrm/models.hpp"

namespace ebrm::selfcheck {

namespace {

using dist::GaussianMixture;
using dist::ScalarGaussian;

ScalarGaussian random_gaussian(rng::Stream& rs) {
    return {rs.normal(0.0, 3.0), 0.2 + 3.0 * rs.uniform01()};
}

GaussianMixture random_mixture(rng::Stream& rs, std::size_t k) {
    std::vector<double> w(k);
    std::vector<ScalarGaussian> comps;
    double total = 0.0;
    for (auto& v : w) {
        v = 0.2 + rs.uniform01();
        total += v;
    }
    for (auto& v : w) v /= total;
    // renormalize exactly so the invariant check cannot trip on rounding
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) acc += w[i];
    w[k - 1] = 1.0 - acc;
    for (std::size_t i = 0; i < k; ++i) comps.push_back(random_gaussian(rs));
    return {std::move(w), std::move(comps)};
}

struct Suite {
    std::vector<CheckResult> results;

    void add(const std::string& name, double tolerance, double observed) {
        results.push_back({name, tolerance, observed, observed <= tolerance});
    }
};

void check_dist_core(Suite& s) {
    rng::Stream rs(20240811);

    double worst_sym = 0.0, worst_neg = 0.0, worst_id = 0.0, worst_tri = 0.0, worst_scale = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto a = random_gaussian(rs);
        const auto b = random_gaussian(rs);
        const auto c = random_gaussian(rs);
        worst_sym = std::max(worst_sym, std::abs(energy::energy_gg(a, b) - energy::energy_gg(b, a)));
        worst_neg = std::max(worst_neg, -energy::energy_gg(a, b));
        worst_id = std::max(worst_id, std::abs(energy::energy_gg(a, a)));
        worst_tri = std::max(worst_tri, energy::energy_gg(a, c) - 2.0 * (energy::energy_gg(a, b) +
                                                                         energy::energy_gg(b, c)));
        const double scale = 0.5 + 2.0 * rs.uniform01();
        const ScalarGaussian sa{scale * a.mean, scale * scale * a.var};
        const ScalarGaussian sb{scale * b.mean, scale * scale * b.var};
        worst_scale = std::max(worst_scale, std::abs(energy::energy_gg(sa, sb) -
                                                     scale * energy::energy_gg(a, b)));
    }
    s.add("energy symmetry", 1e-12, worst_sym);
    s.add("energy non-negativity", 1e-12, worst_neg);
    s.add("energy identity", 1e-12, worst_id);
    s.add("relaxed triangle (K=2)", 1e-10, worst_tri);
    s.add("scale sensitivity (beta0=1)", 1e-10, worst_scale);

    double worst_mix = 0.0;
    for (int i = 0; i < 30; ++i) {
        const auto m1 = random_mixture(rs, 3);
        const auto m2 = random_mixture(rs, 4);
        worst_mix = std::max(worst_mix, std::abs(energy::energy_mm(m1, m2) - energy::energy_mm(m2, m1)));
        worst_mix = std::max(worst_mix, std::abs(energy::energy_mm(m1, m1)));
    }
    s.add("mixture symmetry and identity", 1e-12, worst_mix);

    double worst_mc = 0.0;
    for (int i = 0; i < 5; ++i) {
        const auto a = random_gaussian(rs);
        const auto b = random_gaussian(rs);
        auto sampler = [](const ScalarGaussian& g) {
            return [g](rng::Stream& r, double* out) { out[0] = r.normal(g.mean, g.sd()); };
        };
        const auto mc = energy::energy_mc(sampler(a), sampler(b), 1, 20000, 77 + i);
        worst_mc = std::max(worst_mc,
                            std::abs(mc.estimate - energy::energy_gg(a, b)) / (3.0 * mc.std_error));
    }
    s.add("MC vs closed form (3 SE units)", 1.0, worst_mc);

    const auto p1 = dist::ParticleSet::from_values({0.4});
    const auto p2 = dist::ParticleSet::from_values({-1.1});
    const double dirac = energy::energy_pp(p1, p2) - 2.0 * std::abs(0.4 - (-1.1));
    s.add("particle singleton = Dirac closed form", 0.0, std::abs(dirac));
}

void check_chain(Suite& s) {
    const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(30);
    double worst_fp = 0.0;
    const double grid[][4] = {{100, 0.9, 20, 0.99}, {100, 0.9, 5000, 0.99}, {50, 0.7, 4, 0.5}};
    for (const auto& g : grid) {
        chain::ChainConfig cfg{30, g[0], g[1], g[2], g[3]};
        const auto truth = chain::true_return_table(cfg, target);
        const auto applied = chain::exact_bellman_apply(truth, cfg, target);
        for (std::size_t c = 0; c < truth.cells.size(); ++c)
            worst_fp = std::max(worst_fp, energy::energy_gg(truth.cells[c], applied.cells[c]));
    }
    s.add("Bellman fixed point", 1e-10, worst_fp);

    chain::ChainConfig cfg;
    rng::Stream rs(7);
    double worst_contract = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        chain::GaussianTable t1(30), t2(30);
        for (std::size_t c = 0; c < t1.cells.size(); ++c) {
            t1.cells[c] = random_gaussian(rs);
            t2.cells[c] = random_gaussian(rs);
        }
        const auto a1 = chain::exact_bellman_apply(t1, cfg, target);
        const auto a2 = chain::exact_bellman_apply(t2, cfg, target);
        double before = 0.0, after = 0.0;
        for (std::size_t c = 0; c < t1.cells.size(); ++c) {
            before = std::max(before, energy::w1_gaussian(t1.cells[c], t2.cells[c]));
            after = std::max(after, energy::w1_gaussian(a1.cells[c], a2.cells[c]));
        }
        worst_contract = std::max(worst_contract, after - cfg.gamma * before);
    }
    s.add("W1 contraction", 1e-10, worst_contract);

    const auto big = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 1000000, 99);
    const auto emp = empirical::fit(big);
    double tv = 0.0;
    for (double b : emp.b_hat) tv += std::abs(b - 1.0 / 60.0);
    s.add("empirical frequency TV at N=1e6", 0.02, 0.5 * tv);
}

void check_estimators(Suite& s) {
    chain::ChainConfig cfg;
    const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(30);
    const auto dataset = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 400, 11);
    const auto emp = empirical::fit(dataset);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    const models::ParamVector theta{80.0, 0.7, 30.0};

    // single-step objective against its mixture-path expression
    const auto model = models::instantiate_gaussian(spec, theta);
    double via_mixture = 0.0;
    for (int st = 1; st <= 30; ++st)
        for (int slot = 0; slot < 2; ++slot) {
            const int a = chain::slot_action(slot);
            if (emp.weight(st, a) == 0.0) continue;
            const auto mix = empirical::estimated_bellman_mixture(model, emp, target, cfg.gamma, st, a);
            via_mixture += emp.weight(st, a) * energy::energy_gm(model.cell(st, a), mix);
        }
    const double direct = estimators::objective_single_step(theta, emp, spec, target, cfg.gamma);
    s.add("single-step objective = mixture path", 1e-12, std::abs(direct - via_mixture));

    // bootstrap objective at m = 1 with the full enumeration batch
    empirical::BootstrapBatch enumerated;
    enumerated.m = 1;
    enumerated.dim = 1;
    enumerated.n_states = 30;
    enumerated.groups.resize(emp.outcomes.size());
    for (std::size_t c = 0; c < emp.outcomes.size(); ++c) {
        const auto& cell = emp.outcomes[c];
        if (cell.count == 0) continue;
        auto& grp = enumerated.groups[c];
        for (std::size_t i = 0; i < cell.s_next.size(); ++i) {
            grp.g.push_back(cell.rewards[i]);
            grp.s_m.push_back(cell.s_next[i]);
            grp.a_m.push_back(+1); // deterministic right target
        }
    }
    const double boot = estimators::objective_bootstrap(theta, enumerated, emp.b_hat, spec, cfg.gamma);
    s.add("bootstrap m=1 enumeration = single-step", 1e-12, std::abs(boot - direct));

    // optimizer sanity on a convex quadratic
    auto quad = [](const std::vector<double>& x) {
        double v = 0.0;
        for (double xi : x) v += xi * xi;
        return v;
    };
    auto r = optimize::nelder_mead(quad, {3.0, -2.0}, optimize::OptimizerConfig{});
    s.add("Nelder-Mead convex quadratic", 1e-6, std::sqrt(r.fx));
}

void check_metrics(Suite& s) {
    s.add("B1(0, 1, 1) = 4", 0.0, std::abs(metrics::bound_B1(0.0, 1.0, 1.0) - 4.0));
    double worst = 0.0;
    double prev = 0.0;
    for (double g : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        const double v = metrics::bound_B1(g, 1.0, 0.0);
        const double cap = 1.0 / ((1.0 - g) * (1.0 - g));
        worst = std::max(worst, v - cap);
        if (v < prev) worst = std::max(worst, prev - v);
        prev = v;
    }
    s.add("B1 geometric cap and monotonicity (q=0)", 1e-12, worst);

    chain::ChainConfig cfg;
    const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(30);
    const models::ModelSpec spec = models::ChainRealizable{cfg.gamma, 30, true, cfg.sigma0_sq};
    const auto w = metrics::WeightTable::uniform(30);
    double worst_fm = 0.0;
    for (std::size_t m : {1, 5, 20})
        worst_fm = std::max(worst_fm, metrics::population_multistep_objective(
                                          {cfg.A0, cfg.p0, cfg.sigma0_sq}, spec, cfg, target, m, w));
    s.add("F_m(truth) = 0 (realizable)", 1e-9, worst_fm);
}

void check_determinism(Suite& s) {
    chain::ChainConfig cfg;
    const auto d1 = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 500, 42);
    const auto d2 = chain::generate_dataset(cfg, chain::TabularPolicy::uniform(30), 500, 42);
    double diff = 0.0;
    for (std::size_t i = 0; i < d1.size(); ++i) {
        diff = std::max(diff, std::abs(d1.r[i] - d2.r[i]));
        diff = std::max(diff, static_cast<double>(std::abs(d1.s[i] - d2.s[i])));
    }
    s.add("dataset determinism (same seed)", 0.0, diff);
}

} // namespace

std::vector<CheckResult> run_all() {
    Suite s;
    check_dist_core(s);
    check_chain(s);
    check_estimators(s);
    check_metrics(s);
    check_determinism(s);
    return s.results;
}

bool report(const std::vector<CheckResult>& results, std::ostream& os) {
    bool all = true;
    std::size_t width = 4;
    for (const auto& r : results) width = std::max(width, r.name.size());
    os << std::left << std::setw(static_cast<int>(width + 2)) << "check"
       << std::setw(14) << "tolerance" << std::setw(16) << "observed" << "status\n";
    for (const auto& r : results) {
        os << std::left << std::setw(static_cast<int>(width + 2)) << r.name << std::setw(14)
           << std::setprecision(3) << std::scientific << r.tolerance << std::setw(16) << r.observed
           << (r.pass ? "pass" : "FAIL") << '\n';
        all = all && r.pass;
    }
    os << (all ? "all checks passed\n" : "CHECKS FAILED\n");
    return all;
}

} // namespace ebrm::selfcheck
