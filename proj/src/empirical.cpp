#include "ebrm/empirical.hpp"

#include <cmath>
#include <stdexcept>

namespace ebrm::empirical {

std::size_t EmpiricalMDP::observed_pairs() const {
    std::size_t k = 0;
    for (const auto& o : outcomes)
        if (o.count > 0) ++k;
    return k;
}

EmpiricalMDP fit(const chain::OfflineDataset& dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("fit: empty dataset");
    EmpiricalMDP emp;
    emp.n_states = dataset.n_states;
    emp.dim = dataset.dim;
    emp.total_n = dataset.size();
    emp.outcomes.resize(static_cast<std::size_t>(2 * dataset.n_states));
    emp.b_hat.assign(emp.outcomes.size(), 0.0);

    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto& cell = emp.outcomes[chain::cell_index(dataset.s[i], dataset.a[i], dataset.n_states)];
        ++cell.count;
        const double* r = dataset.reward(i);
        cell.rewards.insert(cell.rewards.end(), r, r + dataset.dim);
        cell.s_next.push_back(dataset.s_next[i]);
    }
    for (int s = 1; s <= dataset.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = chain::slot_action(slot);
            auto& cell = emp.outcomes[chain::cell_index(s, a, dataset.n_states)];
            if (cell.count == 0) {
                // empirical transition fallback: Dirac at (0, s)
                cell.fallback = true;
                cell.rewards.assign(dataset.dim, 0.0);
                cell.s_next.assign(1, s);
            }
            emp.b_hat[chain::cell_index(s, a, dataset.n_states)] =
                static_cast<double>(cell.count) / static_cast<double>(emp.total_n);
        }
    }
    return emp;
}

std::vector<EmpiricalMDP> split_fit(const chain::OfflineDataset& dataset, std::size_t m) {
    if (m < 1 || m > dataset.size()) throw std::invalid_argument("split_fit: need 1 <= m <= N");
    const std::size_t base = dataset.size() / m;
    std::vector<EmpiricalMDP> emps;
    emps.reserve(m);
    std::size_t begin = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t end = (j + 1 == m) ? dataset.size() : begin + base;
        chain::OfflineDataset slice;
        slice.n_states = dataset.n_states;
        slice.dim = dataset.dim;
        slice.s.assign(dataset.s.begin() + begin, dataset.s.begin() + end);
        slice.a.assign(dataset.a.begin() + begin, dataset.a.begin() + end);
        slice.r.assign(dataset.r.begin() + begin * dataset.dim, dataset.r.begin() + end * dataset.dim);
        slice.s_next.assign(dataset.s_next.begin() + begin, dataset.s_next.begin() + end);
        emps.push_back(fit(slice));
        begin = end;
    }
    return emps;
}

dist::GaussianMixture estimated_bellman_mixture(const chain::GaussianTable& model,
                                                const EmpiricalMDP& emp,
                                                const chain::TabularPolicy& target,
                                                double gamma, int s, int a) {
    if (emp.dim != 1)
        throw std::invalid_argument("estimated_bellman_mixture: needs 1-D rewards");
    const auto& cell = emp.at(s, a);
    const double inv_n = 1.0 / static_cast<double>(cell.s_next.size());
    std::vector<double> w;
    std::vector<dist::ScalarGaussian> comps;
    for (std::size_t i = 0; i < cell.s_next.size(); ++i) {
        const double r = cell.rewards[i];
        const int sn = cell.s_next[i];
        for (int slot = 0; slot < 2; ++slot) {
            const int a2 = chain::slot_action(slot);
            const double pa = target.prob(a2, sn);
            if (pa == 0.0) continue;
            const auto& z = model.cell(sn, a2);
            w.push_back(pa * inv_n);
            comps.emplace_back(r + gamma * z.mean, gamma * gamma * z.var);
        }
    }
    return dist::GaussianMixture(std::move(w), std::move(comps));
}

namespace {

/// Stratified quota per observed pair; at least one trajectory each.
std::vector<std::size_t> initial_quotas(const EmpiricalMDP& emp, std::size_t M) {
    const std::size_t observed = emp.observed_pairs();
    if (observed == 0) throw std::invalid_argument("sample_trajectories: no observed pairs");
    if (M < observed) throw std::invalid_argument("sample_trajectories: M below observed pair count");
    std::vector<std::size_t> quota(emp.outcomes.size(), 0);
    for (std::size_t c = 0; c < emp.outcomes.size(); ++c) {
        if (emp.outcomes[c].count == 0) continue;
        const double want = static_cast<double>(M) * emp.b_hat[c];
        quota[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(want)));
    }
    return quota;
}

BootstrapBatch run_trajectories(const std::vector<const EmpiricalMDP*>& per_step,
                                const EmpiricalMDP& first, const chain::TabularPolicy& target,
                                double gamma, std::size_t M, std::uint64_t seed) {
    const std::size_t m = per_step.size();
    BootstrapBatch batch;
    batch.m = m;
    batch.dim = first.dim;
    batch.n_states = first.n_states;
    batch.groups.resize(first.outcomes.size());

    const auto quota = initial_quotas(first, M);
    const rng::Stream root(seed);
    const std::size_t d = first.dim;
    std::vector<double> g(d);

    for (int s = 1; s <= first.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = chain::slot_action(slot);
            const std::size_t c = chain::cell_index(s, a, first.n_states);
            if (quota[c] == 0) continue;
            auto& group = batch.groups[c];
            group.g.reserve(quota[c] * d);
            group.s_m.reserve(quota[c]);
            group.a_m.reserve(quota[c]);
            rng::Stream rs = root.child(c);
            for (std::size_t t = 0; t < quota[c]; ++t) {
                int cur_s = s;
                int cur_a = a;
                std::fill(g.begin(), g.end(), 0.0);
                double disc = 1.0;
                for (std::size_t stepj = 0; stepj < m; ++stepj) {
                    const auto& cell = per_step[stepj]->at(cur_s, cur_a);
                    if (cell.fallback) ++batch.fallback_fires;
                    const std::size_t idx = rs.below(cell.s_next.size());
                    for (std::size_t k = 0; k < d; ++k) g[k] += disc * cell.rewards[idx * d + k];
                    disc *= gamma;
                    cur_s = cell.s_next[idx];
                    cur_a = target.sample_action(cur_s, rs);
                }
                group.g.insert(group.g.end(), g.begin(), g.end());
                group.s_m.push_back(cur_s);
                group.a_m.push_back(cur_a);
            }
        }
    }
    return batch;
}

} // namespace

BootstrapBatch sample_trajectories(const EmpiricalMDP& emp, const chain::TabularPolicy& target,
                                   double gamma, std::size_t m, std::size_t M, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_trajectories: need m >= 1");
    std::vector<const EmpiricalMDP*> per_step(m, &emp);
    return run_trajectories(per_step, emp, target, gamma, M, seed);
}

BootstrapBatch sample_trajectories_split(const std::vector<EmpiricalMDP>& emps,
                                         const chain::TabularPolicy& target, double gamma,
                                         std::size_t M, std::uint64_t seed) {
    if (emps.empty()) throw std::invalid_argument("sample_trajectories_split: empty estimator list");
    std::vector<const EmpiricalMDP*> per_step;
    per_step.reserve(emps.size());
    for (const auto& e : emps) per_step.push_back(&e);
    return run_trajectories(per_step, emps.front(), target, gamma, M, seed);
}

} // namespace ebrm::empirical
