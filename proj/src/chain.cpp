#include "ebrm/chain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ebrm/csv.hpp"

namespace ebrm::chain {

void ChainConfig::validate() const {
    if (n_states < 2) throw std::invalid_argument("ChainConfig: need n_states >= 2");
    if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("ChainConfig: p0 must be in (0, 1)");
    if (!(sigma0_sq > 0.0)) throw std::invalid_argument("ChainConfig: sigma0_sq must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("ChainConfig: gamma must be in [0, 1)");
}

TabularPolicy TabularPolicy::uniform(int n_states) {
    TabularPolicy p;
    p.prob_right.assign(static_cast<std::size_t>(n_states), 0.5);
    return p;
}

TabularPolicy TabularPolicy::deterministic_right(int n_states) {
    TabularPolicy p;
    p.prob_right.assign(static_cast<std::size_t>(n_states), 1.0);
    return p;
}

bool TabularPolicy::is_deterministic_right() const noexcept {
    return std::all_of(prob_right.begin(), prob_right.end(), [](double p) { return p == 1.0; });
}

double TabularPolicy::prob(int action, int s) const {
    const double pr = prob_right.at(static_cast<std::size_t>(s - 1));
    return action > 0 ? pr : 1.0 - pr;
}

int TabularPolicy::sample_action(int s, rng::Stream& rs) const {
    return rs.uniform01() <= prob_right.at(static_cast<std::size_t>(s - 1)) ? +1 : -1;
}

double reward_mean(const ChainConfig& cfg, int k) {
    if (k < 0 || k > cfg.n_states + 1) throw std::out_of_range("reward_mean: k out of range");
    if (k == cfg.n_states + 1) return 0.0;
    return cfg.A0 * std::pow(cfg.p0, k);
}

namespace {

inline int clip_state(int k, int n_states) {
    if (k == 0) return 1;
    if (k == n_states + 1) return n_states;
    return k;
}

} // namespace

StepResult step(const ChainConfig& cfg, int s, int action, rng::Stream& rs) {
    const int k = s + action;
    const double mu = reward_mean(cfg, k);
    return {rs.normal(mu, std::sqrt(cfg.sigma0_sq)), clip_state(k, cfg.n_states)};
}

OfflineDataset generate_dataset(const ChainConfig& cfg, const TabularPolicy& behavior,
                                std::size_t n, std::uint64_t seed) {
    cfg.validate();
    if (n < 1) throw std::invalid_argument("generate_dataset: need N >= 1");
    OfflineDataset ds;
    ds.n_states = cfg.n_states;
    ds.dim = 1;
    ds.s.reserve(n);
    ds.a.reserve(n);
    ds.r.reserve(n);
    ds.s_next.reserve(n);

    rng::Stream rs(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int s = 1 + static_cast<int>(rs.below(static_cast<std::uint64_t>(cfg.n_states)));
        const int a = behavior.sample_action(s, rs);
        const auto [r, s_next] = step(cfg, s, a, rs);
        ds.s.push_back(s);
        ds.a.push_back(a);
        ds.r.push_back(r);
        ds.s_next.push_back(s_next);
    }
    return ds;
}

GaussianTable chain_gaussian_table(int n_states, double A0, double p0, double gamma, double return_var) {
    GaussianTable table(n_states);
    const double gp = gamma * p0;
    const double denom = 1.0 - gp;
    // E{Z(i, +1)} = A0 p0^{i+1} (1 - (gamma p0)^{n-i}) / (1 - gamma p0)
    for (int i = 1; i <= n_states; ++i) {
        const double mean_right = A0 * std::pow(p0, i + 1) * (1.0 - std::pow(gp, n_states - i)) / denom;
        table.cell(i, +1) = dist::ScalarGaussian(mean_right, return_var);
    }
    // E{Z(i, -1)} = A0 p0^{i-1} (1 - (gamma p0)^{n+2-i}) / (1 - gamma p0) for i >= 2,
    // and E{Z(1, -1)} = A0 + gamma E{Z(1, +1)} at the blocked left edge.
    for (int i = 2; i <= n_states; ++i) {
        const double mean_left = A0 * std::pow(p0, i - 1) * (1.0 - std::pow(gp, n_states + 2 - i)) / denom;
        table.cell(i, -1) = dist::ScalarGaussian(mean_left, return_var);
    }
    table.cell(1, -1) = dist::ScalarGaussian(A0 + gamma * table.cell(1, +1).mean, return_var);
    return table;
}

GaussianTable true_return_table(const ChainConfig& cfg, const TabularPolicy& target) {
    cfg.validate();
    if (!target.is_deterministic_right())
        throw std::invalid_argument("true_return_table: closed form only for the deterministic right policy");
    const double return_var = cfg.sigma0_sq / (1.0 - cfg.gamma * cfg.gamma);
    return chain_gaussian_table(cfg.n_states, cfg.A0, cfg.p0, cfg.gamma, return_var);
}

GaussianTable exact_bellman_apply(const GaussianTable& table, const ChainConfig& cfg,
                                  const TabularPolicy& target) {
    GaussianTable out(cfg.n_states);
    for (int s = 1; s <= cfg.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = slot_action(slot);
            const int k = s + a;
            const int s_next = clip_state(k, cfg.n_states);
            const double mu_r = reward_mean(cfg, k);
            double pr = target.prob(+1, s_next);
            if (pr != 0.0 && pr != 1.0)
                throw std::invalid_argument("exact_bellman_apply: Gaussian path needs a deterministic target");
            const auto& z = table.cell(s_next, pr == 1.0 ? +1 : -1);
            out.cell(s, a) = dist::ScalarGaussian(mu_r + cfg.gamma * z.mean,
                                                  cfg.sigma0_sq + cfg.gamma * cfg.gamma * z.var);
        }
    }
    return out;
}

namespace {

MixtureTable apply_to_mixture(const MixtureTable& table, const ChainConfig& cfg,
                              const TabularPolicy& target) {
    MixtureTable out(cfg.n_states);
    for (int s = 1; s <= cfg.n_states; ++s) {
        for (int slot = 0; slot < 2; ++slot) {
            const int a = slot_action(slot);
            const int k = s + a;
            const int s_next = clip_state(k, cfg.n_states);
            const double mu_r = reward_mean(cfg, k);
            std::vector<double> w;
            std::vector<dist::ScalarGaussian> comps;
            for (int slot2 = 0; slot2 < 2; ++slot2) {
                const int a2 = slot_action(slot2);
                const double pa = target.prob(a2, s_next);
                if (pa == 0.0) continue;
                const auto& mix = table.cell(s_next, a2);
                for (std::size_t j = 0; j < mix.size(); ++j) {
                    w.push_back(pa * mix.weights[j]);
                    const auto& g = mix.components[j];
                    comps.emplace_back(mu_r + cfg.gamma * g.mean,
                                       cfg.sigma0_sq + cfg.gamma * cfg.gamma * g.var);
                }
            }
            out.cell(s, a) = dist::GaussianMixture(std::move(w), std::move(comps));
        }
    }
    return out;
}

MixtureTable to_mixture_table(const GaussianTable& g) {
    MixtureTable out(g.n_states);
    for (std::size_t i = 0; i < g.cells.size(); ++i)
        out.cells[i] = dist::GaussianMixture({1.0}, {g.cells[i]});
    return out;
}

} // namespace

ReturnTable exact_bellman_apply(const ReturnTable& table, const ChainConfig& cfg,
                                const TabularPolicy& target) {
    cfg.validate();
    if (const auto* g = std::get_if<GaussianTable>(&table)) {
        bool deterministic = true;
        for (double p : target.prob_right)
            if (p != 0.0 && p != 1.0) deterministic = false;
        if (deterministic) {
            GaussianTable out(cfg.n_states);
            for (int s = 1; s <= cfg.n_states; ++s) {
                for (int slot = 0; slot < 2; ++slot) {
                    const int a = slot_action(slot);
                    const int k = s + a;
                    const int s_next = clip_state(k, cfg.n_states);
                    const double mu_r = reward_mean(cfg, k);
                    const int a2 = target.prob(+1, s_next) == 1.0 ? +1 : -1;
                    const auto& z = g->cell(s_next, a2);
                    out.cell(s, a) = dist::ScalarGaussian(mu_r + cfg.gamma * z.mean,
                                                          cfg.sigma0_sq + cfg.gamma * cfg.gamma * z.var);
                }
            }
            return out;
        }
        return apply_to_mixture(to_mixture_table(*g), cfg, target);
    }
    if (const auto* m = std::get_if<MixtureTable>(&table)) return apply_to_mixture(*m, cfg, target);
    throw std::invalid_argument("exact_bellman_apply: particle and bivariate tables unsupported here");
}

GaussianTable iterate_to_fixed_point(const ChainConfig& cfg, const TabularPolicy& target) {
    cfg.validate();
    for (double p : target.prob_right)
        if (p != 0.0 && p != 1.0)
            throw std::invalid_argument("iterate_to_fixed_point: needs a deterministic target policy");
    GaussianTable table(cfg.n_states);
    for (auto& c : table.cells) c = dist::ScalarGaussian(0.0, 0.0);
    if (cfg.gamma == 0.0) return exact_bellman_apply(table, cfg, target);
    const int T = static_cast<int>(std::ceil(std::log(1e-12) / std::log(cfg.gamma)));
    for (int t = 0; t < T; ++t) table = exact_bellman_apply(table, cfg, target);
    return table;
}

void write_csv(const OfflineDataset& ds, std::ostream& os) {
    os << "s,a";
    for (std::size_t k = 0; k < ds.dim; ++k) os << ",r" << k;
    os << ",s_next\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << ds.s[i] << ',' << ds.a[i];
        for (std::size_t k = 0; k < ds.dim; ++k) os << ',' << csv::format_double(ds.r[i * ds.dim + k]);
        os << ',' << ds.s_next[i] << '\n';
    }
}

OfflineDataset read_csv(std::istream& is, int n_states) {
    OfflineDataset ds;
    ds.n_states = n_states;
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("dataset csv: missing header");
    const std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 2;
    if (dim < 1) throw std::invalid_argument("dataset csv: bad header");
    ds.dim = dim;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        auto next_field = [&]() {
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("dataset csv: short row");
            return field;
        };
        const int s = std::stoi(next_field());
        const int a = std::stoi(next_field());
        if (s < 1 || s > n_states || (a != -1 && a != 1))
            throw std::invalid_argument("dataset csv: state or action out of range");
        ds.s.push_back(s);
        ds.a.push_back(a);
        for (std::size_t k = 0; k < dim; ++k) ds.r.push_back(std::stod(next_field()));
        ds.s_next.push_back(std::stoi(next_field()));
    }
    return ds;
}

void write_csv_file(const OfflineDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(ds, os);
}

OfflineDataset read_csv_file(const std::string& path, int n_states) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return read_csv(is, n_states);
}

} // namespace ebrm::chain
