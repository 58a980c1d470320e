#include "ebrm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ebrm/csv.hpp"
#include "ebrm/estimators.hpp"
#include "ebrm/metrics.hpp"
#include "ebrm/parallel.hpp"

namespace ebrm::harness {

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string{};
}

struct CellMetrics {
    std::optional<double> e_bar;
    std::optional<double> w1_bar;
    std::optional<double> w1_marginal;
};

CellMetrics evaluate_against_truth(const config::ExperimentConfig& cfg, const chain::ReturnTable& estimate,
                                   std::uint64_t seed) {
    const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(cfg.env.n_states);
    const chain::ReturnTable truth = chain::true_return_table(cfg.env, target);
    const auto w = metrics::WeightTable::uniform(cfg.env.n_states); // the true b_mu
    CellMetrics out;
    if (cfg.metric_e_bar) out.e_bar = metrics::expected_energy(estimate, truth, w);
    if (cfg.metric_w1_bar) out.w1_bar = metrics::expected_w1(estimate, truth, w);
    if (cfg.metric_w1_marginal)
        out.w1_marginal = metrics::marginal_w1(estimate, truth, w, cfg.marginal_n,
                                               rng::Stream(seed).child(0x3a6).next_u64());
    return out;
}

} // namespace

DetailRow run_cell(const config::ExperimentConfig& cfg, std::size_t n, std::size_t rep) {
    DetailRow row;
    row.scenario = cfg.scenario;
    row.estimator = cfg.estimator;
    row.n = n;
    row.rep = rep;
    row.seed = rng::cell_seed(cfg.master_seed, n, rep);

    const auto start = std::chrono::steady_clock::now();
    try {
        const chain::TabularPolicy behavior = chain::TabularPolicy::uniform(cfg.env.n_states);
        const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(cfg.env.n_states);
        const auto dataset = chain::generate_dataset(cfg.env, behavior, n, row.seed);
        const std::uint64_t est_seed = rng::Stream(row.seed).child(0xe57).next_u64();
        const std::size_t big_m = cfg.est_M == 0 ? n : cfg.est_M;

        chain::ReturnTable estimate = chain::GaussianTable(cfg.env.n_states);
        if (cfg.estimator == "ebrm_single") {
            auto res = estimators::ebrm_single(dataset, cfg.model, target, cfg.env.gamma, cfg.opt);
            row.theta = res.theta;
            row.objective = res.objective_value;
            estimate = models::instantiate(cfg.model, res.theta);
        } else if (cfg.estimator == "ebrm_boot") {
            auto res = estimators::ebrm_multi_bootstrap(dataset, cfg.model, target, cfg.env.gamma,
                                                        cfg.est_m, big_m, est_seed, cfg.opt);
            row.theta = res.theta;
            row.objective = res.objective_value;
            estimate = models::instantiate(cfg.model, res.theta);
        } else if (cfg.estimator == "ebrm_split") {
            auto res = estimators::ebrm_multi_split(dataset, cfg.model, target, cfg.env.gamma,
                                                    cfg.est_m, big_m, est_seed, cfg.opt);
            row.theta = res.theta;
            row.objective = res.objective_value;
            estimate = models::instantiate(cfg.model, res.theta);
        } else if (cfg.estimator == "lepski") {
            auto sel = estimators::lepski_select(dataset, cfg.model, target, cfg.env.gamma,
                                                 cfg.lepski_grid, cfg.lepski_J, cfg.lepski_M, est_seed,
                                                 cfg.opt);
            auto res = estimators::ebrm_multi_bootstrap(dataset, cfg.model, target, cfg.env.gamma,
                                                        sel.selected_m, big_m,
                                                        rng::Stream(est_seed).child(0x11f).next_u64(),
                                                        cfg.opt);
            row.theta = res.theta;
            row.objective = res.objective_value;
            estimate = models::instantiate(cfg.model, res.theta);
        } else if (cfg.estimator == "qrtd") {
            auto table = estimators::qrtd_fit(dataset, cfg.qrtd_n_tau, cfg.qrtd_alpha0, cfg.qrtd_epochs,
                                              target, cfg.env.gamma, est_seed);
            estimate = table.to_particle_table();
        } else if (cfg.estimator == "fle") {
            auto res = estimators::fle_fit(dataset, cfg.model, target, cfg.env.gamma, cfg.fle, est_seed,
                                           cfg.opt);
            row.theta = res.theta;
            row.objective = res.objective_value;
            estimate = models::instantiate(cfg.model, res.theta);
        } else {
            throw std::runtime_error("unknown estimator: " + cfg.estimator);
        }

        const auto m = evaluate_against_truth(cfg, estimate, row.seed);
        row.e_bar = m.e_bar;
        row.w1_bar = m.w1_bar;
        row.w1_marginal = m.w1_marginal;
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    if (cfg.output_wall_ms) {
        const auto end = std::chrono::steady_clock::now();
        row.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
    }
    return row;
}

void write_detail_csv(const std::vector<DetailRow>& rows, std::ostream& os) {
    os << "scenario,estimator,N,rep,seed,theta0,theta1,theta2,theta3,objective,"
          "e_bar,w1_bar,w1_marginal,wall_ms,status\n";
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.estimator << ',' << r.n << ',' << r.rep << ',' << r.seed;
        for (std::size_t i = 0; i < 4; ++i)
            os << ',' << (i < r.theta.size() ? csv::format_double(r.theta[i]) : std::string{});
        os << ',' << opt_field(r.objective) << ',' << opt_field(r.e_bar) << ',' << opt_field(r.w1_bar)
           << ',' << opt_field(r.w1_marginal) << ',' << opt_field(r.wall_ms) << ',' << r.status << '\n';
    }
}

namespace {

struct Moments {
    std::size_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        ++count;
        sum += v;
        sum_sq += v * v;
    }
    [[nodiscard]] double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    [[nodiscard]] double sd() const {
        if (count < 2) return 0.0;
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
        return std::sqrt(std::max(0.0, var));
    }
};

} // namespace

void write_summary_csv(const std::vector<DetailRow>& rows, std::ostream& os) {
    struct Cell {
        Moments e_bar, w1_bar, w1_marginal;
        std::size_t failed = 0;
        std::size_t reps = 0;
    };
    std::map<std::size_t, Cell> by_n;
    std::string scenario = rows.empty() ? "" : rows.front().scenario;
    std::string estimator = rows.empty() ? "" : rows.front().estimator;
    for (const auto& r : rows) {
        auto& cell = by_n[r.n];
        ++cell.reps;
        if (r.status != "ok") {
            ++cell.failed;
            continue;
        }
        if (r.e_bar) cell.e_bar.add(*r.e_bar);
        if (r.w1_bar) cell.w1_bar.add(*r.w1_bar);
        if (r.w1_marginal) cell.w1_marginal.add(*r.w1_marginal);
    }
    os << "scenario,estimator,N,reps,failed,e_bar_mean,e_bar_sd,w1_bar_mean,w1_bar_sd,"
          "w1_marginal_mean,w1_marginal_sd\n";
    for (const auto& [n, cell] : by_n) {
        os << scenario << ',' << estimator << ',' << n << ',' << cell.reps << ',' << cell.failed;
        auto put = [&os](const Moments& m) {
            if (m.count == 0) {
                os << ",,";
            } else {
                os << ',' << csv::format_double(m.mean()) << ',' << csv::format_double(m.sd());
            }
        };
        put(cell.e_bar);
        put(cell.w1_bar);
        put(cell.w1_marginal);
        os << '\n';
    }
}

SweepResult run_sweep(const config::ExperimentConfig& cfg, unsigned jobs) {
    const std::size_t cells = cfg.sample_sizes.size() * cfg.replications;
    std::vector<DetailRow> rows(cells);
    parallel::parallel_for(cells, jobs, [&](std::size_t i) {
        const std::size_t n = cfg.sample_sizes[i / cfg.replications];
        const std::size_t rep = i % cfg.replications;
        rows[i] = run_cell(cfg, n, rep);
    });
    std::stable_sort(rows.begin(), rows.end(), [](const DetailRow& a, const DetailRow& b) {
        return a.n != b.n ? a.n < b.n : a.rep < b.rep;
    });

    std::filesystem::create_directories(cfg.output_dir);
    SweepResult out;
    out.rows = std::move(rows);
    out.detail_path = cfg.output_dir + "/detail.csv";
    out.summary_path = cfg.output_dir + "/summary.csv";
    {
        std::ofstream os(out.detail_path, std::ios::binary);
        write_detail_csv(out.rows, os);
    }
    {
        std::ofstream os(out.summary_path, std::ios::binary);
        write_summary_csv(out.rows, os);
    }
    return out;
}

std::vector<Table9Row> run_table9(const config::ExperimentConfig& cfg) {
    std::vector<Table9Row> out;
    const chain::TabularPolicy target = chain::TabularPolicy::deterministic_right(cfg.env.n_states);
    const auto w = metrics::WeightTable::uniform(cfg.env.n_states);
    for (const double gamma : {0.50, 0.99}) {
        chain::ChainConfig env = cfg.env;
        env.gamma = gamma;
        const auto truth = chain::true_return_table(env, target);
        const models::ModelSpec spec = models::LinearMisspec{gamma, env.n_states};
        auto best = metrics::best_approx(spec, truth, w, cfg.opt);
        out.push_back({gamma, best.theta, best.min_value});
    }

    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream os(cfg.output_dir + "/table9.csv", std::ios::binary);
    os << "gamma,beta_l,beta_r,beta_1,sigma2,min_e_bar\n";
    for (const auto& r : out) {
        os << csv::format_double(r.gamma);
        for (double v : r.theta) os << ',' << csv::format_double(v);
        os << ',' << csv::format_double(r.min_value) << '\n';
    }
    return out;
}

std::vector<RhoCurve> run_rho_demo(const config::ExperimentConfig& cfg) {
    const auto* spec = std::get_if<models::BivariateCorr>(&cfg.model);
    if (!spec) throw std::runtime_error("rho demo needs model.kind = bivariate");
    if (cfg.rho_grid_points < 50) throw std::runtime_error("rho demo needs at least 50 grid points");

    std::vector<double> grid;
    grid.reserve(cfg.rho_grid_points);
    // interior grid: rho = +-1 makes the covariance singular
    const double lo = -0.99, hi = 0.99;
    for (std::size_t i = 0; i < cfg.rho_grid_points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.rho_grid_points - 1));

    std::vector<RhoCurve> curves;
    for (const std::size_t m : cfg.rho_m_list) {
        RhoCurve curve;
        curve.m = m;
        curve.rho = grid;
        curve.value.resize(grid.size());
        // common-random-number seed across the whole grid
        for (std::size_t i = 0; i < grid.size(); ++i)
            curve.value[i] = metrics::population_multistep_objective_bivariate(
                grid[i], *spec, cfg.rho_true, cfg.rho_sigma0_sq, m, cfg.rho_mc_n, cfg.master_seed);
        const auto it = std::min_element(curve.value.begin(), curve.value.end());
        curve.argmin = grid[static_cast<std::size_t>(it - curve.value.begin())];
        curves.push_back(std::move(curve));
    }

    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream os(cfg.output_dir + "/rho_demo.csv", std::ios::binary);
        os << "m,rho,F_m\n";
        for (const auto& c : curves)
            for (std::size_t i = 0; i < c.rho.size(); ++i)
                os << c.m << ',' << csv::format_double(c.rho[i]) << ',' << csv::format_double(c.value[i])
                   << '\n';
    }
    {
        std::ofstream os(cfg.output_dir + "/rho_argmin.csv", std::ios::binary);
        os << "m,argmin_rho\n";
        for (const auto& c : curves) os << c.m << ',' << csv::format_double(c.argmin) << '\n';
    }
    return curves;
}

} // namespace ebrm::harness
