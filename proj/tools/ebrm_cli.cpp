#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ebrm/chain.hpp"
#include "ebrm/config.hpp"
#include "ebrm/csv.hpp"
#include "ebrm/estimators.hpp"
#include "ebrm/harness.hpp"
#include "ebrm/selfcheck.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned jobs = 1;
};

ebrm::config::ExperimentConfig load_config(const GlobalOpts& g) {
    ebrm::config::KeyValues kv;
    if (!g.config_path.empty()) kv = ebrm::config::KeyValues::from_file(g.config_path);
    if (!g.preset.empty()) kv.set("scenario", g.preset);
    for (const auto& a : g.sets) kv.set_assignment(a);
    auto cfg = ebrm::config::build(kv);
    if (g.seed_given) cfg.master_seed = g.seed;
    if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
    return cfg;
}

void print_row(const ebrm::harness::DetailRow& row) {
    std::cout << "N=" << row.n << " rep=" << row.rep << " status=" << row.status;
    if (!row.theta.empty()) {
        std::cout << " theta=(";
        for (std::size_t i = 0; i < row.theta.size(); ++i)
            std::cout << (i ? "," : "") << ebrm::csv::format_double(row.theta[i]);
        std::cout << ")";
    }
    if (row.objective) std::cout << " objective=" << ebrm::csv::format_double(*row.objective);
    if (row.e_bar) std::cout << " e_bar=" << ebrm::csv::format_double(*row.e_bar);
    if (row.w1_bar) std::cout << " w1_bar=" << ebrm::csv::format_double(*row.w1_bar);
    if (row.w1_marginal) std::cout << " w1_marginal=" << ebrm::csv::format_double(*row.w1_marginal);
    std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributional off-policy evaluation on tabular chains"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "key = value config file");
    app.add_option("--preset", g.preset,
                   "scenario preset (realizable_var20, realizable_var5000, nonrealizable_g50, "
                   "nonrealizable_g99, rho_demo)");
    app.add_option("--set", g.sets, "config override key=value (repeatable)")->take_all();
    app.add_option("--out", g.out_dir, "output directory (default $EBRM_OUT_DIR or .)");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed override");
    app.add_option("--jobs", g.jobs, "worker threads for sweeps")->default_val(1u);

    std::size_t gen_n = 5000;
    auto* gen = app.add_subcommand("gen-data", "generate an offline dataset CSV");
    gen->add_option("--n", gen_n, "number of records")->default_val(std::size_t{5000});

    auto* run = app.add_subcommand("run", "run one estimation cell (first N, rep 0)");
    auto* sweep = app.add_subcommand("sweep", "run the full replication sweep");
    auto* table9 = app.add_subcommand("table9", "best linear approximations for gamma 0.50 / 0.99");
    auto* rho = app.add_subcommand("rho-demo", "population F_m(rho) curves and argmin trajectory");
    std::size_t lepski_runs = 1;
    auto* lepski = app.add_subcommand("lepski", "Lepski step-level selection on fresh datasets");
    lepski->add_option("--runs", lepski_runs, "number of selection runs")->default_val(std::size_t{1});
    auto* selfcheck = app.add_subcommand("selfcheck", "run the built-in invariant checks");

    CLI11_PARSE(app, argc, argv);
    g.seed_given = seed_opt->count() > 0;

    try {
        if (selfcheck->parsed()) {
            const auto results = ebrm::selfcheck::run_all();
            return ebrm::selfcheck::report(results, std::cout) ? 0 : 1;
        }

        auto cfg = load_config(g);

        if (gen->parsed()) {
            const auto behavior = ebrm::chain::TabularPolicy::uniform(cfg.env.n_states);
            const auto ds = ebrm::chain::generate_dataset(cfg.env, behavior, gen_n, cfg.master_seed);
            std::filesystem::create_directories(cfg.output_dir);
            const std::string path = cfg.output_dir + "/dataset.csv";
            ebrm::chain::write_csv_file(ds, path);
            std::cout << "wrote " << path << " (" << ds.size() << " records)\n";
            return 0;
        }
        if (run->parsed()) {
            const auto row = ebrm::harness::run_cell(cfg, cfg.sample_sizes.front(), 0);
            print_row(row);
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream os(cfg.output_dir + "/detail.csv", std::ios::binary);
            ebrm::harness::write_detail_csv({row}, os);
            return row.status == "ok" ? 0 : 1;
        }
        if (sweep->parsed()) {
            const auto result = ebrm::harness::run_sweep(cfg, g.jobs);
            std::size_t failed = 0;
            for (const auto& r : result.rows)
                if (r.status != "ok") ++failed;
            std::cout << "wrote " << result.detail_path << " and " << result.summary_path << " ("
                      << result.rows.size() << " cells, " << failed << " failed)\n";
            return 0;
        }
        if (table9->parsed()) {
            const auto rows = ebrm::harness::run_table9(cfg);
            for (const auto& r : rows) {
                std::cout << "gamma=" << r.gamma << " theta=(";
                for (std::size_t i = 0; i < r.theta.size(); ++i)
                    std::cout << (i ? "," : "") << ebrm::csv::format_double(r.theta[i]);
                std::cout << ") min_e_bar=" << ebrm::csv::format_double(r.min_value) << '\n';
            }
            std::cout << "wrote " << cfg.output_dir << "/table9.csv\n";
            return 0;
        }
        if (rho->parsed()) {
            if (!std::holds_alternative<ebrm::models::BivariateCorr>(cfg.model))
                cfg = [&] { auto c = cfg; c.model = ebrm::models::BivariateCorr{cfg.env.gamma, cfg.env.n_states, 10.0}; return c; }();
            const auto curves = ebrm::harness::run_rho_demo(cfg);
            for (const auto& c : curves)
                std::cout << "m=" << c.m << " argmin_rho=" << ebrm::csv::format_double(c.argmin) << '\n';
            std::cout << "wrote " << cfg.output_dir << "/rho_demo.csv and rho_argmin.csv\n";
            return 0;
        }
        if (lepski->parsed()) {
            const auto behavior = ebrm::chain::TabularPolicy::uniform(cfg.env.n_states);
            const auto target = ebrm::chain::TabularPolicy::deterministic_right(cfg.env.n_states);
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream os(cfg.output_dir + "/lepski.csv", std::ios::binary);
            os << "run,seed,selected_m,estimations\n";
            for (std::size_t run_i = 0; run_i < lepski_runs; ++run_i) {
                const std::uint64_t seed =
                    ebrm::rng::cell_seed(cfg.master_seed, cfg.sample_sizes.front(), run_i);
                const auto ds = ebrm::chain::generate_dataset(cfg.env, behavior,
                                                              cfg.sample_sizes.front(), seed);
                const auto sel = ebrm::estimators::lepski_select(
                    ds, cfg.model, target, cfg.env.gamma, cfg.lepski_grid, cfg.lepski_J,
                    cfg.lepski_M, ebrm::rng::Stream(seed).child(0x1e9).next_u64(), cfg.opt);
                os << run_i << ',' << seed << ',' << sel.selected_m << ',' << sel.estimations << '\n';
                std::cout << "run " << run_i << ": selected m = " << sel.selected_m << '\n';
            }
            std::cout << "wrote " << cfg.output_dir << "/lepski.csv\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
