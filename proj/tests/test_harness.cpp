#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ebrm/config.hpp"
#include "ebrm/harness.hpp"
#include "ebrm/selfcheck.hpp"

using namespace ebrm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

config::ExperimentConfig tiny_sweep_config(const std::string& out_dir) {
    auto cfg = config::preset("realizable_var20");
    cfg.sample_sizes = {200, 400};
    cfg.replications = 3;
    cfg.master_seed = 12;
    cfg.opt.max_iters = 300;
    cfg.opt.restarts = 1;
    cfg.marginal_n = 20000;
    cfg.output_dir = out_dir;
    return cfg;
}

} // namespace

TEST_CASE("key-value parsing") {
    const auto kv = config::KeyValues::from_string(
        "# comment\n"
        "env.gamma = 0.5\n"
        "\n"
        "sweep.sample_sizes = 100, 200,300\n"
        "metrics.w1_marginal = false\n"
        "scenario = nonrealizable_g50\n");
    CHECK(kv.get_double("env.gamma", 0.99) == 0.5);
    CHECK(kv.get_size_list("sweep.sample_sizes", {}) == std::vector<std::size_t>{100, 200, 300});
    CHECK_FALSE(kv.get_bool("metrics.w1_marginal", true));
    CHECK(kv.get_string("missing", "x") == "x");

    CHECK_THROWS(config::KeyValues::from_string("not an assignment\n"));

    config::KeyValues overridden = kv;
    overridden.set_assignment("env.gamma=0.75");
    CHECK(overridden.get_double("env.gamma", 0.0) == 0.75);
    CHECK_THROWS(overridden.set_assignment("garbage"));
}

TEST_CASE("presets populate the documented scenarios") {
    const auto r20 = config::preset("realizable_var20");
    CHECK(r20.env.sigma0_sq == 20.0);
    CHECK(r20.env.gamma == 0.99);
    CHECK(std::holds_alternative<models::ChainRealizable>(r20.model));
    CHECK(r20.estimator == "ebrm_single");

    const auto n99 = config::preset("nonrealizable_g99");
    CHECK(n99.env.gamma == 0.99);
    CHECK(std::holds_alternative<models::LinearMisspec>(n99.model));
    CHECK(n99.est_m == 240);
    CHECK(n99.lepski_grid == std::vector<std::size_t>{1, 60, 120, 240});

    CHECK_THROWS(config::preset("bogus"));

    // build applies overrides on top of the preset
    config::KeyValues kv;
    kv.set("scenario", "realizable_var20");
    kv.set("env.sigma0_sq", "5000");
    kv.set("sweep.replications", "2");
    const auto cfg = config::build(kv);
    CHECK(cfg.env.sigma0_sq == 5000.0);
    CHECK(cfg.replications == 2);
}

TEST_CASE("cell seeds are injective over a sweep") {
    std::set<std::uint64_t> seen;
    for (std::size_t n : {500, 1000, 2000, 5000, 10000, 20000})
        for (std::size_t rep = 0; rep < 100; ++rep) seen.insert(rng::cell_seed(77, n, rep));
    CHECK(seen.size() == 600);
}

TEST_CASE("sweep output is deterministic and parallel-independent") {
    const std::string dir1 = "test_out/sweep_j1";
    const std::string dir2 = "test_out/sweep_j2";
    auto cfg = tiny_sweep_config(dir1);
    const auto r1 = harness::run_sweep(cfg, 1);
    cfg.output_dir = dir2;
    const auto r2 = harness::run_sweep(cfg, 2);

    CHECK(slurp(r1.detail_path) == slurp(r2.detail_path));
    CHECK(slurp(r1.summary_path) == slurp(r2.summary_path));

    // rerunning with the same master seed reproduces the bytes
    cfg.output_dir = dir1;
    const auto r3 = harness::run_sweep(cfg, 2);
    CHECK(slurp(r3.detail_path) == slurp(r2.detail_path));

    // rows arrive sorted by (N, rep) and all succeeded
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].status == "ok");
        if (i > 0) {
            const bool ordered = r1.rows[i - 1].n < r1.rows[i].n ||
                                 (r1.rows[i - 1].n == r1.rows[i].n && r1.rows[i - 1].rep < r1.rows[i].rep);
            CHECK(ordered);
        }
    }
}

TEST_CASE("summary statistics recompute from the detail rows") {
    const auto cfg = tiny_sweep_config("test_out/sweep_summary");
    const auto res = harness::run_sweep(cfg, 2);

    for (std::size_t n : cfg.sample_sizes) {
        double mean = 0.0, sum_sq = 0.0;
        std::size_t count = 0;
        for (const auto& row : res.rows) {
            if (row.n != n || !row.e_bar) continue;
            mean += *row.e_bar;
            sum_sq += *row.e_bar * *row.e_bar;
            ++count;
        }
        REQUIRE(count == cfg.replications);
        mean /= static_cast<double>(count);
        const double sd =
            std::sqrt((sum_sq - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1));

        // parse the summary line for this N
        std::ifstream is(res.summary_path);
        std::string line;
        std::getline(is, line); // header
        bool found = false;
        while (std::getline(is, line)) {
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (std::stoull(fields[2]) != n) continue;
            found = true;
            CHECK(std::abs(std::stod(fields[5]) - mean) <= 1e-9);
            CHECK(std::abs(std::stod(fields[6]) - sd) <= 1e-9);
        }
        CHECK(found);
    }
}

TEST_CASE("estimator failures are recorded per row") {
    auto cfg = tiny_sweep_config("test_out/sweep_fail");
    cfg.estimator = "fle";
    cfg.fle.T_tilde = 500; // exceeds N = 200: the fit must fail, the sweep must not
    cfg.sample_sizes = {200};
    cfg.replications = 2;
    cfg.metric_w1_marginal = false;
    const auto res = harness::run_sweep(cfg, 1);
    REQUIRE(res.rows.size() == 2);
    for (const auto& row : res.rows) CHECK(row.status.find("error") == 0);
}

TEST_CASE("wall time stays out of the bytes unless requested") {
    auto cfg = tiny_sweep_config("test_out/sweep_wall");
    cfg.sample_sizes = {200};
    cfg.replications = 1;
    cfg.output_wall_ms = true;
    const auto res = harness::run_sweep(cfg, 1);
    CHECK(res.rows[0].wall_ms.has_value());

    cfg.output_wall_ms = false;
    const auto res2 = harness::run_sweep(cfg, 1);
    CHECK_FALSE(res2.rows[0].wall_ms.has_value());
}

TEST_CASE("selfcheck passes on a clean build") {
    const auto results = selfcheck::run_all();
    std::ostringstream os;
    const bool ok = selfcheck::report(results, os);
    if (!ok) MESSAGE(os.str());
    CHECK(ok);
    CHECK(os.str().find("pass") != std::string::npos);
    // the report lists name, tolerance, and observed value per check
    CHECK(os.str().find("tolerance") != std::string::npos);
    CHECK(os.str().find("observed") != std::string::npos);
}
