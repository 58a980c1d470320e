#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ebrm/config.hpp"

namespace ebrm::harness {

struct DetailRow {
    std::string scenario;
    std::string estimator;
    std::size_t n = 0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    std::vector<double> theta;            // up to 4 components
    std::optional<double> objective;
    std::optional<double> e_bar;
    std::optional<double> w1_bar;
    std::optional<double> w1_marginal;
    std::optional<double> wall_ms;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<DetailRow> rows; // sorted by (n, rep)
    std::string detail_path;
    std::string summary_path;
};

/// Run the configured estimator over every (N, replication) cell, compute
/// the requested inaccuracies against the analytic truth, and write
/// detail.csv / summary.csv under cfg.output_dir. Cells run on `jobs`
/// workers; output bytes do not depend on the parallelism degree.
SweepResult run_sweep(const config::ExperimentConfig& cfg, unsigned jobs);

/// Execute one sweep cell (used by the `run` subcommand and tests).
DetailRow run_cell(const config::ExperimentConfig& cfg, std::size_t n, std::size_t rep);

/// Best-approximation table for the misspecified linear family at
/// gamma in {0.50, 0.99}; writes table9.csv.
struct Table9Row {
    double gamma;
    models::ParamVector theta;
    double min_value;
};
std::vector<Table9Row> run_table9(const config::ExperimentConfig& cfg);

/// Population F_m(rho) curves over a rho grid with common-random-number
/// seeding, plus the per-m argmin; writes rho_demo.csv and rho_argmin.csv.
struct RhoCurve {
    std::size_t m;
    std::vector<double> rho;
    std::vector<double> value;
    double argmin;
};
std::vector<RhoCurve> run_rho_demo(const config::ExperimentConfig& cfg);

void write_detail_csv(const std::vector<DetailRow>& rows, std::ostream& os);
void write_summary_csv(const std::vector<DetailRow>& rows, std::ostream& os);

} // namespace ebrm::harness
