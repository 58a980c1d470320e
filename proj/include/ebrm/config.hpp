#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ebrm/chain.hpp"
#include "ebrm/estimators.hpp"
#include "ebrm/models.hpp"
#include "ebrm/nelder_mead.hpp"

namespace ebrm::config {

/// Line-oriented `key = value` store with dotted section keys. Lines
/// starting with '#' and blank lines are skipped.
class KeyValues {
public:
    static KeyValues from_file(const std::string& path);
    static KeyValues from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    /// Parse a single "key=value" assignment (the --set form).
    void set_assignment(const std::string& assignment);

    [[nodiscard]] bool has(const std::string& key) const { return kv_.count(key) > 0; }
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<std::size_t> get_size_list(const std::string& key,
                                                         std::vector<std::size_t> fallback) const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

struct ExperimentConfig {
    std::string scenario = "custom";
    chain::ChainConfig env;
    models::ModelSpec model = models::ChainRealizable{};

    std::string estimator = "ebrm_single"; // ebrm_single | ebrm_boot | ebrm_split | lepski | qrtd | fle
    std::size_t est_m = 1;
    std::size_t est_M = 0; // 0 means M = N
    std::vector<std::size_t> lepski_grid{1, 2, 4};
    std::size_t lepski_J = 20;
    std::size_t lepski_M = 2000;
    double qrtd_alpha0 = 5.0;
    std::size_t qrtd_epochs = 20;
    std::size_t qrtd_n_tau = 99;
    estimators::FlePartition fle;

    std::vector<std::size_t> sample_sizes{5000};
    std::size_t replications = 1;
    std::uint64_t master_seed = 1;

    bool metric_e_bar = true;
    bool metric_w1_bar = true;
    bool metric_w1_marginal = true;
    std::size_t marginal_n = 100000;
    bool output_wall_ms = false; // keeps CSV bytes reproducible by default
    std::string output_dir = ".";

    // rho-demo controls
    std::size_t rho_grid_points = 99;
    std::vector<std::size_t> rho_m_list{1, 5, 20, 100};
    std::size_t rho_mc_n = 20000;
    double rho_true = 0.5;
    double rho_sigma0_sq = 4.0;

    optimize::OptimizerConfig opt;
};

/// Scenario presets mirroring the tabular simulation settings; "custom"
/// returns the defaults.
ExperimentConfig preset(const std::string& scenario);

/// Preset selection plus key overrides; `kv` may carry `scenario`.
ExperimentConfig build(const KeyValues& kv);

/// Default output directory: $EBRM_OUT_DIR when set, else ".".
std::string default_output_dir();

} // namespace ebrm::config
