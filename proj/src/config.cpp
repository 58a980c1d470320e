#include "ebrm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ebrm::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValues KeyValues::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_string(ss.str());
}

KeyValues KeyValues::from_string(const std::string& text) {
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_no) + " is not key = value");
        kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return kv;
}

void KeyValues::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects key=value, got: " + assignment);
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stod(it->second);
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stoll(it->second);
}

std::uint64_t KeyValues::get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stoull(it->second);
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

std::vector<std::size_t> KeyValues::get_size_list(const std::string& key,
                                                  std::vector<std::size_t> fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::size_t> out;
    std::stringstream ss(it->second);
    std::string field;
    while (std::getline(ss, field, ',')) {
        const std::string t = trim(field);
        if (!t.empty()) out.push_back(std::stoull(t));
    }
    if (out.empty()) throw std::runtime_error("config: empty list for " + key);
    return out;
}

ExperimentConfig preset(const std::string& scenario) {
    ExperimentConfig cfg;
    cfg.scenario = scenario;
    cfg.env = chain::ChainConfig{}; // A0 = 100, p0 = 0.9 throughout
    if (scenario == "custom") return cfg;
    if (scenario == "realizable_var20") {
        cfg.env.sigma0_sq = 20.0;
        cfg.env.gamma = 0.99;
        cfg.model = models::ChainRealizable{0.99, cfg.env.n_states, true, 20.0};
        cfg.estimator = "ebrm_single";
        cfg.sample_sizes = {500, 1000, 2000, 5000, 10000, 20000};
        cfg.replications = 20;
        cfg.qrtd_alpha0 = 5.0;
        return cfg;
    }
    if (scenario == "realizable_var5000") {
        cfg.env.sigma0_sq = 5000.0;
        cfg.env.gamma = 0.99;
        cfg.model = models::ChainRealizable{0.99, cfg.env.n_states, true, 5000.0};
        cfg.estimator = "ebrm_single";
        cfg.sample_sizes = {2000, 5000, 10000, 20000, 50000, 100000};
        cfg.replications = 20;
        cfg.qrtd_alpha0 = 2.0;
        return cfg;
    }
    if (scenario == "nonrealizable_g50") {
        cfg.env.sigma0_sq = 20.0;
        cfg.env.gamma = 0.50;
        cfg.model = models::LinearMisspec{0.50, cfg.env.n_states};
        cfg.estimator = "ebrm_boot";
        cfg.est_m = 1;
        cfg.sample_sizes = {2000, 3000, 5000, 10000};
        cfg.replications = 10;
        cfg.lepski_grid = {1, 2, 4};
        return cfg;
    }
    if (scenario == "nonrealizable_g99") {
        cfg.env.sigma0_sq = 20.0;
        cfg.env.gamma = 0.99;
        cfg.model = models::LinearMisspec{0.99, cfg.env.n_states};
        cfg.estimator = "ebrm_boot";
        cfg.est_m = 240;
        cfg.sample_sizes = {2000, 3000, 5000, 10000};
        cfg.replications = 10;
        cfg.lepski_grid = {1, 60, 120, 240};
        return cfg;
    }
    if (scenario == "rho_demo") {
        cfg.env.gamma = 0.99;
        cfg.model = models::BivariateCorr{0.99, cfg.env.n_states, 10.0};
        cfg.rho_true = 0.5;
        cfg.rho_sigma0_sq = 4.0;
        return cfg;
    }
    throw std::runtime_error("unknown scenario preset: " + scenario);
}

ExperimentConfig build(const KeyValues& kv) {
    ExperimentConfig cfg = preset(kv.get_string("scenario", "custom"));

    cfg.env.n_states = static_cast<int>(kv.get_int("env.n_states", cfg.env.n_states));
    cfg.env.A0 = kv.get_double("env.A0", cfg.env.A0);
    cfg.env.p0 = kv.get_double("env.p0", cfg.env.p0);
    cfg.env.sigma0_sq = kv.get_double("env.sigma0_sq", cfg.env.sigma0_sq);
    cfg.env.gamma = kv.get_double("env.gamma", cfg.env.gamma);
    cfg.env.validate();

    const std::string default_kind = std::holds_alternative<models::LinearMisspec>(cfg.model) ? "linear"
                                     : std::holds_alternative<models::BivariateCorr>(cfg.model)
                                         ? "bivariate"
                                         : "chain_realizable";
    const std::string kind = kv.get_string("model.kind", default_kind);
    const double model_gamma = kv.get_double("model.gamma", cfg.env.gamma);
    if (kind == "chain_realizable") {
        models::ChainRealizable m;
        if (const auto* prev = std::get_if<models::ChainRealizable>(&cfg.model)) m = *prev;
        m.gamma = model_gamma;
        m.n_states = cfg.env.n_states;
        m.estimate_variance = kv.get_bool("model.estimate_variance", m.estimate_variance);
        m.known_sigma0_sq = kv.get_double("model.known_sigma0_sq", cfg.env.sigma0_sq);
        cfg.model = m;
    } else if (kind == "linear") {
        cfg.model = models::LinearMisspec{model_gamma, cfg.env.n_states};
    } else if (kind == "bivariate") {
        models::BivariateCorr m;
        if (const auto* prev = std::get_if<models::BivariateCorr>(&cfg.model)) m = *prev;
        m.gamma = model_gamma;
        m.n_states = cfg.env.n_states;
        m.sigma1_sq = kv.get_double("model.sigma1_sq", m.sigma1_sq);
        cfg.model = m;
    } else {
        throw std::runtime_error("config: unknown model.kind " + kind);
    }

    cfg.estimator = kv.get_string("estimator.kind", cfg.estimator);
    cfg.est_m = kv.get_uint("estimator.m", cfg.est_m);
    cfg.est_M = kv.get_uint("estimator.M", cfg.est_M);
    cfg.lepski_grid = kv.get_size_list("lepski.grid", cfg.lepski_grid);
    cfg.lepski_J = kv.get_uint("lepski.J", cfg.lepski_J);
    cfg.lepski_M = kv.get_uint("lepski.M", cfg.lepski_M);
    cfg.qrtd_alpha0 = kv.get_double("qrtd.alpha0", cfg.qrtd_alpha0);
    cfg.qrtd_epochs = kv.get_uint("qrtd.epochs", cfg.qrtd_epochs);
    cfg.qrtd_n_tau = kv.get_uint("qrtd.n_tau", cfg.qrtd_n_tau);
    cfg.fle.l = kv.get_double("fle.l", cfg.fle.l);
    cfg.fle.N0 = kv.get_uint("fle.N0", cfg.fle.N0);
    cfg.fle.T0 = kv.get_uint("fle.T0", cfg.fle.T0);
    cfg.fle.T_tilde = kv.get_uint("fle.T_tilde", cfg.fle.T_tilde);

    cfg.sample_sizes = kv.get_size_list("sweep.sample_sizes", cfg.sample_sizes);
    if (!std::is_sorted(cfg.sample_sizes.begin(), cfg.sample_sizes.end()))
        throw std::runtime_error("config: sweep.sample_sizes must be ascending");
    cfg.replications = kv.get_uint("sweep.replications", cfg.replications);
    if (cfg.replications < 1) throw std::runtime_error("config: sweep.replications must be >= 1");
    cfg.master_seed = kv.get_uint("seed", cfg.master_seed);

    cfg.metric_e_bar = kv.get_bool("metrics.e_bar", cfg.metric_e_bar);
    cfg.metric_w1_bar = kv.get_bool("metrics.w1_bar", cfg.metric_w1_bar);
    cfg.metric_w1_marginal = kv.get_bool("metrics.w1_marginal", cfg.metric_w1_marginal);
    cfg.marginal_n = kv.get_uint("metrics.marginal_n", cfg.marginal_n);
    cfg.output_wall_ms = kv.get_bool("output.wall_ms", cfg.output_wall_ms);
    cfg.output_dir = kv.get_string("output.dir", default_output_dir());

    cfg.rho_grid_points = kv.get_uint("rho.grid_points", cfg.rho_grid_points);
    cfg.rho_m_list = kv.get_size_list("rho.m_list", cfg.rho_m_list);
    cfg.rho_mc_n = kv.get_uint("rho.mc_n", cfg.rho_mc_n);
    cfg.rho_true = kv.get_double("rho.true", cfg.rho_true);
    cfg.rho_sigma0_sq = kv.get_double("rho.sigma0_sq", cfg.rho_sigma0_sq);

    cfg.opt.max_iters = static_cast<int>(kv.get_int("opt.max_iters", cfg.opt.max_iters));
    cfg.opt.ftol = kv.get_double("opt.ftol", cfg.opt.ftol);
    cfg.opt.xtol = kv.get_double("opt.xtol", cfg.opt.xtol);
    cfg.opt.restarts = static_cast<int>(kv.get_int("opt.restarts", cfg.opt.restarts));
    return cfg;
}

std::string default_output_dir() {
    const char* env = std::getenv("EBRM_OUT_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

} // namespace ebrm::config
