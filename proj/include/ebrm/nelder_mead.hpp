#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace ebrm::optimize {

struct OptimizerConfig {
    int max_iters = 2000;
    double ftol = 1e-9; // relative spread of simplex values
    double xtol = 1e-8; // relative simplex extent
    int restarts = 3;
    std::vector<std::vector<double>> init; // extra starting points (unconstrained)
    std::uint64_t jitter_seed = 0x0eb2a11c5ULL;
};

struct OptimResult {
    std::vector<double> x;
    double fx = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    int winner = 0; // index of the start that produced the minimum
};

using Objective = std::function<double(const std::vector<double>&)>;

/// One Nelder-Mead run (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5) with initial edge max(0.05 |x0_i|, 0.1).
OptimResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                        const OptimizerConfig& cfg);

/// Multi-start driver: runs nelder_mead from every point in `starts`,
/// then polishes the best with `cfg.restarts - 1` jittered restarts.
/// Ties break toward the lowest start index.
OptimResult minimize_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                                const OptimizerConfig& cfg);

} // namespace ebrm::optimize
