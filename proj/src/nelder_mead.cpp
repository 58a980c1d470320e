#include "ebrm/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ebrm/rng.hpp"

namespace ebrm::optimize {

OptimResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                        const OptimizerConfig& cfg) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
    if (cfg.max_iters < 1 || !(cfg.ftol > 0.0) || !(cfg.xtol > 0.0))
        throw std::invalid_argument("nelder_mead: bad optimizer config");

    OptimResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return f(x);
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> fvals;
    simplex.reserve(n + 1);
    simplex.push_back(x0);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = x0;
        p[i] += std::max(0.05 * std::abs(x0[i]), 0.1);
        simplex.push_back(std::move(p));
    }
    for (const auto& p : simplex) fvals.push_back(eval(p));
    if (!std::isfinite(fvals.front()))
        throw std::invalid_argument("nelder_mead: objective non-finite at start point");

    std::vector<std::size_t> order(n + 1);
    auto sort_order = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return fvals[i] < fvals[j]; });
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        sort_order();
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        const double spread = fvals[worst] - fvals[best];
        if (spread <= cfg.ftol * (std::abs(fvals[best]) + cfg.ftol)) {
            double extent = 0.0;
            for (std::size_t i = 0; i <= n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    extent = std::max(extent, std::abs(simplex[i][k] - simplex[best][k]));
            double scale = 1.0;
            for (double v : simplex[best]) scale = std::max(scale, std::abs(v));
            if (extent <= cfg.xtol * scale) {
                res.converged = true;
                break;
            }
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        const double fr = eval(xr);

        if (fr < fvals[best]) {
            for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fvals[worst] = fe;
            } else {
                simplex[worst] = xr;
                fvals[worst] = fr;
            }
            continue;
        }
        if (fr < fvals[second_worst]) {
            simplex[worst] = xr;
            fvals[worst] = fr;
            continue;
        }

        const bool outside = fr < fvals[worst];
        if (outside) {
            for (std::size_t k = 0; k < n; ++k) xc[k] = centroid[k] + 0.5 * (xr[k] - centroid[k]);
        } else {
            for (std::size_t k = 0; k < n; ++k) xc[k] = centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]);
        }
        const double fc = eval(xc);
        if (fc < std::min(fr, fvals[worst])) {
            simplex[worst] = xc;
            fvals[worst] = fc;
            continue;
        }

        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < n; ++k)
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            fvals[i] = eval(simplex[i]);
        }
    }

    sort_order();
    res.x = simplex[order.front()];
    res.fx = fvals[order.front()];
    return res;
}

OptimResult minimize_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                                const OptimizerConfig& cfg) {
    if (starts.empty()) throw std::invalid_argument("minimize_multistart: no start points");

    OptimResult best;
    std::size_t total_evals = 0;
    bool have_best = false;
    int winner = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        OptimResult r = nelder_mead(f, starts[i], cfg);
        total_evals += r.evaluations;
        if (!have_best || r.fx < best.fx) {
            best = std::move(r);
            winner = static_cast<int>(i);
            have_best = true;
        }
    }

    // jittered restarts around the incumbent, widening with the restart
    // index so later restarts can hop between basins
    rng::Stream jitter(cfg.jitter_seed);
    for (int k = 1; k < cfg.restarts; ++k) {
        rng::Stream rs = jitter.child(static_cast<std::uint64_t>(k));
        std::vector<double> x = best.x;
        const double amplitude = 0.25 * static_cast<double>(k);
        for (double& v : x) v += rs.normal() * amplitude * (1.0 + std::abs(v));
        OptimResult r = nelder_mead(f, x, cfg);
        total_evals += r.evaluations;
        if (r.fx < best.fx) {
            best = std::move(r);
            winner = static_cast<int>(starts.size()) + k - 1;
        }
    }

    best.evaluations = total_evals;
    best.winner = winner;
    return best;
}

} // namespace ebrm::optimize
