#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ebrm/nelder_mead.hpp"

using namespace ebrm;

TEST_CASE("convex quadratic") {
    auto f = [](const std::vector<double>& x) {
        double v = 0.0;
        for (double xi : x) v += xi * xi;
        return v;
    };
    const auto r = optimize::nelder_mead(f, {3.0, -2.0}, {});
    CHECK(r.converged);
    CHECK(std::abs(r.x[0]) < 1e-6);
    CHECK(std::abs(r.x[1]) < 1e-6);
}

TEST_CASE("restarts escape a local basin") {
    // double well with a tilt: global minimum on the negative side
    auto f = [](const std::vector<double>& x) {
        const double v = x[0] * x[0] - 1.0;
        return v * v + 0.3 * x[0];
    };
    // grid-search oracle for the global minimizer
    double best_x = 0.0, best_f = std::numeric_limits<double>::infinity();
    for (double x = -2.0; x <= 2.0; x += 1e-5) {
        const double fx = f({x});
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    REQUIRE(best_x < 0.0);

    optimize::OptimizerConfig cfg;
    cfg.restarts = 8;
    const auto r = optimize::minimize_multistart(f, {{0.9}}, cfg); // near the local minimum
    CHECK(std::abs(r.x[0] - best_x) < 1e-4);
    CHECK(r.fx <= best_f + 1e-8);
}

TEST_CASE("iteration budget reports non-convergence") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    optimize::OptimizerConfig cfg;
    cfg.max_iters = 1;
    const auto r = optimize::nelder_mead(f, {50.0}, cfg);
    CHECK_FALSE(r.converged);
}

TEST_CASE("invalid inputs") {
    auto f = [](const std::vector<double>&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(optimize::nelder_mead(f, {1.0}, {}), std::invalid_argument);

    auto ok = [](const std::vector<double>& x) { return x[0] * x[0]; };
    optimize::OptimizerConfig bad;
    bad.ftol = 0.0;
    CHECK_THROWS_AS(optimize::nelder_mead(ok, {1.0}, bad), std::invalid_argument);
    CHECK_THROWS_AS(optimize::nelder_mead(ok, {}, {}), std::invalid_argument);
}

TEST_CASE("multistart is deterministic") {
    auto f = [](const std::vector<double>& x) {
        return std::sin(3.0 * x[0]) + 0.1 * x[0] * x[0] + std::cos(2.0 * x[1]) + 0.05 * x[1] * x[1];
    };
    optimize::OptimizerConfig cfg;
    cfg.restarts = 5;
    const auto a = optimize::minimize_multistart(f, {{2.0, -1.0}, {-2.0, 1.0}}, cfg);
    const auto b = optimize::minimize_multistart(f, {{2.0, -1.0}, {-2.0, 1.0}}, cfg);
    CHECK(a.x == b.x);
    CHECK(a.fx == b.fx);
    CHECK(a.winner == b.winner);
}
