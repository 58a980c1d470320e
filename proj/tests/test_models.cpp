#include <doctest.h>

#include <cmath>

#include "ebrm/energy.hpp"
#include "ebrm/models.hpp"

using namespace ebrm;

TEST_CASE("chain realizable instantiation reproduces the truth") {
    chain::ChainConfig cfg;
    const auto target = chain::TabularPolicy::deterministic_right(30);
    const auto truth = chain::true_return_table(cfg, target);

    const models::ModelSpec spec = models::ChainRealizable{0.99, 30, true, 20.0};
    const auto table = models::instantiate_gaussian(spec, {100.0, 0.9, 20.0});
    for (std::size_t c = 0; c < truth.cells.size(); ++c)
        CHECK(energy::energy_gg(truth.cells[c], table.cells[c]) <= 1e-12);

    // known-variance mode carries the pinned variance
    const models::ModelSpec fixed = models::ChainRealizable{0.99, 30, false, 20.0};
    const auto table2 = models::instantiate_gaussian(fixed, {100.0, 0.9});
    for (std::size_t c = 0; c < truth.cells.size(); ++c)
        CHECK(energy::energy_gg(truth.cells[c], table2.cells[c]) <= 1e-12);
}

TEST_CASE("linear model shape") {
    const models::ModelSpec spec = models::LinearMisspec{0.5, 30};
    const auto table = models::instantiate_gaussian(spec, {10.0, 20.0, -0.5, 3.0});
    for (int i = 1; i <= 30; ++i) {
        CHECK(table.cell(i, -1).mean == doctest::Approx(10.0 - 0.5 * i));
        CHECK(table.cell(i, +1).mean == doctest::Approx(20.0 - 0.5 * i));
        CHECK(table.cell(i, -1).var == doctest::Approx(3.0 / (1.0 - 0.25)));
    }

    // the slope boundary beta_1 = 0 is a valid model point
    const auto flat = models::instantiate_gaussian(spec, {10.0, 20.0, 0.0, 3.0});
    for (int i = 1; i <= 30; ++i) CHECK(flat.cell(i, -1).mean == 10.0);
    // but it has no unconstrained preimage
    CHECK_THROWS_AS((void)models::to_unconstrained(spec, {10.0, 20.0, 0.0, 3.0}), std::invalid_argument);
}

TEST_CASE("bivariate model") {
    const models::ModelSpec spec = models::BivariateCorr{0.99, 30, 10.0};
    const auto table = models::instantiate(spec, {0.5});
    const auto& biv = std::get<chain::BivariateTable>(table);
    const double scale = 10.0 / (1.0 - 0.99 * 0.99);
    for (const auto& cell : biv.cells) {
        CHECK(cell.sigma2 == doctest::Approx(scale));
        CHECK(cell.rho == 0.5);
    }
    CHECK_THROWS_AS((void)models::instantiate(spec, {1.0}), std::invalid_argument);
}

TEST_CASE("constraint checks") {
    const models::ModelSpec chain_spec = models::ChainRealizable{0.99, 30, true, 20.0};
    CHECK_THROWS_AS((void)models::instantiate_gaussian(chain_spec, {100.0, 1.0, 20.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)models::instantiate_gaussian(chain_spec, {100.0, 0.9, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)models::instantiate_gaussian(chain_spec, {100.0, 0.9}), std::invalid_argument);

    const models::ModelSpec lin = models::LinearMisspec{0.99, 30};
    CHECK_THROWS_AS((void)models::instantiate_gaussian(lin, {1.0, 1.0, 0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)models::instantiate_gaussian(lin, {1.0, 1.0, -0.5, -1.0}), std::invalid_argument);
}

TEST_CASE("unconstrained transform round trips") {
    const models::ModelSpec chain_spec = models::ChainRealizable{0.99, 30, true, 20.0};
    const models::ParamVector theta{100.0, 0.9, 20.0};
    const auto x = models::to_unconstrained(chain_spec, theta);
    const auto back = models::from_unconstrained(chain_spec, x);
    for (std::size_t i = 0; i < theta.size(); ++i) CHECK(std::abs(back[i] - theta[i]) < 1e-10);

    // zero coordinates map to the interior defaults
    const auto interior = models::from_unconstrained(chain_spec, {0.0, 0.0, 0.0});
    CHECK(interior[0] == 0.0);
    CHECK(interior[1] == doctest::Approx(0.5));
    CHECK(interior[2] == doctest::Approx(1.0));

    const models::ModelSpec lin = models::LinearMisspec{0.5, 30};
    const models::ParamVector lt{126.216, 116.614, -4.571, 203.099};
    const auto lx = models::to_unconstrained(lin, lt);
    const auto lback = models::from_unconstrained(lin, lx);
    for (std::size_t i = 0; i < lt.size(); ++i) CHECK(std::abs(lback[i] - lt[i]) < 1e-10);
    const auto linterior = models::from_unconstrained(lin, {0.0, 0.0, 0.0, 0.0});
    CHECK(linterior[2] == doctest::Approx(-1.0));
    CHECK(linterior[3] == doctest::Approx(1.0));

    const models::ModelSpec biv = models::BivariateCorr{0.99, 30, 10.0};
    CHECK(models::from_unconstrained(biv, {0.0})[0] == doctest::Approx(0.0));
    for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.776}) {
        const auto rx = models::to_unconstrained(biv, {rho});
        CHECK(std::abs(models::from_unconstrained(biv, rx)[0] - rho) < 1e-10);
    }

    // variances always strictly positive after from_unconstrained
    for (double v : {-30.0, -5.0, 0.0, 5.0}) {
        const auto t = models::from_unconstrained(chain_spec, {1.0, 0.0, v});
        CHECK(t[2] > 0.0);
    }

    // boundary values are rejected on the way in
    CHECK_THROWS_AS((void)models::to_unconstrained(chain_spec, {1.0, 0.9, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)models::to_unconstrained(biv, {1.0}), std::invalid_argument);
}
