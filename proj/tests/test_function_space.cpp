#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ergolab/error.hpp"
#include "ergolab/function_space.hpp"

using namespace ergolab;

namespace {

std::shared_ptr<const MeasureDensity> lebesgue(std::size_t n) {
    return MeasureDensity::from_cdf("lebesgue", QuadratureGrid::uniform(0.0, 1.0, n), [](double y) { return y; },
                                    [](double) { return 1.0; });
}

std::shared_ptr<const MeasureDensity> arcsine_law(std::size_t n) {
    return MeasureDensity::from_cdf(
        "arcsine", QuadratureGrid::arcsine(-1.0, 1.0, n),
        [](double y) { return 0.5 + std::asin(std::clamp(y, -1.0, 1.0)) / std::numbers::pi; },
        [](double y) { return 1.0 / (std::numbers::pi * std::sqrt(1.0 - y * y)); });
}

}  // namespace

TEST_CASE("uniform grid geometry") {
    const auto g = QuadratureGrid::uniform(0.0, 1.0, 8);
    CHECK(g->size() == 8);
    CHECK(g->nodes()[0] == doctest::Approx(1.0 / 16));
    CHECK(g->edges().size() == 9);
    double total = 0.0;
    for (double w : g->weights()) total += w;
    CHECK(total == doctest::Approx(1.0));
    CHECK(g->cell_of(0.0) == 0);
    CHECK(g->cell_of(1.0) == 7);
    CHECK(g->cell_of(0.3) == 2);
    CHECK(g->exact_degree() == 1);
}

TEST_CASE("arcsine grid is mirror symmetric") {
    const auto g = QuadratureGrid::arcsine(-1.0, 1.0, 64);
    const auto x = g->nodes();
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == -x[x.size() - 1 - i]);
    CHECK(g->exact_degree() == 127);
}

TEST_CASE("interpolation reproduces linear functions inside the node range") {
    const auto g = QuadratureGrid::uniform(0.0, 2.0, 50);
    std::vector<double> v;
    for (double x : g->nodes()) v.push_back(3.0 * x - 1.0);
    for (double y : {0.05, 0.5, 1.234, 1.9}) CHECK(g->interpolate(v, y) == doctest::Approx(3.0 * y - 1.0));
    // constant extrapolation past the outer nodes
    CHECK(g->interpolate(v, 0.0) == doctest::Approx(v.front()));
}

TEST_CASE("midpoint and Gauss-Chebyshev quadrature exactness") {
    const auto u = lebesgue(100);
    CHECK(integrate(GridFunction::sample(u, [](double y) { return 2.0 * y + 1.0; })) == doctest::Approx(2.0));

    const auto a = arcsine_law(16);
    // Moments of the arcsine law on [-1, 1]: E y^2 = 1/2, E y^4 = 3/8, E y^30 = C(30,15) / 2^30.
    CHECK(integrate(GridFunction::sample(a, [](double y) { return y * y; })) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(integrate(GridFunction::sample(a, [](double y) { return std::pow(y, 4); })) ==
          doctest::Approx(0.375).epsilon(1e-13));
    CHECK(integrate(GridFunction::sample(a, [](double y) { return std::pow(y, 30); })) ==
          doctest::Approx(155117520.0 / 1073741824.0).epsilon(1e-12));
}

TEST_CASE("measure validation") {
    const auto g = QuadratureGrid::uniform(0.0, 1.0, 4);
    CHECK_THROWS_AS(MeasureDensity("bad", g, {0.5, 0.5}, DensitySource::Numerical), Error);
    CHECK_THROWS_AS(MeasureDensity("bad", g, {0.5, 0.6, -0.1, 0.0}, DensitySource::Numerical), Error);
    CHECK_THROWS_AS(MeasureDensity("bad", g, {0.5, 0.5, 0.5, 0.5}, DensitySource::Numerical), Error);
    const auto m = MeasureDensity::from_masses("ok", g, {1.0, 1.0, 1.0, 1.0});
    CHECK(m->normalized());
    CHECK(m->values()[2] == doctest::Approx(1.0));
    CHECK(m->source() == DensitySource::Numerical);
}

TEST_CASE("norms, inner products and the interpolation inequality") {
    const auto m = lebesgue(1000);
    const auto f = GridFunction::sample(m, [](double y) { return std::cos(2.0 * std::numbers::pi * y); });
    CHECK(lp_norm(f, Norm::L2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(lp_norm(f, Norm::L1) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-5));
    CHECK(lp_norm(f, Norm::Linf) <= 1.0);
    CHECK(lp_norm(f, Norm::L2) <= std::sqrt(lp_norm(f, Norm::Linf) * lp_norm(f, Norm::L1)) + 1e-15);
    CHECK(inner_product(f, f) == doctest::Approx(0.5).epsilon(1e-6));

    const auto c = centered(GridFunction::sample(m, [](double y) { return y * y; }));
    CHECK(std::abs(integrate(c)) < 1e-15);
}

TEST_CASE("arithmetic requires compatible grids") {
    const auto f = GridFunction::constant(lebesgue(10), 1.0);
    const auto g = GridFunction::constant(lebesgue(20), 1.0);
    CHECK_THROWS_AS(f + g, Error);
    const auto h = f * 3.0 - f;
    CHECK(h[4] == doctest::Approx(2.0));
}

TEST_CASE("CSV round trip") {
    const auto m = lebesgue(32);
    const auto f = GridFunction::sample(m, [](double y) { return std::sin(y) / 3.0; });
    std::stringstream s;
    write_csv(s, f);
    CHECK(s.str().rfind("node,value\n", 0) == 0);
    const auto back = read_grid_function_csv(s, m);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

    std::stringstream d;
    write_csv(d, *m);
    CHECK(d.str().rfind("# measure=lebesgue normalized=true", 0) == 0);
    const auto measure = read_measure_csv(d, m->grid_ptr());
    CHECK(measure->masses()[5] == doctest::Approx(1.0 / 32));
}
