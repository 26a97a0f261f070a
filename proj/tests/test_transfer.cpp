#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ergolab/error.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/transfer.hpp"

using namespace ergolab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::shared_ptr<const MeasureDensity> closed_form(const IntervalMap& map, std::size_t cells) {
    return MeasureDensity::from_cdf(map.name, default_grid(map, cells), map.law->cdf, map.law->pdf);
}

}  // namespace

TEST_CASE("Ulam matrix is row stochastic") {
    for (const char* spec : {"doubling", "chebyshev:2", "lsv:0.25", "mp:0.5"}) {
        CAPTURE(spec);
        const auto m = ulam_matrix(builtin_map(spec), 256);
        for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.row_sum(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Doubling: cell i of N spreads evenly over cells 2i mod N and 2i+1 mod N.
    const auto d = ulam_matrix(builtin_map("doubling"), 16);
    CHECK(d.nonzeros() == 32);
    CHECK(d.col[d.row_ptr[11]] == 6);
    CHECK(d.weight[d.row_ptr[5]] == doctest::Approx(0.5));

    std::stringstream s;
    write_ulam(s, d);
    CHECK(s.str().rfind("# ulam N=16", 0) == 0);
}

TEST_CASE("invariant density: doubling and chebyshev") {
    const auto d = invariant_density(builtin_map("doubling"), 256, 1e-12);
    for (double v : d.density->values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

    const auto map = builtin_map("chebyshev:2");
    const auto c = invariant_density(map, 1024, 1e-12);
    const auto edges = c.density->grid().edges();
    for (std::size_t i = 10; i + 10 < edges.size() - 1; i += 50) {
        const double exact = map.law->cdf(edges[i + 1]) - map.law->cdf(edges[i]);
        CHECK(c.density->masses()[i] == doctest::Approx(exact).epsilon(0.02));
    }
}

TEST_CASE("invariant density of lsv has the y^-gamma singularity") {
    const auto r = invariant_density(builtin_map("lsv:0.5"), 1024, 1e-11);
    CHECK(r.fine->grid().size() > r.density->grid().size());
    REQUIRE(r.density->left_tail());
    CHECK(r.density->left_tail()->exponent == doctest::Approx(-0.5).epsilon(0.3));
    const auto fit = fit_left_power_law(*r.density, 8);
    CHECK(fit.exponent == doctest::Approx(-0.5).epsilon(0.3));
    // density_at uses the tail model inside the first cell
    CHECK(r.density->density_at(1e-6) > r.density->values()[0]);
}

TEST_CASE("branch-sum operator preserves constants and means") {
    const auto map = builtin_map("doubling");
    const auto op = TransferOperator::branch_sum(map, closed_form(map, 512));
    const auto one = GridFunction::constant(op.measure_ptr(), 1.0);
    const auto p1 = op.apply(one);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == doctest::Approx(1.0).epsilon(1e-14));

    const auto f = GridFunction::sample(op.measure_ptr(), [](double y) { return std::exp(y); });
    CHECK(integrate(op.apply(f)) == doctest::Approx(integrate(f)).epsilon(1e-12));
    // P(cos 2 pi k y) = cos(pi k y) averaged over both preimages; P cos 2 pi y = 0 exactly for doubling
    const auto c = GridFunction::sample(op.measure_ptr(), [](double y) { return std::cos(kTwoPi * y); });
    CHECK(lp_norm(op.apply(c), Norm::L2) < 1e-4);
}

TEST_CASE("numerical measure gets the mean correction") {
    const auto map = builtin_map("lsv:0.25");
    const auto r = invariant_density(map, 512, 1e-12);
    const auto op = TransferOperator::branch_sum(map, r.density);
    CHECK(op.mean_corrected());
    const auto f = centered(GridFunction::sample(r.density, [](double y) { return std::cos(kTwoPi * y); }));
    auto g = f;
    for (int k = 0; k < 20; ++k) {
        g = op.apply(g);
        CHECK(std::abs(integrate(g)) < 1e-14);
    }
}

TEST_CASE("Ulam operator agrees with branch-sum on smooth data") {
    const auto map = builtin_map("doubling");
    const auto m = closed_form(map, 1024);
    const auto bs = TransferOperator::branch_sum(map, m);
    const auto ul = TransferOperator::ulam(ulam_matrix(map, m->grid_ptr()), m);
    const auto f = GridFunction::sample(m, [](double y) { return y * y; });
    const auto a = bs.apply(f);
    const auto b = ul.apply(f);
    CHECK(lp_norm(a - b, Norm::L2) < 1e-3);
}

TEST_CASE("koopman and transfer are dual") {
    const auto map = builtin_map("chebyshev:2");
    const auto m = closed_form(map, 2048);
    const auto op = TransferOperator::branch_sum(map, m);
    const auto f = GridFunction::sample(m, [](double y) { return std::sin(3 * y) + y * y; });
    const auto g = GridFunction::sample(m, [](double y) { return std::cos(2 * y); });
    CHECK(duality_residual(map, op, f, g, 0) == 0.0);
    for (std::size_t n : {1, 2, 3}) CHECK(duality_residual(map, op, f, g, n) < 5e-4);

    const auto u = koopman_apply(map, g);
    const double y = m->grid().nodes()[100];
    CHECK(u[100] == doctest::Approx(std::cos(2 * map(y))).epsilon(1e-5));
    const auto powers = transfer_power(op, f, 3);
    CHECK(powers.size() == 3);
    CHECK(lp_norm(powers[0] - transfer_apply(map, f), Norm::L2) < 1e-14);
}

TEST_CASE("zero density is rejected by branch-sum") {
    const auto map = builtin_map("doubling");
    const auto grid = default_grid(map, 4);
    const auto m = MeasureDensity::from_masses("holey", grid, {0.5, 0.0, 0.25, 0.25});
    try {
        TransferOperator::branch_sum(map, m);
        FAIL("expected a degenerate measure error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateMeasure);
    }
}
