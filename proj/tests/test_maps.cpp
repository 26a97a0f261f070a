#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ergolab/error.hpp"
#include "ergolab/maps.hpp"

using namespace ergolab;

TEST_CASE("builtin map parsing") {
    CHECK(builtin_map("doubling").branches.size() == 2);
    CHECK(builtin_map("chebyshev:3").branches.size() == 3);
    CHECK(builtin_map("lsv:0.25").gamma == 0.25);
    CHECK(builtin_map("manneville_pomeau:0.5").family == MapFamily::MannevillePomeau);
    CHECK(builtin_map("chebyshev:2").preferred_grid == GridKind::Arcsine);

    for (const char* bad : {"lsv:1.5", "lsv:0", "lsv", "chebyshev:2.5", "chebyshev:1", "tent", "doubling:2", "mp:x"}) {
        CAPTURE(bad);
        try {
            builtin_map(bad);
            FAIL("expected a configuration error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Configuration);
        }
    }
}

TEST_CASE("pointwise values") {
    const auto d = builtin_map("doubling");
    CHECK(d(0.3) == doctest::Approx(0.6));
    CHECK(d(0.7) == doctest::Approx(0.4));

    const auto c = builtin_map("chebyshev:2");
    CHECK(c(0.5) == doctest::Approx(-0.5));
    const auto c3 = builtin_map("chebyshev:3");
    CHECK(c3(0.5) == doctest::Approx(4 * 0.125 - 1.5));

    const auto l = builtin_map("lsv:0.5");
    CHECK(l(0.5) == doctest::Approx(1.0));
    CHECK(l(0.25) == doctest::Approx(0.25 * (1.0 + std::sqrt(0.5))));
    CHECK(l(0.75) == doctest::Approx(0.5));

    const auto mp = builtin_map("mp:0.5");
    const double y = 0.2;
    CHECK(mp(y) == doctest::Approx(y + std::pow(y, 1.5)));
}

TEST_CASE("preimages invert every branch") {
    for (const char* spec : {"doubling", "chebyshev:2", "chebyshev:5", "lsv:0.25", "lsv:0.75", "mp:0.4"}) {
        CAPTURE(spec);
        const auto map = builtin_map(spec);
        const double span = map.upper - map.lower;
        for (double t : {0.013, 0.25, 0.5, 0.77, 0.999}) {
            const double x = map.lower + t * span;
            const auto pre = preimages(map, x);
            CHECK(pre.size() == map.branches.size());
            for (const auto& p : pre) {
                CHECK(map(p.y) == doctest::Approx(x).epsilon(1e-10));
                CHECK(p.deriv_mag > 0.0);
            }
        }
    }
}

TEST_CASE("preimage and orbit errors") {
    const auto d = builtin_map("doubling");
    try {
        preimages(d, 1.5);
        FAIL("expected a domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
    }
    // -1 has the single preimage 0 under 2y^2 - 1, where T'(0) = 0.
    const auto c = builtin_map("chebyshev:2");
    try {
        preimages(c, -1.0);
        FAIL("expected a singular derivative error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularDerivative);
    }
    CHECK_THROWS_AS(orbit(d, -0.5, 3), Error);
}

TEST_CASE("exact rational doubling orbit") {
    const auto o = doubling_orbit_exact(1, 7, 6);
    const double expect[] = {1.0 / 7, 2.0 / 7, 4.0 / 7, 1.0 / 7, 2.0 / 7, 4.0 / 7};
    for (std::size_t i = 0; i < 6; ++i) CHECK(o[i] == doctest::Approx(expect[i]));
    CHECK_THROWS_AS(doubling_orbit_exact(1, 0, 3), Error);
}

TEST_CASE("closed-form laws are invariant") {
    // mu(T^{-1}[a, b]) = mu([a, b]) from the preimage intervals of each branch.
    for (const char* spec : {"doubling", "chebyshev:2", "chebyshev:4"}) {
        CAPTURE(spec);
        const auto map = builtin_map(spec);
        REQUIRE(map.law);
        const auto& cdf = map.law->cdf;
        const double a = map.lower + 0.31 * (map.upper - map.lower);
        const double b = map.lower + 0.58 * (map.upper - map.lower);
        double mass = 0.0;
        for (const auto& br : map.branches) {
            const double ya = br.inverse(a);
            const double yb = br.inverse(b);
            mass += std::abs(cdf(yb) - cdf(ya));
        }
        CHECK(mass == doctest::Approx(cdf(b) - cdf(a)).epsilon(1e-12));
    }
}

TEST_CASE("invert_increasing") {
    auto g = [](double y) { return y * y * y + y; };
    auto dg = [](double y) { return 3 * y * y + 1; };
    const double y = invert_increasing(g, dg, 0.5, 0.0, 1.0);
    CHECK(g(y) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(invert_increasing(g, dg, -1.0, 0.0, 1.0) == 0.0);
}
