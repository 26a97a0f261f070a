#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ergolab/decay.hpp"
#include "ergolab/error.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/observable.hpp"

using namespace ergolab;

namespace {

struct Fixture {
    IntervalMap map;
    std::shared_ptr<const MeasureDensity> measure;
    TransferOperator op;
};

Fixture closed(const char* spec, std::size_t cells) {
    auto map = builtin_map(spec);
    auto m = MeasureDensity::from_cdf(map.name, default_grid(map, cells), map.law->cdf, map.law->pdf);
    auto op = TransferOperator::branch_sum(map, m);
    return {map, m, op};
}

}  // namespace

TEST_CASE("polynomial fit recovers exact power laws") {
    std::vector<double> seq;
    for (int n = 1; n <= 100; ++n) seq.push_back(5.0 * std::pow(n, -2.5));
    const auto fit = fit_polynomial_rate(seq, 8, 64);
    CHECK(fit.exponent == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(fit.max_log_residual < 1e-10);

    seq[20] = 0.0;
    CHECK_THROWS_AS(fit_polynomial_rate(seq, 8, 64), Error);
    CHECK_THROWS_AS(fit_polynomial_rate(seq, 8, 200), Error);
}

TEST_CASE("uncentered observables are rejected") {
    auto f = closed("doubling", 128);
    const auto h = GridFunction::sample(f.measure, [](double y) { return y; });
    try {
        norm_decay_sequence(f.op, h, Norm::L2, 10);
        FAIL("expected a precondition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Precondition);
        CHECK(std::string(e.what()).find("0.5") != std::string::npos);
    }
}

TEST_CASE("chebyshev(2) annihilates y: fast path") {
    auto f = closed("chebyshev:2", 4096);
    const auto h = GridFunction::sample(f.measure, [](double y) { return y; });
    const auto r = classify_conditions(f.map.name, "y", f.op, h);
    CHECK(r.annihilated);
    CHECK(r.flags.l2_rate_beyond_half == Flag::Pass);
    CHECK(r.flags.weighted_l2_summable == Flag::Pass);
    CHECK(r.flags.cesaro_growth_below_half == Flag::Pass);
    CHECK(r.flags.coboundary_bounded == Flag::Pass);
    CHECK(r.interpolation_gap <= 1e-8);
}

TEST_CASE("doubling coboundary has bounded Cesaro sums") {
    auto f = closed("doubling", 4096);
    const auto obs = parse_observable("coboundary:cos1", f.map);
    const auto h = centered(GridFunction::sample(f.measure, obs.fn));
    const auto r = classify_conditions(f.map.name, obs.name, f.op, h);
    CHECK(r.flags.coboundary_bounded == Flag::Pass);
    CHECK(r.cesaro.size() == 256);
    CHECK(r.l2.size() == 256);
    for (double c : r.cesaro) CHECK(c < 2.0 * std::sqrt(0.5) + 1e-3);

    const auto j = to_json(r);
    for (const char* key : {"l1", "l2", "cesaro", "fits", "flags"}) CHECK(j.contains(key));
    CHECK(j["flags"]["coboundary_bounded"] == "pass");

    std::stringstream csv;
    write_decay_csv(csv, r);
    CHECK(csv.str().rfind("n,l1,l2,cesaro\n", 0) == 0);
}

TEST_CASE("lsv(0.25) decays fast enough for the first condition") {
    const auto map = builtin_map("lsv:0.25");
    const auto d = invariant_density(map, 1024, 1e-12);
    const auto op = TransferOperator::branch_sum(map, d.density);
    const auto h = centered(GridFunction::sample(d.density, parse_observable("cos1", map).fn));
    const auto r = classify_conditions(map.name, "cos1", op, h);
    CHECK_FALSE(r.annihilated);
    CHECK(r.l2_fit.exponent < -0.55);
    CHECK(r.flags.l2_rate_beyond_half == Flag::Pass);
    CHECK(r.interpolation_gap <= 1e-8);
}

TEST_CASE("n_max below 32 is a precondition error") {
    auto f = closed("doubling", 64);
    const auto h = GridFunction::sample(f.measure, [](double y) { return std::cos(2 * std::numbers::pi * y); });
    DecayOptions o;
    o.n_max = 16;
    CHECK_THROWS_AS(classify_conditions("doubling", "cos1", f.op, h, o), Error);
}

TEST_CASE("json_number maps non-finite values to null") {
    CHECK(json_number(1.5) == 1.5);
    CHECK(json_number(std::nan("")).is_null());
    CHECK(json_number(-INFINITY).is_null());
}
