#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "ergolab/function_space.hpp"
#include "ergolab/maps.hpp"

namespace ergolab {

/// A real function of y with a printable name. Observables are analytic
/// (evaluated pointwise), so orbits never see interpolation error.
struct Observable {
    std::string name;
    std::function<double(double)> fn;

    double operator()(double y) const { return fn(y); }
    Observable scaled(double c) const;
    Observable shifted(double c) const;
};

/**
 * Builtins:
 *   y, cos1 = cos 2πy, cos2 = cos 4πy, lip1 = cos 2πy, holder1 = sqrt(y - lower),
 *   coboundary:NAME = NAME∘T - NAME.
 * Anything else is parsed as an expression in y with + - * / ^, parentheses,
 * numbers, pi, cos, sin, sqrt, exp, and the placeholder c (the centering
 * constant, which evaluates to 0 because centering happens downstream).
 */
Observable parse_observable(std::string_view spec, const IntervalMap& map);

/// Quadrature mean sum_i fn(x_i) m_i against a measure.
double observable_mean(const Observable& obs, const MeasureDensity& measure);

}  // namespace ergolab
