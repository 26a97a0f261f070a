#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/function_space.hpp"

namespace ergolab {

/// One monotone piece of an interval map.
struct Branch {
    double lo;
    double hi;
    bool increasing;
    std::function<double(double)> forward;
    std::function<double(double)> inverse;     // defined on [image_lo, image_hi]
    std::function<double(double)> derivative;  // |T'(y)|
    double image_lo;
    double image_hi;
};

/// Closed-form invariant law: density, distribution function and a sampler
/// taking U ~ uniform(0,1) to a draw from the law.
struct InvariantLaw {
    std::function<double(double)> pdf;
    std::function<double(double)> cdf;
    std::function<double(double)> sampler;
};

enum class MapFamily { Lsv, MannevillePomeau, Doubling, Chebyshev };

struct IntervalMap {
    std::string name;
    MapFamily family;
    double lower;
    double upper;
    std::vector<Branch> branches;
    double gamma = 0.0;  // intermittency exponent, 0 when not applicable
    int degree = 0;      // Chebyshev N
    std::optional<InvariantLaw> law;
    bool neutral_left = false;  // indifferent fixed point at the left endpoint
    GridKind preferred_grid = GridKind::Uniform;

    std::size_t branch_of(double y) const noexcept;
    /// T(y), without domain checks. Hot path for orbit simulation.
    double operator()(double y) const noexcept;
};

/// Accepts "lsv:G", "mp:G" / "manneville_pomeau:G", "doubling", "chebyshev:N".
IntervalMap builtin_map(std::string_view spec);

struct Preimage {
    double y;
    double deriv_mag;
    std::size_t branch;
};

std::vector<Preimage> preimages(const IntervalMap& map, double x);

/// [y0, T y0, ..., T^{n-1} y0].
std::vector<double> orbit(const IntervalMap& map, double y0, std::size_t n);

/// Orbit of p/q under the doubling map in exact rational arithmetic.
std::vector<double> doubling_orbit_exact(std::uint64_t p, std::uint64_t q, std::size_t n);

/// Solves g(y) = x for increasing g on [lo, hi] by Newton steps kept inside
/// a bisection bracket. `dg` is g'. Stops when |g(y) - x| <= tol.
double invert_increasing(const std::function<double(double)>& g, const std::function<double(double)>& dg, double x,
                         double lo, double hi, double tol = 1e-13);

}  // namespace ergolab
