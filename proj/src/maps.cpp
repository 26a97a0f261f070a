#include "ergolab/maps.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

constexpr double kPi = std::numbers::pi;

// (2y)^g and y^g show up in every LSV/MP evaluation; the two common
// exponents get root-based fast paths since pow dominates orbit loops.
inline double fast_pow(double base, double g) noexcept {
    if (g == 0.25) return std::sqrt(std::sqrt(base));
    if (g == 0.5) return std::sqrt(base);
    return std::pow(base, g);
}

double parse_number(std::string_view text, std::string_view spec) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw Error(ErrorKind::Configuration, "cannot parse parameter of map '" + std::string(spec) + "'");
    }
    return value;
}

std::string format_param(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

IntervalMap make_doubling() {
    IntervalMap m;
    m.name = "doubling";
    m.family = MapFamily::Doubling;
    m.lower = 0.0;
    m.upper = 1.0;
    for (int k = 0; k < 2; ++k) {
        const double shift = k;
        m.branches.push_back(Branch{
            0.5 * k, 0.5 * (k + 1), true, [shift](double y) { return 2.0 * y - shift; },
            [shift](double x) { return 0.5 * (x + shift); }, [](double) { return 2.0; }, 0.0, 1.0});
    }
    m.law = InvariantLaw{[](double) { return 1.0; }, [](double y) { return std::clamp(y, 0.0, 1.0); },
                         [](double u) { return u; }};
    return m;
}

IntervalMap make_chebyshev(int n) {
    IntervalMap m;
    m.name = "chebyshev:" + std::to_string(n);
    m.family = MapFamily::Chebyshev;
    m.lower = -1.0;
    m.upper = 1.0;
    m.degree = n;
    m.preferred_grid = GridKind::Arcsine;
    const double dn = n;

    auto boundary = [n](int k) {
        // cos(k pi / N) with exact values at the ends and at the center.
        if (k == 0) return 1.0;
        if (k == n) return -1.0;
        if (2 * k == n) return 0.0;
        return std::cos(kPi * k / n);
    };
    auto forward = [n, dn](double y) {
        if (n == 2) return 2.0 * y * y - 1.0;
        return std::cos(dn * std::acos(std::clamp(y, -1.0, 1.0)));
    };
    auto derivative = [n, dn](double y) {
        if (n == 2) return 4.0 * std::abs(y);
        const double theta = std::acos(std::clamp(y, -1.0, 1.0));
        const double s = std::sin(theta);
        if (s < 1e-300) return dn * dn;
        return dn * std::abs(std::sin(dn * theta)) / s;
    };

    // Increasing y order: branch k covers theta in [k pi/N, (k+1) pi/N].
    for (int k = n - 1; k >= 0; --k) {
        std::function<double(double)> inverse;
        if (n == 2) {
            const double sign = k == 0 ? 1.0 : -1.0;
            inverse = [sign](double x) { return sign * std::sqrt(std::max(0.0, 0.5 * (1.0 + x))); };
        } else {
            const double parity = (k % 2 == 0) ? 1.0 : -1.0;
            inverse = [k, dn, parity](double x) {
                const double phi = std::acos(std::clamp(parity * x, -1.0, 1.0));
                return std::cos((kPi * k + phi) / dn);
            };
        }
        m.branches.push_back(Branch{boundary(k + 1), boundary(k), k % 2 == 0, forward, inverse, derivative, -1.0, 1.0});
    }
    m.law = InvariantLaw{
        [](double y) { return 1.0 / (kPi * std::sqrt(std::max(0.0, 1.0 - y * y))); },
        [](double y) { return 1.0 - std::acos(std::clamp(y, -1.0, 1.0)) / kPi; },
        [](double u) { return std::cos(kPi * u); },
    };
    return m;
}

IntervalMap make_lsv(double g) {
    IntervalMap m;
    m.name = "lsv:" + format_param(g);
    m.family = MapFamily::Lsv;
    m.lower = 0.0;
    m.upper = 1.0;
    m.gamma = g;
    m.neutral_left = true;

    std::function<double(double)> left = [g](double y) { return y * (1.0 + fast_pow(2.0 * y, g)); };
    std::function<double(double)> dleft = [g](double y) { return 1.0 + (1.0 + g) * fast_pow(2.0 * y, g); };
    m.branches.push_back(Branch{0.0, 0.5, true, left,
                                [left, dleft](double x) {
                                    if (x <= 0.0) return 0.0;
                                    return invert_increasing(left, dleft, x, 0.0, 0.5);
                                },
                                dleft, 0.0, 1.0});
    m.branches.push_back(Branch{0.5, 1.0, true, [](double y) { return 2.0 * y - 1.0; },
                                [](double x) { return 0.5 * (x + 1.0); }, [](double) { return 2.0; }, 0.0, 1.0});
    return m;
}

IntervalMap make_mp(double g) {
    IntervalMap m;
    m.name = "mp:" + format_param(g);
    m.family = MapFamily::MannevillePomeau;
    m.lower = 0.0;
    m.upper = 1.0;
    m.gamma = g;
    m.neutral_left = true;

    std::function<double(double)> lift = [g](double y) { return y + y * fast_pow(y, g); };
    std::function<double(double)> dlift = [g](double y) { return 1.0 + (1.0 + g) * fast_pow(y, g); };
    // y + y^{1+g} runs from 0 to 2, so the mod-1 reduction always leaves two
    // full branches; only the cut point depends on g.
    const double cut = invert_increasing(lift, dlift, 1.0, 0.0, 1.0, 1e-15);
    m.branches.push_back(Branch{0.0, cut, true, lift,
                                [lift, dlift, cut](double x) {
                                    if (x <= 0.0) return 0.0;
                                    return invert_increasing(lift, dlift, x, 0.0, cut);
                                },
                                dlift, 0.0, 1.0});
    m.branches.push_back(Branch{cut, 1.0, true, [lift](double y) { return lift(y) - 1.0; },
                                [lift, dlift, cut](double x) {
                                    return invert_increasing(lift, dlift, x + 1.0, cut, 1.0);
                                },
                                dlift, 0.0, 1.0});
    return m;
}

}  // namespace

double invert_increasing(const std::function<double(double)>& g, const std::function<double(double)>& dg, double x,
                         double lo, double hi, double tol) {
    double a = lo;
    double b = hi;
    const double ga = g(a);
    const double gb = g(b);
    if (x <= ga) return a;
    if (x >= gb) return b;
    double y = a + (b - a) * (x - ga) / (gb - ga);
    for (int iter = 0; iter < 200; ++iter) {
        const double r = g(y) - x;
        if (std::abs(r) <= tol) return y;
        if (r > 0.0) {
            b = y;
        } else {
            a = y;
        }
        const double d = dg(y);
        double next = (d > 0.0 && std::isfinite(d)) ? y - r / d : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (next == y || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(y), 1e-300)) {
            return next;
        }
        y = next;
    }
    throw Error(ErrorKind::Convergence, "branch inversion did not converge");
}

std::size_t IntervalMap::branch_of(double y) const noexcept {
    if (family == MapFamily::Lsv) return y <= 0.5 ? 0 : 1;
    for (std::size_t b = 0; b + 1 < branches.size(); ++b) {
        if (y < branches[b].hi) return b;
    }
    return branches.size() - 1;
}

double IntervalMap::operator()(double y) const noexcept {
    switch (family) {
        case MapFamily::Doubling: {
            const double v = 2.0 * y;
            return v >= 1.0 ? v - 1.0 : v;
        }
        case MapFamily::Lsv:
            return y <= 0.5 ? y * (1.0 + fast_pow(2.0 * y, gamma)) : 2.0 * y - 1.0;
        case MapFamily::MannevillePomeau: {
            const double v = y + y * fast_pow(y, gamma);
            return v >= 1.0 ? v - 1.0 : v;
        }
        case MapFamily::Chebyshev:
            if (degree == 2) return 2.0 * y * y - 1.0;
            return std::cos(degree * std::acos(std::clamp(y, -1.0, 1.0)));
    }
    return y;
}

IntervalMap builtin_map(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string_view head = spec.substr(0, colon);
    const std::string_view param = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);

    if (head == "doubling") {
        if (!param.empty()) throw Error(ErrorKind::Configuration, "doubling takes no parameter");
        return make_doubling();
    }
    if (head == "chebyshev") {
        if (param.empty()) throw Error(ErrorKind::Configuration, "chebyshev needs a degree, e.g. chebyshev:2");
        const double n = parse_number(param, spec);
        if (n != std::floor(n) || n < 2 || n > 64) {
            throw Error(ErrorKind::Configuration, "chebyshev degree must be an integer in [2, 64]");
        }
        return make_chebyshev(static_cast<int>(n));
    }
    if (head == "lsv" || head == "mp" || head == "manneville_pomeau") {
        if (param.empty()) throw Error(ErrorKind::Configuration, std::string(head) + " needs gamma, e.g. lsv:0.25");
        const double g = parse_number(param, spec);
        if (!(g > 0.0 && g < 1.0)) {
            throw Error(ErrorKind::Configuration, "gamma must lie in (0, 1) for a finite invariant measure");
        }
        return head == "lsv" ? make_lsv(g) : make_mp(g);
    }
    throw Error(ErrorKind::Configuration, "unknown map '" + std::string(spec) + "'");
}

std::vector<Preimage> preimages(const IntervalMap& map, double x) {
    constexpr double slack = 1e-12;
    if (!(x >= map.lower - slack && x <= map.upper + slack)) {
        std::ostringstream msg;
        msg << "point " << x << " outside the domain of " << map.name;
        throw Error(ErrorKind::Domain, msg.str());
    }
    x = std::clamp(x, map.lower, map.upper);
    std::vector<Preimage> out;
    out.reserve(map.branches.size());
    for (std::size_t b = 0; b < map.branches.size(); ++b) {
        const auto& br = map.branches[b];
        if (x < br.image_lo || x > br.image_hi) continue;
        const double y = br.inverse(x);
        const double d = br.derivative(y);
        if (!(d >= 1e-14)) {
            std::ostringstream msg;
            msg << map.name << ": |T'(" << y << ")| = " << d << " at a preimage of " << x;
            throw Error(ErrorKind::SingularDerivative, msg.str());
        }
        out.push_back({y, d, b});
    }
    return out;
}

std::vector<double> orbit(const IntervalMap& map, double y0, std::size_t n) {
    constexpr double slack = 1e-12;
    if (!(y0 >= map.lower - slack && y0 <= map.upper + slack)) {
        throw Error(ErrorKind::Domain, "orbit start outside the domain of " + map.name);
    }
    std::vector<double> out;
    out.reserve(n);
    double y = std::clamp(y0, map.lower, map.upper);
    for (std::size_t j = 0; j < n; ++j) {
        out.push_back(y);
        double next = map(y);
        if (!(next >= map.lower - slack && next <= map.upper + slack)) {
            std::ostringstream msg;
            msg << map.name << " orbit escaped the domain at step " << j + 1 << " (value " << next << ")";
            throw Error(ErrorKind::NumericalEscape, msg.str());
        }
        y = std::clamp(next, map.lower, map.upper);
    }
    return out;
}

std::vector<double> doubling_orbit_exact(std::uint64_t p, std::uint64_t q, std::size_t n) {
    if (q == 0) throw Error(ErrorKind::InvalidInput, "zero denominator");
    if (p > q) throw Error(ErrorKind::Domain, "rational start outside [0, 1]");
    std::vector<double> out;
    out.reserve(n);
    // p == q is the point 1, which 2y mod 1 sends to 1 as well.
    unsigned __int128 num = p;
    for (std::size_t j = 0; j < n; ++j) {
        out.push_back(static_cast<double>(static_cast<std::uint64_t>(num)) / static_cast<double>(q));
        if (num == q) continue;
        num = (2 * num) % q;
    }
    return out;
}

}  // namespace ergolab
