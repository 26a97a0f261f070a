#include "ergolab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ergolab/error.hpp"

namespace ergolab {

const char* to_string(Flag f) noexcept {
    switch (f) {
        case Flag::Pass: return "pass";
        case Flag::Fail: return "fail";
        case Flag::Unknown: return "unknown";
    }
    return "unknown";
}

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

RateFit fit_polynomial_rate(std::span<const double> seq, std::size_t n_lo, std::size_t n_hi) {
    if (n_lo < 1 || n_hi <= n_lo || n_hi > seq.size()) {
        throw Error(ErrorKind::Fit, "fit range [" + std::to_string(n_lo) + ", " + std::to_string(n_hi) +
                                        "] is not inside [1, " + std::to_string(seq.size()) + "]");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
        const double v = seq[n - 1];
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream msg;
            msg << "sequence entry " << v << " at n = " << n << " cannot be fitted on a log scale";
            throw Error(ErrorKind::Fit, msg.str());
        }
        const double lx = std::log(static_cast<double>(n));
        const double ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double count = static_cast<double>(n_hi - n_lo + 1);
    RateFit fit;
    fit.n_lo = n_lo;
    fit.n_hi = n_hi;
    fit.exponent = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    fit.intercept = (sy - fit.exponent * sx) / count;
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
        const double r = std::log(seq[n - 1]) - (fit.intercept + fit.exponent * std::log(static_cast<double>(n)));
        fit.max_log_residual = std::max(fit.max_log_residual, std::abs(r));
    }
    return fit;
}

namespace {

void require_centered(const GridFunction& h) {
    const double mean = integrate(h);
    if (std::abs(mean) > 1e-6) {
        std::ostringstream msg;
        msg << "observable is not centered: mean " << mean << " against '" << h.measure().name() << "'";
        throw Error(ErrorKind::Precondition, msg.str());
    }
}

void require_length(std::size_t n_max, std::size_t least) {
    if (n_max < least) {
        throw Error(ErrorKind::Precondition, "n_max must be at least " + std::to_string(least));
    }
}

}  // namespace

std::vector<double> norm_decay_sequence(const TransferOperator& op, const GridFunction& h, Norm p, std::size_t n_max) {
    require_centered(h);
    require_length(n_max, 2);
    std::vector<double> out;
    out.reserve(n_max);
    GridFunction v = h;
    for (std::size_t n = 1; n <= n_max; ++n) {
        v = op.apply(v);
        out.push_back(lp_norm(v, p));
    }
    return out;
}

std::vector<double> cesaro_norm_sequence(const TransferOperator& op, const GridFunction& h, std::size_t n_max) {
    require_centered(h);
    require_length(n_max, 2);
    std::vector<double> out;
    out.reserve(n_max);
    GridFunction v = h;
    GridFunction sum = h;
    out.push_back(lp_norm(sum, Norm::L2));
    for (std::size_t n = 2; n <= n_max; ++n) {
        v = op.apply(v);
        sum += v;
        out.push_back(lp_norm(sum, Norm::L2));
    }
    return out;
}

DecayReport classify_conditions(const std::string& map_name, const std::string& observable, const TransferOperator& op,
                                const GridFunction& h, const DecayOptions& options) {
    require_centered(h);
    require_length(options.n_max, 32);

    DecayReport r;
    r.map_name = map_name;
    r.observable = observable;
    r.backend = op.backend();

    const double h_l2 = lp_norm(h, Norm::L2);
    const double h_inf = lp_norm(h, Norm::Linf);
    GridFunction v = h;
    GridFunction sum = h;
    r.cesaro.push_back(h_l2);
    r.interpolation_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= options.n_max; ++n) {
        v = op.apply(v);
        const double l1 = lp_norm(v, Norm::L1);
        const double l2 = lp_norm(v, Norm::L2);
        r.l1.push_back(l1);
        r.l2.push_back(l2);
        r.interpolation_gap = std::max(r.interpolation_gap, l2 - std::sqrt(h_inf * l1));
        if (n < options.n_max) {
            sum += v;
            r.cesaro.push_back(lp_norm(sum, Norm::L2));
        }
    }

    const std::size_t lo = options.fit_lo;
    const std::size_t hi = std::min(options.fit_hi, options.n_max);
    const double margin = options.margin;

    // Rounding-level first iterate: P h = 0 in exact arithmetic.
    r.annihilated = h_l2 == 0.0 || r.l2.front() <= 1e-12 * h_l2;

    if (r.annihilated) {
        r.flags.l2_rate_beyond_half = Flag::Pass;
        r.l1_fit.exponent = r.l2_fit.exponent = -std::numeric_limits<double>::infinity();
        r.l1_fit.n_lo = r.l2_fit.n_lo = lo;
        r.l1_fit.n_hi = r.l2_fit.n_hi = hi;
        r.diagnostics.push_back("P h vanishes to rounding; decay exponents are -infinity");
    } else {
        try {
            r.l2_fit = fit_polynomial_rate(r.l2, lo, hi);
            r.l1_fit = fit_polynomial_rate(r.l1, lo, hi);
            if (r.l2_fit.exponent < -0.5 - margin) {
                r.flags.l2_rate_beyond_half = Flag::Pass;
            } else if (r.l2_fit.exponent > -0.5 + margin) {
                r.flags.l2_rate_beyond_half = Flag::Fail;
            }
        } catch (const Error& e) {
            r.diagnostics.push_back(std::string("decay fit: ") + e.what());
        }
    }

    if (h_l2 == 0.0) {
        r.flags.cesaro_growth_below_half = Flag::Pass;
        r.flags.coboundary_bounded = Flag::Pass;
        r.cesaro_fit.n_lo = lo;
        r.cesaro_fit.n_hi = hi;
    } else {
        try {
            r.cesaro_fit = fit_polynomial_rate(r.cesaro, lo, hi);
            const double alpha = r.cesaro_fit.exponent;
            if (alpha < 0.5 - margin) {
                r.flags.cesaro_growth_below_half = Flag::Pass;
            } else if (alpha > 0.5 + margin) {
                r.flags.cesaro_growth_below_half = Flag::Fail;
            }
            if (alpha < margin) {
                r.flags.coboundary_bounded = Flag::Pass;
            } else if (alpha > 0.25) {
                r.flags.coboundary_bounded = Flag::Fail;
            }
        } catch (const Error& e) {
            r.diagnostics.push_back(std::string("Cesaro fit: ") + e.what());
        }
    }

    // Plateau of sum_{k<=n} k^{-1/2} ||P^k h||_2 over the last quarter of the run.
    double partial = 0.0;
    double at_three_quarters = 0.0;
    const std::size_t quarter_mark = (3 * options.n_max) / 4;
    for (std::size_t n = 1; n <= options.n_max; ++n) {
        partial += r.l2[n - 1] / std::sqrt(static_cast<double>(n));
        if (n == quarter_mark) at_three_quarters = partial;
    }
    r.weighted_sum_increment = partial > 0.0 ? (partial - at_three_quarters) / partial : 0.0;
    if (r.annihilated || r.weighted_sum_increment < 0.01) {
        r.flags.weighted_l2_summable = Flag::Pass;
    } else if (r.flags.cesaro_growth_below_half == Flag::Pass) {
        // alpha < 1/2 implies the summability condition; the plateau test is
        // only slower to see it.
        r.flags.weighted_l2_summable = Flag::Pass;
        r.diagnostics.push_back("summability implied by the Cesaro exponent; partial sums still growing");
    } else {
        r.flags.weighted_l2_summable = Flag::Fail;
    }
    return r;
}

nlohmann::json to_json(const DecayReport& r) {
    auto fit_json = [](const RateFit& f) {
        return nlohmann::json{{"exponent", json_number(f.exponent)},
                              {"intercept", json_number(f.intercept)},
                              {"max_log_residual", json_number(f.max_log_residual)},
                              {"range", {f.n_lo, f.n_hi}}};
    };
    nlohmann::json j;
    j["map"] = r.map_name;
    j["observable"] = r.observable;
    j["backend"] = to_string(r.backend);
    j["l1"] = r.l1;
    j["l2"] = r.l2;
    j["cesaro"] = r.cesaro;
    j["fits"] = {{"l1", fit_json(r.l1_fit)}, {"l2", fit_json(r.l2_fit)}, {"cesaro", fit_json(r.cesaro_fit)}};
    j["flags"] = {{"l2_rate_beyond_half", to_string(r.flags.l2_rate_beyond_half)},
                  {"weighted_l2_summable", to_string(r.flags.weighted_l2_summable)},
                  {"cesaro_growth_below_half", to_string(r.flags.cesaro_growth_below_half)},
                  {"coboundary_bounded", to_string(r.flags.coboundary_bounded)}};
    j["annihilated"] = r.annihilated;
    j["weighted_sum_increment"] = json_number(r.weighted_sum_increment);
    j["interpolation_gap"] = json_number(r.interpolation_gap);
    j["diagnostics"] = r.diagnostics;
    return j;
}

void write_decay_csv(std::ostream& out, const DecayReport& r) {
    const auto old = out.precision(17);
    out << "n,l1,l2,cesaro\n";
    for (std::size_t n = 1; n <= r.l1.size(); ++n) {
        out << n << ',' << r.l1[n - 1] << ',' << r.l2[n - 1] << ',' << r.cesaro[n - 1] << '\n';
    }
    out.precision(old);
}

}  // namespace ergolab
