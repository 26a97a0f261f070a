#include "ergolab/gordin.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

constexpr std::size_t kMaxTerms = 100000;

void require_centered(const GridFunction& h) {
    const double mean = integrate(h);
    if (std::abs(mean) > 1e-6) {
        std::ostringstream msg;
        msg << "observable is not centered: mean " << mean;
        throw Error(ErrorKind::Precondition, msg.str());
    }
}

void axpy(double a, std::span<const double> x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double l2(const MeasureDensity& m, std::span<const double> v) {
    const auto w = m.masses();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i] * w[i];
    return std::sqrt(s);
}

struct Series {
    std::vector<double> f;
    std::size_t terms = 0;
    double tail = 0.0;
    bool done = false;
};

// Sums the resolvent series for several eps at once; they share the iterates
// P^{k-1} h, which are the expensive part.
std::vector<Series> resolvent_family(const TransferOperator& op, const GridFunction& h, std::span<const double> eps,
                                     double tail_tol) {
    if (!(tail_tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tail tolerance must be positive");
    const std::size_t n = h.size();
    const auto& measure = op.measure();
    std::vector<Series> out(eps.size());
    for (auto& s : out) s.f.assign(n, 0.0);

    const double h_norm = l2(measure, h.values());
    std::vector<std::size_t> cap(eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
        if (!(eps[e] > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be positive");
        // A-priori length from the contraction bound ||P^k h|| <= ||h||.
        const double k = h_norm > 0.0 ? std::log(h_norm / (eps[e] * tail_tol)) / std::log1p(eps[e]) : 0.0;
        cap[e] = static_cast<std::size_t>(std::clamp(std::ceil(k), 1.0, static_cast<double>(kMaxTerms)));
        if (h_norm == 0.0) out[e].done = true;
    }

    std::vector<double> v(h.values().begin(), h.values().end());
    std::vector<double> next(n);
    auto remaining = std::count_if(out.begin(), out.end(), [](const Series& s) { return !s.done; });
    for (std::size_t k = 1; remaining > 0; ++k) {
        op.apply(v, next);
        const double next_norm = l2(measure, next);
        for (std::size_t e = 0; e < eps.size(); ++e) {
            auto& s = out[e];
            if (s.done) continue;
            const double log_q = std::log1p(eps[e]);
            axpy(std::exp(-static_cast<double>(k) * log_q), v, s.f);
            s.terms = k;
            // Everything after term k is bounded by ||P^k h|| (1+eps)^{-k} / eps.
            s.tail = next_norm * std::exp(-static_cast<double>(k) * log_q) / eps[e];
            if (s.tail < tail_tol || next_norm == 0.0) {
                s.done = true;
                --remaining;
            } else if (k >= cap[e]) {
                if (k >= kMaxTerms) {
                    std::ostringstream msg;
                    msg << "resolvent series for eps = " << eps[e] << " needs more than " << kMaxTerms
                        << " terms; achievable tail tolerance " << s.tail;
                    throw Error(ErrorKind::Truncation, msg.str());
                }
                // The a-priori count is reached; the contraction bound makes
                // the tail small even if the computed norms say otherwise.
                s.done = true;
                --remaining;
            }
        }
        v.swap(next);
    }
    return out;
}

}  // namespace

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Coboundary: return "coboundary";
        case Verdict::NotCoboundary: return "not-coboundary";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

Resolvent resolvent(const TransferOperator& op, const GridFunction& h, double eps, double tail_tol) {
    require_centered(h);
    const double e[] = {eps};
    auto family = resolvent_family(op, h, e, tail_tol);
    return Resolvent{GridFunction(op.measure_ptr(), std::move(family[0].f)), family[0].terms, family[0].tail};
}

double resolvent_identity_residual(const TransferOperator& op, const GridFunction& h, const GridFunction& f_eps,
                                   double eps) {
    GridFunction r = (1.0 + eps) * f_eps;
    r -= op.apply(f_eps);
    r -= h;
    return lp_norm(r, Norm::L2);
}

GridFunction martingale_part(const IntervalMap& map, const TransferOperator& op, const GridFunction& h, double eps,
                             double tail_tol) {
    const auto f = resolvent(op, h, eps, tail_tol).f;
    return f - koopman_apply(map, op.apply(f));
}

GordinDecomposition gordin_decompose(const IntervalMap& map, const TransferOperator& op, const GridFunction& h,
                                     const GordinOptions& options) {
    require_centered(h);
    if (options.k_max < 1 || options.k_max > 30) throw Error(ErrorKind::InvalidInput, "k_max must lie in [1, 30]");
    const double h_norm = lp_norm(h, Norm::L2);
    double tail_tol = options.tail_tol > 0.0 ? options.tail_tol : 1e-6 * h_norm;
    if (!(tail_tol > 0.0)) tail_tol = 1e-300;

    std::vector<double> schedule;
    for (int k = 0; k <= options.k_max; ++k) schedule.push_back(std::ldexp(1.0, -k));
    auto family = resolvent_family(op, h, schedule, tail_tol);

    std::vector<GridFunction> fs;
    std::vector<GridFunction> hs;
    std::vector<std::size_t> terms;
    std::vector<double> f_norms;
    std::vector<double> resolvent_residuals;
    std::vector<double> martingale_residuals;
    for (std::size_t k = 0; k < family.size(); ++k) {
        GridFunction f(op.measure_ptr(), std::move(family[k].f));
        const GridFunction pf = op.apply(f);
        GridFunction hk = f - koopman_apply(map, pf);
        terms.push_back(family[k].terms);
        f_norms.push_back(lp_norm(f, Norm::L2));
        resolvent_residuals.push_back(resolvent_identity_residual(op, h, f, schedule[k]));
        martingale_residuals.push_back(lp_norm(op.apply(hk), Norm::L2));
        fs.push_back(std::move(f));
        hs.push_back(std::move(hk));
    }

    std::vector<CauchyPair> cauchy;
    std::vector<std::string> warnings;
    for (int k = 1; k <= options.k_max; ++k) {
        const double eps = schedule[k - 1];
        const double delta = schedule[k];
        const double inc = lp_norm(hs[k] - hs[k - 1], Norm::L2);
        const double bound = (eps + delta) * (f_norms[k - 1] * f_norms[k - 1] + f_norms[k] * f_norms[k]);
        cauchy.push_back({k, eps, delta, inc, bound, bound - inc * inc});
        if (bound - inc * inc < -1e-8) {
            std::ostringstream msg;
            msg << "Cauchy bound violated on pair k = " << k << " (slack " << bound - inc * inc << ")";
            warnings.push_back(msg.str());
        }
        if (k >= 3 && inc > 1.1 * cauchy[k - 2].increment) {
            std::ostringstream msg;
            msg << "Cauchy increment grew at k = " << k << " (" << cauchy[k - 2].increment << " -> " << inc
                << "); the limit h~ may not exist";
            warnings.push_back(msg.str());
        }
    }

    GridFunction h_tilde = hs.back();
    const double sigma_mart = lp_norm(h_tilde, Norm::L2);
    const double mart_res = martingale_residuals.back();
    return GordinDecomposition{std::move(schedule),
                               std::move(terms),
                               std::move(f_norms),
                               std::move(resolvent_residuals),
                               std::move(martingale_residuals),
                               std::move(cauchy),
                               fs.back(),
                               hs.back(),
                               std::move(h_tilde),
                               tail_tol,
                               sigma_mart,
                               mart_res,
                               std::move(warnings)};
}

CoboundaryResult coboundary_detect(const IntervalMap& map, const TransferOperator& op, const GridFunction& h,
                                   std::size_t n_max, double tol) {
    require_centered(h);
    if (n_max < 32) throw Error(ErrorKind::Precondition, "coboundary detection needs n_max >= 32");
    const double h_norm = lp_norm(h, Norm::L2);

    GridFunction v = h;
    GridFunction sum = h;
    std::vector<double> cesaro{lp_norm(sum, Norm::L2)};
    for (std::size_t k = 1; k <= n_max; ++k) {
        v = op.apply(v);
        sum += v;
        cesaro.push_back(lp_norm(sum, Norm::L2));
    }
    GridFunction f = op.apply(sum);
    GridFunction r = koopman_apply(map, f);
    r -= f;
    r -= h;
    const double residual = lp_norm(r, Norm::L2);

    Flag bounded = Flag::Unknown;
    if (h_norm == 0.0) {
        bounded = Flag::Pass;
    } else {
        try {
            const double alpha = fit_polynomial_rate(cesaro, 8, 64).exponent;
            if (alpha < 0.05) {
                bounded = Flag::Pass;
            } else if (alpha > 0.25) {
                bounded = Flag::Fail;
            }
        } catch (const Error&) {
            bounded = Flag::Unknown;
        }
    }

    // A bounded Cesaro sequence is necessary but not sufficient, so a large
    // residual alone settles the negative case.
    Verdict verdict = Verdict::Indeterminate;
    if (residual >= tol || bounded == Flag::Fail) {
        verdict = Verdict::NotCoboundary;
    } else if (bounded == Flag::Pass) {
        verdict = Verdict::Coboundary;
    }
    return CoboundaryResult{verdict, std::move(f), residual, bounded, std::move(cesaro), tol};
}

nlohmann::json to_json(const CoboundaryResult& c) {
    return nlohmann::json{{"verdict", to_string(c.verdict)},
                          {"is_coboundary", c.verdict == Verdict::Coboundary},
                          {"residual", json_number(c.residual)},
                          {"tol", c.tol},
                          {"cesaro_bounded", to_string(c.cesaro_bounded)},
                          {"f_l2", json_number(lp_norm(c.f, Norm::L2))}};
}

nlohmann::json to_json(const GordinDecomposition& d) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& p : d.cauchy) {
        history.push_back({{"k", p.k},
                           {"eps", p.eps},
                           {"delta", p.delta},
                           {"increment", json_number(p.increment)},
                           {"bound", json_number(p.bound)},
                           {"slack", json_number(p.slack)}});
    }
    return nlohmann::json{{"sigma_mart", json_number(d.sigma_mart)},
                          {"martingale_residual", json_number(d.martingale_residual)},
                          {"tail_tol", d.tail_tol},
                          {"final_eps", d.schedule.back()},
                          {"terms", d.terms},
                          {"resolvent_residuals", d.resolvent_residuals},
                          {"martingale_residuals", d.martingale_residuals},
                          {"cauchy_history", history},
                          {"warnings", d.warnings}};
}

}  // namespace ergolab
