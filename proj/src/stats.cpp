#include "ergolab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ergolab/decay.hpp"
#include "ergolab/error.hpp"

namespace ergolab {

double normal_cdf(double x) noexcept {
    if (std::isnan(x)) return x;
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    // A&S 26.2.17 for x >= 0, reflected for x < 0.
    constexpr double p = 0.2316419;
    constexpr double b1 = 0.319381530;
    constexpr double b2 = -0.356563782;
    constexpr double b3 = 1.781477937;
    constexpr double b4 = -1.821255978;
    constexpr double b5 = 1.330274429;
    const double z = std::abs(x);
    const double t = 1.0 / (1.0 + p * z);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double tail = pdf * t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
    return x >= 0.0 ? 1.0 - tail : tail;
}

ReferenceLaw ReferenceLaw::normal(double sigma) {
    if (!(sigma >= 0.0)) throw Error(ErrorKind::Parameter, "normal law needs sigma >= 0");
    std::ostringstream name;
    name << "normal(" << sigma << ")";
    if (sigma == 0.0) return {name.str(), [](double t) { return t >= 0.0 ? 1.0 : 0.0; }};
    return {name.str(), [sigma](double t) { return normal_cdf(t / sigma); }};
}

ReferenceLaw ReferenceLaw::brownian_sup() {
    return {"brownian_sup", [](double a) { return a < 0.0 ? 0.0 : 2.0 * normal_cdf(a) - 1.0; }};
}

ReferenceLaw ReferenceLaw::arcsine() {
    return {"arcsine", [](double x) {
                if (x <= 0.0) return 0.0;
                if (x >= 1.0) return 1.0;
                return 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
            }};
}

ReferenceLaw ReferenceLaw::point_mass(double at) {
    std::ostringstream name;
    name << "point_mass(" << at << ")";
    return {name.str(), [at](double x) { return x >= at ? 1.0 : 0.0; }};
}

ReferenceLaw reference_cdf(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto number = [&](double fallback) {
        if (arg.empty()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorKind::Parameter, "cannot parse law parameter '" + arg + "'");
        }
    };
    if (head == "normal") return ReferenceLaw::normal(number(1.0));
    if (head == "brownian_sup") return ReferenceLaw::brownian_sup();
    if (head == "arcsine") return ReferenceLaw::arcsine();
    if (head == "point_mass") return ReferenceLaw::point_mass(number(0.0));
    throw Error(ErrorKind::Parameter, "unknown reference law '" + spec + "'");
}

KSResult ks_statistic(std::vector<double> samples, const ReferenceLaw& law, double threshold) {
    if (samples.size() < 100) throw Error(ErrorKind::InvalidInput, "KS statistic needs at least 100 samples");
    for (double s : samples) {
        if (std::isnan(s)) throw Error(ErrorKind::InvalidInput, "NaN sample");
    }
    std::sort(samples.begin(), samples.end());
    const double m = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = law.cdf(samples[i]);
        const double above = static_cast<double>(i + 1) / m - f;
        const double below = f - static_cast<double>(i) / m;
        d = std::max(d, std::max(above, below));
    }
    d = std::clamp(d, 0.0, 1.0);
    return KSResult{d, samples.size(), threshold, d < threshold};
}

bool LimitTestReport::all_pass() const noexcept {
    return std::all_of(tests.begin(), tests.end(), [](const LimitTest& t) { return t.pass; });
}

double clt_threshold(std::size_t samples, std::size_t n, double c_be) noexcept {
    return 1.95 / std::sqrt(static_cast<double>(samples)) + c_be / std::sqrt(static_cast<double>(n));
}

LimitTest clt_test(const std::vector<double>& sums, std::size_t n, double sigma, double h_l2,
                   const LimitTestOptions& options) {
    if (!(sigma >= 0.0)) throw Error(ErrorKind::Parameter, "sigma must be >= 0");
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> scaled(sums.size());
    std::transform(sums.begin(), sums.end(), scaled.begin(), [root_n](double s) { return s / root_n; });

    if (sigma == 0.0) {
        // Point-mass limit: the rescaled sums must concentrate at 0.
        for (double& v : scaled) v = std::abs(v);
        std::sort(scaled.begin(), scaled.end());
        const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(scaled.size()))) - 1;
        const double q99 = scaled[std::min(k, scaled.size() - 1)];
        const double threshold = 0.05 * h_l2;
        return {"clt", q99, threshold, q99 < threshold, "degenerate: 0.99 quantile of |S_n/sqrt(n)| vs 0.05 ||h||_2"};
    }
    const double threshold = clt_threshold(sums.size(), n, options.c_be);
    const auto ks = ks_statistic(std::move(scaled), ReferenceLaw::normal(sigma), threshold);
    return {"clt", ks.statistic, threshold, ks.pass, "KS of S_n/sqrt(n) vs normal(sigma)"};
}

LimitTest clt_test(const IntervalMap& map, const Observable& h, double sigma, double h_l2,
                   const EnsembleConfig& config, const LimitTestOptions& options) {
    return clt_test(birkhoff_ensemble(map, h, config), config.length, sigma, h_l2, options);
}

std::vector<LimitTest> fclt_test(const std::vector<PathSample>& paths, std::size_t n,
                                 const LimitTestOptions& options) {
    std::vector<double> terminal;
    std::vector<double> sup;
    std::vector<double> occupation;
    for (const auto& p : paths) {
        terminal.push_back(p.terminal);
        sup.push_back(p.sup);
        occupation.push_back(p.occupation);
    }
    const double base = clt_threshold(paths.size(), n, options.c_be);
    const double wide = base + options.discretization;
    const auto t = ks_statistic(std::move(terminal), ReferenceLaw::normal(1.0), base);
    const auto s = ks_statistic(std::move(sup), ReferenceLaw::brownian_sup(), wide);
    const auto o = ks_statistic(std::move(occupation), ReferenceLaw::arcsine(), wide);
    return {
        {"fclt_terminal", t.statistic, t.threshold, t.pass, "psi(1) vs normal(1)"},
        {"fclt_sup", s.statistic, s.threshold, s.pass, "max psi vs 2 Phi(a) - 1"},
        {"fclt_occupation", o.statistic, o.threshold, o.pass, "time with psi > 0 vs arcsine law"},
    };
}

std::vector<LimitTest> fclt_test(const IntervalMap& map, const Observable& h, double sigma,
                                 const EnsembleConfig& config, std::size_t m, const LimitTestOptions& options) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::Precondition, "FCLT test needs sigma > 0");
    return fclt_test(path_ensemble(map, h, sigma, config, m), config.length, options);
}

nlohmann::json to_json(const LimitTest& t) {
    return nlohmann::json{{"name", t.name},
                          {"statistic", json_number(t.statistic)},
                          {"threshold", json_number(t.threshold)},
                          {"verdict", t.pass ? "pass" : "fail"},
                          {"note", t.note}};
}

nlohmann::json to_json(const LimitTestReport& r) {
    nlohmann::json sigmas = nlohmann::json::object();
    for (const auto& s : r.sigmas) sigmas[s.provenance] = json_number(s.value);
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : r.tests) tests.push_back(to_json(t));
    return nlohmann::json{{"sigma", sigmas},
                          {"sigma_used", r.sigma_used},
                          {"tests", tests},
                          {"verdict", r.all_pass() ? "pass" : "fail"}};
}

}  // namespace ergolab
