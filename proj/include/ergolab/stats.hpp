#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergolab/maps.hpp"
#include "ergolab/montecarlo.hpp"
#include "ergolab/observable.hpp"

namespace ergolab {

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 (|error| < 7.5e-8).
double normal_cdf(double x) noexcept;

struct ReferenceLaw {
    std::string name;
    std::function<double(double)> cdf;

    /// N(0, sigma^2); sigma = 0 is the unit step at 0.
    static ReferenceLaw normal(double sigma);
    /// Supremum of standard Brownian motion on [0,1]: 2 Phi(a) - 1 for a >= 0.
    static ReferenceLaw brownian_sup();
    /// (2/pi) arcsin(sqrt x) on [0,1].
    static ReferenceLaw arcsine();
    static ReferenceLaw point_mass(double at = 0.0);
};

/// Accepts "normal:SIGMA", "brownian_sup", "arcsine", "point_mass[:AT]".
ReferenceLaw reference_cdf(const std::string& spec);

struct KSResult {
    double statistic;
    std::size_t samples;
    double threshold;
    bool pass;
};

/// sup |F_emp - F_ref| over the sorted samples, checking both sides of each jump.
KSResult ks_statistic(std::vector<double> samples, const ReferenceLaw& law, double threshold = 1.0);

struct LimitTest {
    std::string name;
    double statistic;
    double threshold;
    bool pass;
    std::string note;
};

struct SigmaEstimate {
    std::string provenance;  // green_kubo | variance_growth | martingale_norm
    double value;
};

struct LimitTestReport {
    std::vector<SigmaEstimate> sigmas;
    std::string sigma_used;
    std::vector<LimitTest> tests;
    bool all_pass() const noexcept;
};

struct LimitTestOptions {
    double c_be = 1.0;            // finite-n allowance C_be / sqrt(n)
    double discretization = 0.01;  // extra allowance for the sup and occupation tests
};

double clt_threshold(std::size_t samples, std::size_t n, double c_be) noexcept;

/// KS of S_n / sqrt(n) against N(0, sigma^2). For sigma = 0 the verdict is
/// q99(|S_n / sqrt n|) < 0.05 ||h||_2 instead.
LimitTest clt_test(const std::vector<double>& sums, std::size_t n, double sigma, double h_l2,
                   const LimitTestOptions& options = {});
LimitTest clt_test(const IntervalMap& map, const Observable& h, double sigma, double h_l2,
                   const EnsembleConfig& config, const LimitTestOptions& options = {});

/// Terminal vs N(0,1), sup vs brownian_sup, occupation vs arcsine.
std::vector<LimitTest> fclt_test(const std::vector<PathSample>& paths, std::size_t n,
                                 const LimitTestOptions& options = {});
std::vector<LimitTest> fclt_test(const IntervalMap& map, const Observable& h, double sigma,
                                 const EnsembleConfig& config, std::size_t m, const LimitTestOptions& options = {});

nlohmann::json to_json(const LimitTest& t);
nlohmann::json to_json(const LimitTestReport& r);

}  // namespace ergolab
