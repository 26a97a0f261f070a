#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergolab/function_space.hpp"
#include "ergolab/transfer.hpp"

namespace ergolab {

enum class Flag { Pass, Fail, Unknown };
const char* to_string(Flag f) noexcept;

struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double max_log_residual = 0.0;
    std::size_t n_lo = 0;
    std::size_t n_hi = 0;
};

/// Least-squares line through (log n, log seq_n) for n_lo <= n <= n_hi,
/// where seq[0] holds n = 1.
RateFit fit_polynomial_rate(std::span<const double> seq, std::size_t n_lo, std::size_t n_hi);

/// [||P^n h||_p] for n = 1..n_max (p = L1 or L2).
std::vector<double> norm_decay_sequence(const TransferOperator& op, const GridFunction& h, Norm p, std::size_t n_max);

/// [||sum_{k<n} P^k h||_2] for n = 1..n_max.
std::vector<double> cesaro_norm_sequence(const TransferOperator& op, const GridFunction& h, std::size_t n_max);

struct DecayOptions {
    std::size_t n_max = 256;
    double margin = 0.05;
    std::size_t fit_lo = 8;
    std::size_t fit_hi = 64;  // clipped to n_max
};

struct DecayFlags {
    Flag l2_rate_beyond_half = Flag::Unknown;
    Flag weighted_l2_summable = Flag::Unknown;
    Flag cesaro_growth_below_half = Flag::Unknown;
    Flag coboundary_bounded = Flag::Unknown;
};

struct DecayReport {
    std::string map_name;
    std::string observable;
    Backend backend = Backend::BranchSum;
    std::vector<double> l1;
    std::vector<double> l2;
    std::vector<double> cesaro;
    bool annihilated = false;  // P h vanished to rounding: decay faster than any power
    RateFit l1_fit;
    RateFit l2_fit;
    RateFit cesaro_fit;
    double weighted_sum_increment = 0.0;  // relative growth of sum n^{-1/2} ||P^n h||_2 over the last quarter
    DecayFlags flags;
    /// max_n of ||P^n h||_2 - sqrt(||h||_inf ||P^n h||_1); positive values
    /// violate the interpolation inequality.
    double interpolation_gap = 0.0;
    std::vector<std::string> diagnostics;
};

/// Computes all sequences from one pass of iterates and sets the flags.
/// Requires a centered h (|mean| <= 1e-6) and n_max >= 32.
DecayReport classify_conditions(const std::string& map_name, const std::string& observable, const TransferOperator& op,
                                const GridFunction& h, const DecayOptions& options = {});

nlohmann::json to_json(const DecayReport& report);
void write_decay_csv(std::ostream& out, const DecayReport& report);

/// Finite doubles as numbers, everything else as null.
nlohmann::json json_number(double v);

}  // namespace ergolab
