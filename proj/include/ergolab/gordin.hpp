#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergolab/decay.hpp"
#include "ergolab/function_space.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/transfer.hpp"

namespace ergolab {

struct Resolvent {
    GridFunction f;
    std::size_t terms;
    double tail_bound;  // bound on the norm of the discarded series tail
};

/// f_eps = sum_{k>=1} P^{k-1} h / (1+eps)^k, truncated once the geometric
/// tail bound drops below tail_tol. At most 1e5 terms.
Resolvent resolvent(const TransferOperator& op, const GridFunction& h, double eps, double tail_tol);

/// h_eps = f_eps - U P f_eps.
GridFunction martingale_part(const IntervalMap& map, const TransferOperator& op, const GridFunction& h, double eps,
                             double tail_tol);

/// ||(1+eps) f_eps - P f_eps - h||_2.
double resolvent_identity_residual(const TransferOperator& op, const GridFunction& h, const GridFunction& f_eps,
                                   double eps);

struct CauchyPair {
    int k;         // pair (delta_{k-1}, delta_k)
    double eps;    // delta_{k-1}
    double delta;  // delta_k
    double increment;  // ||h_eps - h_delta||_2
    double bound;      // (eps + delta)(||f_eps||^2 + ||f_delta||^2)
    double slack;      // bound - increment^2
};

struct GordinOptions {
    int k_max = 12;
    double tail_tol = 0.0;  // 0: 1e-6 * ||h||_2
};

struct GordinDecomposition {
    std::vector<double> schedule;        // delta_k = 2^{-k}, k = 0..k_max
    std::vector<std::size_t> terms;      // series length per delta_k
    std::vector<double> f_norms;         // ||f_{delta_k}||_2
    std::vector<double> resolvent_residuals;
    std::vector<double> martingale_residuals;  // ||P h_{delta_k}||_2
    std::vector<CauchyPair> cauchy;
    GridFunction f_eps;  // at the final delta
    GridFunction h_eps;
    GridFunction h_tilde;
    double tail_tol;
    double sigma_mart;           // ||h_tilde||_2
    double martingale_residual;  // ||P h_tilde||_2
    std::vector<std::string> warnings;
};

GordinDecomposition gordin_decompose(const IntervalMap& map, const TransferOperator& op, const GridFunction& h,
                                     const GordinOptions& options = {});

enum class Verdict { Coboundary, NotCoboundary, Indeterminate };
const char* to_string(Verdict v) noexcept;

struct CoboundaryResult {
    Verdict verdict;
    GridFunction f;
    double residual;  // ||U f - f - h||_2
    Flag cesaro_bounded;
    std::vector<double> cesaro;
    double tol;
};

/// f~ = sum_{k=0}^{n_max} P^k h, f = P f~, residual = ||U f - f - h||_2.
CoboundaryResult coboundary_detect(const IntervalMap& map, const TransferOperator& op, const GridFunction& h,
                                   std::size_t n_max = 256, double tol = 1e-3);

nlohmann::json to_json(const GordinDecomposition& d);
nlohmann::json to_json(const CoboundaryResult& c);

}  // namespace ergolab
