#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ergolab/function_space.hpp"
#include "ergolab/maps.hpp"

namespace ergolab {

/// Row-stochastic Ulam matrix in CSR form: M_ij = Leb(A_i ∩ T^{-1} A_j) / Leb(A_i).
struct UlamMatrix {
    std::string map_name;
    std::shared_ptr<const QuadratureGrid> grid;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> weight;

    std::size_t size() const noexcept { return grid->size(); }
    std::size_t nonzeros() const noexcept { return weight.size(); }
    double row_sum(std::size_t i) const noexcept;
    /// out_j = sum_i v_i M_ij.
    void left_multiply(std::span<const double> v, std::span<double> out) const;
};

/// Ulam matrix on the cells of `grid` (which must cover the map's domain).
UlamMatrix ulam_matrix(const IntervalMap& map, std::shared_ptr<const QuadratureGrid> grid);
/// Ulam matrix on N cells of the map's preferred grid kind.
UlamMatrix ulam_matrix(const IntervalMap& map, std::size_t cells);

void write_ulam(std::ostream& out, const UlamMatrix& m);

std::shared_ptr<const QuadratureGrid> default_grid(const IntervalMap& map, std::size_t cells);

enum class Backend { BranchSum, Ulam };
const char* to_string(Backend b) noexcept;

/**
 * Linear transfer operator acting on node values, stored as a sparse stencil.
 *
 * Branch-sum: (Pf)(x) = sum over preimages y of f(y) rho(y) / (rho(x) |T'(y)|),
 * with f(y) interpolated from nodes of y's own branch.
 * Ulam: (Pf)_j = sum_i m_i M_ij f_i / sum_i m_i M_ij.
 *
 * When the measure is only numerically invariant the rows are renormalized
 * (P1 = 1) and a rank-one term keeps the nu-mean of Pf equal to that of f.
 */
class TransferOperator {
public:
    static TransferOperator branch_sum(const IntervalMap& map, std::shared_ptr<const MeasureDensity> measure);
    static TransferOperator ulam(const UlamMatrix& matrix, std::shared_ptr<const MeasureDensity> measure);

    Backend backend() const noexcept { return backend_; }
    const std::string& map_name() const noexcept { return map_name_; }
    const MeasureDensity& measure() const noexcept { return *measure_; }
    const std::shared_ptr<const MeasureDensity>& measure_ptr() const noexcept { return measure_; }
    bool mean_corrected() const noexcept { return !correction_.empty(); }

    void apply(std::span<const double> in, std::span<double> out) const;
    GridFunction apply(const GridFunction& f) const;

private:
    TransferOperator() = default;
    void finish(bool numerical);

    Backend backend_ = Backend::BranchSum;
    std::string map_name_;
    std::shared_ptr<const MeasureDensity> measure_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_;
    std::vector<double> weight_;
    std::vector<double> correction_;
};

/// (f o T)(x_i) with f interpolated linearly between nodes.
GridFunction koopman_apply(const IntervalMap& map, const GridFunction& f);

/// One branch-sum application against the measure attached to f.
GridFunction transfer_apply(const IntervalMap& map, const GridFunction& f);

/// [Pf, P^2 f, ..., P^n f].
std::vector<GridFunction> transfer_power(const TransferOperator& op, const GridFunction& f, std::size_t n);

/// |<P^n f, g> - integral of f * (g o T^n)|, with T^n iterated pointwise at
/// the nodes.
double duality_residual(const IntervalMap& map, const TransferOperator& op, const GridFunction& f,
                        const GridFunction& g, std::size_t n);

struct InvariantDensityOptions {
    std::size_t oversample = 0;  // 0: automatic (fine cells only for maps with a neutral fixed point)
    std::size_t max_iter = 100000;
};

struct InvariantDensityResult {
    std::shared_ptr<const MeasureDensity> density;  // on the requested N cells
    std::shared_ptr<const MeasureDensity> fine;     // on the oversampled cells (== density without oversampling)
    std::size_t iterations = 0;
    double last_change = 0.0;
};

/// Left fixed vector of the Ulam matrix by power iteration from the uniform
/// vector, L1-normalized each step, stopped when successive iterates differ
/// by less than tol in L1.
InvariantDensityResult invariant_density(const IntervalMap& map, std::size_t cells, double tol,
                                         const InvariantDensityOptions& options = {});

/// Exponent e in density ~ c (y - lower)^e, from a log-log fit of cumulative
/// mass over the first `cells` cell edges.
PowerLaw fit_left_power_law(const MeasureDensity& measure, std::size_t cells);

}  // namespace ergolab
