#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ergolab {

enum class GridKind {
    Uniform,  // equal cells, nodes at cell centers
    Arcsine,  // cells equal in theta = arccos, nodes at Gauss-Chebyshev points
};

const char* to_string(GridKind kind) noexcept;

/// Two-point linear interpolation stencil. `lo == hi` with w_lo = 1 marks
/// constant extrapolation.
struct InterpStencil {
    std::size_t lo;
    std::size_t hi;
    double w_lo;
    double w_hi;
};

/**
 * Cell-based quadrature grid on a closed interval.
 *
 * The grid is the image of N equal cells of the unit interval under a monotone
 * coordinate map u -> y. Nodes are images of cell centers, weights are the
 * Lebesgue lengths of the image cells. Interpolation is linear in u, which
 * makes the arcsine grid interpolate in the angle variable.
 */
class QuadratureGrid {
public:
    static std::shared_ptr<const QuadratureGrid> uniform(double lower, double upper, std::size_t cells);
    static std::shared_ptr<const QuadratureGrid> arcsine(double lower, double upper, std::size_t cells);

    GridKind kind() const noexcept { return kind_; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double length() const noexcept { return upper_ - lower_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> edges() const noexcept { return edges_; }

    /// Highest polynomial degree integrated exactly against the grid's
    /// natural measure (Lebesgue for uniform, arcsine for arcsine grids).
    int exact_degree() const noexcept;

    double to_unit(double y) const noexcept;
    double from_unit(double u) const noexcept;

    /// Index of the cell containing y (clamped to the grid).
    std::size_t cell_of(double y) const noexcept;

    /// Interpolation stencil using only nodes first..last (inclusive); points
    /// outside that node range get constant extrapolation.
    InterpStencil stencil(double y, std::size_t first, std::size_t last) const noexcept;
    InterpStencil stencil(double y) const noexcept { return stencil(y, 0, size() - 1); }

    double interpolate(std::span<const double> values, double y) const noexcept;

    bool same_as(const QuadratureGrid& other) const noexcept;

private:
    QuadratureGrid(GridKind kind, double lower, double upper, std::size_t cells);

    GridKind kind_;
    double lower_;
    double upper_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> edges_;
};

enum class DensitySource { ClosedForm, Numerical };

const char* to_string(DensitySource source) noexcept;

/// Density model c * y^exponent used next to a singular left endpoint.
struct PowerLaw {
    double coefficient;
    double exponent;
    double upto;  // the model replaces interpolation for lower <= y <= upto
};

/**
 * Probability measure on a QuadratureGrid, stored as exact cell masses.
 *
 * `values()` are cell-average densities (mass / cell width). `density_at`
 * evaluates the pointwise density: the closed form when one is attached,
 * otherwise interpolated cell averages (with an optional power-law model near
 * a singular left endpoint).
 */
class MeasureDensity {
public:
    MeasureDensity(std::string name, std::shared_ptr<const QuadratureGrid> grid, std::vector<double> masses,
                   DensitySource source, std::function<double(double)> pdf = {},
                   std::optional<PowerLaw> left_tail = std::nullopt);

    /// Cell masses from CDF differences of a closed-form law.
    static std::shared_ptr<const MeasureDensity> from_cdf(std::string name, std::shared_ptr<const QuadratureGrid> grid,
                                                          const std::function<double(double)>& cdf,
                                                          std::function<double(double)> pdf);

    /// Normalizes the given non-negative cell masses.
    static std::shared_ptr<const MeasureDensity> from_masses(std::string name,
                                                             std::shared_ptr<const QuadratureGrid> grid,
                                                             std::vector<double> masses,
                                                             std::optional<PowerLaw> left_tail = std::nullopt);

    const std::string& name() const noexcept { return name_; }
    DensitySource source() const noexcept { return source_; }
    const QuadratureGrid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const QuadratureGrid>& grid_ptr() const noexcept { return grid_; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::span<const double> values() const noexcept { return values_; }
    const std::optional<PowerLaw>& left_tail() const noexcept { return left_tail_; }
    bool has_closed_form() const noexcept { return static_cast<bool>(pdf_); }

    double density_at(double y) const;
    double total_mass() const noexcept;
    bool normalized(double tol = 1e-8) const noexcept { return std::abs(total_mass() - 1.0) <= tol; }

private:
    std::string name_;
    std::shared_ptr<const QuadratureGrid> grid_;
    std::vector<double> masses_;
    std::vector<double> values_;
    DensitySource source_;
    std::function<double(double)> pdf_;
    std::optional<PowerLaw> left_tail_;
};

/// Observable sampled at the nodes of a measure's grid.
class GridFunction {
public:
    GridFunction(std::shared_ptr<const MeasureDensity> measure, std::vector<double> values);

    static GridFunction sample(std::shared_ptr<const MeasureDensity> measure, const std::function<double(double)>& fn);
    static GridFunction constant(std::shared_ptr<const MeasureDensity> measure, double value);

    const MeasureDensity& measure() const noexcept { return *measure_; }
    const std::shared_ptr<const MeasureDensity>& measure_ptr() const noexcept { return measure_; }
    const QuadratureGrid& grid() const noexcept { return measure_->grid(); }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    /// Linear interpolation with constant extrapolation.
    double at(double y) const noexcept { return grid().interpolate(values_, y); }

    /// Same measure and grid; pointwise arithmetic requires this.
    bool compatible(const GridFunction& other) const noexcept;

    GridFunction with_values(std::vector<double> values) const { return GridFunction(measure_, std::move(values)); }

    GridFunction& operator+=(const GridFunction& rhs);
    GridFunction& operator-=(const GridFunction& rhs);
    GridFunction& operator*=(double c);

private:
    std::shared_ptr<const MeasureDensity> measure_;
    std::vector<double> values_;
};

GridFunction operator+(GridFunction lhs, const GridFunction& rhs);
GridFunction operator-(GridFunction lhs, const GridFunction& rhs);
GridFunction operator*(GridFunction f, double c);
GridFunction operator*(double c, GridFunction f);
/// Pointwise product.
GridFunction product(const GridFunction& f, const GridFunction& g);

enum class Norm { L1, L2, Linf };

/// Quadrature of f against its measure: sum_i f(x_i) * mass_i.
double integrate(const GridFunction& f);
double lp_norm(const GridFunction& f, Norm p);
double inner_product(const GridFunction& f, const GridFunction& g);
/// Subtracts the quadrature mean.
GridFunction centered(const GridFunction& f);

void write_csv(std::ostream& out, const GridFunction& f);
/// Density values as `node,value`, preceded by `# measure=<name> normalized=<bool>`.
void write_csv(std::ostream& out, const MeasureDensity& measure);

/// Reads `node,value` rows and checks the nodes against the measure's grid.
GridFunction read_grid_function_csv(std::istream& in, std::shared_ptr<const MeasureDensity> measure);
/// Reads a density CSV written by write_csv(MeasureDensity) onto `grid`.
std::shared_ptr<const MeasureDensity> read_measure_csv(std::istream& in, std::shared_ptr<const QuadratureGrid> grid);

}  // namespace ergolab
