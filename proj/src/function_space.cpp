#include "ergolab/function_space.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ergolab/error.hpp"

namespace ergolab {

const char* to_string(GridKind kind) noexcept {
    return kind == GridKind::Uniform ? "uniform" : "arcsine";
}

const char* to_string(DensitySource source) noexcept {
    return source == DensitySource::ClosedForm ? "closed-form" : "numerically-estimated";
}

// ---------------------------------------------------------------------------
// QuadratureGrid

QuadratureGrid::QuadratureGrid(GridKind kind, double lower, double upper, std::size_t cells)
    : kind_(kind), lower_(lower), upper_(upper) {
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
        throw Error(ErrorKind::InvalidInput, "grid domain must be a finite interval with lower < upper");
    }
    if (cells < 2) {
        throw Error(ErrorKind::InvalidInput, "grid needs at least 2 cells");
    }
    const auto n = static_cast<double>(cells);
    edges_.resize(cells + 1);
    nodes_.resize(cells);
    // Build the lower half and mirror it so that symmetric domains get exactly
    // symmetric nodes.
    const double mid = 0.5 * (lower_ + upper_);
    for (std::size_t i = 0; i <= cells; ++i) {
        if (2 * i <= cells) {
            edges_[i] = from_unit(static_cast<double>(i) / n);
        } else {
            edges_[i] = 2.0 * mid - edges_[cells - i];
        }
    }
    edges_.front() = lower_;
    edges_.back() = upper_;
    for (std::size_t i = 0; i < cells; ++i) {
        if (2 * i + 1 <= cells) {
            nodes_[i] = from_unit((static_cast<double>(i) + 0.5) / n);
        } else {
            nodes_[i] = 2.0 * mid - nodes_[cells - 1 - i];
        }
    }
    weights_.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        weights_[i] = edges_[i + 1] - edges_[i];
    }
}

std::shared_ptr<const QuadratureGrid> QuadratureGrid::uniform(double lower, double upper, std::size_t cells) {
    return std::shared_ptr<const QuadratureGrid>(new QuadratureGrid(GridKind::Uniform, lower, upper, cells));
}

std::shared_ptr<const QuadratureGrid> QuadratureGrid::arcsine(double lower, double upper, std::size_t cells) {
    return std::shared_ptr<const QuadratureGrid>(new QuadratureGrid(GridKind::Arcsine, lower, upper, cells));
}

int QuadratureGrid::exact_degree() const noexcept {
    // Midpoint rule: linear polynomials. Gauss-Chebyshev: 2N - 1.
    return kind_ == GridKind::Uniform ? 1 : static_cast<int>(2 * size() - 1);
}

double QuadratureGrid::from_unit(double u) const noexcept {
    if (kind_ == GridKind::Uniform) {
        return lower_ + (upper_ - lower_) * u;
    }
    const double mid = 0.5 * (lower_ + upper_);
    const double radius = 0.5 * (upper_ - lower_);
    return mid - radius * std::cos(std::numbers::pi * u);
}

double QuadratureGrid::to_unit(double y) const noexcept {
    if (kind_ == GridKind::Uniform) {
        return (y - lower_) / (upper_ - lower_);
    }
    const double mid = 0.5 * (lower_ + upper_);
    const double radius = 0.5 * (upper_ - lower_);
    const double c = std::clamp((mid - y) / radius, -1.0, 1.0);
    return std::acos(c) / std::numbers::pi;
}

std::size_t QuadratureGrid::cell_of(double y) const noexcept {
    const double t = to_unit(y) * static_cast<double>(size());
    if (!(t > 0.0)) return 0;
    const auto i = static_cast<std::size_t>(t);
    return std::min(i, size() - 1);
}

InterpStencil QuadratureGrid::stencil(double y, std::size_t first, std::size_t last) const noexcept {
    const double t = to_unit(y) * static_cast<double>(size()) - 0.5;
    if (!(t > static_cast<double>(first))) return {first, first, 1.0, 0.0};
    if (!(t < static_cast<double>(last))) return {last, last, 1.0, 0.0};
    auto i = static_cast<std::size_t>(t);
    if (i >= last) i = last - 1;
    const double frac = t - static_cast<double>(i);
    return {i, i + 1, 1.0 - frac, frac};
}

double QuadratureGrid::interpolate(std::span<const double> values, double y) const noexcept {
    const auto s = stencil(y);
    return s.w_lo * values[s.lo] + s.w_hi * values[s.hi];
}

bool QuadratureGrid::same_as(const QuadratureGrid& other) const noexcept {
    return this == &other || (kind_ == other.kind_ && lower_ == other.lower_ && upper_ == other.upper_ &&
                              size() == other.size());
}

// ---------------------------------------------------------------------------
// MeasureDensity

MeasureDensity::MeasureDensity(std::string name, std::shared_ptr<const QuadratureGrid> grid,
                               std::vector<double> masses, DensitySource source,
                               std::function<double(double)> pdf, std::optional<PowerLaw> left_tail)
    : name_(std::move(name)),
      grid_(std::move(grid)),
      masses_(std::move(masses)),
      source_(source),
      pdf_(std::move(pdf)),
      left_tail_(left_tail) {
    if (!grid_) throw Error(ErrorKind::InvalidInput, "measure needs a grid");
    if (masses_.size() != grid_->size()) {
        throw Error(ErrorKind::InvalidInput, "measure has " + std::to_string(masses_.size()) +
                                                 " cell masses for a grid of " + std::to_string(grid_->size()));
    }
    for (double m : masses_) {
        if (!std::isfinite(m) || m < 0.0) throw Error(ErrorKind::InvalidInput, "cell masses must be finite and >= 0");
    }
    if (!normalized()) {
        std::ostringstream msg;
        msg << "measure '" << name_ << "' is not normalized (total mass " << std::setprecision(12) << total_mass()
            << ")";
        throw Error(ErrorKind::InvalidInput, msg.str());
    }
    const auto w = grid_->weights();
    values_.resize(masses_.size());
    for (std::size_t i = 0; i < masses_.size(); ++i) values_[i] = masses_[i] / w[i];
}

std::shared_ptr<const MeasureDensity> MeasureDensity::from_cdf(std::string name,
                                                               std::shared_ptr<const QuadratureGrid> grid,
                                                               const std::function<double(double)>& cdf,
                                                               std::function<double(double)> pdf) {
    const auto edges = grid->edges();
    std::vector<double> masses(grid->size());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] = cdf(edges[i + 1]) - cdf(edges[i]);
    return std::make_shared<const MeasureDensity>(std::move(name), std::move(grid), std::move(masses),
                                                  DensitySource::ClosedForm, std::move(pdf));
}

std::shared_ptr<const MeasureDensity> MeasureDensity::from_masses(std::string name,
                                                                  std::shared_ptr<const QuadratureGrid> grid,
                                                                  std::vector<double> masses,
                                                                  std::optional<PowerLaw> left_tail) {
    double total = 0.0;
    for (double m : masses) total += m;
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw Error(ErrorKind::DegenerateMeasure, "cannot normalize a measure with total mass " +
                                                      std::to_string(total));
    }
    for (double& m : masses) m /= total;
    return std::make_shared<const MeasureDensity>(std::move(name), std::move(grid), std::move(masses),
                                                  DensitySource::Numerical, std::function<double(double)>{},
                                                  left_tail);
}

double MeasureDensity::density_at(double y) const {
    if (pdf_) return pdf_(y);
    if (left_tail_ && y <= left_tail_->upto) {
        const double r = std::max(y - grid_->lower(), 1e-300);
        return left_tail_->coefficient * std::pow(r, left_tail_->exponent);
    }
    return grid_->interpolate(values_, y);
}

double MeasureDensity::total_mass() const noexcept {
    double total = 0.0;
    for (double m : masses_) total += m;
    return total;
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(std::shared_ptr<const MeasureDensity> measure, std::vector<double> values)
    : measure_(std::move(measure)), values_(std::move(values)) {
    if (!measure_) throw Error(ErrorKind::InvalidInput, "grid function needs a measure");
    if (values_.size() != measure_->grid().size()) {
        throw Error(ErrorKind::InvalidInput, "grid function has " + std::to_string(values_.size()) +
                                                 " values for a grid of " + std::to_string(measure_->grid().size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw Error(ErrorKind::InvalidInput, "non-finite value at node " + std::to_string(i));
        }
    }
}

GridFunction GridFunction::sample(std::shared_ptr<const MeasureDensity> measure,
                                  const std::function<double(double)>& fn) {
    const auto nodes = measure->grid().nodes();
    std::vector<double> values(nodes.size());
    std::transform(nodes.begin(), nodes.end(), values.begin(), fn);
    return GridFunction(std::move(measure), std::move(values));
}

GridFunction GridFunction::constant(std::shared_ptr<const MeasureDensity> measure, double value) {
    std::vector<double> values(measure->grid().size(), value);
    return GridFunction(std::move(measure), std::move(values));
}

bool GridFunction::compatible(const GridFunction& other) const noexcept {
    if (measure_ == other.measure_) return true;
    if (!grid().same_as(other.grid())) return false;
    const auto a = measure_->masses();
    const auto b = other.measure_->masses();
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

void require_compatible(const GridFunction& f, const GridFunction& g) {
    if (!f.compatible(g)) {
        throw Error(ErrorKind::IncompatibleGrids, "grid functions live on different grids or measures ('" +
                                                      f.measure().name() + "' vs '" + g.measure().name() + "')");
    }
}

}  // namespace

GridFunction& GridFunction::operator+=(const GridFunction& rhs) {
    require_compatible(*this, rhs);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& rhs) {
    require_compatible(*this, rhs);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

GridFunction operator+(GridFunction lhs, const GridFunction& rhs) { return lhs += rhs; }
GridFunction operator-(GridFunction lhs, const GridFunction& rhs) { return lhs -= rhs; }
GridFunction operator*(GridFunction f, double c) { return f *= c; }
GridFunction operator*(double c, GridFunction f) { return f *= c; }

GridFunction product(const GridFunction& f, const GridFunction& g) {
    require_compatible(f, g);
    std::vector<double> values(f.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = f[i] * g[i];
    return f.with_values(std::move(values));
}

double integrate(const GridFunction& f) {
    const auto m = f.measure().masses();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * m[i];
    return total;
}

double lp_norm(const GridFunction& f, Norm p) {
    const auto m = f.measure().masses();
    switch (p) {
        case Norm::L1: {
            double total = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) total += std::abs(f[i]) * m[i];
            return total;
        }
        case Norm::L2: {
            double total = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * f[i] * m[i];
            return std::sqrt(total);
        }
        case Norm::Linf: {
            double best = 0.0;
            for (double v : f.values()) best = std::max(best, std::abs(v));
            return best;
        }
    }
    return 0.0;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
    require_compatible(f, g);
    const auto m = f.measure().masses();
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * g[i] * m[i];
    return total;
}

GridFunction centered(const GridFunction& f) {
    const double mean = integrate(f);
    std::vector<double> values(f.values().begin(), f.values().end());
    for (double& v : values) v -= mean;
    return f.with_values(std::move(values));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void write_rows(std::ostream& out, std::span<const double> nodes, std::span<const double> values) {
    const auto old = out.precision(17);
    out << "node,value\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) out << nodes[i] << ',' << values[i] << '\n';
    out.precision(old);
}

struct CsvRows {
    std::vector<double> nodes;
    std::vector<double> values;
    std::string header;
};

CsvRows read_rows(std::istream& in) {
    CsvRows rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            rows.header = line;
            continue;
        }
        if (line.rfind("node", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorKind::Io, "malformed CSV row: " + line);
        try {
            rows.nodes.push_back(std::stod(line.substr(0, comma)));
            rows.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, "malformed CSV row: " + line);
        }
    }
    return rows;
}

void check_nodes(const QuadratureGrid& grid, std::span<const double> nodes) {
    if (nodes.size() != grid.size()) {
        throw Error(ErrorKind::IncompatibleGrids, "CSV has " + std::to_string(nodes.size()) + " rows, grid has " +
                                                      std::to_string(grid.size()) + " nodes");
    }
    const auto expected = grid.nodes();
    const double tol = 1e-12 * std::max(1.0, grid.length());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (std::abs(nodes[i] - expected[i]) > tol) {
            throw Error(ErrorKind::IncompatibleGrids, "CSV node " + std::to_string(i) + " does not match the grid");
        }
    }
}

}  // namespace

void write_csv(std::ostream& out, const GridFunction& f) { write_rows(out, f.grid().nodes(), f.values()); }

void write_csv(std::ostream& out, const MeasureDensity& measure) {
    out << "# measure=" << measure.name() << " normalized=" << (measure.normalized() ? "true" : "false") << '\n';
    write_rows(out, measure.grid().nodes(), measure.values());
}

GridFunction read_grid_function_csv(std::istream& in, std::shared_ptr<const MeasureDensity> measure) {
    auto rows = read_rows(in);
    check_nodes(measure->grid(), rows.nodes);
    return GridFunction(std::move(measure), std::move(rows.values));
}

std::shared_ptr<const MeasureDensity> read_measure_csv(std::istream& in, std::shared_ptr<const QuadratureGrid> grid) {
    auto rows = read_rows(in);
    check_nodes(*grid, rows.nodes);
    std::string name = "measure";
    if (const auto pos = rows.header.find("measure="); pos != std::string::npos) {
        const auto end = rows.header.find(' ', pos);
        name = rows.header.substr(pos + 8, end == std::string::npos ? std::string::npos : end - pos - 8);
    }
    const auto w = grid->weights();
    std::vector<double> masses(rows.values.size());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] = rows.values[i] * w[i];
    return MeasureDensity::from_masses(std::move(name), std::move(grid), std::move(masses));
}

}  // namespace ergolab
