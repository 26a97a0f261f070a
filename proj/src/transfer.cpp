#include "ergolab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "ergolab/error.hpp"

namespace ergolab {

const char* to_string(Backend b) noexcept { return b == Backend::BranchSum ? "branch-sum" : "ulam"; }

double UlamMatrix::row_sum(std::size_t i) const noexcept {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += weight[k];
    return s;
}

void UlamMatrix::left_multiply(std::span<const double> v, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) out[col[k]] += vi * weight[k];
    }
}

std::shared_ptr<const QuadratureGrid> default_grid(const IntervalMap& map, std::size_t cells) {
    return map.preferred_grid == GridKind::Arcsine ? QuadratureGrid::arcsine(map.lower, map.upper, cells)
                                                   : QuadratureGrid::uniform(map.lower, map.upper, cells);
}

UlamMatrix ulam_matrix(const IntervalMap& map, std::shared_ptr<const QuadratureGrid> grid) {
    if (grid->size() < 16) throw Error(ErrorKind::InvalidInput, "Ulam matrix needs at least 16 cells");
    if (grid->lower() != map.lower || grid->upper() != map.upper) {
        throw Error(ErrorKind::IncompatibleGrids, "Ulam grid must cover the domain of " + map.name);
    }
    const auto edges = grid->edges();
    const std::size_t n = grid->size();

    // Every branch is cut at the source cell edges and at the preimages of the
    // target cell edges; each resulting piece lies in one source cell and maps
    // into one target cell, so its length is an exact matrix contribution.
    std::vector<std::tuple<std::size_t, std::size_t, double>> pieces;
    pieces.reserve(4 * n * map.branches.size());
    std::vector<double> cuts;
    for (const auto& br : map.branches) {
        cuts.clear();
        cuts.push_back(br.lo);
        cuts.push_back(br.hi);
        for (double e : edges) {
            if (e > br.lo && e < br.hi) cuts.push_back(e);
        }
        for (double e : edges) {
            if (e < br.image_lo || e > br.image_hi) continue;
            double y = 0.0;
            try {
                y = br.inverse(e);
            } catch (const Error& err) {
                throw Error(ErrorKind::Convergence, std::string("Ulam construction: ") + err.what());
            }
            if (y > br.lo && y < br.hi) cuts.push_back(y);
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double a = cuts[k];
            const double b = cuts[k + 1];
            if (!(b > a)) continue;
            const double mid = 0.5 * (a + b);
            const std::size_t i = grid->cell_of(mid);
            const std::size_t j = grid->cell_of(std::clamp(br.forward(mid), map.lower, map.upper));
            pieces.emplace_back(i, j, b - a);
        }
    }
    std::sort(pieces.begin(), pieces.end(), [](const auto& l, const auto& r) {
        return std::tie(std::get<0>(l), std::get<1>(l)) < std::tie(std::get<0>(r), std::get<1>(r));
    });

    UlamMatrix m;
    m.map_name = map.name;
    m.grid = grid;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t k = 0; k < pieces.size();) {
        const auto [i, j, len] = pieces[k];
        double total = len;
        std::size_t next = k + 1;
        while (next < pieces.size() && std::get<0>(pieces[next]) == i && std::get<1>(pieces[next]) == j) {
            total += std::get<2>(pieces[next]);
            ++next;
        }
        m.col.push_back(j);
        m.weight.push_back(total);
        ++m.row_ptr[i + 1];
        k = next;
    }
    std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
    for (std::size_t i = 0; i < n; ++i) {
        const double s = m.row_sum(i);
        if (!(s > 0.0)) throw Error(ErrorKind::Convergence, "Ulam row " + std::to_string(i) + " is empty");
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) m.weight[k] /= s;
    }
    return m;
}

UlamMatrix ulam_matrix(const IntervalMap& map, std::size_t cells) { return ulam_matrix(map, default_grid(map, cells)); }

void write_ulam(std::ostream& out, const UlamMatrix& m) {
    const auto old = out.precision(17);
    out << "# ulam N=" << m.size() << " map=" << m.map_name << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            out << i << ' ' << m.col[k] << ' ' << m.weight[k] << '\n';
        }
    }
    out.precision(old);
}

// ---------------------------------------------------------------------------

TransferOperator TransferOperator::branch_sum(const IntervalMap& map, std::shared_ptr<const MeasureDensity> measure) {
    const auto& grid = measure->grid();
    if (grid.lower() != map.lower || grid.upper() != map.upper) {
        throw Error(ErrorKind::IncompatibleGrids, "measure grid does not cover the domain of " + map.name);
    }
    const auto nodes = grid.nodes();
    const std::size_t n = nodes.size();

    // Interpolation for a preimage uses only nodes of its own branch, so
    // values are never smeared across a branch discontinuity.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const auto& br : map.branches) {
        auto first = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), br.lo) - nodes.begin());
        auto past = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), br.hi) - nodes.begin());
        if (first >= past) {
            first = std::min(first, n - 1);
            past = first + 1;
        }
        ranges.emplace_back(first, past - 1);
    }

    TransferOperator op;
    op.backend_ = Backend::BranchSum;
    op.map_name_ = map.name;
    op.measure_ = std::move(measure);
    op.row_ptr_.reserve(n + 1);
    op.row_ptr_.push_back(0);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = nodes[j];
        const double rho_x = op.measure_->density_at(x);
        if (!(rho_x > 0.0) || !std::isfinite(rho_x)) {
            std::ostringstream msg;
            msg << "density of '" << op.measure_->name() << "' is " << rho_x << " at node " << x;
            throw Error(ErrorKind::DegenerateMeasure, msg.str());
        }
        for (const auto& p : preimages(map, x)) {
            const double w = op.measure_->density_at(p.y) / (rho_x * p.deriv_mag);
            const auto [first, last] = ranges[p.branch];
            const auto s = grid.stencil(p.y, first, last);
            op.col_.push_back(s.lo);
            op.weight_.push_back(w * s.w_lo);
            if (s.hi != s.lo) {
                op.col_.push_back(s.hi);
                op.weight_.push_back(w * s.w_hi);
            }
        }
        op.row_ptr_.push_back(op.col_.size());
    }
    op.finish(op.measure_->source() == DensitySource::Numerical);
    return op;
}

TransferOperator TransferOperator::ulam(const UlamMatrix& matrix, std::shared_ptr<const MeasureDensity> measure) {
    if (!matrix.grid->same_as(measure->grid())) {
        throw Error(ErrorKind::IncompatibleGrids, "Ulam matrix and measure live on different grids");
    }
    const std::size_t n = matrix.size();
    const auto m = measure->masses();

    // Transpose while weighting rows by the cell masses.
    std::vector<std::size_t> count(n + 1, 0);
    for (std::size_t k = 0; k < matrix.nonzeros(); ++k) ++count[matrix.col[k] + 1];
    std::partial_sum(count.begin(), count.end(), count.begin());

    TransferOperator op;
    op.backend_ = Backend::Ulam;
    op.map_name_ = matrix.map_name;
    op.measure_ = std::move(measure);
    op.row_ptr_ = count;
    op.col_.resize(matrix.nonzeros());
    op.weight_.resize(matrix.nonzeros());
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = matrix.row_ptr[i]; k < matrix.row_ptr[i + 1]; ++k) {
            const std::size_t slot = fill[matrix.col[k]]++;
            op.col_[slot] = i;
            op.weight_[slot] = m[i] * matrix.weight[k];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        for (std::size_t k = op.row_ptr_[j]; k < op.row_ptr_[j + 1]; ++k) total += op.weight_[k];
        if (!(total > 0.0)) {
            throw Error(ErrorKind::DegenerateMeasure, "Ulam cell " + std::to_string(j) + " receives no mass");
        }
        for (std::size_t k = op.row_ptr_[j]; k < op.row_ptr_[j + 1]; ++k) op.weight_[k] /= total;
    }
    op.finish(true);
    return op;
}

void TransferOperator::finish(bool numerical) {
    if (!numerical) return;
    const std::size_t n = row_ptr_.size() - 1;
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        for (std::size_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k) total += weight_[k];
        for (std::size_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k) weight_[k] /= total;
    }
    // c_i = sum_j m_j P_ji - m_i; subtracting (c . f) restores the mean.
    const auto m = measure_->masses();
    correction_.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k) correction_[col_[k]] += m[j] * weight_[k];
    }
    for (std::size_t i = 0; i < n; ++i) correction_[i] -= m[i];
}

void TransferOperator::apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = row_ptr_.size() - 1;
    double shift = 0.0;
    if (!correction_.empty()) {
        for (std::size_t i = 0; i < n; ++i) shift += correction_[i] * in[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k) acc += weight_[k] * in[col_[k]];
        out[j] = acc - shift;
    }
}

GridFunction TransferOperator::apply(const GridFunction& f) const {
    if (f.measure_ptr() != measure_ && !f.grid().same_as(measure_->grid())) {
        throw Error(ErrorKind::IncompatibleGrids, "function and operator live on different grids");
    }
    std::vector<double> out(f.size());
    apply(f.values(), out);
    return GridFunction(measure_, std::move(out));
}

GridFunction koopman_apply(const IntervalMap& map, const GridFunction& f) {
    const auto nodes = f.grid().nodes();
    std::vector<double> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out[i] = f.at(std::clamp(map(nodes[i]), map.lower, map.upper));
    }
    return f.with_values(std::move(out));
}

GridFunction transfer_apply(const IntervalMap& map, const GridFunction& f) {
    return TransferOperator::branch_sum(map, f.measure_ptr()).apply(f);
}

std::vector<GridFunction> transfer_power(const TransferOperator& op, const GridFunction& f, std::size_t n) {
    if (n < 1) throw Error(ErrorKind::InvalidInput, "transfer_power needs n >= 1");
    std::vector<GridFunction> out;
    out.reserve(n);
    out.push_back(op.apply(f));
    for (std::size_t k = 1; k < n; ++k) out.push_back(op.apply(out.back()));
    return out;
}

double duality_residual(const IntervalMap& map, const TransferOperator& op, const GridFunction& f,
                        const GridFunction& g, std::size_t n) {
    if (n == 0) return 0.0;
    std::vector<double> pf(f.values().begin(), f.values().end());
    std::vector<double> next(pf.size());
    for (std::size_t k = 0; k < n; ++k) {
        op.apply(pf, next);
        pf.swap(next);
    }
    const auto m = op.measure().masses();
    const auto nodes = f.grid().nodes();
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        lhs += pf[i] * g[i] * m[i];
        double y = nodes[i];
        for (std::size_t k = 0; k < n; ++k) y = std::clamp(map(y), map.lower, map.upper);
        rhs += f[i] * g.at(y) * m[i];
    }
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------

PowerLaw fit_left_power_law(const MeasureDensity& measure, std::size_t cells) {
    const auto& grid = measure.grid();
    if (cells < 2 || cells > grid.size()) throw Error(ErrorKind::Fit, "power-law fit needs 2 <= cells <= N");
    const auto edges = grid.edges();
    const auto masses = measure.masses();
    // Cumulative mass F(r) ~ c/(1+e) r^{1+e} for density c r^e.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        cumulative += masses[k];
        if (!(cumulative > 0.0)) throw Error(ErrorKind::Fit, "zero mass next to the left endpoint");
        const double lx = std::log(edges[k + 1] - grid.lower());
        const double ly = std::log(cumulative);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(cells);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    return PowerLaw{slope * std::exp(intercept), slope - 1.0, grid.nodes()[0]};
}

InvariantDensityResult invariant_density(const IntervalMap& map, std::size_t cells, double tol,
                                         const InvariantDensityOptions& options) {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
    std::size_t factor = options.oversample;
    if (factor == 0) {
        constexpr std::size_t fine_target = std::size_t{1} << 18;
        factor = map.neutral_left ? std::max<std::size_t>(1, (fine_target + cells - 1) / cells) : 1;
    }
    const auto fine_grid = default_grid(map, cells * factor);
    const auto matrix = ulam_matrix(map, fine_grid);
    const std::size_t nf = fine_grid->size();

    std::vector<double> v(nf);
    const auto w = fine_grid->weights();
    for (std::size_t i = 0; i < nf; ++i) v[i] = w[i] / fine_grid->length();
    std::vector<double> next(nf);

    InvariantDensityResult result;
    bool converged = false;
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        matrix.left_multiply(v, next);
        double total = 0.0;
        for (double x : next) total += x;
        double change = 0.0;
        for (std::size_t i = 0; i < nf; ++i) {
            next[i] /= total;
            change += std::abs(next[i] - v[i]);
        }
        v.swap(next);
        result.iterations = it;
        result.last_change = change;
        if (change < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "invariant density of " << map.name << " did not converge in " << options.max_iter
            << " iterations (last L1 change " << result.last_change << ")";
        throw Error(ErrorKind::Convergence, msg.str());
    }

    const std::string name = map.name + "/ulam";
    std::vector<double> coarse(cells, 0.0);
    for (std::size_t i = 0; i < nf; ++i) coarse[i / factor] += v[i];

    auto plain_fine = MeasureDensity::from_masses(name, fine_grid, v);
    auto plain = MeasureDensity::from_masses(name, default_grid(map, cells), std::move(coarse));
    if (map.neutral_left) {
        const auto tail = fit_left_power_law(*plain, 3);
        const auto fine_tail = fit_left_power_law(*plain_fine, 3);
        result.density = MeasureDensity::from_masses(name, plain->grid_ptr(),
                                                     {plain->masses().begin(), plain->masses().end()}, tail);
        result.fine = factor == 1 ? result.density
                                  : MeasureDensity::from_masses(name, fine_grid, std::move(v), fine_tail);
    } else {
        result.density = plain;
        result.fine = factor == 1 ? plain : plain_fine;
    }
    return result;
}

}  // namespace ergolab
