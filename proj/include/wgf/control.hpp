#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wgf/grid.hpp"

namespace wgf {

/// Centered difference of a cell-sampled potential; one-sided at the ends.
inline std::vector<double> potential_gradient(const Grid& g, const std::vector<double>& psi) {
    const int n = g.n_cells;
    std::vector<double> u(n, 0.0);
    const double dx = g.dx();
    for (int i = 0; i < n; ++i) {
        const int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
        u[i] = (psi[ir] - psi[il]) / ((ir - il) * dx);
    }
    return u;
}

/// Fixed library of basis potentials sampled on a grid: {x, x^2,
/// sin(k pi s), cos(k pi s), k=1..3} with s = (x - x_min)/(x_max - x_min),
/// each scaled so the sampled gradient has unit sup-norm.
class ControlBasis {
public:
    ControlBasis() = default;

    ControlBasis(const Grid& g, int n_basis) : grid_(g) {
        if (n_basis < 0 || n_basis > 8)
            throw std::invalid_argument("control basis: n_basis must be in [0,8]");
        const double L = g.x_max - g.x_min;
        for (int b = 0; b < n_basis; ++b) {
            std::vector<double> psi(g.n_cells);
            for (int i = 0; i < g.n_cells; ++i) {
                const double x = g.center(i);
                const double s = (x - g.x_min) / L;
                switch (b) {
                    case 0: psi[i] = x; break;
                    case 1: psi[i] = x * x; break;
                    case 2: psi[i] = std::sin(M_PI * s); break;
                    case 3: psi[i] = std::cos(M_PI * s); break;
                    case 4: psi[i] = std::sin(2.0 * M_PI * s); break;
                    case 5: psi[i] = std::cos(2.0 * M_PI * s); break;
                    case 6: psi[i] = std::sin(3.0 * M_PI * s); break;
                    default: psi[i] = std::cos(3.0 * M_PI * s); break;
                }
            }
            std::vector<double> grad = potential_gradient(g, psi);
            double sup = 0.0;
            for (double v : grad) sup = std::max(sup, std::fabs(v));
            if (sup > 0.0)
                for (double& v : grad) v /= sup;
            gradients_.push_back(std::move(grad));
        }
    }

    int size() const { return static_cast<int>(gradients_.size()); }
    const Grid& grid() const { return grid_; }
    const std::vector<double>& gradient(int b) const { return gradients_[b]; }

    /// Combine sum_b c_b grad psi_b.
    std::vector<double> combine(const std::vector<double>& coeff) const {
        std::vector<double> u(grid_.n_cells, 0.0);
        for (int b = 0; b < size(); ++b) {
            if (coeff[b] == 0.0) continue;
            for (int i = 0; i < grid_.n_cells; ++i) u[i] += coeff[b] * gradients_[b][i];
        }
        return u;
    }

private:
    Grid grid_;
    std::vector<std::vector<double>> gradients_;
};

/// Geometric time windows on [0,T]: widths proportional to 2^w.
inline std::vector<double> geometric_windows(double t_final, int n_windows) {
    if (n_windows <= 0) throw std::invalid_argument("windows: n_windows must be positive");
    std::vector<double> ends(n_windows);
    const double total = std::pow(2.0, n_windows) - 1.0;
    double acc = 0.0;
    for (int w = 0; w < n_windows; ++w) {
        acc += std::pow(2.0, w);
        ends[w] = t_final * acc / total;
    }
    ends.back() = t_final;
    return ends;
}

/// Control u(t,x) = dx psi(t,x): always the gradient of a scalar potential,
/// piecewise constant in time (per window, or globally static).
class ControlField {
public:
    static ControlField zero() { return ControlField(); }

    /// Static-in-time potential sampled on the grid.
    static ControlField potential_grid(const Grid& g, const std::vector<double>& psi) {
        if (static_cast<int>(psi.size()) != g.n_cells)
            throw std::invalid_argument("control: psi size does not match grid");
        ControlField c;
        c.kind_ = Kind::potential;
        c.static_u_ = potential_gradient(g, psi);
        return c;
    }

    /// Static combination of basis potentials.
    static ControlField basis_static(const ControlBasis& basis, const std::vector<double>& coeff) {
        if (static_cast<int>(coeff.size()) != basis.size())
            throw std::invalid_argument("control: coefficient count does not match basis");
        ControlField c;
        c.kind_ = Kind::potential;
        c.static_u_ = basis.combine(coeff);
        return c;
    }

    /// Per-window coefficients: coeff[w][b] over geometric windows.
    static ControlField basis_windows(const ControlBasis& basis, std::vector<double> window_ends,
                                      const std::vector<std::vector<double>>& coeff) {
        if (coeff.size() != window_ends.size())
            throw std::invalid_argument("control: window count mismatch");
        ControlField c;
        c.kind_ = Kind::windows;
        c.window_ends_ = std::move(window_ends);
        for (const auto& cw : coeff) c.window_u_.push_back(basis.combine(cw));
        return c;
    }

    bool is_zero() const { return kind_ == Kind::zero; }

    /// Velocity samples at cell centers for the step starting at time t.
    std::vector<double> velocity(const Grid& g, double t) const {
        switch (kind_) {
            case Kind::zero: return std::vector<double>(g.n_cells, 0.0);
            case Kind::potential: return static_u_;
            default: {
                int w = 0;
                while (w + 1 < static_cast<int>(window_ends_.size()) && t >= window_ends_[w]) ++w;
                return window_u_[w];
            }
        }
    }

private:
    enum class Kind { zero, potential, windows };
    Kind kind_ = Kind::zero;
    std::vector<double> static_u_;
    std::vector<double> window_ends_;
    std::vector<std::vector<double>> window_u_;
};

}  // namespace wgf
