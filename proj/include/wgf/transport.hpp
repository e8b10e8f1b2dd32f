#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wgf/grid.hpp"
#include "wgf/quantile.hpp"

namespace wgf {

/// Monotone optimal map t_mu^nu sampled at cell centers, with the barycentric
/// displacement b = t - id. `plateau` marks interior vacuum in mu (the map
/// then follows the right-continuous pseudo-inverse).
struct TransportMap {
    Grid grid;
    std::vector<double> map_values;
    std::vector<double> barycentric_values;
    bool plateau = false;
};

inline void require_same_grid(const GridMeasure& a, const GridMeasure& b) {
    if (a.grid() != b.grid()) throw std::runtime_error("grid mismatch");
}

/// Order-p Wasserstein distance, p in [1,2], via the quantile representation.
inline double wasserstein_p(const GridMeasure& mu, const GridMeasure& nu, double p = 2.0,
                            int m_nodes = kDefaultQuadratureNodes) {
    require_same_grid(mu, nu);
    return quantile_distance(to_quantile(mu, m_nodes), to_quantile(nu, m_nodes), p);
}

inline double wasserstein2(const GridMeasure& mu, const GridMeasure& nu,
                           int m_nodes = kDefaultQuadratureNodes) {
    return wasserstein_p(mu, nu, 2.0, m_nodes);
}

/// t = F_nu^{-1} o F_mu at cell centers.
inline TransportMap transport_map(const GridMeasure& mu, const GridMeasure& nu) {
    require_same_grid(mu, nu);
    TransportMap tm;
    tm.grid = mu.grid();
    const int n = mu.size();
    tm.map_values.resize(n);
    tm.barycentric_values.resize(n);

    int first = -1, last = -1;
    for (int i = 0; i < n; ++i)
        if (mu.density(i) > 0.0) {
            if (first < 0) first = i;
            last = i;
        }
    for (int i = (first < 0 ? 0 : first); i <= last; ++i)
        if (mu.density(i) <= 0.0) tm.plateau = true;

    const auto& cum = mu.cumulative();
    for (int i = 0; i < n; ++i) {
        const double q = cum[i] + mu.density(i) * mu.grid().dx() * 0.5;
        const double t = quantile_at(nu, q);
        tm.map_values[i] = t;
        tm.barycentric_values[i] = t - mu.grid().center(i);
    }
    // monotone rearrangement: enforce nondecreasing against rounding jitter
    for (int i = 1; i < n; ++i)
        if (tm.map_values[i] < tm.map_values[i - 1]) {
            tm.map_values[i] = tm.map_values[i - 1];
            tm.barycentric_values[i] = tm.map_values[i] - mu.grid().center(i);
        }
    return tm;
}

/// ||t_mu^nu - id||_{L^2(mu)} with per-cell Gauss quadrature (the CDF is exact
/// inside a cell, so only the quantile evaluation is interpolated).
inline double barycentric_l2_norm(const GridMeasure& mu, const GridMeasure& nu) {
    require_same_grid(mu, nu);
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    const auto& cum = mu.cumulative();
    const double dx = mu.grid().dx();
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        const double rho = mu.density(i);
        if (rho <= 0.0) continue;
        const double xl = mu.grid().left_edge(i);
        double cell = 0.0;
        for (int g = 0; g < 5; ++g) {
            const double x = xl + 0.5 * dx * (1.0 + gx[g]);
            const double q = cum[i] + rho * (x - xl);
            const double b = quantile_at(nu, q) - x;
            cell += gw[g] * b * b;
        }
        acc += cell * 0.5 * dx * rho;
    }
    return std::sqrt(acc);
}

/// Pairing <u, b>_{L^2(mu)} for grid fields sampled at cell centers.
inline double l2_inner(const GridMeasure& mu, const std::vector<double>& u,
                       const std::vector<double>& v) {
    double s = 0.0;
    for (int i = 0; i < mu.size(); ++i) s += u[i] * v[i] * mu.density(i);
    return s * mu.grid().dx();
}

inline double l2_norm_sq(const GridMeasure& mu, const std::vector<double>& u) {
    return l2_inner(mu, u, u);
}

/// Deposit unit masses onto the grid with linear (cloud-in-cell) splitting.
inline GridMeasure deposit_measure(const Grid& g, const std::vector<double>& positions,
                                   const std::vector<double>& weights) {
    std::vector<double> d(g.n_cells, 0.0);
    const double dx = g.dx();
    for (std::size_t k = 0; k < positions.size(); ++k) {
        double z = (positions[k] - g.x_min) / dx - 0.5;  // center coordinates
        z = std::max(0.0, std::min(z, static_cast<double>(g.n_cells - 1)));
        const int i0 = std::min(static_cast<int>(z), g.n_cells - 2);
        const double f = z - i0;
        d[i0] += weights[k] * (1.0 - f);
        d[i0 + 1] += weights[k] * f;
    }
    return GridMeasure::from_density(g, std::move(d));
}

/// Push mu forward through its optimal map onto nu's grid.
inline GridMeasure pushforward(const GridMeasure& mu, const TransportMap& tm) {
    std::vector<double> w(mu.size());
    for (int i = 0; i < mu.size(); ++i) w[i] = mu.density(i) * mu.grid().dx();
    return deposit_measure(mu.grid(), tm.map_values, w);
}

/// Displacement interpolation mu_s between mu0 and mu1 via quantile mixing.
inline GridMeasure displacement_interpolate(const GridMeasure& mu0, const GridMeasure& mu1,
                                            double s, int m_nodes = 16384) {
    require_same_grid(mu0, mu1);
    const QuantileFn q0 = to_quantile(mu0, m_nodes);
    const QuantileFn q1 = to_quantile(mu1, m_nodes);
    std::vector<double> pos(m_nodes), w(m_nodes, 1.0 / m_nodes);
    for (int k = 0; k < m_nodes; ++k) pos[k] = (1.0 - s) * q0.values[k] + s * q1.values[k];
    return deposit_measure(mu0.grid(), pos, w);
}

}  // namespace wgf
