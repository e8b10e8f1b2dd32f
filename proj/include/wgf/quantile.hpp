#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wgf/grid.hpp"

namespace wgf {

/// Inverse CDF sampled at midpoints (j+1/2)/m. Values are nondecreasing.
struct QuantileFn {
    std::vector<double> values;

    int nodes() const { return static_cast<int>(values.size()); }
};

/// Evaluate F_mu^{-1}(q) for q in (0,1): piecewise-linear CDF inverted exactly.
/// Zero-density plateaus follow the right-continuous pseudo-inverse (the
/// landing cell is the first with positive density past the plateau).
inline double quantile_at(const GridMeasure& mu, double q) {
    const auto& cum = mu.cumulative();
    if (q <= 0.0) {
        // left edge of the first positive cell
        for (int i = 0; i < mu.size(); ++i)
            if (mu.density(i) > 0.0) return mu.grid().left_edge(i);
        return mu.grid().x_min;
    }
    if (q >= 1.0) {
        for (int i = mu.size() - 1; i >= 0; --i)
            if (mu.density(i) > 0.0) return mu.grid().left_edge(i) + mu.grid().dx();
        return mu.grid().x_max;
    }
    // last edge with cum[j] <= q; the landing cell j then has positive density
    const auto it = std::upper_bound(cum.begin(), cum.end(), q);
    int j = static_cast<int>(it - cum.begin()) - 1;
    j = std::min(j, mu.size() - 1);
    const double rho = mu.density(j);
    if (rho <= 0.0) {
        // q hit a plateau level exactly; step to the next positive cell
        for (int i = j + 1; i < mu.size(); ++i)
            if (mu.density(i) > 0.0) return mu.grid().left_edge(i);
        return mu.grid().left_edge(j);
    }
    return mu.grid().left_edge(j) + (q - cum[j]) / rho;
}

inline QuantileFn to_quantile(const GridMeasure& mu, int m_nodes) {
    if (m_nodes <= 0) throw std::invalid_argument("to_quantile: m_nodes must be positive");
    QuantileFn qf;
    qf.values.resize(m_nodes);
    // march once through the cumulative edges; nodes are sorted
    const auto& cum = mu.cumulative();
    int j = 0;
    const int n = mu.size();
    for (int k = 0; k < m_nodes; ++k) {
        const double q = (k + 0.5) / m_nodes;
        while (j + 1 < static_cast<int>(cum.size()) && cum[j + 1] <= q) ++j;
        int cell = std::min(j, n - 1);
        if (mu.density(cell) <= 0.0) {
            int c = cell + 1;
            while (c < n && mu.density(c) <= 0.0) ++c;
            qf.values[k] = (c < n) ? mu.grid().left_edge(c) : mu.grid().left_edge(cell);
        } else {
            qf.values[k] = mu.grid().left_edge(cell) + (q - cum[cell]) / mu.density(cell);
        }
    }
    return qf;
}

/// (integral_0^1 |Qa - Qb|^p dq)^(1/p) by the midpoint rule on matching nodes.
/// Grid-free: this is the one distance kernel every W_p call goes through.
inline double quantile_distance(const QuantileFn& a, const QuantileFn& b, double p) {
    if (a.nodes() != b.nodes())
        throw std::invalid_argument("quantile_distance: node counts differ");
    if (!(p >= 1.0 && p <= 2.0))
        throw std::invalid_argument("quantile_distance: p must be in [1,2]");
    const int m = a.nodes();
    double s = 0.0;
    if (p == 2.0) {
        for (int k = 0; k < m; ++k) {
            const double d = a.values[k] - b.values[k];
            s += d * d;
        }
    } else if (p == 1.0) {
        for (int k = 0; k < m; ++k) s += std::fabs(a.values[k] - b.values[k]);
    } else {
        for (int k = 0; k < m; ++k) s += std::pow(std::fabs(a.values[k] - b.values[k]), p);
    }
    return std::pow(s / m, 1.0 / p);
}

constexpr int kDefaultQuadratureNodes = 4096;

namespace detail {

// piecewise-linear quantile segments: on [q0, q1], Q(q) = x0 + (q - q0) * slope
struct QuantileSegment {
    double q0, q1, x0, slope;
};

inline std::vector<QuantileSegment> quantile_segments(const GridMeasure& mu) {
    std::vector<QuantileSegment> segs;
    const auto& cum = mu.cumulative();
    for (int i = 0; i < mu.size(); ++i) {
        const double rho = mu.density(i);
        if (rho <= 0.0) continue;
        segs.push_back({cum[i], cum[i + 1], mu.grid().left_edge(i), 1.0 / rho});
    }
    return segs;
}

// int_0^L |A + B q|^p dq in closed form
inline double abs_pow_integral(double A, double B, double L, double p) {
    auto G = [p](double z) { return std::pow(std::fabs(z), p + 1.0) / (p + 1.0) * (z < 0 ? -1.0 : 1.0); };
    if (std::fabs(B) < 1e-300) return std::pow(std::fabs(A), p) * L;
    return (G(A + B * L) - G(A)) / B;
}

}  // namespace detail

/// Exact (int_0^1 |F_mu^{-1} - F_nu^{-1}|^p dq)^(1/p): the quantile difference
/// is integrated in closed form over the merged breakpoints of the two
/// piecewise-linear CDFs. Grid-free, so it also compares measures living on
/// different grids (used by the refinement studies).
inline double quantile_distance_exact(const GridMeasure& mu, const GridMeasure& nu, double p) {
    if (!(p >= 1.0 && p <= 2.0))
        throw std::invalid_argument("quantile_distance_exact: p must be in [1,2]");
    const auto sa = detail::quantile_segments(mu);
    const auto sb = detail::quantile_segments(nu);
    double acc = 0.0;
    std::size_t ia = 0, ib = 0;
    double q = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        // advance past plateaus (jumps carry no q-measure)
        if (q >= sa[ia].q1) {
            ++ia;
            continue;
        }
        if (q >= sb[ib].q1) {
            ++ib;
            continue;
        }
        const double q_next = std::min(sa[ia].q1, sb[ib].q1);
        const double qa = std::max(q, std::max(sa[ia].q0, sb[ib].q0));
        if (q_next > qa) {
            const double xa = sa[ia].x0 + (qa - sa[ia].q0) * sa[ia].slope;
            const double xb = sb[ib].x0 + (qa - sb[ib].q0) * sb[ib].slope;
            acc += detail::abs_pow_integral(xa - xb, sa[ia].slope - sb[ib].slope, q_next - qa, p);
        }
        q = q_next;
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace wgf
