#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wgf/energy.hpp"
#include "wgf/flow.hpp"
#include "wgf/grid.hpp"
#include "wgf/rng.hpp"
#include "wgf/transport.hpp"

namespace wgf {

/// Exact transportation LP between small atomic measures by exhaustive
/// enumeration of basic solutions: every vertex of the transportation
/// polytope is supported on a spanning tree of K_{m,n}, so minimizing over
/// all feasible tree solutions solves the LP. Independent of the quantile
/// machinery; used as the W_p oracle.
inline double lp_transport_cost(const std::vector<double>& xs, const std::vector<double>& xw,
                                const std::vector<double>& ys, const std::vector<double>& yw,
                                double p) {
    const int m = static_cast<int>(xs.size());
    const int n = static_cast<int>(ys.size());
    if (m < 1 || n < 1 || m > 4 || n > 4)
        throw std::invalid_argument("lp oracle: supports 1..4 atoms per side");
    const int n_edges = m * n;
    const int n_nodes = m + n;
    const int tree_edges = n_nodes - 1;

    std::vector<double> cost(n_edges);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) cost[i * n + j] = std::pow(std::fabs(xs[i] - ys[j]), p);

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> parent(n_nodes), deg(n_nodes);
    std::vector<double> bal(n_nodes);

    for (std::uint32_t mask = 0; mask < (1u << n_edges); ++mask) {
        if (__builtin_popcount(mask) != tree_edges) continue;
        // acyclicity + spanning via union-find
        for (int v = 0; v < n_nodes; ++v) parent[v] = v;
        auto find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        bool ok = true;
        for (int e = 0; e < n_edges && ok; ++e) {
            if (!(mask & (1u << e))) continue;
            const int a = find(e / n), b = find(m + e % n);
            if (a == b) ok = false;
            else parent[a] = b;
        }
        if (!ok) continue;

        // solve the tree system by leaf elimination
        for (int v = 0; v < n_nodes; ++v) deg[v] = 0;
        for (int i = 0; i < m; ++i) bal[i] = xw[i];
        for (int j = 0; j < n; ++j) bal[m + j] = yw[j];
        std::uint32_t rem = mask;
        for (int e = 0; e < n_edges; ++e)
            if (mask & (1u << e)) {
                ++deg[e / n];
                ++deg[m + e % n];
            }
        double c = 0.0;
        bool feasible = true;
        for (int iter = 0; iter < tree_edges && feasible; ++iter) {
            int leaf = -1, edge = -1;
            for (int v = 0; v < n_nodes && leaf < 0; ++v)
                if (deg[v] == 1) {
                    for (int e = 0; e < n_edges; ++e)
                        if ((rem & (1u << e)) && (e / n == v || m + e % n == v)) {
                            leaf = v;
                            edge = e;
                            break;
                        }
                }
            if (leaf < 0) {
                feasible = false;
                break;
            }
            const int other = (edge / n == leaf) ? m + edge % n : edge / n;
            const double f = bal[leaf];
            if (f < -1e-12) {
                feasible = false;
                break;
            }
            c += f * cost[edge];
            bal[other] -= f;
            bal[leaf] = 0.0;
            rem &= ~(1u << edge);
            --deg[leaf];
            --deg[other];
        }
        if (feasible && c < best) best = c;
    }
    return std::pow(best, 1.0 / p);
}

/// One pair of the oracle suite: s equal-mass cells per side on a shared
/// grid. The monotone quantile difference is then piecewise constant on
/// breakpoints at multiples of 1/s, so the midpoint-rule W_p is exact and
/// must match the atomic LP on the cell centers to fp accuracy.
struct AtomPair {
    GridMeasure mu, nu;
    std::vector<double> mu_atoms, nu_atoms;  // cell centers
    double weight;                           // 1/s
    double p;
};

inline std::vector<AtomPair> make_atom_suite(int n_pairs, std::uint64_t seed) {
    Rng rng(seed);
    const Grid g(-3.0, 3.0, 48);
    std::vector<AtomPair> suite;
    suite.reserve(n_pairs);
    const double ps[3] = {1.0, 1.5, 2.0};
    const int sizes[3] = {1, 2, 4};
    for (int t = 0; t < n_pairs; ++t) {
        const int s = sizes[t % 3];
        const double p = ps[(t / 3) % 3];
        auto draw = [&](std::vector<double>& atoms) {
            std::vector<char> used(g.n_cells, 0);
            std::vector<double> d(g.n_cells, 0.0);
            for (int a = 0; a < s; ++a) {
                int c;
                do {
                    c = static_cast<int>(rng.uniform() * g.n_cells);
                    c = std::min(c, g.n_cells - 1);
                } while (used[c]);
                used[c] = 1;
                d[c] = 1.0;
                atoms.push_back(g.center(c));
            }
            std::sort(atoms.begin(), atoms.end());
            return GridMeasure::from_density(g, std::move(d));
        };
        AtomPair pair{GridMeasure{}, GridMeasure{}, {}, {}, 1.0 / s, p};
        pair.mu = draw(pair.mu_atoms);
        pair.nu = draw(pair.nu_atoms);
        suite.push_back(std::move(pair));
    }
    return suite;
}

struct SelftestResult {
    bool ok = true;
    std::vector<std::string> lines;

    void check(bool pass, const std::string& what) {
        lines.push_back(std::string(pass ? "PASS  " : "FAIL  ") + what);
        ok = ok && pass;
    }
};

/// Quantile-route W_p vs the LP oracle on the fixed atomic suite.
inline void selftest_ot(SelftestResult& out, int n_pairs = 200, std::uint64_t seed = 20240901ull) {
    double worst = 0.0;
    for (const auto& pair : make_atom_suite(n_pairs, seed)) {
        const double viaq = wasserstein_p(pair.mu, pair.nu, pair.p);
        const std::vector<double> wmu(pair.mu_atoms.size(), pair.weight);
        const std::vector<double> wnu(pair.nu_atoms.size(), pair.weight);
        const double vialp = lp_transport_cost(pair.mu_atoms, wmu, pair.nu_atoms, wnu, pair.p);
        worst = std::max(worst, std::fabs(viaq - vialp));
    }
    out.check(worst < 1e-9, "W_p quantile route matches exhaustive LP (max err " +
                                std::to_string(worst) + ")");
}

inline void selftest_pressure(SelftestResult& out) {
    const auto boltz = InternalEnergySpec::boltzmann();
    const auto renyi2 = InternalEnergySpec::renyi(2.0);
    bool ok = std::fabs(boltz.pressure(2.0) - 2.0) < 1e-14 &&
              std::fabs(renyi2.pressure(3.0) - 9.0) < 1e-14 &&
              boltz.pressure(0.0) == 0.0 && renyi2.pressure(0.0) == 0.0;
    // P'(r) = r U''(r), probed by finite differences of both sides
    for (const auto& s : {boltz, renyi2}) {
        for (double r = 0.1; r <= 10.0; r *= 1.9) {
            const double h = 1e-5 * std::max(1.0, r);
            const double pprime = (s.pressure(r + h) - s.pressure(r - h)) / (2.0 * h);
            const double rupp = r * (s.uprime(r + h) - s.uprime(r - h)) / (2.0 * h);
            ok = ok && std::fabs(pprime - rupp) < 1e-6 * std::max(1.0, std::fabs(rupp));
        }
    }
    out.check(ok, "pressure identities P(r) = r U'(r) - U(r), P'(r) = r U''(r)");
}

inline void selftest_gaussian(SelftestResult& out) {
    // heat flow: variance grows like sigma0^2 + t
    {
        const Grid g(-8.0, 8.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        const GridMeasure mu0 = gaussian_measure(g, 0.0, 1.0);
        const auto traj = evolve(spec, mu0, ControlField::zero(), 0.25, 2e-3, 25, false);
        double worst = 0.0;
        for (int k = 0; k < traj.nodes(); ++k) {
            const double want = 1.0 + traj.times[k];
            worst = std::max(worst, std::fabs(traj.states[k].variance() - want) / want);
        }
        out.check(worst < 0.01, "heat flow variance tracks sigma0^2 + t (rel err " +
                                    std::to_string(worst) + ")");
    }
    // quadratic confinement: mean decays like e^{-t}
    {
        const Grid g(-7.0, 9.0, 512);
        EnergySpec spec;
        spec.internal = InternalEnergySpec::boltzmann();
        spec.potential = PotentialSpec::quadratic(1.0);
        const GridMeasure mu0 = gaussian_measure(g, 2.0, 1.0);
        const auto traj = evolve(spec, mu0, ControlField::zero(), 0.5, 1e-3, 100, false);
        double worst = 0.0;
        for (int k = 0; k < traj.nodes(); ++k) {
            const double want = 2.0 * std::exp(-traj.times[k]);
            worst = std::max(worst, std::fabs(traj.states[k].mean() - want) / want);
        }
        out.check(worst < 0.01, "confined flow mean decays like m0 e^{-t} (rel err " +
                                    std::to_string(worst) + ")");
    }
}

inline SelftestResult run_selftest() {
    SelftestResult r;
    selftest_ot(r);
    selftest_pressure(r);
    selftest_gaussian(r);
    return r;
}

}  // namespace wgf
