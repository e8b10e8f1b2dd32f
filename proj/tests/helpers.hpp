#pragma once

#include <vector>

#include "wgf/energy.hpp"
#include "wgf/flow.hpp"
#include "wgf/grid.hpp"
#include "wgf/rng.hpp"

namespace testutil {

/// Random smooth measure: two-component Gaussian mixture with seeded draws.
inline wgf::GridMeasure random_smooth(const wgf::Grid& g, wgf::Rng& rng) {
    const double span = g.x_max - g.x_min;
    const double m1 = g.x_min + span * (0.3 + 0.4 * rng.uniform());
    const double m2 = g.x_min + span * (0.3 + 0.4 * rng.uniform());
    const double s1 = span * (0.04 + 0.08 * rng.uniform());
    const double s2 = span * (0.04 + 0.08 * rng.uniform());
    const double w = 0.2 + 0.6 * rng.uniform();
    std::vector<double> d(g.n_cells);
    for (int i = 0; i < g.n_cells; ++i) {
        const double x = g.center(i);
        const double z1 = (x - m1) / s1, z2 = (x - m2) / s2;
        d[i] = w * std::exp(-0.5 * z1 * z1) / s1 + (1.0 - w) * std::exp(-0.5 * z2 * z2) / s2;
    }
    return wgf::GridMeasure::from_density(g, std::move(d));
}

inline wgf::EnergySpec heat_spec() {
    wgf::EnergySpec s;
    s.internal = wgf::InternalEnergySpec::boltzmann();
    return s;
}

inline wgf::EnergySpec ou_spec(double kappa_v = 1.0) {
    wgf::EnergySpec s;
    s.internal = wgf::InternalEnergySpec::boltzmann();
    s.potential = wgf::PotentialSpec::quadratic(kappa_v);
    return s;
}

inline wgf::EnergySpec porous_spec(double alpha = 2.0) {
    wgf::EnergySpec s;
    s.internal = wgf::InternalEnergySpec::renyi(alpha);
    return s;
}

}  // namespace testutil
