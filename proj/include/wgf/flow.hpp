#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wgf/control.hpp"
#include "wgf/energy.hpp"
#include "wgf/grid.hpp"
#include "wgf/transport.hpp"

namespace wgf {

struct StepDiagnostics {
    double mass_defect = 0.0;   // |mass - 1| before renormalization
    double min_density = 0.0;   // before clipping
    double control_l2 = 0.0;    // ||u||_{L^2(mu)} at the step start
    double metric_speed = 0.0;  // W2(mu_{k+1}, mu_k) / dt between stored states
    double boundary_mass = 0.0;
};

/// Time-indexed admissible curve: stored states (possibly strided), the
/// control snapshot active at each stored time, and per-step diagnostics.
struct ControlledTrajectory {
    std::vector<double> times;
    std::vector<GridMeasure> states;
    std::vector<std::vector<double>> controls;  // per stored index
    std::vector<StepDiagnostics> diagnostics;   // per stored interval
    double solver_dt = 0.0;

    int nodes() const { return static_cast<int>(times.size()); }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }

    /// sum |mu_dot|^2 dt over stored intervals (square-integrability gauge).
    double speed_energy() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < times.size(); ++k)
            s += diagnostics[k].metric_speed * diagnostics[k].metric_speed *
                 (times[k + 1] - times[k]);
        return s;
    }
};

namespace detail {

inline void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                         std::vector<double>& upper, std::vector<double>& rhs) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

struct RawStep {
    std::vector<double> density;
    double mass_defect;
    double min_density;
};

// One finite-volume step: explicit upwind advection for the drift
// (-V' - W'*mu + u), then semi-implicit diffusion for 1/2 dxx P(rho) with the
// mobility P(rho)/rho frozen at the step input. No-flux boundaries. The
// implicit matrix is column-conservative, so mass is exact up to solver fp.
inline RawStep step_raw(const EnergySpec& spec, const GridMeasure& mu,
                        const std::vector<double>& u, double dt) {
    const int n = mu.size();
    const double dx = mu.grid().dx();

    std::vector<double> drift(n);
    const std::vector<double> wconv = interaction_gradient(spec, mu);
    double max_drift = 0.0;
    for (int i = 0; i < n; ++i) {
        drift[i] = -spec.potential.vprime(mu.grid().center(i)) - wconv[i] + u[i];
        max_drift = std::max(max_drift, std::fabs(drift[i]));
    }
    if (dt * max_drift > 0.9 * dx) throw std::runtime_error("dt too large");

    // upwind fluxes at interior faces
    std::vector<double> rho(n);
    {
        std::vector<double> flux(n + 1, 0.0);
        for (int f = 1; f < n; ++f) {
            const double v = 0.5 * (drift[f - 1] + drift[f]);
            flux[f] = v > 0.0 ? v * mu.density(f - 1) : v * mu.density(f);
        }
        for (int i = 0; i < n; ++i)
            rho[i] = mu.density(i) - dt / dx * (flux[i + 1] - flux[i]);
    }

    if (!spec.internal.trivial()) {
        std::vector<double> a(n);
        for (int i = 0; i < n; ++i) a[i] = spec.internal.mobility(mu.density(i));
        const double beta = dt / (2.0 * dx * dx);
        std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const int faces = (i > 0 ? 1 : 0) + (i < n - 1 ? 1 : 0);
            diag[i] = 1.0 + beta * a[i] * faces;
            if (i > 0) lower[i] = -beta * a[i - 1];
            if (i < n - 1) upper[i] = -beta * a[i + 1];
        }
        thomas_solve(lower, diag, upper, rho);
    }

    double mass = 0.0, mn = rho[0];
    for (double v : rho) {
        mass += v;
        mn = std::min(mn, v);
    }
    return RawStep{std::move(rho), std::fabs(mass * dx - 1.0), mn};
}

}  // namespace detail

/// One step of the controlled PDE. Renormalizes a mass defect below 1e-8,
/// errors otherwise; clips density dips above -1e-10, errors otherwise.
inline GridMeasure step(const EnergySpec& spec, const GridMeasure& mu,
                        const std::vector<double>& u, double dt) {
    detail::RawStep r = detail::step_raw(spec, mu, u, dt);
    if (r.min_density < -1e-10) throw std::runtime_error("positivity lost");
    if (r.mass_defect >= 1e-8) throw std::runtime_error("mass conservation lost");
    for (double& v : r.density) v = std::max(v, 0.0);
    return GridMeasure::from_density(mu.grid(), std::move(r.density));
}

inline GridMeasure step(const EnergySpec& spec, const GridMeasure& mu, const ControlField& u,
                        double t, double dt) {
    return step(spec, mu, u.velocity(mu.grid(), t), dt);
}

/// Evolve over [0,T] with ceil(T/dt) uniform steps; u = 0 yields the
/// gradient-flow semigroup. States are stored every `stride` steps (and at T).
/// `with_metric_speed` controls the per-interval W2 diagnostic (the main cost).
inline ControlledTrajectory evolve(const EnergySpec& spec, const GridMeasure& mu0,
                                   const ControlField& u, double t_final, double dt,
                                   int stride = 1, bool with_metric_speed = true,
                                   int speed_nodes = 2048) {
    if (!(t_final > 0.0)) throw std::invalid_argument("evolve: t_final must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
    const int n_steps = std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-12)));
    const double h = t_final / n_steps;

    ControlledTrajectory traj;
    traj.solver_dt = h;
    traj.times.push_back(0.0);
    traj.states.push_back(mu0);
    traj.controls.push_back(u.velocity(mu0.grid(), 0.0));

    GridMeasure cur = mu0;
    StepDiagnostics acc;  // worst-case diagnostics over the strided interval
    for (int k = 0; k < n_steps; ++k) {
        const double t = k * h;
        const std::vector<double> uv = u.velocity(mu0.grid(), t);
        detail::RawStep r = detail::step_raw(spec, cur, uv, h);
        if (r.min_density < -1e-10) throw std::runtime_error("positivity lost");
        if (r.mass_defect >= 1e-8) throw std::runtime_error("mass conservation lost");
        acc.mass_defect = std::max(acc.mass_defect, r.mass_defect);
        acc.min_density = std::min(acc.min_density, r.min_density);
        acc.control_l2 = std::max(acc.control_l2, std::sqrt(l2_norm_sq(cur, uv)));
        for (double& v : r.density) v = std::max(v, 0.0);
        cur = GridMeasure::from_density(mu0.grid(), std::move(r.density));

        if ((k + 1) % stride == 0 || k + 1 == n_steps) {
            acc.boundary_mass = cur.boundary_mass();
            if (with_metric_speed) {
                const double span = (k + 1) * h - traj.times.back();
                acc.metric_speed = wasserstein2(traj.states.back(), cur, speed_nodes) / span;
            }
            traj.times.push_back((k + 1) * h);
            traj.states.push_back(cur);
            traj.controls.push_back(u.velocity(mu0.grid(), (k + 1) * h));
            traj.diagnostics.push_back(acc);
            acc = StepDiagnostics{};
        }
    }
    return traj;
}

/// States reversed in time with the control discarded: a curve that (claims
/// to) solve the PDE but runs the dissipation backwards. Used as the
/// constructed counterexample in EVI-type audits.
inline ControlledTrajectory time_reversed(const ControlledTrajectory& traj) {
    ControlledTrajectory rev;
    rev.times = traj.times;
    rev.solver_dt = traj.solver_dt;
    rev.states.assign(traj.states.rbegin(), traj.states.rend());
    for (std::size_t k = 0; k < traj.states.size(); ++k)
        rev.controls.push_back(std::vector<double>(traj.states[0].size(), 0.0));
    rev.diagnostics.assign(traj.diagnostics.rbegin(), traj.diagnostics.rend());
    return rev;
}

}  // namespace wgf
