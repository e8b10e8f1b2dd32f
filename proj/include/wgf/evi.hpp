#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wgf/audit.hpp"
#include "wgf/energy.hpp"
#include "wgf/flow.hpp"

namespace wgf {

/// Tolerance model shared by the trajectory audits: c (dx + dt).
inline double audit_tol(const Grid& g, double dt, double c = 10.0) { return c * (g.dx() + dt); }

/// EVI_kappa along a gradient-flow trajectory against a fixed competitor nu:
///   d/dt (1/2 W2^2(mu_t, nu)) <= E(nu) - E(mu_t) - (kappa/2) W2^2(mu_t, nu).
/// Discrete derivative by centered differences at interior stored times.
inline AuditReport evi_pointwise(const EnergySpec& spec, const ControlledTrajectory& traj,
                                 const GridMeasure& nu, double tol,
                                 int m_nodes = kDefaultQuadratureNodes) {
    if (traj.nodes() < 3) throw std::invalid_argument("evi_pointwise: need at least 3 stored states");
    const double kappa = spec.kappa();
    const double e_nu = energy(spec, nu);
    const int n = traj.nodes();
    std::vector<double> w2(n);
    for (int k = 0; k < n; ++k) w2[k] = wasserstein2(traj.states[k], nu, m_nodes);

    double worst = std::numeric_limits<double>::infinity();
    double lhs_at = 0.0, rhs_at = 0.0;
    for (int k = 1; k + 1 < n; ++k) {
        const double deriv =
            (0.5 * w2[k + 1] * w2[k + 1] - 0.5 * w2[k - 1] * w2[k - 1]) /
            (traj.times[k + 1] - traj.times[k - 1]);
        const double bound = e_nu - energy(spec, traj.states[k]) - 0.5 * kappa * w2[k] * w2[k];
        const double slack = bound - deriv;
        if (slack < worst) {
            worst = slack;
            lhs_at = deriv;
            rhs_at = bound;
        }
    }
    return make_report("evi_pointwise", lhs_at, rhs_at, worst, tol);
}

/// W2(S_t mu, S_t nu) <= e^{-kappa t} W2(mu, nu) at every stored time.
inline AuditReport contraction_audit(const EnergySpec& spec, const GridMeasure& mu,
                                     const GridMeasure& nu, double t_final, double dt, double tol,
                                     int stride = 1, int m_nodes = kDefaultQuadratureNodes) {
    const ControlledTrajectory a = evolve(spec, mu, ControlField::zero(), t_final, dt, stride, false);
    const ControlledTrajectory b = evolve(spec, nu, ControlField::zero(), t_final, dt, stride, false);
    const double kappa = spec.kappa();
    const double w0 = wasserstein2(mu, nu, m_nodes);
    double worst = std::numeric_limits<double>::infinity();
    double lhs_at = 0.0, rhs_at = 0.0;
    for (int k = 1; k < a.nodes(); ++k) {
        const double wt = wasserstein2(a.states[k], b.states[k], m_nodes);
        const double bound = std::exp(-kappa * a.times[k]) * w0;
        if (bound - wt < worst) {
            worst = bound - wt;
            lhs_at = wt;
            rhs_at = bound;
        }
    }
    return make_report("contraction", lhs_at, rhs_at, worst, tol);
}

/// t -> E(S_t mu) must not increase by more than `per_step_tol` on any step.
inline AuditReport entropy_monotone_audit(const EnergySpec& spec, const ControlledTrajectory& traj,
                                          double per_step_tol = 1e-6) {
    double worst = std::numeric_limits<double>::infinity();
    double lhs_at = 0.0, rhs_at = 0.0;
    double prev = energy(spec, traj.states[0]);
    for (int k = 1; k < traj.nodes(); ++k) {
        const double cur = energy(spec, traj.states[k]);
        if (prev - cur < worst) {
            worst = prev - cur;
            lhs_at = cur;
            rhs_at = prev;
        }
        prev = cur;
    }
    return make_report("entropy_monotone", lhs_at, rhs_at, worst, per_step_tol);
}

inline double discount_primitive(double kappa2, double t) {
    // I_{2 kappa}(t) = int_0^t e^{2 kappa s} ds
    if (kappa2 == 0.0) return t;
    return (std::exp(kappa2 * t) - 1.0) / kappa2;
}

/// Asymptotic expansion of the semigroup for kappa <= 0:
///   e^{2 kappa t}/2 W2^2(S_t mu, nu) - 1/2 W2^2(mu, nu)
///     <= I_{2 kappa}(t) (E(nu) - E(mu)) + t^2/2 |dE|^2(mu).
inline AuditReport asymptotic_expansion_audit(const EnergySpec& spec, const GridMeasure& mu,
                                              const GridMeasure& nu, const std::vector<double>& t_list,
                                              double dt, double tol,
                                              int m_nodes = kDefaultQuadratureNodes) {
    const double kappa = spec.kappa();
    if (kappa > 0.0) throw std::runtime_error("hypothesis kappa <= 0 violated");
    if (t_list.empty()) throw std::invalid_argument("asymptotics: empty t list");
    const double slope_sq = metric_slope_sq(spec, mu);
    const double de = energy(spec, nu) - energy(spec, mu);
    const double w0 = wasserstein2(mu, nu, m_nodes);
    double t_max = 0.0;
    for (double t : t_list) t_max = std::max(t_max, t);
    const ControlledTrajectory traj =
        evolve(spec, mu, ControlField::zero(), t_max, dt, 1, false);

    double worst = std::numeric_limits<double>::infinity();
    double lhs_at = 0.0, rhs_at = 0.0;
    for (double t : t_list) {
        // nearest stored node (times are exact multiples of the solver step)
        int k = 0;
        for (int j = 1; j < traj.nodes(); ++j)
            if (std::fabs(traj.times[j] - t) < std::fabs(traj.times[k] - t)) k = j;
        const double wt = wasserstein2(traj.states[k], nu, m_nodes);
        const double lhs = 0.5 * std::exp(2.0 * kappa * traj.times[k]) * wt * wt - 0.5 * w0 * w0;
        const double rhs =
            discount_primitive(2.0 * kappa, traj.times[k]) * de +
            0.5 * traj.times[k] * traj.times[k] * slope_sq;
        if (rhs - lhs < worst) {
            worst = rhs - lhs;
            lhs_at = lhs;
            rhs_at = rhs;
        }
    }
    return make_report("asymptotic_expansion", lhs_at, rhs_at, worst, tol);
}

}  // namespace wgf
