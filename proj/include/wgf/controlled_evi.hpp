#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgf/audit.hpp"
#include "wgf/energy.hpp"
#include "wgf/evi.hpp"
#include "wgf/flow.hpp"
#include "wgf/hamiltonian.hpp"

namespace wgf {

namespace detail {

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
        s += 0.5 * (f[k] + f[k + 1]) * (t[k + 1] - t[k]);
    return s;
}

}  // namespace detail

/// Controlled EVI, dagger side:
///   f_dag(pi_T) - f_dag(pi_0) <= int_0^T g_dag_E(pi_t) - <u_t, field(pi_t)> dt.
inline AuditReport controlled_evi_residual(const EnergySpec& spec, const ControlledTrajectory& traj,
                                           const TestFunctionDagger& tf, double tol,
                                           int m_nodes = kDefaultQuadratureNodes) {
    tf.validate();
    const int n = traj.nodes();
    std::vector<double> integrand(n);
    for (int k = 0; k < n; ++k) {
        try {
            const double ge = g_dagger(tf, traj.states[k], spec, m_nodes).g_energy;
            const std::vector<double> field = dagger_pairing_field(tf, traj.states[k], m_nodes);
            integrand[k] = ge - l2_inner(traj.states[k], traj.controls[k], field);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string(e.what()) + " at time index " + std::to_string(k));
        }
    }
    const double lhs = f_dagger(tf, traj.states[n - 1], m_nodes) - f_dagger(tf, traj.states[0], m_nodes);
    const double rhs = detail::trapezoid(traj.times, integrand);
    return make_report("controlled_evi_dagger", lhs, rhs, rhs - lhs, tol);
}

/// Controlled EVI, ddagger side:
///   f_ddag(mu_T) - f_ddag(mu_0) >= int_0^T g_ddag_E(mu_t) + <u_t, field(mu_t)> dt.
inline AuditReport controlled_evi_residual(const EnergySpec& spec, const ControlledTrajectory& traj,
                                           const TestFunctionDdagger& tf, double tol,
                                           int m_nodes = kDefaultQuadratureNodes) {
    tf.validate();
    const int n = traj.nodes();
    std::vector<double> integrand(n);
    for (int k = 0; k < n; ++k) {
        try {
            const double ge = g_ddagger(tf, traj.states[k], spec, m_nodes).g_energy;
            const std::vector<double> field = ddagger_pairing_field(tf, traj.states[k], m_nodes);
            integrand[k] = ge + l2_inner(traj.states[k], traj.controls[k], field);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string(e.what()) + " at time index " + std::to_string(k));
        }
    }
    const double lhs = f_ddagger(tf, traj.states[n - 1], m_nodes) - f_ddagger(tf, traj.states[0], m_nodes);
    const double rhs = detail::trapezoid(traj.times, integrand);
    return make_report("controlled_evi_ddagger", lhs, rhs, lhs - rhs, tol);
}

/// Metric-growth bounds along controlled curves. Three sub-audits:
///  (i)   the derivative bound valid for any alpha,
///  (ii)  the integrated growth bound (needs alpha <= 3 (kappa - 1)),
///  (iii) the uniform-in-time sup bound (same hypothesis).
inline AuditReport lemma35_bounds(const EnergySpec& spec, const ControlledTrajectory& traj,
                                  const GridMeasure& rho, const QuadraticLowerBound& qlb,
                                  double alpha, double tol,
                                  int m_nodes = kDefaultQuadratureNodes) {
    const int n = traj.nodes();
    if (n < 3) throw std::invalid_argument("lemma35: need at least 3 stored states");
    const double kappa = spec.kappa();
    const double big_m = qlb.growth_constant(spec, rho);
    const double e_rho = energy(spec, rho);

    std::vector<double> w2(n), usq(n), e_state(n);
    for (int k = 0; k < n; ++k) {
        w2[k] = wasserstein2(traj.states[k], rho, m_nodes);
        usq[k] = l2_norm_sq(traj.states[k], traj.controls[k]);
        e_state[k] = energy(spec, traj.states[k]);
    }

    AuditReport bundle;
    bundle.name = "lemma35";
    bundle.tol = tol;

    // (i) centered-difference derivative of 1/2 e^{alpha t} W2^2 at interior times
    {
        double worst = std::numeric_limits<double>::infinity();
        double lhs_at = 0.0, rhs_at = 0.0;
        for (int k = 1; k + 1 < n; ++k) {
            const double yl = 0.5 * std::exp(alpha * traj.times[k - 1]) * w2[k - 1] * w2[k - 1];
            const double yr = 0.5 * std::exp(alpha * traj.times[k + 1]) * w2[k + 1] * w2[k + 1];
            const double deriv = (yr - yl) / (traj.times[k + 1] - traj.times[k - 1]);
            const double rhs = std::exp(alpha * traj.times[k]) *
                               (e_rho - e_state[k] + 0.5 * (alpha + 1.0 - kappa) * w2[k] * w2[k] +
                                0.5 * usq[k]);
            if (rhs - deriv < worst) {
                worst = rhs - deriv;
                lhs_at = deriv;
                rhs_at = rhs;
            }
        }
        bundle.parts.push_back(make_report("derivative_bound", lhs_at, rhs_at, worst, tol));
    }

    const bool hypothesis = alpha <= 3.0 * (kappa - 1.0) + 1e-12;
    if (!hypothesis) {
        bundle.parts.push_back(make_skip("integrated_bound", "alpha > 3 (kappa - 1)"));
        bundle.parts.push_back(make_skip("uniform_bound", "alpha > 3 (kappa - 1)"));
    } else {
        // running integral of e^{alpha s} ||u_s||^2 by trapezoid
        std::vector<double> cost_to(n, 0.0);
        for (int k = 1; k < n; ++k) {
            const double fl = std::exp(alpha * traj.times[k - 1]) * usq[k - 1];
            const double fr = std::exp(alpha * traj.times[k]) * usq[k];
            cost_to[k] = cost_to[k - 1] + 0.5 * (fl + fr) * (traj.times[k] - traj.times[k - 1]);
        }
        // (ii) growth bound at every stored time
        {
            double worst = std::numeric_limits<double>::infinity();
            double lhs_at = 0.0, rhs_at = 0.0;
            for (int k = 0; k < n; ++k) {
                const double lhs = 0.5 * std::exp(alpha * traj.times[k]) * w2[k] * w2[k];
                const double rhs = 0.5 * w2[0] * w2[0] +
                                   big_m * discount_primitive(alpha, traj.times[k]) +
                                   0.5 * cost_to[k];
                if (rhs - lhs < worst) {
                    worst = rhs - lhs;
                    lhs_at = lhs;
                    rhs_at = rhs;
                }
            }
            bundle.parts.push_back(make_report("integrated_bound", lhs_at, rhs_at, worst, tol));
        }
        // (iii) uniform sup bound
        {
            const double t_final = traj.times.back();
            const double a_minus = std::max(-alpha, 0.0);
            const double a_plus = std::max(alpha, 0.0);
            double sup_w2 = 0.0, plain_cost = 0.0;
            for (int k = 0; k < n; ++k) sup_w2 = std::max(sup_w2, w2[k]);
            for (int k = 1; k < n; ++k)
                plain_cost += 0.5 * (usq[k - 1] + usq[k]) * (traj.times[k] - traj.times[k - 1]);
            const double lhs = 0.5 * std::exp(-a_minus * t_final) * sup_w2 * sup_w2;
            const double rhs = 0.5 * w2[0] * w2[0] + big_m * discount_primitive(alpha, t_final) +
                               0.5 * std::exp(a_plus * t_final) * plain_cost;
            bundle.parts.push_back(make_report("uniform_bound", lhs, rhs, rhs - lhs, tol));
        }
    }

    double worst = std::numeric_limits<double>::infinity();
    for (const auto& p : bundle.parts)
        if (p.verdict != "SKIP") worst = std::min(worst, p.slack);
    bundle.slack = worst;
    bundle.lhs = bundle.parts[0].lhs;
    bundle.rhs = bundle.parts[0].rhs;
    bundle.verdict = bundle.passed() ? "PASS" : "FAIL";
    return bundle;
}

}  // namespace wgf
