#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgf/audit.hpp"
#include "wgf/hamiltonian.hpp"
#include "wgf/value.hpp"

namespace wgf {

inline double default_tol_visc(const ControlProblem& problem) {
    return 0.05 * (1.0 + problem.reward.bound);
}

namespace detail {

/// Probe family for the optimizer searches: the test function's own anchors,
/// the scenario seeds, displacement midpoints towards the primary anchor, and
/// endpoints of short controlled runs (the almost-optimally-controlled
/// relaxation points).
inline std::vector<GridMeasure> build_probes(const ControlProblem& problem,
                                             const GridMeasure& primary,
                                             const std::vector<GridMeasure>& anchors,
                                             const std::vector<GridMeasure>& seeds,
                                             bool smooth_seeds) {
    std::vector<GridMeasure> probes;
    probes.push_back(primary);
    for (const auto& m : anchors) probes.push_back(m);
    const double tau = 12.0 * problem.dt;
    for (const auto& s : seeds) {
        if (smooth_seeds) {
            probes.push_back(
                evolve(problem.spec, s, ControlField::zero(), tau, problem.dt, 1 << 20, false)
                    .states.back());
        } else {
            probes.push_back(s);
        }
        probes.push_back(displacement_interpolate(s, primary, 0.5));
    }
    const int n_runs = std::min(2, problem.basis.size());
    for (int b = 0; b < n_runs; ++b) {
        std::vector<double> coeff(problem.basis.size(), 0.0);
        coeff[b] = 0.4 * problem.coeff_max;
        try {
            probes.push_back(evolve(problem.spec, primary,
                                    ControlField::basis_static(problem.basis, coeff), tau,
                                    problem.dt, 1 << 20, false)
                                 .states.back());
        } catch (const std::exception&) {
            // inadmissible short run: skip the probe
        }
    }
    return probes;
}

}  // namespace detail

/// Subsolution residual: maximize Phi_hat - f_dag over the probe family, then
/// check Phi_hat - g_dag <= h + tol at the argmax.
inline AuditReport subsolution_residual(const ControlProblem& problem, const TestFunctionDagger& tf,
                                        const std::vector<GridMeasure>& seeds, int budget,
                                        double tol = -1.0, std::uint64_t seed = 1) {
    tf.validate();
    if (tol < 0.0) tol = default_tol_visc(problem);
    const std::vector<GridMeasure> probes =
        detail::build_probes(problem, tf.rho, tf.anchors, seeds, false);
    if (probes.empty()) throw std::invalid_argument("subsolution: empty probe family");
    const int probe_budget = std::max(50, budget / static_cast<int>(probes.size()));

    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    double phi_at_arg = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const ValueResult vr = value_function(problem, probes[i], probe_budget, seed);
        const double gap = vr.best.phi_estimate - f_dagger(tf, probes[i]);
        if (gap > best + 1e-15) {
            best = gap;
            arg = static_cast<int>(i);
            phi_at_arg = vr.best.phi_estimate;
        }
    }
    const GridMeasure& opt = probes[arg];
    const double lhs = phi_at_arg - g_dagger(tf, opt, problem.spec).total;
    const double rhs = problem.reward.h(opt);
    AuditReport r = make_report("subsolution", lhs, rhs, rhs - lhs, tol);
    r.detail = "argmax probe " + std::to_string(arg) + " of " + std::to_string(probes.size());
    return r;
}

/// Supersolution residual with the Young-equality control: minimize
/// Phi_hat - f_ddag over gradient-flow-smoothed probes, audit corduroy
/// inequalities for psi in {0, psi*, basis} at the argmin, then check
/// Phi_hat - g_ddag >= h - tol.
inline AuditReport supersolution_residual(const ControlProblem& problem,
                                          const TestFunctionDdagger& tf,
                                          const std::vector<GridMeasure>& seeds, int budget,
                                          double tol = -1.0, std::uint64_t seed = 1) {
    tf.validate();
    if (tol < 0.0) tol = default_tol_visc(problem);
    const std::vector<GridMeasure> probes =
        detail::build_probes(problem, tf.gamma, tf.anchors, seeds, true);
    if (probes.empty()) throw std::invalid_argument("supersolution: empty probe family");
    const int probe_budget = std::max(50, budget / static_cast<int>(probes.size()));

    int arg = -1;
    double best = std::numeric_limits<double>::infinity();
    double phi_at_arg = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const ValueResult vr = value_function(problem, probes[i], probe_budget, seed);
        const double gap = vr.best.phi_estimate - f_ddagger(tf, probes[i]);
        if (gap < best - 1e-15) {
            best = gap;
            arg = static_cast<int>(i);
            phi_at_arg = vr.best.phi_estimate;
        }
    }
    const GridMeasure& opt = probes[arg];
    const double h_at = problem.reward.h(opt);
    const HamiltonianValue g = g_ddagger(tf, opt, problem.spec);

    std::vector<double> target;
    try {
        target = ddagger_pairing_field(tf, opt);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("supersolution: transport map failed at argmin: ") +
                                 e.what());
    }

    AuditReport bundle;
    bundle.name = "supersolution";
    bundle.tol = tol;

    // corduroy inequality for a given gradient-of-potential control sample
    auto corduroy = [&](const std::vector<double>& w, const std::string& label) {
        const double pairing = l2_inner(opt, w, target) - 0.5 * l2_norm_sq(opt, w);
        const double val = phi_at_arg - g.g_energy - h_at - pairing;
        bundle.parts.push_back(make_report("corduroy_" + label, phi_at_arg - g.g_energy - pairing,
                                           h_at, val, tol));
    };
    corduroy(std::vector<double>(opt.size(), 0.0), "zero");

    // Young-optimal control: L2(mu)-projection of the pairing field onto the
    // control basis
    if (problem.basis.size() > 0) {
        const int nb = problem.basis.size();
        std::vector<double> gram(nb * nb, 0.0), rhs(nb, 0.0);
        for (int a = 0; a < nb; ++a) {
            rhs[a] = l2_inner(opt, problem.basis.gradient(a), target);
            for (int b = 0; b < nb; ++b)
                gram[a * nb + b] = l2_inner(opt, problem.basis.gradient(a), problem.basis.gradient(b));
        }
        for (int a = 0; a < nb; ++a) gram[a * nb + a] += 1e-10;
        // gaussian elimination
        std::vector<double> coeff = rhs;
        for (int col = 0; col < nb; ++col) {
            int piv = col;
            for (int row = col + 1; row < nb; ++row)
                if (std::fabs(gram[row * nb + col]) > std::fabs(gram[piv * nb + col])) piv = row;
            for (int k = 0; k < nb; ++k) std::swap(gram[col * nb + k], gram[piv * nb + k]);
            std::swap(coeff[col], coeff[piv]);
            for (int row = col + 1; row < nb; ++row) {
                const double m = gram[row * nb + col] / gram[col * nb + col];
                for (int k = col; k < nb; ++k) gram[row * nb + k] -= m * gram[col * nb + k];
                coeff[row] -= m * coeff[col];
            }
        }
        for (int col = nb - 1; col >= 0; --col) {
            for (int k = col + 1; k < nb; ++k) coeff[col] -= gram[col * nb + k] * coeff[k];
            coeff[col] /= gram[col * nb + col];
        }
        corduroy(problem.basis.combine(coeff), "young_optimal");
        for (int b = 0; b < nb; ++b) corduroy(problem.basis.gradient(b), "basis_" + std::to_string(b));
    }

    // Cauchy-Schwarz closing step: 1/2 ||a b + grad phi . b||^2 >= g_W2
    {
        const double lhs = 0.5 * l2_norm_sq(opt, target);
        bundle.parts.push_back(make_report("cauchy_schwarz_closing", lhs, g.g_w2, lhs - g.g_w2,
                                           std::max(tol, 1e-9)));
    }

    const double lhs = phi_at_arg - g.total;
    bundle.lhs = lhs;
    bundle.rhs = h_at;
    bundle.slack = lhs - h_at;
    bundle.verdict = (bundle.slack >= -tol) ? "PASS" : "FAIL";
    if (!bundle.passed()) bundle.verdict = "FAIL";
    bundle.detail = "argmin probe " + std::to_string(arg) + " of " + std::to_string(probes.size());
    return bundle;
}

/// Value-function sanity: |Phi_hat| within the Corollary bound, monotone
/// improvement over the zero-control competitor, and upper semicontinuity
/// along the gradient flow.
inline AuditReport value_bounds_audit(const ControlProblem& problem, const GridMeasure& mu0,
                                      int budget, std::uint64_t seed = 1) {
    const ValueResult vr = value_function(problem, mu0, budget, seed);
    AuditReport bundle;
    bundle.name = "value_bounds";
    const double cap = problem.reward.bound + vr.best.tail_bound;
    bundle.parts.push_back(make_report("phi_within_h_bound", std::fabs(vr.best.phi_estimate), cap,
                                       cap - std::fabs(vr.best.phi_estimate), 0.0));
    bundle.parts.push_back(make_report("monotone_improvement", vr.best.phi_estimate,
                                       vr.baseline.phi_estimate,
                                       vr.best.phi_estimate - vr.baseline.phi_estimate, 1e-12));
    for (double t : {0.1, 0.3}) {
        const GridMeasure drifted =
            evolve(problem.spec, mu0, ControlField::zero(), t, problem.dt, 1 << 20, false)
                .states.back();
        const ValueResult vt = value_function(problem, drifted, budget, seed);
        const double cap_t = vr.best.phi_estimate + 2.0 * t * problem.reward.bound;
        bundle.parts.push_back(make_report("usc_along_flow_t" + std::to_string(t),
                                           vt.best.phi_estimate, cap_t,
                                           cap_t - vt.best.phi_estimate,
                                           default_tol_visc(problem)));
    }
    bundle.lhs = vr.best.phi_estimate;
    bundle.rhs = cap;
    bundle.slack = cap - std::fabs(vr.best.phi_estimate);
    bundle.tol = 0.0;
    bundle.verdict = bundle.passed() ? "PASS" : "FAIL";
    return bundle;
}

}  // namespace wgf
