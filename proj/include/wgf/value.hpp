#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wgf/audit.hpp"
#include "wgf/control.hpp"
#include "wgf/energy.hpp"
#include "wgf/flow.hpp"
#include "wgf/rng.hpp"
#include "wgf/transport.hpp"

namespace wgf {

/// Bounded reward h with its declared sup bound and W_p continuity order.
struct RewardSpec {
    std::function<double(const GridMeasure&)> h;
    double bound = 0.0;
    double p = 1.5;

    static RewardSpec constant(double c) {
        return RewardSpec{[c](const GridMeasure&) { return c; }, std::fabs(c), 1.5};
    }

    /// h(mu) = -scale * W2^2(mu, target) / (1 + W2^2(mu, target)); bound = scale.
    static RewardSpec w2_target(GridMeasure target, double scale = 1.0, int m_nodes = 1024) {
        auto h = [target = std::move(target), scale, m_nodes](const GridMeasure& mu) {
            const double w = wasserstein2(mu, target, m_nodes);
            return -scale * w * w / (1.0 + w * w);
        };
        return RewardSpec{std::move(h), scale, 1.5};
    }

    /// h(mu) = scale / (1 + (mean(mu) - m_star)^2); bound = scale.
    static RewardSpec mean_target(double m_star, double scale = 1.0) {
        auto h = [m_star, scale](const GridMeasure& mu) {
            const double d = mu.mean() - m_star;
            return scale / (1.0 + d * d);
        };
        return RewardSpec{std::move(h), scale, 1.5};
    }
};

/// Discounted infinite-horizon control problem, truncated at `horizon`.
struct ControlProblem {
    EnergySpec spec;
    RewardSpec reward;
    double lambda = 1.0;
    double horizon = 8.0;
    double dt = 4e-3;
    ControlBasis basis;  // empty basis = gradient-flow-only problem
    int n_windows = 6;
    double coeff_max = 1.5;
    int quad_samples = 64;  // action quadrature nodes along the trajectory

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("problem: lambda must be positive");
        if (!(horizon >= 5.0 * lambda))
            throw std::invalid_argument("problem: horizon must be at least 5 lambda");
        if (!(dt > 0.0)) throw std::invalid_argument("problem: dt must be positive");
        if (!std::isfinite(reward.bound)) throw std::invalid_argument("problem: reward bound");
    }

    int dims() const { return basis.size() * n_windows; }

    int solver_steps() const { return std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-12))); }
    int quad_stride() const { return std::max(1, solver_steps() / quad_samples); }
};

struct ActionValue {
    double action = 0.0;           // A_T
    double tail_bound = 0.0;       // e^{-T/lambda} ||h||_inf
    double phi_estimate = 0.0;     // A_T + e^{-T/lambda} h(mu_T)
    double control_cost = 0.0;     // discounted quadratic cost (>= 0)
    double reward_integral = 0.0;  // discounted reward part
};

namespace detail {

// int_a^b e^{-t/lambda} (fa + (fb-fa)(t-a)/(b-a)) dt, exactly
inline double discounted_segment(double a, double b, double fa, double fb, double lambda) {
    const double ea = std::exp(-a / lambda), eb = std::exp(-b / lambda);
    const double i0 = lambda * (ea - eb);
    const double i1 = (b > a) ? lambda * i0 / (b - a) - lambda * eb : 0.0;
    return fa * (i0 - i1) + fb * i1;
}

}  // namespace detail

/// Discounted action of a stored trajectory; the discount kernel is
/// integrated in closed form against the piecewise-linear interpolant of the
/// sampled integrand (exact for constant rewards, so trivial scenarios audit
/// to fp accuracy).
inline ActionValue action(const ControlProblem& problem, const ControlledTrajectory& traj) {
    if (std::fabs(traj.horizon() - problem.horizon) > problem.dt + 1e-12)
        throw std::runtime_error("horizon mismatch");
    const int n = traj.nodes();
    std::vector<double> hval(n), ucost(n);
    for (int k = 0; k < n; ++k) {
        hval[k] = problem.reward.h(traj.states[k]) / problem.lambda;
        ucost[k] = 0.5 * l2_norm_sq(traj.states[k], traj.controls[k]);
    }
    ActionValue out;
    for (int k = 0; k + 1 < n; ++k) {
        out.reward_integral += detail::discounted_segment(traj.times[k], traj.times[k + 1],
                                                          hval[k], hval[k + 1], problem.lambda);
        out.control_cost += detail::discounted_segment(traj.times[k], traj.times[k + 1],
                                                       ucost[k], ucost[k + 1], problem.lambda);
    }
    out.action = out.reward_integral - out.control_cost;
    const double discount_end = std::exp(-traj.horizon() / problem.lambda);
    out.tail_bound = discount_end * problem.reward.bound;
    out.phi_estimate = out.action + discount_end * problem.reward.h(traj.states.back());
    return out;
}

struct ValueResult {
    ActionValue best;
    ActionValue baseline;             // u = 0 competitor
    std::vector<double> coeff;        // per window x basis, window-major
    int evals_used = 0;
    bool budget_exhausted = false;
    bool certified_lower_bound = true;  // always: suprema over a finite basis
};

namespace detail {

inline ControlField field_from_coeff(const ControlProblem& problem, const std::vector<double>& c,
                                     double t_final) {
    if (problem.basis.size() == 0) return ControlField::zero();
    const int w = static_cast<int>(c.size()) / problem.basis.size();
    std::vector<std::vector<double>> per_window(w);
    for (int j = 0; j < w; ++j)
        per_window[j] = std::vector<double>(c.begin() + j * problem.basis.size(),
                                            c.begin() + (j + 1) * problem.basis.size());
    return ControlField::basis_windows(problem.basis, geometric_windows(t_final, w), per_window);
}

inline std::optional<ActionValue> try_action(const ControlProblem& problem, const GridMeasure& mu0,
                                             const ControlField& u) {
    try {
        const ControlledTrajectory traj = evolve(problem.spec, mu0, u, problem.horizon,
                                                 problem.dt, problem.quad_stride(), false);
        return action(problem, traj);
    } catch (const std::exception&) {
        return std::nullopt;  // CFL violation or positivity loss: inadmissible point
    }
}

}  // namespace detail

/// Maximize the discounted action over per-window basis coefficients with a
/// deterministic multi-start pattern search seeded at u = 0. The result never
/// falls below the u = 0 competitor and is a lower bound of the value
/// function up to discretization.
inline ValueResult value_function(const ControlProblem& problem, const GridMeasure& mu0, int budget,
                                  std::uint64_t seed = 1) {
    problem.validate();
    const int dims = problem.dims();
    ValueResult out;
    const auto base = detail::try_action(problem, mu0, ControlField::zero());
    if (!base) throw std::runtime_error("value: the zero-control trajectory failed");
    out.baseline = *base;
    out.best = *base;
    out.coeff.assign(dims, 0.0);
    out.evals_used = 1;
    if (dims == 0 || budget <= 1) return out;

    auto eval = [&](const std::vector<double>& c) -> std::optional<double> {
        const auto av = detail::try_action(problem, mu0, detail::field_from_coeff(problem, c, problem.horizon));
        ++out.evals_used;
        if (!av) return std::nullopt;
        return av->phi_estimate;
    };

    double best_val = out.best.phi_estimate;
    std::vector<double> best_c(dims, 0.0);

    Rng rng(seed);
    std::vector<std::vector<double>> starts;
    starts.push_back(std::vector<double>(dims, 0.0));
    {
        std::vector<double> s(dims);
        for (double& v : s) v = 0.2 * (2.0 * rng.uniform() - 1.0) * problem.coeff_max;
        starts.push_back(std::move(s));
    }

    for (const auto& start : starts) {
        std::vector<double> c = start;
        double fc;
        {
            const auto v = eval(c);
            if (out.evals_used >= budget) {
                out.budget_exhausted = true;
                break;
            }
            if (!v) continue;
            fc = *v;
        }
        double step_size = 0.25 * problem.coeff_max;
        while (step_size >= 1e-3 * problem.coeff_max && out.evals_used < budget) {
            bool improved = false;
            for (int d = 0; d < dims && out.evals_used < budget; ++d) {
                for (double sgn : {+1.0, -1.0}) {
                    if (out.evals_used >= budget) break;
                    std::vector<double> cand = c;
                    cand[d] = std::clamp(cand[d] + sgn * step_size, -problem.coeff_max,
                                         problem.coeff_max);
                    if (cand[d] == c[d]) continue;
                    const auto v = eval(cand);
                    if (v && *v > fc + 1e-14) {
                        c = std::move(cand);
                        fc = *v;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step_size *= 0.5;
        }
        if (fc > best_val + 1e-14 ||
            (std::fabs(fc - best_val) <= 1e-14 && c < best_c)) {
            best_val = fc;
            best_c = c;
        }
        if (out.evals_used >= budget) out.budget_exhausted = true;
    }

    if (best_val > out.baseline.phi_estimate) {
        const auto av = detail::try_action(problem, mu0, detail::field_from_coeff(problem, best_c, problem.horizon));
        if (av) {
            out.best = *av;
            out.coeff = best_c;
        }
    }
    return out;
}

/// |Phi(mu0) - sup_{controls on [0,T_mid]} (A_{T_mid} + e^{-T_mid/lambda} Phi(mu_{T_mid}))|.
/// T_mid is snapped to the quadrature grid so the semigroup splice is exact;
/// the inner value is re-optimized at the incumbent first-stage control.
inline AuditReport dpp_residual(const ControlProblem& problem, const GridMeasure& mu0,
                                double t_mid, int budget, double tol = -1.0,
                                std::uint64_t seed = 1) {
    problem.validate();
    if (!(t_mid > 0.0 && t_mid <= 0.5 * problem.horizon + 1e-12))
        throw std::invalid_argument("dpp: need 0 < T_mid <= T/2");
    const double grain = problem.quad_stride() * (problem.horizon / problem.solver_steps());
    t_mid = std::max(1.0, std::round(t_mid / grain)) * grain;
    if (tol < 0.0)
        tol = 0.05 * problem.reward.bound +
              2.0 * std::exp(-problem.horizon / problem.lambda) * problem.reward.bound;

    const ValueResult full = value_function(problem, mu0, budget, seed);

    // first-stage problem on [0, T_mid]
    const int w1 = problem.basis.size() > 0 ? std::min(2, problem.n_windows) : 0;
    const int dims1 = problem.basis.size() * w1;
    const double discount_mid = std::exp(-t_mid / problem.lambda);

    auto stage = [&](const std::vector<double>& c)
        -> std::optional<std::pair<double, GridMeasure>> {
        try {
            const ControlField u = dims1 > 0 ? detail::field_from_coeff(problem, c, t_mid)
                                             : ControlField::zero();
            const ControlledTrajectory traj = evolve(problem.spec, mu0, u, t_mid, problem.dt,
                                                     problem.quad_stride(), false);
            const int n = traj.nodes();
            double acc = 0.0;
            for (int k = 0; k + 1 < n; ++k) {
                const double fa = problem.reward.h(traj.states[k]) / problem.lambda -
                                  0.5 * l2_norm_sq(traj.states[k], traj.controls[k]);
                const double fb = problem.reward.h(traj.states[k + 1]) / problem.lambda -
                                  0.5 * l2_norm_sq(traj.states[k + 1], traj.controls[k + 1]);
                acc += detail::discounted_segment(traj.times[k], traj.times[k + 1], fa, fb,
                                                  problem.lambda);
            }
            return std::make_pair(acc, traj.states.back());
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };

    // search over first-stage coefficients with the zero-control continuation,
    // then re-optimize the continuation at the incumbent
    std::vector<double> c(dims1, 0.0);
    auto cur = stage(c);
    if (!cur) throw std::runtime_error("dpp: zero-control first stage failed");
    auto continuation = [&](const GridMeasure& end) {
        const auto av = detail::try_action(problem, end, ControlField::zero());
        return av ? av->phi_estimate : -std::numeric_limits<double>::infinity();
    };
    double fc = cur->first + discount_mid * continuation(cur->second);
    GridMeasure best_end = cur->second;
    double best_a1 = cur->first;
    int evals = 1;
    const int stage_budget = std::max(budget / 3, 40);
    double step_size = 0.25 * problem.coeff_max;
    while (dims1 > 0 && step_size >= 1e-2 * problem.coeff_max && evals < stage_budget) {
        bool improved = false;
        for (int d = 0; d < dims1 && evals < stage_budget; ++d) {
            for (double sgn : {+1.0, -1.0}) {
                std::vector<double> cand = c;
                cand[d] = std::clamp(cand[d] + sgn * step_size, -problem.coeff_max,
                                     problem.coeff_max);
                if (cand[d] == c[d]) continue;
                const auto res = stage(cand);
                ++evals;
                if (!res) continue;
                const double val = res->first + discount_mid * continuation(res->second);
                if (val > fc + 1e-14) {
                    c = std::move(cand);
                    fc = val;
                    best_end = res->second;
                    best_a1 = res->first;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step_size *= 0.5;
    }

    const ValueResult inner = value_function(problem, best_end, budget, seed);
    const double two_stage = best_a1 + discount_mid * inner.best.phi_estimate;
    const double residual = std::fabs(full.best.phi_estimate - two_stage);
    AuditReport r = make_report("dpp", full.best.phi_estimate, two_stage, -residual, tol);
    r.detail = "T_mid=" + std::to_string(t_mid);
    return r;
}

}  // namespace wgf
