#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgf/grid.hpp"
#include "wgf/transport.hpp"

namespace wgf {

using ScalarFn = std::function<double(double)>;

namespace detail {

// sampled convexity probe: second difference at r with step h
inline double second_difference(const ScalarFn& f, double r, double h) {
    return (f(r + h) + f(r - h) - 2.0 * f(r)) / (h * h);
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
    return g;
}

}  // namespace detail

/// Internal energy U with its derivative and pressure P(r) = r U'(r) - U(r).
/// Validated against the d=1 structural conditions at construction; the
/// doubling condition only warns (it matters for lsc theory, not the solver).
class InternalEnergySpec {
public:
    enum class Kind { boltzmann, renyi, custom, none };

    static InternalEnergySpec boltzmann() {
        InternalEnergySpec s;
        s.kind_ = Kind::boltzmann;
        s.u_ = [](double r) { return r > 0.0 ? r * std::log(r) : 0.0; };
        s.uprime_ = [](double r) { return std::log(r) + 1.0; };
        s.pressure_ = [](double r) { return r; };
        s.validate();
        return s;
    }

    static InternalEnergySpec renyi(double alpha) {
        if (!(alpha > 1.0)) throw std::invalid_argument("renyi: alpha must be > 1");
        InternalEnergySpec s;
        s.kind_ = Kind::renyi;
        s.alpha_ = alpha;
        const double c = 1.0 / (alpha - 1.0);
        s.u_ = [alpha, c](double r) { return c * std::pow(r, alpha); };
        s.uprime_ = [alpha, c](double r) { return c * alpha * std::pow(r, alpha - 1.0); };
        s.pressure_ = [alpha](double r) { return std::pow(r, alpha); };
        s.validate();
        return s;
    }

    static InternalEnergySpec custom(ScalarFn u, ScalarFn uprime) {
        InternalEnergySpec s;
        s.kind_ = Kind::custom;
        s.u_ = std::move(u);
        s.uprime_ = std::move(uprime);
        s.pressure_ = [u = s.u_, up = s.uprime_](double r) { return r * up(r) - u(r); };
        s.validate();
        return s;
    }

    static InternalEnergySpec none() {
        InternalEnergySpec s;
        s.kind_ = Kind::none;
        s.u_ = [](double) { return 0.0; };
        s.uprime_ = [](double) { return 0.0; };
        s.pressure_ = [](double) { return 0.0; };
        return s;
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    bool trivial() const { return kind_ == Kind::none; }

    double u(double r) const { return u_(r); }
    double uprime(double r) const { return uprime_(r); }

    double pressure(double r) const {
        if (r < 0.0) throw std::invalid_argument("pressure: r must be nonnegative");
        if (r == 0.0) return 0.0;
        return pressure_(r);
    }

    /// P(r)/r, the frozen diffusion coefficient of the semi-implicit step.
    double mobility(double r) const {
        if (kind_ == Kind::boltzmann) return 1.0;
        if (r <= 0.0) return 0.0;
        return pressure_(r) / r;
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    void validate() {
        if (std::fabs(u_(0.0)) > 1e-12) throw std::invalid_argument("internal energy: U(0) must be 0");
        // convexity on a log grid
        for (double r : detail::log_grid(1e-6, 1e3, 40)) {
            const double h = 0.01 * r;
            if (detail::second_difference(u_, r, h) < -1e-10)
                throw std::invalid_argument("internal energy: U not convex");
        }
        // superlinear growth: U(r)/r increasing for large r
        double prev = u_(10.0) / 10.0;
        for (double r : {1e2, 1e3, 1e4}) {
            const double cur = u_(r) / r;
            if (cur < prev - 1e-9) throw std::invalid_argument("internal energy: U not superlinear");
            prev = cur;
        }
        // d=1 McCann condition: s -> s U(1/s) convex and non-increasing
        const auto m = [this](double s) { return s * u_(1.0 / s); };
        for (double s : detail::log_grid(1e-3, 1e3, 40)) {
            const double h = 0.01 * s;
            if (detail::second_difference(m, s, h) < -1e-8)
                throw std::invalid_argument("internal energy: McCann map not convex");
            if ((m(s + h) - m(s - h)) / (2.0 * h) > 1e-8)
                throw std::invalid_argument("internal energy: McCann map not non-increasing");
        }
        // low-density growth clause, sampled
        for (double s : {1e-12, 1e-9, 1e-6}) {
            if (u_(s) * std::pow(s, 0.5) < -1e3)
                warnings_.push_back("internal energy: low-density growth clause looks violated");
        }
        // doubling condition, sampled; warn only
        double worst = 0.0;
        for (double z : detail::log_grid(1e-3, 1e2, 12))
            for (double w : detail::log_grid(1e-3, 1e2, 12)) {
                const double den = 1.0 + u_(z) + u_(w);
                if (den > 0.1) worst = std::max(worst, u_(z + w) / den);
            }
        if (worst > 1e4) warnings_.push_back("internal energy: doubling constant estimate " + std::to_string(worst));
    }

    Kind kind_ = Kind::none;
    double alpha_ = 0.0;
    ScalarFn u_, uprime_, pressure_;
    std::vector<std::string> warnings_;
};

/// Confining potential V with a declared semiconvexity constant kappa_v.
class PotentialSpec {
public:
    static PotentialSpec none() { return PotentialSpec(); }

    /// V(x) = (kappa_v/2) x^2; exactly kappa_v-convex.
    static PotentialSpec quadratic(double kappa_v) {
        PotentialSpec s;
        s.v_ = [kappa_v](double x) { return 0.5 * kappa_v * x * x; };
        s.vprime_ = [kappa_v](double x) { return kappa_v * x; };
        s.kappa_v_ = kappa_v;
        s.trivial_ = false;
        s.validate();
        return s;
    }

    /// V(x) = a (x^2 - b^2)^2, kappa_v = -4 a b^2 (a > 0).
    static PotentialSpec double_well(double a, double b) {
        if (!(a > 0.0)) throw std::invalid_argument("double_well: a must be positive");
        PotentialSpec s;
        s.v_ = [a, b](double x) { const double z = x * x - b * b; return a * z * z; };
        s.vprime_ = [a, b](double x) { return 4.0 * a * x * (x * x - b * b); };
        s.kappa_v_ = -4.0 * a * b * b;
        s.trivial_ = false;
        s.validate();
        return s;
    }

    static PotentialSpec custom(ScalarFn v, ScalarFn vprime, double kappa_v) {
        PotentialSpec s;
        s.v_ = std::move(v);
        s.vprime_ = std::move(vprime);
        s.kappa_v_ = kappa_v;
        s.trivial_ = false;
        s.validate();
        return s;
    }

    bool trivial() const { return trivial_; }
    double kappa_v() const { return kappa_v_; }
    double v(double x) const { return trivial_ ? 0.0 : v_(x); }
    double vprime(double x) const { return trivial_ ? 0.0 : vprime_(x); }

private:
    void validate() const {
        for (double x = -10.0; x <= 10.0; x += 0.25) {
            if (!std::isfinite(v_(x)))
                throw std::invalid_argument("potential: V must be finite on the sampled domain");
            if (detail::second_difference(v_, x, 1e-3) < kappa_v_ - 1e-8)
                throw std::invalid_argument("potential: sampled second difference below kappa_v");
        }
    }

    ScalarFn v_, vprime_;
    double kappa_v_ = 0.0;
    bool trivial_ = true;
};

/// Even nonnegative interaction kernel W with declared kappa_w.
class InteractionSpec {
public:
    static InteractionSpec none() { return InteractionSpec(); }

    /// W(x) = (c/2) x^2, declared kappa_w (any lower bound of W'' = c).
    static InteractionSpec quadratic(double c, double declared_kappa_w = 0.0) {
        if (!(c >= 0.0)) throw std::invalid_argument("interaction: quadratic needs c >= 0");
        InteractionSpec s;
        s.w_ = [c](double x) { return 0.5 * c * x * x; };
        s.wprime_ = [c](double x) { return c * x; };
        s.kappa_w_ = declared_kappa_w;
        s.trivial_ = (c == 0.0);
        s.validate();
        return s;
    }

    /// W(x) = A (1 - exp(-x^2 / (2 s^2))): bounded, even, >= 0,
    /// kappa_w = -2 A exp(-3/2) / s^2.
    static InteractionSpec soft_well(double amplitude, double width) {
        if (!(amplitude > 0.0 && width > 0.0))
            throw std::invalid_argument("interaction: soft_well needs positive amplitude, width");
        InteractionSpec s;
        const double is2 = 1.0 / (width * width);
        s.w_ = [amplitude, is2](double x) { return amplitude * (1.0 - std::exp(-0.5 * x * x * is2)); };
        s.wprime_ = [amplitude, is2](double x) { return amplitude * x * is2 * std::exp(-0.5 * x * x * is2); };
        s.kappa_w_ = -2.0 * amplitude * std::exp(-1.5) * is2;
        s.trivial_ = false;
        s.validate();
        return s;
    }

    static InteractionSpec custom(ScalarFn w, ScalarFn wprime, double kappa_w) {
        InteractionSpec s;
        s.w_ = std::move(w);
        s.wprime_ = std::move(wprime);
        s.kappa_w_ = kappa_w;
        s.trivial_ = false;
        s.validate();
        return s;
    }

    bool trivial() const { return trivial_; }
    double kappa_w() const { return kappa_w_; }
    double w(double x) const { return trivial_ ? 0.0 : w_(x); }
    double wprime(double x) const { return trivial_ ? 0.0 : wprime_(x); }

private:
    void validate() const {
        if (trivial_) return;
        for (double x = -10.0; x <= 10.0; x += 0.25) {
            if (std::fabs(w_(x) - w_(-x)) > 1e-12)
                throw std::invalid_argument("interaction: W must be even");
            if (w_(x) < 0.0) throw std::invalid_argument("interaction: W must be nonnegative");
            if (detail::second_difference(w_, x, 1e-3) < kappa_w_ - 1e-8)
                throw std::invalid_argument("interaction: sampled second difference below kappa_w");
        }
    }

    ScalarFn w_, wprime_;
    double kappa_w_ = 0.0;
    bool trivial_ = true;
};

/// The McCann triple (U, V, W) with kappa = kappa_v + kappa_w.
///
/// Energy convention: E(mu) = 1/2 int U(rho) + int V dmu + 1/2 int W*mu dmu,
/// the functional whose Wasserstein gradient flow is exactly the PDE solved
/// by flow.hpp (diffusion 1/2 dxx P, drift -V' - W'*mu). The minimal
/// subdifferential is then w = 1/2 (U'(rho))' + V' + W'*mu and every EVI-type
/// inequality audited downstream closes with these factors.
struct EnergySpec {
    InternalEnergySpec internal = InternalEnergySpec::none();
    PotentialSpec potential = PotentialSpec::none();
    InteractionSpec interaction = InteractionSpec::none();
    double rho_floor = 1e-12;

    double kappa() const { return potential.kappa_v() + interaction.kappa_w(); }
};

/// (W' * mu)(x_i) by direct convolution.
inline std::vector<double> interaction_gradient(const EnergySpec& spec, const GridMeasure& mu) {
    const int n = mu.size();
    std::vector<double> out(n, 0.0);
    if (spec.interaction.trivial()) return out;
    const double dx = mu.grid().dx();
    // W' is odd; tabulate on signed offsets
    std::vector<double> wp(2 * n - 1);
    for (int k = -(n - 1); k <= n - 1; ++k) wp[k + n - 1] = spec.interaction.wprime(k * dx);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += wp[i - j + n - 1] * mu.density(j);
        out[i] = s * dx;
    }
    return out;
}

inline double energy(const EnergySpec& spec, const GridMeasure& mu) {
    const int n = mu.size();
    const double dx = mu.grid().dx();
    double e_int = 0.0;
    if (!spec.internal.trivial()) {
        for (int i = 0; i < n; ++i) {
            const double u = spec.internal.u(mu.density(i));
            if (!std::isfinite(u)) throw std::runtime_error("density out of admissible range");
            e_int += u;
        }
        e_int *= 0.5 * dx;
    }
    double e_pot = 0.0;
    if (!spec.potential.trivial()) {
        for (int i = 0; i < n; ++i) e_pot += spec.potential.v(mu.grid().center(i)) * mu.density(i);
        e_pot *= dx;
    }
    double e_intxn = 0.0;
    if (!spec.interaction.trivial()) {
        std::vector<double> wt(n);
        for (int k = 0; k < n; ++k) wt[k] = spec.interaction.w(k * dx);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += wt[std::abs(i - j)] * mu.density(j);
            e_intxn += s * mu.density(i);
        }
        e_intxn *= 0.5 * dx * dx;
    }
    return e_int + e_pot + e_intxn;
}

inline double pressure(const InternalEnergySpec& spec, double r) { return spec.pressure(r); }

struct SubdifferentialField {
    std::vector<double> values;  // masked entries are 0
    std::vector<char> mask;      // 1 = valid
};

/// w(x_i) = 1/2 d/dx[U'(rho)](x_i) + V'(x_i) + (W'*mu)(x_i), centered
/// differences; cells whose stencil dips below rho_floor are masked.
inline SubdifferentialField subdifferential_field(const EnergySpec& spec, const GridMeasure& mu) {
    const int n = mu.size();
    const double dx = mu.grid().dx();
    SubdifferentialField f;
    f.values.assign(n, 0.0);
    f.mask.assign(n, 0);

    std::vector<double> uprime(n, 0.0);
    if (!spec.internal.trivial())
        for (int i = 0; i < n; ++i)
            if (mu.density(i) >= spec.rho_floor) uprime[i] = spec.internal.uprime(mu.density(i));

    const std::vector<double> wconv = interaction_gradient(spec, mu);

    bool any = false;
    for (int i = 0; i < n; ++i) {
        const int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
        bool ok = mu.density(i) >= spec.rho_floor;
        if (!spec.internal.trivial())
            ok = ok && mu.density(il) >= spec.rho_floor && mu.density(ir) >= spec.rho_floor;
        if (!ok) continue;
        double dup = 0.0;
        if (!spec.internal.trivial()) dup = (uprime[ir] - uprime[il]) / ((ir - il) * dx);
        f.values[i] = 0.5 * dup + spec.potential.vprime(mu.grid().center(i)) + wconv[i];
        f.mask[i] = 1;
        any = true;
    }
    if (!any) throw std::runtime_error("slope undefined");
    return f;
}

/// ||w||^2 over the unmasked cells: the information functional surrogate.
inline double metric_slope_sq(const EnergySpec& spec, const GridMeasure& mu) {
    const SubdifferentialField f = subdifferential_field(spec, mu);
    double s = 0.0;
    for (int i = 0; i < mu.size(); ++i)
        if (f.mask[i]) s += f.values[i] * f.values[i] * mu.density(i);
    return s * mu.grid().dx();
}

/// Ebar(mu) = E(mu) + (c1/2) W2^2(mu, anchor) + c2, calibrated so its
/// infimum over a probe family is 0.
struct QuadraticLowerBound {
    GridMeasure anchor;
    double c1 = 0.0;
    double c2 = 0.0;

    double ebar(const EnergySpec& spec, const GridMeasure& mu) const {
        const double w = wasserstein2(mu, anchor);
        return energy(spec, mu) + 0.5 * c1 * w * w + c2;
    }

    /// M_{rho,nu} = max{E(rho) + c1 W2^2(rho, anchor) + c2, 0}.
    double growth_constant(const EnergySpec& spec, const GridMeasure& rho) const {
        const double w = wasserstein2(rho, anchor);
        return std::max(energy(spec, rho) + c1 * w * w + c2, 0.0);
    }
};

inline QuadraticLowerBound calibrate_lower_bound(const EnergySpec& spec, const GridMeasure& anchor,
                                                 const std::vector<GridMeasure>& probes) {
    if (probes.empty()) throw std::invalid_argument("calibrate_lower_bound: empty probe family");
    const double kappa = spec.kappa();
    const double c1 = std::max(-kappa + 0.5, 0.05 - kappa);  // interval midpoint, clamped
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& mu : probes) {
        const double w = wasserstein2(mu, anchor);
        lo = std::min(lo, energy(spec, mu) + 0.5 * c1 * w * w);
    }
    return QuadraticLowerBound{anchor, c1, -lo};
}

}  // namespace wgf
