#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "wgf/energy.hpp"
#include "wgf/grid.hpp"
#include "wgf/transport.hpp"

namespace wgf {

/// Smooth cylindrical map [0,inf)^k -> R with strictly positive partials.
class CylindricalPhi {
public:
    using Eval = std::function<double(const std::vector<double>&)>;
    using Grad = std::function<std::vector<double>(const std::vector<double>&)>;

    /// phi(x) = sum c_i x_i, c_i > 0.
    static CylindricalPhi linear(std::vector<double> c) {
        check_positive(c);
        CylindricalPhi p;
        p.k_ = static_cast<int>(c.size());
        p.eval_ = [c](const std::vector<double>& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * x[i];
            return s;
        };
        p.grad_ = [c](const std::vector<double>&) { return c; };
        return p;
    }

    /// phi(x) = sum c_i log(1 + x_i), c_i > 0 (bounded partials on [0,inf)).
    static CylindricalPhi log_saturating(std::vector<double> c) {
        check_positive(c);
        CylindricalPhi p;
        p.k_ = static_cast<int>(c.size());
        p.eval_ = [c](const std::vector<double>& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * std::log1p(x[i]);
            return s;
        };
        p.grad_ = [c](const std::vector<double>& x) {
            std::vector<double> g(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) g[i] = c[i] / (1.0 + x[i]);
            return g;
        };
        return p;
    }

    /// User-supplied phi; partials are spot-checked for positivity.
    static CylindricalPhi custom(int k, Eval eval, Grad grad) {
        CylindricalPhi p;
        p.k_ = k;
        p.eval_ = std::move(eval);
        p.grad_ = std::move(grad);
        std::vector<double> x(k, 0.0);
        for (double v : {0.0, 0.5, 2.0, 10.0}) {
            std::fill(x.begin(), x.end(), v);
            for (double gi : p.grad_(x))
                if (!(gi > 0.0))
                    throw std::invalid_argument("cylindrical phi: partials must be positive");
        }
        return p;
    }

    int arity() const { return k_; }
    double operator()(const std::vector<double>& x) const { return eval_(x); }
    std::vector<double> gradient(const std::vector<double>& x) const { return grad_(x); }

private:
    static void check_positive(const std::vector<double>& c) {
        if (c.empty()) throw std::invalid_argument("cylindrical phi: empty coefficient list");
        for (double v : c)
            if (!(v > 0.0)) throw std::invalid_argument("cylindrical phi: coefficients must be positive");
    }

    int k_ = 0;
    Eval eval_;
    Grad grad_;
};

/// (a, phi, rho, mu_vec) defining (f_dag, g_dag).
struct TestFunctionDagger {
    double a;
    CylindricalPhi phi;
    GridMeasure rho;
    std::vector<GridMeasure> anchors;

    void validate() const {
        if (!(a > 0.0)) throw std::invalid_argument("test function: a must be positive");
        if (static_cast<int>(anchors.size()) != phi.arity())
            throw std::invalid_argument("test function: anchor count must match phi arity");
        for (const auto& m : anchors) require_same_grid(rho, m);
    }
};

/// (a, phi, gamma, pi_vec) defining (f_ddag, g_ddag).
struct TestFunctionDdagger {
    double a;
    CylindricalPhi phi;
    GridMeasure gamma;
    std::vector<GridMeasure> anchors;

    void validate() const {
        if (!(a > 0.0)) throw std::invalid_argument("test function: a must be positive");
        if (static_cast<int>(anchors.size()) != phi.arity())
            throw std::invalid_argument("test function: anchor count must match phi arity");
        for (const auto& m : anchors) require_same_grid(gamma, m);
    }
};

struct HamiltonianValue {
    double g_energy = 0.0;
    double g_w2 = 0.0;
    double total = 0.0;
};

namespace detail {

struct AnchorGeometry {
    double d_primary = 0.0;            // W2(pi, rho) resp. W2(mu, gamma)
    std::vector<double> d_anchors;     // W2 to the vector anchors
    std::vector<double> half_sq;       // arguments of phi
    std::vector<double> grad;          // partials at those arguments
};

inline AnchorGeometry anchor_geometry(const CylindricalPhi& phi, const GridMeasure& primary,
                                      const std::vector<GridMeasure>& anchors,
                                      const GridMeasure& point, int m_nodes) {
    AnchorGeometry g;
    g.d_primary = wasserstein2(point, primary, m_nodes);
    g.d_anchors.reserve(anchors.size());
    g.half_sq.reserve(anchors.size());
    for (const auto& m : anchors) {
        const double d = wasserstein2(point, m, m_nodes);
        g.d_anchors.push_back(d);
        g.half_sq.push_back(0.5 * d * d);
    }
    g.grad = phi.gradient(g.half_sq);
    return g;
}

}  // namespace detail

inline double f_dagger(const TestFunctionDagger& tf, const GridMeasure& pi,
                       int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.rho, tf.anchors, pi, m_nodes);
    return 0.5 * tf.a * g.d_primary * g.d_primary + tf.phi(g.half_sq);
}

inline HamiltonianValue g_dagger(const TestFunctionDagger& tf, const GridMeasure& pi,
                                 const EnergySpec& spec, int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.rho, tf.anchors, pi, m_nodes);
    const double kappa = spec.kappa();
    const double e_pi = energy(spec, pi);
    HamiltonianValue out;
    out.g_energy = tf.a * (energy(spec, tf.rho) - e_pi - 0.5 * kappa * g.d_primary * g.d_primary);
    double s = 0.0;
    for (std::size_t i = 0; i < tf.anchors.size(); ++i) {
        out.g_energy += g.grad[i] * (energy(spec, tf.anchors[i]) - e_pi -
                                     0.5 * kappa * g.d_anchors[i] * g.d_anchors[i]);
        s += g.grad[i] * g.d_anchors[i];
    }
    const double q = tf.a * g.d_primary + s;
    out.g_w2 = 0.5 * q * q;
    out.total = out.g_energy + out.g_w2;
    return out;
}

inline double f_ddagger(const TestFunctionDdagger& tf, const GridMeasure& mu,
                        int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.gamma, tf.anchors, mu, m_nodes);
    return -0.5 * tf.a * g.d_primary * g.d_primary - tf.phi(g.half_sq);
}

inline HamiltonianValue g_ddagger(const TestFunctionDdagger& tf, const GridMeasure& mu,
                                  const EnergySpec& spec, int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.gamma, tf.anchors, mu, m_nodes);
    const double kappa = spec.kappa();
    const double e_mu = energy(spec, mu);
    HamiltonianValue out;
    out.g_energy = tf.a * (e_mu - energy(spec, tf.gamma) + 0.5 * kappa * g.d_primary * g.d_primary);
    double s = 0.0;
    for (std::size_t i = 0; i < tf.anchors.size(); ++i) {
        out.g_energy += g.grad[i] * (e_mu - energy(spec, tf.anchors[i]) +
                                     0.5 * kappa * g.d_anchors[i] * g.d_anchors[i]);
        s += g.grad[i] * g.d_anchors[i];
    }
    const double q = tf.a * g.d_primary + s;
    out.g_w2 = tf.a * tf.a * g.d_primary * g.d_primary - 0.5 * q * q;
    out.total = out.g_energy + out.g_w2;
    return out;
}

/// a b_pi^rho + sum_i d_i phi(.) b_pi^{mu_i} at cell centers: the field the
/// control is paired with in the controlled EVI (and the supersolution's
/// Young-optimal target).
inline std::vector<double> dagger_pairing_field(const TestFunctionDagger& tf, const GridMeasure& pi,
                                                int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.rho, tf.anchors, pi, m_nodes);
    std::vector<double> field(pi.size(), 0.0);
    const TransportMap tm = transport_map(pi, tf.rho);
    for (int i = 0; i < pi.size(); ++i) field[i] = tf.a * tm.barycentric_values[i];
    for (std::size_t j = 0; j < tf.anchors.size(); ++j) {
        const TransportMap tj = transport_map(pi, tf.anchors[j]);
        for (int i = 0; i < pi.size(); ++i) field[i] += g.grad[j] * tj.barycentric_values[i];
    }
    return field;
}

inline std::vector<double> ddagger_pairing_field(const TestFunctionDdagger& tf,
                                                 const GridMeasure& mu,
                                                 int m_nodes = kDefaultQuadratureNodes) {
    const auto g = detail::anchor_geometry(tf.phi, tf.gamma, tf.anchors, mu, m_nodes);
    std::vector<double> field(mu.size(), 0.0);
    const TransportMap tm = transport_map(mu, tf.gamma);
    for (int i = 0; i < mu.size(); ++i) field[i] = tf.a * tm.barycentric_values[i];
    for (std::size_t j = 0; j < tf.anchors.size(); ++j) {
        const TransportMap tj = transport_map(mu, tf.anchors[j]);
        for (int i = 0; i < mu.size(); ++i) field[i] += g.grad[j] * tj.barycentric_values[i];
    }
    return field;
}

}  // namespace wgf
