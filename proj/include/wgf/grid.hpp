#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgf {

/// Uniform 1-D cell grid on [x_min, x_max].
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_cells = 0;

    Grid() = default;
    Grid(double lo, double hi, int n) : x_min(lo), x_max(hi), n_cells(n) {
        if (!(x_min < x_max)) throw std::invalid_argument("grid: x_min must be < x_max");
        if (n_cells < 8) throw std::invalid_argument("grid: n_cells must be >= 8");
    }

    double dx() const { return (x_max - x_min) / n_cells; }
    double center(int i) const { return x_min + (i + 0.5) * dx(); }
    double left_edge(int i) const { return x_min + i * dx(); }

    bool operator==(const Grid& o) const {
        return x_min == o.x_min && x_max == o.x_max && n_cells == o.n_cells;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Probability density on a uniform grid (mass per length, cellwise constant).
/// Total mass is exactly 1 after construction; entries are nonnegative.
class GridMeasure {
public:
    GridMeasure() = default;

    // Normalizes the given cell values (interpreted as densities) to unit mass.
    static GridMeasure from_density(const Grid& g, std::vector<double> density) {
        if (static_cast<int>(density.size()) != g.n_cells)
            throw std::invalid_argument("measure: density size does not match grid");
        double mass = 0.0;
        for (double v : density) {
            if (!(v >= 0.0)) throw std::invalid_argument("measure: negative density");
            mass += v;
        }
        mass *= g.dx();
        if (!(mass > 0.0)) throw std::invalid_argument("measure: zero total mass");
        for (double& v : density) v /= mass;
        return GridMeasure(g, std::move(density));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& density() const { return rho_; }
    double density(int i) const { return rho_[i]; }
    int size() const { return grid_.n_cells; }

    double mass() const {
        double s = std::accumulate(rho_.begin(), rho_.end(), 0.0);
        return s * grid_.dx();
    }

    /// k-th raw moment, k in {1,2,3,4}.
    double moment(int k) const {
        if (k < 1 || k > 4) throw std::invalid_argument("moment: k must be in {1,2,3,4}");
        double s = 0.0;
        for (int i = 0; i < grid_.n_cells; ++i) s += std::pow(grid_.center(i), k) * rho_[i];
        return s * grid_.dx();
    }

    double mean() const { return moment(1); }
    double variance() const {
        const double m = moment(1);
        return moment(2) - m * m;
    }

    /// Mass in the outermost `cells` cells on each side (boundary leakage gauge).
    double boundary_mass(int cells = 2) const {
        double s = 0.0;
        const int n = grid_.n_cells;
        for (int i = 0; i < std::min(cells, n); ++i) s += rho_[i] + rho_[n - 1 - i];
        return s * grid_.dx();
    }

    double min_density() const { return *std::min_element(rho_.begin(), rho_.end()); }

    /// CDF at right edge of cell i (exclusive prefix sums are at left edges).
    const std::vector<double>& cumulative() const { return cum_; }

private:
    GridMeasure(const Grid& g, std::vector<double> rho) : grid_(g), rho_(std::move(rho)) {
        cum_.resize(rho_.size() + 1);
        cum_[0] = 0.0;
        const double dx = grid_.dx();
        for (std::size_t i = 0; i < rho_.size(); ++i) cum_[i + 1] = cum_[i] + rho_[i] * dx;
        // clamp accumulated rounding so the last edge is exactly 1
        cum_.back() = 1.0;
    }

    Grid grid_;
    std::vector<double> rho_;
    std::vector<double> cum_;
};

// -- analytic families -------------------------------------------------------

inline GridMeasure gaussian_measure(const Grid& g, double mean, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian: sigma must be positive");
    std::vector<double> d(g.n_cells);
    for (int i = 0; i < g.n_cells; ++i) {
        const double z = (g.center(i) - mean) / sigma;
        d[i] = std::exp(-0.5 * z * z);
    }
    return GridMeasure::from_density(g, std::move(d));
}

inline GridMeasure uniform_measure(const Grid& g, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: lo must be < hi");
    std::vector<double> d(g.n_cells, 0.0);
    for (int i = 0; i < g.n_cells; ++i) {
        // overlap of cell i with [lo,hi]
        const double a = std::max(g.left_edge(i), lo);
        const double b = std::min(g.left_edge(i) + g.dx(), hi);
        d[i] = std::max(0.0, b - a);
    }
    return GridMeasure::from_density(g, std::move(d));
}

/// Compactly supported parabolic bump (C - (x-center)^2/w^2)_+, porous-medium style profile.
inline GridMeasure bump_measure(const Grid& g, double center, double halfwidth) {
    std::vector<double> d(g.n_cells, 0.0);
    for (int i = 0; i < g.n_cells; ++i) {
        const double z = (g.center(i) - center) / halfwidth;
        d[i] = std::max(0.0, 1.0 - z * z);
    }
    return GridMeasure::from_density(g, std::move(d));
}

/// Equal-weight mixture of two Gaussians.
inline GridMeasure bimodal_measure(const Grid& g, double m1, double s1, double m2, double s2) {
    std::vector<double> d(g.n_cells);
    for (int i = 0; i < g.n_cells; ++i) {
        const double z1 = (g.center(i) - m1) / s1;
        const double z2 = (g.center(i) - m2) / s2;
        d[i] = std::exp(-0.5 * z1 * z1) / s1 + std::exp(-0.5 * z2 * z2) / s2;
    }
    return GridMeasure::from_density(g, std::move(d));
}

// -- CSV serialization (header "x,density", 17 significant digits) ----------

inline std::string to_csv(const GridMeasure& mu) {
    std::string out = "x,density\n";
    char buf[80];
    for (int i = 0; i < mu.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mu.grid().center(i), mu.density(i));
        out += buf;
    }
    return out;
}

inline void write_csv(const GridMeasure& mu, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << to_csv(mu);
}

inline GridMeasure read_csv(const Grid& g, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
    std::vector<double> d;
    d.reserve(g.n_cells);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed csv row: " + line);
        d.push_back(std::stod(line.substr(comma + 1)));
    }
    return GridMeasure::from_density(g, std::move(d));
}

}  // namespace wgf
