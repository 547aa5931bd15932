#pragma once

// Spatial discretization of the computational domain: radially symmetric
// N-dimensional balls (1D grid in r) and 2D rectangles (tensor grid), with
// positive cell-volume quadrature and weighted L^r norms. Boundary nodes are
// kept in fields so that quadrature sums the exact domain measure; operators
// act on the interior unknowns only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace quenchlab {

enum class DomainKind { Ball, Rectangle };

/// Surface measure of the unit (N-1)-sphere, omega_{N-1} = 2 pi^{N/2} / Gamma(N/2).
inline double unit_sphere_area(int dimension) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dimension) / std::tgamma(0.5 * dimension);
}

/// Volume of the N-ball of given radius.
inline double ball_volume(int dimension, double radius) {
    return unit_sphere_area(dimension) / dimension * std::pow(radius, dimension);
}

struct DomainDescriptor {
    DomainKind kind = DomainKind::Ball;
    int dimension = 2;
    double radius = 1.0;  // Ball only
    double lx = 1.0;      // Rectangle only
    double ly = 1.0;
    int resolution = 64;  // interior nodes per direction

    void validate() const {
        if (dimension < 2)
            throw std::invalid_argument("domain: dimension must be >= 2");
        if (resolution < 8)
            throw std::invalid_argument("domain: resolution must be >= 8");
        if (kind == DomainKind::Ball) {
            if (!(radius > 0.0))
                throw std::invalid_argument("domain: ball radius must be positive");
        } else {
            if (dimension != 2)
                throw std::invalid_argument("domain: rectangle is only available for dimension 2");
            if (!(lx > 0.0) || !(ly > 0.0))
                throw std::invalid_argument("domain: rectangle side lengths must be positive");
        }
    }

    double measure() const {
        return kind == DomainKind::Ball ? ball_volume(dimension, radius) : lx * ly;
    }
};

/// Grid nodes for a domain. Ball: nodes r_i = i*h, i = 0..n, h = R/n; the
/// boundary node is i = n, the center i = 0 is interior. Rectangle: nodes
/// (x_i, y_j) = (i*hx, j*hy), i = 0..nx+1, j = 0..ny+1, row-major; the outer
/// ring is boundary.
class Grid {
public:
    explicit Grid(const DomainDescriptor& desc) : desc_(desc) {
        desc.validate();
        if (desc.kind == DomainKind::Ball) {
            const int n = desc.resolution;
            h_ = desc.radius / n;
            hy_ = h_;
            node_count_ = static_cast<std::size_t>(n) + 1;
            interior_count_ = static_cast<std::size_t>(n);
        } else {
            const int n = desc.resolution;
            h_ = desc.lx / (n + 1);
            hy_ = desc.ly / (n + 1);
            nx_full_ = n + 2;
            node_count_ = static_cast<std::size_t>(nx_full_) * static_cast<std::size_t>(nx_full_);
            interior_count_ = static_cast<std::size_t>(n) * n;
            interior_nodes_.reserve(interior_count_);
            for (int j = 1; j <= n; ++j)
                for (int i = 1; i <= n; ++i)
                    interior_nodes_.push_back(node_index(i, j));
        }
    }

    const DomainDescriptor& descriptor() const { return desc_; }
    DomainKind kind() const { return desc_.kind; }
    int dimension() const { return desc_.dimension; }

    std::size_t node_count() const { return node_count_; }
    std::size_t interior_count() const { return interior_count_; }

    /// Mesh spacing: h (ball), hx (rectangle).
    double spacing() const { return h_; }
    double spacing_y() const { return hy_; }

    /// Ball: radius of node i.
    double radius_at(std::size_t i) const { return static_cast<double>(i) * h_; }

    /// Rectangle full-grid index helpers (i, j in 0..n+1).
    std::size_t node_index(int i, int j) const {
        return static_cast<std::size_t>(j) * nx_full_ + static_cast<std::size_t>(i);
    }
    int nodes_per_row() const { return nx_full_; }

    bool is_interior(std::size_t node) const {
        if (desc_.kind == DomainKind::Ball) return node + 1 < node_count_;
        const int i = static_cast<int>(node % nx_full_);
        const int j = static_cast<int>(node / nx_full_);
        return i >= 1 && i <= desc_.resolution && j >= 1 && j <= desc_.resolution;
    }

    /// Map interior unknown k to its full-grid node index.
    std::size_t interior_to_node(std::size_t k) const {
        if (desc_.kind == DomainKind::Ball) return k;
        return interior_nodes_[k];
    }

    /// Coordinates of a full-grid node; for the ball returns (r, 0).
    std::pair<double, double> coordinates(std::size_t node) const {
        if (desc_.kind == DomainKind::Ball) return {radius_at(node), 0.0};
        const int i = static_cast<int>(node % nx_full_);
        const int j = static_cast<int>(node / nx_full_);
        return {i * h_, j * hy_};
    }

private:
    DomainDescriptor desc_;
    double h_ = 0.0, hy_ = 0.0;
    int nx_full_ = 0;
    std::size_t node_count_ = 0, interior_count_ = 0;
    std::vector<std::size_t> interior_nodes_;
};

/// Positive cell-volume weights over all grid nodes. Each node owns the cell
/// between the midpoints toward its neighbours, clipped to the domain, so the
/// weights sum to |Omega| exactly on both domain kinds.
struct Quadrature {
    std::vector<double> weights;  // per full-grid node, all > 0
    double measure = 0.0;         // |Omega|
};

inline Quadrature build_quadrature(const Grid& grid) {
    const DomainDescriptor& d = grid.descriptor();
    Quadrature q;
    q.measure = d.measure();
    q.weights.resize(grid.node_count());
    if (d.kind == DomainKind::Ball) {
        const int n = d.resolution;
        const double h = grid.spacing();
        const double om = unit_sphere_area(d.dimension);
        for (int i = 0; i <= n; ++i) {
            const double r = grid.radius_at(i);
            const double rlo = std::max(r - 0.5 * h, 0.0);
            const double rhi = std::min(r + 0.5 * h, d.radius);
            q.weights[i] = om / d.dimension *
                           (std::pow(rhi, d.dimension) - std::pow(rlo, d.dimension));
        }
    } else {
        const int n = d.resolution;
        const double hx = grid.spacing(), hy = grid.spacing_y();
        auto w1 = [n](int i, double h) { return (i == 0 || i == n + 1) ? 0.5 * h : h; };
        for (int j = 0; j <= n + 1; ++j)
            for (int i = 0; i <= n + 1; ++i)
                q.weights[grid.node_index(i, j)] = w1(i, hx) * w1(j, hy);
    }
    return q;
}

inline std::pair<Grid, Quadrature> build_domain(const DomainDescriptor& desc) {
    Grid grid(desc);
    return {grid, build_quadrature(grid)};
}

/// Nodal values over the full grid of one domain. Clamped-compatible fields
/// vanish at boundary nodes; the zero normal derivative is encoded in the
/// operators, not in the stored values.
struct Field {
    std::vector<double> values;

    static Field zeros(const Grid& grid) {
        Field f;
        f.values.assign(grid.node_count(), 0.0);
        return f;
    }
    static Field constant(const Grid& grid, double value) {
        Field f;
        f.values.assign(grid.node_count(), value);
        return f;
    }
    /// Evaluate a radial callable fn(r) on a ball grid.
    template <class F>
    static Field sample_radial(const Grid& grid, F&& fn) {
        if (grid.kind() != DomainKind::Ball)
            throw std::invalid_argument("sample_radial: ball grid required");
        Field f = zeros(grid);
        for (std::size_t k = 0; k < grid.node_count(); ++k)
            f.values[k] = fn(grid.coordinates(k).first);
        return f;
    }

    /// Evaluate a planar callable fn(x, y) on a rectangle grid.
    template <class F>
    static Field sample_xy(const Grid& grid, F&& fn) {
        if (grid.kind() != DomainKind::Rectangle)
            throw std::invalid_argument("sample_xy: rectangle grid required");
        Field f = zeros(grid);
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            auto [x, y] = grid.coordinates(k);
            f.values[k] = fn(x, y);
        }
        return f;
    }

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }

    double max() const { return *std::max_element(values.begin(), values.end()); }
    double min() const { return *std::min_element(values.begin(), values.end()); }
    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    bool finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void check_same_size(const Field& f, const Quadrature& q) {
    if (f.size() != q.weights.size())
        throw std::invalid_argument("field/quadrature size mismatch");
}

inline double integrate(const Field& f, const Quadrature& q) {
    check_same_size(f, q);
    double s = 0.0;
    for (std::size_t k = 0; k < q.weights.size(); ++k) s += q.weights[k] * f[k];
    return s;
}

inline double inner(const Field& f, const Field& g, const Quadrature& q) {
    check_same_size(f, q);
    check_same_size(g, q);
    double s = 0.0;
    for (std::size_t k = 0; k < q.weights.size(); ++k) s += q.weights[k] * f[k] * g[k];
    return s;
}

/// Weighted L^r norm, r >= 1; r = infinity gives the max norm.
inline double norm_Lr(const Field& f, const Quadrature& q, double r) {
    if (r < 1.0) throw std::invalid_argument("norm_Lr: r must be >= 1");
    check_same_size(f, q);
    if (std::isinf(r)) return f.sup_norm();
    if (r == 2.0) return std::sqrt(inner(f, f, q));
    double s = 0.0;
    for (std::size_t k = 0; k < q.weights.size(); ++k)
        s += q.weights[k] * std::pow(std::abs(f[k]), r);
    return std::pow(s, 1.0 / r);
}

inline double norm_L2(const Field& f, const Quadrature& q) { return norm_Lr(f, q, 2.0); }

}  // namespace quenchlab
