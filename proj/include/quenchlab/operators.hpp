#pragma once

// Discrete Laplacian and bilaplacian under clamped boundary conditions
// (value and normal derivative zero). Operators are stored through their
// weighted symmetric forms S with action W^{-1} S on interior unknowns, so
// the discrete Green identity <op f, g> = <f, op g> holds exactly.
//
// Ball: conservative (flux) radial Laplacian on r in [0, R]; at the origin
// the flux form reduces to the symmetric limit stencil 2N (w_1 - w_0)/h^2.
// Rectangle: 5-point Laplacian on a uniform tensor grid.
//
// The bilaplacian is assembled as the Gram form L_all^T W_all L_all of the
// Laplacian evaluated on interior and boundary nodes, where the boundary
// Laplacian rows use the mirror ghost value implied by the zero normal
// derivative. This keeps the form symmetric positive definite and reproduces
// the 13-point stencil away from the boundary.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <vector>

#include "quenchlab/grid.hpp"

namespace quenchlab {

enum class OperatorKind { Laplacian, Bilaplacian };
enum class AssemblyMode { Direct, ComposedClampedSquare };

class DiscreteOperator {
public:
    DiscreteOperator(Eigen::SparseMatrix<double> form, Eigen::VectorXd interior_weights,
                     OperatorKind kind, AssemblyMode mode, double spacing,
                     std::vector<std::size_t> interior_nodes)
        : form_(std::move(form)),
          weights_(std::move(interior_weights)),
          kind_(kind),
          mode_(mode),
          spacing_(spacing),
          interior_nodes_(std::move(interior_nodes)) {}

    OperatorKind kind() const { return kind_; }
    AssemblyMode assembly_mode() const { return mode_; }
    double spacing() const { return spacing_; }
    Eigen::Index size() const { return form_.rows(); }

    /// Symmetric form matrix S with S_ij = <op e_i, e_j>_W.
    const Eigen::SparseMatrix<double>& form() const { return form_; }
    /// Interior quadrature weights defining the inner product.
    const Eigen::VectorXd& interior_weights() const { return weights_; }

    Eigen::VectorXd restrict_interior(const Field& f) const {
        Eigen::VectorXd x(size());
        for (Eigen::Index k = 0; k < size(); ++k) x[k] = f[interior_nodes_[k]];
        return x;
    }
    Field extend_to_field(const Eigen::VectorXd& x, const Grid& grid) const {
        Field f = Field::zeros(grid);
        for (Eigen::Index k = 0; k < size(); ++k) f[interior_nodes_[k]] = x[k];
        return f;
    }

    /// Operator action on interior unknowns: W^{-1} S x.
    Eigen::VectorXd apply_interior(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y = form_ * x;
        y.array() /= weights_.array();
        return y;
    }

    /// Operator action on a full-grid field; output vanishes at the boundary.
    Field apply(const Field& f, const Grid& grid) const {
        return extend_to_field(apply_interior(restrict_interior(f)), grid);
    }

    /// Quadratic form <op f, g>_W = f^T S g.
    double quadratic_form(const Field& f, const Field& g) const {
        Eigen::VectorXd x = restrict_interior(f);
        Eigen::VectorXd y = restrict_interior(g);
        return x.dot(form_ * y);
    }

private:
    Eigen::SparseMatrix<double> form_;
    Eigen::VectorXd weights_;
    OperatorKind kind_;
    AssemblyMode mode_;
    double spacing_;
    std::vector<std::size_t> interior_nodes_;
};

namespace detail {

inline std::vector<std::size_t> interior_node_list(const Grid& grid) {
    std::vector<std::size_t> out;
    out.reserve(grid.interior_count());
    for (std::size_t k = 0; k < grid.interior_count(); ++k)
        out.push_back(grid.interior_to_node(k));
    return out;
}

inline Eigen::VectorXd interior_weight_vector(const Grid& grid, const Quadrature& q) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(grid.interior_count()));
    for (std::size_t k = 0; k < grid.interior_count(); ++k)
        w[static_cast<Eigen::Index>(k)] = q.weights[grid.interior_to_node(k)];
    return w;
}

// Laplacian rows over interior unknowns plus boundary-node rows. The
// returned pair is (L_interior, rows) where rows also carries the boundary
// rows together with their quadrature weights for Gram assembly.
struct LaplacianRows {
    Eigen::SparseMatrix<double> interior;        // n_int x n_int
    Eigen::SparseMatrix<double> boundary;        // n_bnd x n_int
    Eigen::VectorXd boundary_weights;            // n_bnd
};

inline LaplacianRows radial_laplacian_rows(const Grid& grid, const Quadrature& q) {
    const DomainDescriptor& d = grid.descriptor();
    const int n = d.resolution;
    const int N = d.dimension;
    const double h = grid.spacing();
    const double om = unit_sphere_area(N);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * static_cast<std::size_t>(n));
    auto face_area = [&](double r) { return r <= 0.0 ? 0.0 : om * std::pow(r, N - 1); };
    for (int i = 0; i < n; ++i) {
        const double r = grid.radius_at(static_cast<std::size_t>(i));
        const double am = face_area(r - 0.5 * h);
        const double ap = face_area(r + 0.5 * h);
        const double vi = q.weights[static_cast<std::size_t>(i)];
        trip.emplace_back(i, i, -(am + ap) / (h * vi));
        if (i - 1 >= 0) trip.emplace_back(i, i - 1, am / (h * vi));
        if (i + 1 <= n - 1) trip.emplace_back(i, i + 1, ap / (h * vi));
        // i + 1 == n is the eliminated boundary value
    }
    LaplacianRows rows;
    rows.interior.resize(n, n);
    rows.interior.setFromTriplets(trip.begin(), trip.end());

    // Laplacian at the boundary node r = R with the clamped mirror ghost:
    // value 0 and ghost = inner mirror give 2 w_{n-1} / h^2.
    std::vector<Eigen::Triplet<double>> btrip;
    btrip.emplace_back(0, n - 1, 2.0 / (h * h));
    rows.boundary.resize(1, n);
    rows.boundary.setFromTriplets(btrip.begin(), btrip.end());
    rows.boundary_weights.resize(1);
    rows.boundary_weights[0] = q.weights[static_cast<std::size_t>(n)];
    return rows;
}

inline LaplacianRows rectangle_laplacian_rows(const Grid& grid, const Quadrature& q) {
    const DomainDescriptor& d = grid.descriptor();
    const int n = d.resolution;
    const double hx = grid.spacing(), hy = grid.spacing_y();
    const Eigen::Index n_int = static_cast<Eigen::Index>(grid.interior_count());

    auto interior_index = [n](int i, int j) -> Eigen::Index {
        return static_cast<Eigen::Index>(j - 1) * n + (i - 1);
    };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * static_cast<std::size_t>(n_int));
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            const Eigen::Index row = interior_index(i, j);
            trip.emplace_back(row, row, -2.0 / (hx * hx) - 2.0 / (hy * hy));
            if (i > 1) trip.emplace_back(row, interior_index(i - 1, j), 1.0 / (hx * hx));
            if (i < n) trip.emplace_back(row, interior_index(i + 1, j), 1.0 / (hx * hx));
            if (j > 1) trip.emplace_back(row, interior_index(i, j - 1), 1.0 / (hy * hy));
            if (j < n) trip.emplace_back(row, interior_index(i, j + 1), 1.0 / (hy * hy));
        }
    }
    LaplacianRows rows;
    rows.interior.resize(n_int, n_int);
    rows.interior.setFromTriplets(trip.begin(), trip.end());

    // Edge boundary rows: mirror ghost plus zero boundary value reduce the
    // 5-point stencil to 2 u_adjacent / h_perp^2. Corner rows vanish.
    std::vector<Eigen::Triplet<double>> btrip;
    Eigen::VectorXd bw(4 * static_cast<Eigen::Index>(n));
    Eigen::Index row = 0;
    for (int i = 1; i <= n; ++i) {
        btrip.emplace_back(row, interior_index(i, 1), 2.0 / (hy * hy));
        bw[row++] = q.weights[grid.node_index(i, 0)];
        btrip.emplace_back(row, interior_index(i, n), 2.0 / (hy * hy));
        bw[row++] = q.weights[grid.node_index(i, n + 1)];
        btrip.emplace_back(row, interior_index(1, i), 2.0 / (hx * hx));
        bw[row++] = q.weights[grid.node_index(0, i)];
        btrip.emplace_back(row, interior_index(n, i), 2.0 / (hx * hx));
        bw[row++] = q.weights[grid.node_index(n + 1, i)];
    }
    rows.boundary.resize(row, n_int);
    rows.boundary.setFromTriplets(btrip.begin(), btrip.end());
    rows.boundary_weights = bw;
    return rows;
}

inline LaplacianRows laplacian_rows(const Grid& grid, const Quadrature& q) {
    return grid.kind() == DomainKind::Ball ? radial_laplacian_rows(grid, q)
                                           : rectangle_laplacian_rows(grid, q);
}

}  // namespace detail

inline DiscreteOperator assemble_laplacian(const Grid& grid, const Quadrature& q) {
    detail::LaplacianRows rows = detail::laplacian_rows(grid, q);
    Eigen::VectorXd w = detail::interior_weight_vector(grid, q);
    // form S = W L is symmetric for both the flux-form radial Laplacian and
    // the uniform-weight 5-point Laplacian
    Eigen::SparseMatrix<double> form = w.asDiagonal() * rows.interior;
    Eigen::SparseMatrix<double> sym = 0.5 * (Eigen::SparseMatrix<double>(form.transpose()) + form);
    return DiscreteOperator(std::move(sym), std::move(w), OperatorKind::Laplacian,
                            AssemblyMode::Direct, grid.spacing(),
                            detail::interior_node_list(grid));
}

inline DiscreteOperator assemble_bilaplacian(const Grid& grid, const Quadrature& q) {
    detail::LaplacianRows rows = detail::laplacian_rows(grid, q);
    Eigen::VectorXd w = detail::interior_weight_vector(grid, q);
    Eigen::SparseMatrix<double> form =
        Eigen::SparseMatrix<double>(rows.interior.transpose()) * w.asDiagonal() * rows.interior +
        Eigen::SparseMatrix<double>(rows.boundary.transpose()) *
            rows.boundary_weights.asDiagonal() * rows.boundary;
    Eigen::SparseMatrix<double> sym = 0.5 * (Eigen::SparseMatrix<double>(form.transpose()) + form);
    return DiscreteOperator(std::move(sym), std::move(w), OperatorKind::Bilaplacian,
                            AssemblyMode::ComposedClampedSquare, grid.spacing(),
                            detail::interior_node_list(grid));
}

/// Assembled context shared by the eigen solver and the time integrator.
struct DomainOperators {
    Grid grid;
    Quadrature quadrature;
    DiscreteOperator laplacian;
    DiscreteOperator bilaplacian;

    static DomainOperators build(const DomainDescriptor& desc) {
        Grid grid(desc);
        Quadrature q = build_quadrature(grid);
        DiscreteOperator lap = assemble_laplacian(grid, q);
        DiscreteOperator bilap = assemble_bilaplacian(grid, q);
        return DomainOperators{std::move(grid), std::move(q), std::move(lap), std::move(bilap)};
    }
};

}  // namespace quenchlab
