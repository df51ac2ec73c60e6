#pragma once

#include "pflow/geometry.hpp"
#include "pflow/grid.hpp"

#include <Eigen/SparseCore>
#include <memory>

namespace pflow {

/// Divergence problem on the reference cell U = (-2,2)^2 minus the obstacle:
/// find h with div h = f in U and h = 0 on the outer square and the obstacle
/// boundary, realized as the minimizer of the gradient energy subject to the
/// divergence constraint (a Stokes-type saddle problem).
struct CellProblem {
    ObstacleShape shape;
    int nc = 128;             // cells per side over [-2,2]^2
    ArrayXd f_cells;          // rhs at cell centers, row-major, nc*nc
    double tolerance = 1e-9;  // allowed |mean of f| relative to |f|_L1 / |U|
};

struct CellSolution {
    /// Nodal samples on the (nc+1)^2 node grid over [-2,2]^2 (face averages;
    /// exactly zero on the outer square and on the solid staircase nodes).
    VectorField h;
    ArrayXd u_faces; // (nc+1) x nc, Dirichlet faces hold 0
    ArrayXd v_faces; // nc x (nc+1)
    double residual_rel = 0.0;  // relative L2 divergence residual over fluid cells
    double energy = 0.0;        // minimized discrete gradient energy
    double mean_subtracted = 0.0;
};

/// Assembles and factors the saddle system once per (shape, nc); individual
/// right-hand sides are then a sparse back-substitution each. Instances are
/// immutable after construction and safe to share across threads.
class CellDivergenceSolver {
public:
    explicit CellDivergenceSolver(const ObstacleShape& shape, int nc = 128);
    ~CellDivergenceSolver();

    CellSolution solve(const ArrayXd& f_cells, double mean_tolerance = 1e-9,
                       bool project_mean = false) const;

    /// The quadratic form minimized by solve(); used to compare against
    /// feasible competitor fields.
    double quadratic_energy(const ArrayXd& u_faces, const ArrayXd& v_faces) const;

    /// Exact discrete divergence of face data at the fluid cells.
    ArrayXd face_divergence(const ArrayXd& u_faces, const ArrayXd& v_faces) const;

    int nc() const;
    double hc() const;
    Grid cell_center_grid() const; // nc x nc cell centers
    Grid node_grid() const;        // (nc+1) x (nc+1) nodes
    const BoolArray& solid_cells() const;
    const BoolArray& fluid_cells() const;
    double fluid_area() const;

    /// Shared per-(shape, nc) instance.
    static std::shared_ptr<const CellDivergenceSolver> shared(const ObstacleShape& shape,
                                                              int nc = 128);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CellSolution solve_cell_divergence(const CellProblem& problem);

/// L^p norm of a nodal reference-cell field by sub-lattice quadrature with the
/// given stride (half-open node range, weight (stride*hc)^2).
double cell_lp_norm(const VectorField& h_nodal, double p, int stride = 1);
/// Matching forward-difference gradient seminorm at the same stride.
double cell_grad_lp_norm(const VectorField& h_nodal, double p, int stride = 1);

} // namespace pflow
