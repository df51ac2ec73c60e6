#pragma once

#include "pflow/biot_savart.hpp"
#include "pflow/geometry.hpp"

#include <string>
#include <vector>

namespace pflow {

/// Quadrature representation of a compactly supported vorticity: the nonzero
/// samples as points with midpoint weights omega * h^2.
struct SourceCloud {
    std::vector<Vector2d> points;
    std::vector<double> weights;
    double circulation = 0.0;
};

SourceCloud make_cloud(const ScalarField& omega);
/// Samples the blob on its own quadrature lattice (n x n over the support box),
/// independent of any simulation grid.
SourceCloud make_cloud(const VorticityBlob& blob, int n = 128);

/// Free-plane velocity of the cloud at arbitrary points (direct kernel sum).
std::vector<Vector2d> cloud_velocity_at(const SourceCloud& src,
                                        const std::vector<Vector2d>& points);

// ---------------------------------------------------------------------------
// Disk lattice: the corrected initial velocity is exact through the classical
// image system (center vortex plus conjugate-point image per obstacle), since
// the exterior map of the unit disk is the identity. The middle log term of
// the stream correction vanishes identically in that case.
// ---------------------------------------------------------------------------

/// v^eps = perp-grad of the corrected stream function, evaluated on a grid.
/// Tangent to each obstacle circle with zero circulation around it.
VectorField corrected_velocity_disk(const Geometry& geo, const ScalarField& omega0,
                                    const Grid& grid);

/// Same field at arbitrary points (free-plane part by direct summation).
std::vector<Vector2d> corrected_velocity_at(const Geometry& geo, const SourceCloud& src,
                                            const std::vector<Vector2d>& points);

struct WDecomposition {
    VectorField w1, w2, w3, w4;
    double l2_w1 = 0.0, l2_w2 = 0.0, l2_w3 = 0.0, l2_w4 = 0.0; // fluid-masked
};

/// The map-mismatch terms w1, w3 vanish identically for disks; w2 and w4 are
/// the image-log and image-kernel residuals. u0 - v_eps = w1 + w2 + w3 + w4.
WDecomposition w_decomposition(const Geometry& geo, const ScalarField& omega0,
                               const Grid& grid);

std::vector<Vector2d> w2_plus_w4_at(const Geometry& geo, const SourceCloud& src,
                                    const std::vector<Vector2d>& points);

/// || v_eps - u0 ||_{L2(fluid)} evaluated over the sleeve only (the difference
/// is supported there), on a grid resolving the obstacles.
double initial_error_l2(const Geometry& geo, const SourceCloud& src, const Grid& grid);

/// Exterior initial velocity for a general shape: solves the stream Poisson
/// problem with one unknown constant per obstacle boundary, the constants
/// fixed by zero-circulation conditions through a dense solve. The outer box
/// boundary carries the free-plane stream values.
VectorField u0_eps_grid(const Geometry& geo, const ScalarField& omega0, const Grid& grid);

struct BoundaryReport {
    double max_normal_residual = 0.0; // max |v.n| over obstacle circles
    double max_abs_circulation = 0.0; // max |loop integral of v.tau|
    double velocity_scale = 0.0;      // max |v| over the sampled circles
};
BoundaryReport boundary_residuals(const Geometry& geo, const SourceCloud& src,
                                  int samples_per_obstacle = 256);

struct InitialRateRow {
    double epsilon, d_epsilon, mu;
    double l2_error;
    double bound_shape; // eps |ln eps| / d^((1+mu)/2)
    double ratio;
};

/// Sweeps epsilon with the given distance rule ("d=eps", "d=eps^A" with
/// A in {1/3,1/2,2/3}, or "fixed:<value>") and measures the initial-data
/// convergence against its predicted shape.
std::vector<InitialRateRow> measure_initial_rate(const ObstacleShape& shape,
                                                 const VorticityBlob& blob,
                                                 const std::vector<double>& eps_list,
                                                 const std::string& d_rule, double mu);

double distance_rule(const std::string& rule, double epsilon);

} // namespace pflow
