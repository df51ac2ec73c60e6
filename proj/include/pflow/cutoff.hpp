#pragma once

#include "pflow/geometry.hpp"
#include "pflow/grid.hpp"

namespace pflow {

/// Per-obstacle cutoff profile.
///  - smoothstep: C^2 quintic ramp in s = |x|_inf, identically 1 for s <= 3/2
///    and 0 for s >= 2, applied in obstacle-scaled coordinates (x - z)/eps.
///  - harmonic: radial ln(|x|/d)/ln(eps/d) on eps <= |x| <= d, applied in
///    physical coordinates; it is the L^2-optimal annulus cutoff.
struct CutoffProfile {
    enum class Kind { smoothstep, harmonic };
    Kind kind = Kind::smoothstep;
    double epsilon = 0.0;   // harmonic only
    double d_epsilon = 0.0; // harmonic only

    static CutoffProfile smoothstep() { return {}; }
    static CutoffProfile harmonic(double eps, double d);
};

/// Base profile value at a point in the profile's own coordinates
/// (obstacle-scaled for smoothstep, physical offset for harmonic).
double base_cutoff(const Vector2d& x, const CutoffProfile& profile);
Vector2d base_cutoff_grad(const Vector2d& x, const CutoffProfile& profile);

/// Single-obstacle bump at physical offset r from the obstacle center.
double obstacle_cutoff(const Vector2d& r, double epsilon, const CutoffProfile& profile);
Vector2d obstacle_cutoff_grad(const Vector2d& r, double epsilon, const CutoffProfile& profile);

/// Lattice cutoff 1 - sum of per-obstacle bumps, equal to 1 away from the
/// obstacles and 0 on a neighborhood of each.
ScalarField lattice_cutoff(const Geometry& geo, const Grid& grid,
                           const CutoffProfile& profile = CutoffProfile::smoothstep());

/// Analytic gradient of the lattice cutoff (chain rule on the profile, no
/// finite differences).
VectorField lattice_cutoff_gradient(const Geometry& geo, const Grid& grid,
                                    const CutoffProfile& profile = CutoffProfile::smoothstep());

struct CutoffNormReport {
    double lhs;         // |1 - phi|_Lp + eps * |grad phi|_Lp
    double bound_shape; // eps^(2/p) / d^((1+mu)/p)
    double ratio() const { return lhs / bound_shape; }
};

/// Measures the cutoff norm combination against its scaling shape; the caller
/// fits the constant across an epsilon sweep.
CutoffNormReport verify_cutoff_norms(const Geometry& geo, const Grid& grid, double p,
                                     const CutoffProfile& profile = CutoffProfile::smoothstep());

} // namespace pflow
