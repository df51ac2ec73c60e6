#pragma once

#include "pflow/grid.hpp"

#include <limits>
#include <optional>

namespace pflow {

/// Masked L^p norm, (sum |f|^p h^2)^(1/p) over the masked nodes.
/// p = infinity returns the max over masked nodes (no quadrature weight).
/// A null mask means all nodes.
double lp_norm(const ScalarField& f, double p, const BoolArray* mask = nullptr);
double lp_norm(const VectorField& f, double p, const BoolArray* mask = nullptr);

// Second-order discrete calculus: centered differences in the interior,
// periodic wrap or one-sided 3-point stencils at open boundaries.
VectorField grad(const ScalarField& f);
ScalarField div(const VectorField& u);
ScalarField curl(const VectorField& u);
/// perp-gradient (-df/dy, df/dx); curl(perp_grad f) equals the discrete Laplacian of f.
VectorField perp_grad(const ScalarField& f);

double mean(const ScalarField& f);

} // namespace pflow
