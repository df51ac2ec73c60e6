#pragma once

#include "pflow/grid.hpp"

namespace pflow {

/// Catmull-Rom bicubic sampling. Periodic grids wrap; open grids treat
/// out-of-range nodes as zero (fields here are compactly supported).
double sample_bicubic(const ScalarField& f, const Vector2d& p);
Vector2d sample_bicubic(const VectorField& f, const Vector2d& p);

/// Bilinear sampling with the same boundary conventions.
double sample_bilinear(const ScalarField& f, const Vector2d& p);
Vector2d sample_bilinear(const VectorField& f, const Vector2d& p);

} // namespace pflow
