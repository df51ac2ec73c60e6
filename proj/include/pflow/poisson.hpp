#pragma once

#include "pflow/grid.hpp"

#include <functional>

namespace pflow {

/// Exact spectral inversion of the discrete 5-point Laplacian on a periodic grid.
/// Requires a mean-zero rhs; the result is gauged to zero mean.
ScalarField poisson_periodic(const ScalarField& rhs);

/// Free-space solve of Laplace(phi) = rhs by doubled-domain convolution with the
/// exact 2D log kernel, midpoint weights. The rhs must be supported in the inner
/// half of the box (centered sub-box of half the side length).
ScalarField poisson_freespace(const ScalarField& rhs);

/// Self-cell value of the cell-averaged log kernel: (1/(2 pi h^2)) * integral of
/// ln|y| over an h-cell centered at the origin, i.e. (ln h + c0)/(2 pi) with
/// c0 = pi/4 - ln(2)/2 - 3/2.
double log_kernel_self_value(double h);

/// Doubled-domain FFT convolution of `rhs` (times h^2) with a translation kernel
/// evaluated at node offsets; kernel(0,0) handling is the caller's choice.
/// Shared backbone of poisson_freespace and the Biot-Savart evaluation.
ArrayXd freespace_convolve(const Grid& g, const ArrayXd& rhs,
                           const std::function<double(double, double)>& kernel);

/// True when all samples with |value| > tol * max|value| lie in the centered
/// sub-box of half the side length.
bool supported_in_inner_half(const ScalarField& f, double tol = 1e-12);

} // namespace pflow
