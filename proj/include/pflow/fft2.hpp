#pragma once

#include <Eigen/Dense>
#include <complex>

namespace pflow {

using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

/// In-place 2D DFT by row/column passes of 1D transforms.
/// Forward uses the unnormalized e^{-i2pi...} convention; inverse includes the 1/(nx*ny) factor.
void fft2(CMatrix& a);
void ifft2(CMatrix& a);

} // namespace pflow
