#pragma once

#include "pflow/grid.hpp"

#include <vector>

namespace pflow {

/// Compactly supported initial vorticity. The gaussian uses `radius` as its
/// standard deviation and is truncated at 8 radii; the bump is the C-infinity
/// mollifier exp(1 - 1/(1 - (r/radius)^2)) on r < radius.
struct VorticityBlob {
    enum class Kind { gaussian, bump };
    Kind kind = Kind::gaussian;
    Vector2d center{0.0, 0.0};
    double radius = 0.1;
    double amplitude = 1.0;

    double operator()(const Vector2d& p) const;
    double support_radius() const { return kind == Kind::gaussian ? 8.0 * radius : radius; }
};

ScalarField sample(const VorticityBlob& blob, const Grid& grid);

/// Full-plane Biot-Savart velocity of a gridded vorticity via doubled-domain
/// FFT convolution with the kernel (x)^perp / (2 pi |x|^2), self cell omitted.
/// The orientation satisfies curl u = omega and div u = 0 discretely.
VectorField biot_savart_fft(const ScalarField& omega);

/// Direct midpoint quadrature of the same kernel at arbitrary points; source
/// cells closer than h/2 to the target are skipped. This is the oracle path.
std::vector<Vector2d> biot_savart_direct(const ScalarField& omega,
                                         const std::vector<Vector2d>& points);

struct VelocityBoundReport {
    double ratio_linf = 0.0;     // |u|_inf / (|w|_inf^1/2 |w|_L1^1/2)
    double ratio_gradient = 0.0; // |grad u|_Lp / |w|_Lp
    double p = 2.0;
    bool flagged = false;
};

/// A-priori bound ratios for u = K[omega]; flags when a ratio exceeds the ceiling.
VelocityBoundReport check_velocity_bounds(const ScalarField& omega, const VectorField& u,
                                          double p = 2.0, double ceiling = 10.0);

} // namespace pflow
