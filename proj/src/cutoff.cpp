#include "pflow/cutoff.hpp"

#include "pflow/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace pflow {

namespace {

double quintic(double t) { return ((6.0 * t - 15.0) * t + 10.0) * t * t * t; }
double quintic_prime(double t) { return ((30.0 * t - 60.0) * t + 30.0) * t * t; }

void check_resolution(const Geometry& geo, const Grid& grid) {
    if (grid.h > geo.config.epsilon / 8.0 + 1e-14)
        throw std::invalid_argument("lattice_cutoff: grid does not resolve epsilon (need h <= epsilon/8)");
}

} // namespace

CutoffProfile CutoffProfile::harmonic(double eps, double d) {
    if (!(eps > 0.0) || !(d > eps))
        throw std::invalid_argument("CutoffProfile::harmonic: need 0 < eps < d");
    CutoffProfile p;
    p.kind = Kind::harmonic;
    p.epsilon = eps;
    p.d_epsilon = d;
    return p;
}

double base_cutoff(const Vector2d& x, const CutoffProfile& profile) {
    if (profile.kind == CutoffProfile::Kind::smoothstep) {
        const double s = std::max(std::abs(x.x()), std::abs(x.y()));
        if (s <= 1.5) return 1.0;
        if (s >= 2.0) return 0.0;
        // the polynomial can overshoot [0,1] by a few ulp near the plateau
        return std::clamp(quintic(2.0 * (2.0 - s)), 0.0, 1.0);
    }
    const double r = x.norm();
    if (r <= profile.epsilon) return 1.0;
    if (r >= profile.d_epsilon) return 0.0;
    return std::log(r / profile.d_epsilon) / std::log(profile.epsilon / profile.d_epsilon);
}

Vector2d base_cutoff_grad(const Vector2d& x, const CutoffProfile& profile) {
    if (profile.kind == CutoffProfile::Kind::smoothstep) {
        const double ax = std::abs(x.x()), ay = std::abs(x.y());
        const double s = std::max(ax, ay);
        if (s <= 1.5 || s >= 2.0) return Vector2d::Zero();
        const double dphi_ds = -2.0 * quintic_prime(2.0 * (2.0 - s));
        // grad of |x|_inf: unit vector along the dominant axis (x wins ties).
        if (ax >= ay) return {dphi_ds * (x.x() >= 0.0 ? 1.0 : -1.0), 0.0};
        return {0.0, dphi_ds * (x.y() >= 0.0 ? 1.0 : -1.0)};
    }
    const double r = x.norm();
    if (r <= profile.epsilon || r >= profile.d_epsilon) return Vector2d::Zero();
    const double c = 1.0 / std::log(profile.epsilon / profile.d_epsilon);
    return (c / (r * r)) * x;
}

double obstacle_cutoff(const Vector2d& r, double epsilon, const CutoffProfile& profile) {
    if (profile.kind == CutoffProfile::Kind::smoothstep)
        return base_cutoff(r / epsilon, profile);
    return base_cutoff(r, profile);
}

Vector2d obstacle_cutoff_grad(const Vector2d& r, double epsilon, const CutoffProfile& profile) {
    if (profile.kind == CutoffProfile::Kind::smoothstep)
        return base_cutoff_grad(r / epsilon, profile) / epsilon;
    return base_cutoff_grad(r, profile);
}

namespace {

// Physical support radius of one bump and the norm it applies to.
double support_radius(double epsilon, const CutoffProfile& profile) {
    return profile.kind == CutoffProfile::Kind::smoothstep ? 2.0 * epsilon : profile.d_epsilon;
}

template <typename Visit>
void for_nodes_near(const Grid& grid, const Vector2d& z, double radius, Visit&& visit) {
    const int i0 = std::max(0, static_cast<int>(std::ceil((z.x() - radius - grid.origin.x()) / grid.h)));
    const int i1 = std::min(grid.nx - 1, static_cast<int>(std::floor((z.x() + radius - grid.origin.x()) / grid.h)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((z.y() - radius - grid.origin.y()) / grid.h)));
    const int j1 = std::min(grid.ny - 1, static_cast<int>(std::floor((z.y() + radius - grid.origin.y()) / grid.h)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) visit(i, j);
}

} // namespace

ScalarField lattice_cutoff(const Geometry& geo, const Grid& grid, const CutoffProfile& profile) {
    check_resolution(geo, grid);
    ScalarField phi(grid);
    phi.v.setOnes();
    const double eps = geo.config.epsilon;
    const double rad = support_radius(eps, profile);
    for (const Vector2d& z : geo.centers)
        for_nodes_near(grid, z, rad, [&](int i, int j) {
            phi(i, j) -= obstacle_cutoff(grid.pos(i, j) - z, eps, profile);
        });
    return phi;
}

VectorField lattice_cutoff_gradient(const Geometry& geo, const Grid& grid,
                                    const CutoffProfile& profile) {
    check_resolution(geo, grid);
    VectorField g(grid);
    const double eps = geo.config.epsilon;
    const double rad = support_radius(eps, profile);
    for (const Vector2d& z : geo.centers)
        for_nodes_near(grid, z, rad, [&](int i, int j) {
            const Vector2d gr = obstacle_cutoff_grad(grid.pos(i, j) - z, eps, profile);
            const int k = grid.idx(i, j);
            g.x[k] -= gr.x();
            g.y[k] -= gr.y();
        });
    return g;
}

CutoffNormReport verify_cutoff_norms(const Geometry& geo, const Grid& grid, double p,
                                     const CutoffProfile& profile) {
    if (p < 1.0) throw std::invalid_argument("verify_cutoff_norms: p must be in [1, inf]");
    const ScalarField phi = lattice_cutoff(geo, grid, profile);
    const VectorField gphi = lattice_cutoff_gradient(geo, grid, profile);

    ScalarField one_minus(grid);
    one_minus.v = 1.0 - phi.v;

    CutoffNormReport r;
    r.lhs = lp_norm(one_minus, p) + geo.config.epsilon * lp_norm(gphi, p);
    const double eps = geo.config.epsilon, d = geo.config.d_epsilon, mu = geo.config.mu;
    r.bound_shape = std::isinf(p) ? 1.0
                                  : std::pow(eps, 2.0 / p) / std::pow(d, (1.0 + mu) / p);
    return r;
}

} // namespace pflow
