#include "pflow/biot_savart.hpp"

#include "pflow/calculus.hpp"
#include "pflow/poisson.hpp"

#include <cmath>

namespace pflow {

double VorticityBlob::operator()(const Vector2d& p) const {
    const double r2 = (p - center).squaredNorm();
    if (kind == Kind::gaussian) {
        const double s2 = radius * radius;
        if (r2 > 64.0 * s2) return 0.0;
        return amplitude * std::exp(-0.5 * r2 / s2);
    }
    const double q2 = r2 / (radius * radius);
    if (q2 >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - q2));
}

ScalarField sample(const VorticityBlob& blob, const Grid& grid) {
    ScalarField f(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) f(i, j) = blob(grid.pos(i, j));
    return f;
}

VectorField biot_savart_fft(const ScalarField& omega) {
    if (!supported_in_inner_half(omega))
        throw std::invalid_argument("biot_savart_fft: omega not supported in inner half of the box");
    const Grid& g = omega.grid;

    auto kx = [](double dx, double dy) {
        const double r2 = dx * dx + dy * dy;
        if (r2 == 0.0) return 0.0;
        return -dy / (2.0 * kPi * r2);
    };
    auto ky = [](double dx, double dy) {
        const double r2 = dx * dx + dy * dy;
        if (r2 == 0.0) return 0.0;
        return dx / (2.0 * kPi * r2);
    };
    VectorField u(g);
    u.x = freespace_convolve(g, omega.v, kx);
    u.y = freespace_convolve(g, omega.v, ky);
    return u;
}

std::vector<Vector2d> biot_savart_direct(const ScalarField& omega,
                                         const std::vector<Vector2d>& points) {
    const Grid& g = omega.grid;
    const double w = g.h * g.h / (2.0 * kPi);
    const double self2 = 0.25 * g.h * g.h; // sources within h/2 are the self cell

    std::vector<Vector2d> out(points.size(), Vector2d::Zero());
    for (size_t n = 0; n < points.size(); ++n) {
        const Vector2d x = points[n];
        double ux = 0.0, uy = 0.0;
        for (int j = 0; j < g.ny; ++j) {
            const double dy = x.y() - g.y(j);
            for (int i = 0; i < g.nx; ++i) {
                const double om = omega(i, j);
                if (om == 0.0) continue;
                const double dx = x.x() - g.x(i);
                const double r2 = dx * dx + dy * dy;
                if (r2 < self2) continue;
                ux += -dy / r2 * om;
                uy += dx / r2 * om;
            }
        }
        out[n] = Vector2d(ux * w, uy * w);
    }
    return out;
}

VelocityBoundReport check_velocity_bounds(const ScalarField& omega, const VectorField& u,
                                          double p, double ceiling) {
    VelocityBoundReport rep;
    rep.p = p;
    const double w_inf = lp_norm(omega, std::numeric_limits<double>::infinity());
    if (w_inf == 0.0) return rep; // degenerate convention: zero vorticity reports 0

    const double w_l1 = lp_norm(omega, 1.0);
    rep.ratio_linf = lp_norm(u, std::numeric_limits<double>::infinity()) /
                     std::sqrt(w_inf * w_l1);

    const VectorField gx = grad(ScalarField(u.grid, u.x));
    const VectorField gy = grad(ScalarField(u.grid, u.y));
    ScalarField frob(u.grid);
    frob.v = (gx.x.square() + gx.y.square() + gy.x.square() + gy.y.square()).sqrt();
    rep.ratio_gradient = lp_norm(frob, p) / lp_norm(omega, p);

    rep.flagged = rep.ratio_linf > ceiling || rep.ratio_gradient > ceiling;
    return rep;
}

} // namespace pflow
