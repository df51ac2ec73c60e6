#include "pflow/calculus.hpp"

#include <cmath>

namespace pflow {

namespace {

double lp_reduce(const ArrayXd& mag, double p, double h, const BoolArray* mask) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (mask && mask->size() != mag.size())
        throw std::invalid_argument("lp_norm: mask size mismatch");
    if (mask && !mask->any()) throw std::invalid_argument("lp_norm: empty mask");

    if (std::isinf(p)) {
        if (!mask) return mag.abs().maxCoeff();
        double m = 0.0;
        for (Eigen::Index k = 0; k < mag.size(); ++k)
            if ((*mask)[k]) m = std::max(m, std::abs(mag[k]));
        return m;
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < mag.size(); ++k) {
        if (mask && !(*mask)[k]) continue;
        acc += std::pow(std::abs(mag[k]), p);
    }
    return std::pow(acc * h * h, 1.0 / p);
}

// d/dx with the grid's boundary handling. Writes into out.
void ddx(const ScalarField& f, ArrayXd& out) {
    const Grid& g = f.grid;
    const double inv2h = 1.0 / (2.0 * g.h);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double d;
            if (g.boundary == Boundary::periodic) {
                const int ip = (i + 1) % g.nx, im = (i + g.nx - 1) % g.nx;
                d = (f(ip, j) - f(im, j)) * inv2h;
            } else if (i == 0) {
                d = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) * inv2h;
            } else if (i == g.nx - 1) {
                d = (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j)) * inv2h;
            } else {
                d = (f(i + 1, j) - f(i - 1, j)) * inv2h;
            }
            out[g.idx(i, j)] = d;
        }
    }
}

void ddy(const ScalarField& f, ArrayXd& out) {
    const Grid& g = f.grid;
    const double inv2h = 1.0 / (2.0 * g.h);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double d;
            if (g.boundary == Boundary::periodic) {
                const int jp = (j + 1) % g.ny, jm = (j + g.ny - 1) % g.ny;
                d = (f(i, jp) - f(i, jm)) * inv2h;
            } else if (j == 0) {
                d = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) * inv2h;
            } else if (j == g.ny - 1) {
                d = (3.0 * f(i, j) - 4.0 * f(i, j - 1) + f(i, j - 2)) * inv2h;
            } else {
                d = (f(i, j + 1) - f(i, j - 1)) * inv2h;
            }
            out[g.idx(i, j)] = d;
        }
    }
}

} // namespace

double lp_norm(const ScalarField& f, double p, const BoolArray* mask) {
    return lp_reduce(f.v, p, f.grid.h, mask);
}

double lp_norm(const VectorField& f, double p, const BoolArray* mask) {
    return lp_reduce(f.magnitude(), p, f.grid.h, mask);
}

VectorField grad(const ScalarField& f) {
    VectorField g(f.grid);
    ScalarField tmp = f;
    ddx(tmp, g.x);
    ddy(tmp, g.y);
    return g;
}

ScalarField div(const VectorField& u) {
    ScalarField d(u.grid);
    ArrayXd dx(u.grid.size()), dy(u.grid.size());
    ddx(ScalarField(u.grid, u.x), dx);
    ddy(ScalarField(u.grid, u.y), dy);
    d.v = dx + dy;
    return d;
}

ScalarField curl(const VectorField& u) {
    ScalarField c(u.grid);
    ArrayXd duy_dx(u.grid.size()), dux_dy(u.grid.size());
    ddx(ScalarField(u.grid, u.y), duy_dx);
    ddy(ScalarField(u.grid, u.x), dux_dy);
    c.v = duy_dx - dux_dy;
    return c;
}

VectorField perp_grad(const ScalarField& f) {
    VectorField g = grad(f);
    ArrayXd gx = std::move(g.x);
    g.x = -g.y;
    g.y = std::move(gx);
    return g;
}

double mean(const ScalarField& f) { return f.v.mean(); }

} // namespace pflow
