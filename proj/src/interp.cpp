#include "pflow/interp.hpp"

#include <cmath>

namespace pflow {

namespace {

inline void catmull_rom(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

template <typename Get>
double bicubic(const Grid& g, const Vector2d& p, Get&& get) {
    const double fx = (p.x() - g.origin.x()) / g.h;
    const double fy = (p.y() - g.origin.y()) / g.h;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    double wx[4], wy[4];
    catmull_rom(fx - i0, wx);
    catmull_rom(fy - j0, wy);

    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        const int j = j0 - 1 + b;
        for (int a = 0; a < 4; ++a) {
            const int i = i0 - 1 + a;
            acc += wx[a] * wy[b] * get(i, j);
        }
    }
    return acc;
}

template <typename Get>
double bilinear(const Grid& g, const Vector2d& p, Get&& get) {
    const double fx = (p.x() - g.origin.x()) / g.h;
    const double fy = (p.y() - g.origin.y()) / g.h;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    const double tx = fx - i0, ty = fy - j0;
    return (1 - tx) * (1 - ty) * get(i0, j0) + tx * (1 - ty) * get(i0 + 1, j0) +
           (1 - tx) * ty * get(i0, j0 + 1) + tx * ty * get(i0 + 1, j0 + 1);
}

template <typename Plane>
auto make_getter(const Grid& g, const Plane& plane) {
    return [&g, &plane](int i, int j) -> double {
        if (g.boundary == Boundary::periodic) {
            i = ((i % g.nx) + g.nx) % g.nx;
            j = ((j % g.ny) + g.ny) % g.ny;
        } else if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) {
            return 0.0;
        }
        return plane[j * g.nx + i];
    };
}

} // namespace

double sample_bicubic(const ScalarField& f, const Vector2d& p) {
    return bicubic(f.grid, p, make_getter(f.grid, f.v));
}

Vector2d sample_bicubic(const VectorField& f, const Vector2d& p) {
    return {bicubic(f.grid, p, make_getter(f.grid, f.x)),
            bicubic(f.grid, p, make_getter(f.grid, f.y))};
}

double sample_bilinear(const ScalarField& f, const Vector2d& p) {
    return bilinear(f.grid, p, make_getter(f.grid, f.v));
}

Vector2d sample_bilinear(const VectorField& f, const Vector2d& p) {
    return {bilinear(f.grid, p, make_getter(f.grid, f.x)),
            bilinear(f.grid, p, make_getter(f.grid, f.y))};
}

} // namespace pflow
