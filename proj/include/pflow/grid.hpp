#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace pflow {

using Eigen::Vector2d;
using Eigen::ArrayXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class Boundary { periodic, open };

/// Uniform collocated grid. Node (i,j) sits at origin + h*(i,j);
/// samples are stored row-major with j (the y index) as the slow axis.
struct Grid {
    Vector2d origin{0.0, 0.0};
    double h{1.0};
    int nx{0};
    int ny{0};
    Boundary boundary{Boundary::open};

    Grid() = default;
    Grid(Vector2d origin_, double h_, int nx_, int ny_, Boundary b)
        : origin(origin_), h(h_), nx(nx_), ny(ny_), boundary(b) {
        validate();
    }

    void validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("Grid: spacing must be positive");
        if (nx < 8 || ny < 8) throw std::invalid_argument("Grid: nx, ny must be >= 8");
    }

    int size() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
    Vector2d pos(int i, int j) const { return origin + h * Vector2d(i, j); }
    double x(int i) const { return origin.x() + h * i; }
    double y(int j) const { return origin.y() + h * j; }

    bool same_layout(const Grid& o) const {
        return nx == o.nx && ny == o.ny && h == o.h &&
               origin == o.origin && boundary == o.boundary;
    }
};

struct ScalarField {
    Grid grid;
    ArrayXd v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid(g), v(ArrayXd::Zero(g.size())) {}
    ScalarField(const Grid& g, ArrayXd samples) : grid(g), v(std::move(samples)) {
        if (v.size() != grid.size())
            throw std::invalid_argument("ScalarField: sample count mismatch");
    }

    double& operator()(int i, int j) { return v[grid.idx(i, j)]; }
    double operator()(int i, int j) const { return v[grid.idx(i, j)]; }

    bool all_finite() const { return v.isFinite().all(); }
};

/// Two collocated components sharing one grid.
struct VectorField {
    Grid grid;
    ArrayXd x;
    ArrayXd y;

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid(g), x(ArrayXd::Zero(g.size())), y(ArrayXd::Zero(g.size())) {}
    VectorField(const Grid& g, ArrayXd cx, ArrayXd cy)
        : grid(g), x(std::move(cx)), y(std::move(cy)) {
        if (x.size() != grid.size() || y.size() != grid.size())
            throw std::invalid_argument("VectorField: sample count mismatch");
    }

    Vector2d at(int i, int j) const {
        const int k = grid.idx(i, j);
        return {x[k], y[k]};
    }

    ArrayXd magnitude() const { return (x.square() + y.square()).sqrt(); }
    bool all_finite() const { return x.isFinite().all() && y.isFinite().all(); }
};

inline constexpr double kPi = 3.14159265358979323846;

} // namespace pflow
