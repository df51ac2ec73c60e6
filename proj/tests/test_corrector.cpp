#include "pflow/corrector.hpp"

#include "pflow/biot_savart.hpp"
#include "pflow/calculus.hpp"

#include <doctest.h>

#include <cmath>

using namespace pflow;

namespace {

// Node-aligned grid covering the inflated lattice: h = eps/8, box bounds on
// multiples of h, obstacle centers on nodes.
Grid aligned_grid(const Geometry& geo, int margin = 8) {
    const double eps = geo.config.epsilon;
    const double h = eps / 8.0;
    double xmax = 0, ymax = 0;
    for (const Vector2d& z : geo.centers) {
        xmax = std::max(xmax, z.x());
        ymax = std::max(ymax, z.y());
    }
    const int nx = static_cast<int>(std::round(xmax / h)) + 16 + 2 * margin + 1;
    const int ny = static_cast<int>(std::round(ymax / h)) + 16 + 2 * margin + 1;
    return Grid(Vector2d(eps - (16 + margin) * h, eps - (16 + margin) * h), h, nx, ny,
                Boundary::open);
}

VectorField constant_field(const Grid& g, double cx, double cy) {
    VectorField u(g);
    u.x.setConstant(cx);
    u.y.setConstant(cy);
    return u;
}

// A smooth divergence-free velocity with an off-lattice vortex.
VectorField smooth_divfree(const Grid& g) {
    VectorField u(g);
    const Vector2d c(-0.35, -0.3);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vector2d r = g.pos(i, j) - c;
            const double r2 = r.squaredNorm() + 0.05;
            const int k = g.idx(i, j);
            u.x[k] = -r.y() / r2;
            u.y[k] = r.x() / r2;
        }
    return u;
}

} // namespace

TEST_SUITE_BEGIN("corrector");

TEST_CASE("zero velocity produces the zero corrector") {
    const Geometry geo = lattice_centers({0.1, 0.1, 0.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const CorrectorAssembly a = assemble_h_epsilon(geo, VectorField(grid), grid);
    CHECK(a.h_eps.x.abs().maxCoeff() == 0.0);
    CHECK(a.h_eps.y.abs().maxCoeff() == 0.0);
}

TEST_CASE("constant velocity washes through with near-zero cell means") {
    const Geometry geo = lattice_centers({0.1, 0.1, 1.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const CorrectorAssembly a =
        assemble_h_epsilon(geo, constant_field(grid, 1.0, -0.5), grid);
    // The divergence theorem kills the cell mean up to midpoint-quadrature error.
    CHECK(a.max_mean_subtracted < 2e-3);
    CHECK(a.max_cell_residual < 1e-8);

    // Contrast: a field with order-one divergence leaves an order-one mean.
    VectorField dilating(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const int k = grid.idx(i, j);
            dilating.x[k] = grid.x(i);
            dilating.y[k] = grid.y(j);
        }
    const CorrectorAssembly bad = assemble_h_epsilon(geo, dilating, grid);
    CHECK(bad.max_mean_subtracted > 0.05);
}

TEST_CASE("support and no-slip pinning of the assembled corrector") {
    const Geometry geo = lattice_centers({0.1, 0.1, 1.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const VectorField uE = smooth_divfree(grid);
    const CorrectorAssembly a = assemble_h_epsilon(geo, uE, grid);
    const RegionMask mask = rasterize(geo, grid);

    for (int k = 0; k < grid.size(); ++k) {
        if (!mask.sleeve[k] && !mask.solid[k]) {
            CHECK(a.h_eps.x[k] == 0.0);
            CHECK(a.h_eps.y[k] == 0.0);
        }
        if (mask.solid[k]) {
            CHECK(a.h_eps.x[k] == 0.0);
            CHECK(a.h_eps.y[k] == 0.0);
        }
    }

    // u_eps equals uE away from the sleeve and vanishes on solid nodes.
    const VectorField u_eps = euler_corrector(geo, uE, a);
    for (int k = 0; k < grid.size(); ++k) {
        if (!mask.sleeve[k] && !mask.solid[k]) {
            CHECK(u_eps.x[k] == uE.x[k]);
            CHECK(u_eps.y[k] == uE.y[k]);
        }
        if (mask.solid[k]) {
            CHECK(u_eps.x[k] == 0.0);
            CHECK(u_eps.y[k] == 0.0);
        }
    }
}

TEST_CASE("solid-adjacent nodes are exactly zero") {
    const Geometry geo = lattice_centers({0.2, 0.2, 0.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const VectorField uE = smooth_divfree(grid);
    const CorrectorAssembly a = assemble_h_epsilon(geo, uE, grid);
    const VectorField u_eps = euler_corrector(geo, uE, a);
    const RegionMask mask = rasterize(geo, grid);
    for (int j = 1; j + 1 < grid.ny; ++j)
        for (int i = 1; i + 1 < grid.nx; ++i) {
            const int k = grid.idx(i, j);
            const bool adjacent = mask.solid[grid.idx(i - 1, j)] ||
                                  mask.solid[grid.idx(i + 1, j)] ||
                                  mask.solid[grid.idx(i, j - 1)] ||
                                  mask.solid[grid.idx(i, j + 1)];
            if (adjacent || mask.solid[k]) {
                CHECK(u_eps.x[k] == 0.0);
                CHECK(u_eps.y[k] == 0.0);
            }
        }
}

TEST_CASE("divergence residual of the corrected field is small") {
    const Geometry geo = lattice_centers({0.1, 0.1, 1.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const VectorField uE = smooth_divfree(grid);
    const CorrectorAssembly a = assemble_h_epsilon(geo, uE, grid);
    CHECK(corrector_divergence_residual(a, uE) < 0.08);
}

TEST_CASE("scaled Sobolev norm: physical and bookkeeping routes agree to rounding") {
    const Geometry geo = lattice_centers({0.1, 0.1, 1.0, ObstacleShape::disk()});
    const Grid grid = aligned_grid(geo);
    const VectorField uE = smooth_divfree(grid);
    const CorrectorAssembly a = assemble_h_epsilon(geo, uE, grid);
    for (const double p : {2.0, 4.0}) {
        const ScaledNormCheck c = scaled_sobolev_norm_check(a, p);
        CHECK(c.physical == doctest::Approx(c.bookkeeping).epsilon(1e-12));
        CHECK(c.physical > 0.0);
    }
}

TEST_CASE("corrector bound ratios stay bounded across a two-point epsilon sweep") {
    // Frozen velocity snapshot pair; ratios at eps and eps/2 within a 3x spread.
    std::vector<CorrectorBoundRatios> rs;
    for (const double eps : {0.1, 0.05}) {
        const Geometry geo = lattice_centers({eps, eps, 1.0, ObstacleShape::disk()});
        const Grid grid = aligned_grid(geo);
        const VectorField uE0 = smooth_divfree(grid);
        VectorField uE1 = uE0;
        // A slightly rotated snapshot stands in for the next time level.
        for (int k = 0; k < grid.size(); ++k) {
            uE1.x[k] = 0.98 * uE0.x[k] - 0.02 * uE0.y[k];
            uE1.y[k] = 0.98 * uE0.y[k] + 0.02 * uE0.x[k];
        }
        rs.push_back(corrector_bound_ratios(geo, grid, uE0, uE1, 0.02));
    }
    auto spread = [](double a, double b) { return std::max(a, b) / std::min(a, b); };
    CHECK(spread(rs[0].h_l4_over_shape, rs[1].h_l4_over_shape) < 3.0);
    CHECK(spread(rs[0].gradh_l2_times_shape, rs[1].gradh_l2_times_shape) < 3.0);
    CHECK(spread(rs[0].err_l4_over_shape, rs[1].err_l4_over_shape) < 3.0);
    CHECK(spread(rs[0].dth_l2_over_shape, rs[1].dth_l2_over_shape) < 3.0);
}

TEST_CASE("estimated constants: sample maxima, monotonicity, shape dependence") {
    const CellConstants disk = estimate_constants(ObstacleShape::disk(), 4.0, 20, 11, 96);
    CHECK(disk.c_tilde > 0.0);
    CHECK(disk.k1 > 0.0);
    CHECK(disk.k2 > 0.0);
    for (const double r : disk.c_tilde_samples) CHECK(disk.c_tilde >= r);

    // The max over a sub-ensemble cannot exceed the full-ensemble max.
    const CellConstants disk30 = estimate_constants(ObstacleShape::disk(), 4.0, 30, 11, 96);
    CHECK(disk30.c_tilde >= disk.c_tilde - 1e-12);

    const CellConstants square =
        estimate_constants(ObstacleShape::smoothed_square(0.25), 4.0, 20, 11, 96);
    CHECK(square.c_tilde != doctest::Approx(disk.c_tilde).epsilon(1e-3));
}

TEST_CASE("constant ratios are invariant under the cell rescaling") {
    // The physical-side Poincare ratio |u|_L2(A_eps) / (eps |grad u|_L2(A_eps))
    // equals the reference ratio exactly, after the change of variables; check
    // the arithmetic identity on one assembled corrector at two scales.
    std::vector<double> ratios;
    for (const double eps : {0.1, 0.05}) {
        const Geometry geo = lattice_centers({eps, eps, 0.0, ObstacleShape::disk()});
        const Grid grid = aligned_grid(geo);
        const VectorField uE = smooth_divfree(grid);
        const CorrectorAssembly a = assemble_h_epsilon(geo, uE, grid);
        // Same reference-cell data at each eps: the rescaled ratio uses the
        // identity |h^eps|_L2 = eps (sum |h_ij|^2)^(1/2) and
        // |grad h^eps|_L2 = (sum |grad h_ij|^2)^(1/2).
        const double ratio =
            corrector_lp_norm(a, 2.0) / (eps * corrector_grad_lp_norm(a, 2.0));
        ratios.push_back(ratio);
    }
    // Different uE sampling at the two scales perturbs the cell data, so exact
    // equality is not expected; the scale factor eps has been divided out and
    // the ratios must be O(1) and close.
    CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(0.35));
}

TEST_SUITE_END();
