#include "pflow/cell_problem.hpp"

#include "pflow/corrector.hpp"

#include <doctest.h>

#include <cmath>

using namespace pflow;

TEST_SUITE_BEGIN("cell_problem");

TEST_CASE("zero rhs yields the zero minimizer") {
    auto solver = CellDivergenceSolver::shared(ObstacleShape::disk(), 64);
    const CellSolution sol = solver->solve(ArrayXd::Zero(64 * 64));
    CHECK(sol.h.x.abs().maxCoeff() == 0.0);
    CHECK(sol.h.y.abs().maxCoeff() == 0.0);
    CHECK(sol.energy == 0.0);
}

TEST_CASE("nonzero-mean rhs is rejected") {
    auto solver = CellDivergenceSolver::shared(ObstacleShape::disk(), 64);
    ArrayXd f = ArrayXd::Zero(64 * 64);
    for (int k = 0; k < f.size(); ++k)
        if (solver->fluid_cells()[k]) f[k] = 0.1;
    CHECK_THROWS_WITH_AS(solver->solve(f), doctest::Contains("zero mean"),
                         std::invalid_argument);
}

TEST_CASE("random mean-zero rhs: residual, boundary values, energy finite") {
    auto solver = CellDivergenceSolver::shared(ObstacleShape::disk(), 96);
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        const ArrayXd f = random_cell_rhs(*solver, seed);
        const CellSolution sol = solver->solve(f);
        CHECK(sol.residual_rel < 1e-8);
        // Dirichlet faces and wall nodes are exactly zero.
        const Grid ng = solver->node_grid();
        for (int i = 0; i < ng.nx; ++i) {
            CHECK(sol.h.at(i, 0).norm() == 0.0);
            CHECK(sol.h.at(i, ng.ny - 1).norm() == 0.0);
            CHECK(sol.h.at(0, i).norm() == 0.0);
            CHECK(sol.h.at(ng.nx - 1, i).norm() == 0.0);
        }
        CHECK(std::isfinite(sol.energy));
        CHECK(sol.energy > 0.0);
    }
}

TEST_CASE("solid staircase nodes carry exact zeros") {
    auto solver = CellDivergenceSolver::shared(ObstacleShape::disk(), 96);
    const ArrayXd f = random_cell_rhs(*solver, 42);
    const CellSolution sol = solver->solve(f);
    const Grid ng = solver->node_grid();
    // Node at the obstacle center and its neighbors (deep inside the disk).
    const int c = 48;
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
            CHECK(sol.h.at(c + di, c + dj).norm() == 0.0);
}

TEST_CASE("divergence of a feasible competitor bounds the minimizer energy") {
    // g smooth, compactly supported inside the fluid part of the cell; its
    // exact face divergence is a feasible rhs, so the minimizer energy cannot
    // exceed g's.
    auto solver = CellDivergenceSolver::shared(ObstacleShape::disk(), 96);
    const int nc = solver->nc();
    const double hc = solver->hc();

    auto gx_fn = [](const Vector2d& p) {
        const Vector2d c(1.45, 0.1);
        return std::exp(-6.0 * (p - c).squaredNorm()) * (p.x() - c.x());
    };
    auto gy_fn = [](const Vector2d& p) {
        const Vector2d c(-1.35, -0.9);
        return std::exp(-7.0 * (p - c).squaredNorm());
    };

    ArrayXd u_faces = ArrayXd::Zero((nc + 1) * nc);
    ArrayXd v_faces = ArrayXd::Zero(nc * (nc + 1));
    for (int j = 0; j < nc; ++j)
        for (int i = 0; i <= nc; ++i) {
            const Vector2d p(-2.0 + i * hc, -2.0 + (j + 0.5) * hc);
            if (i > 0 && i < nc && p.norm() > 1.3 && std::max(std::abs(p.x()), std::abs(p.y())) < 1.9)
                u_faces[j * (nc + 1) + i] = gx_fn(p);
        }
    for (int j = 0; j <= nc; ++j)
        for (int i = 0; i < nc; ++i) {
            const Vector2d p(-2.0 + (i + 0.5) * hc, -2.0 + j * hc);
            if (j > 0 && j < nc && p.norm() > 1.3 && std::max(std::abs(p.x()), std::abs(p.y())) < 1.9)
                v_faces[j * nc + i] = gy_fn(p);
        }

    const ArrayXd f = solver->face_divergence(u_faces, v_faces);
    const CellSolution sol = solver->solve(f, 1e-6, true);
    CHECK(sol.residual_rel < 1e-8);
    const double g_energy = solver->quadratic_energy(u_faces, v_faces);
    CHECK(sol.energy <= g_energy * (1.0 + 1e-9));
}

TEST_CASE("nodal norms: constant-field sanity") {
    Grid ng(Vector2d(-2, -2), 4.0 / 64, 65, 65, Boundary::open);
    VectorField h(ng);
    h.x.setOnes();
    // Value norm approximates |U|^(1/p) with |[-2,2]^2| = 16 (no obstacle here).
    CHECK(cell_lp_norm(h, 2.0) == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(cell_grad_lp_norm(h, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Stride-2 quadrature agrees for smooth data.
    CHECK(cell_lp_norm(h, 2.0, 2) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("shared solver instances are reused") {
    auto a = CellDivergenceSolver::shared(ObstacleShape::disk(), 64);
    auto b = CellDivergenceSolver::shared(ObstacleShape::disk(), 64);
    CHECK(a.get() == b.get());
    auto c = CellDivergenceSolver::shared(ObstacleShape::smoothed_square(0.25), 64);
    CHECK(a.get() != c.get());
}

TEST_SUITE_END();
