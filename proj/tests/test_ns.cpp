#include "pflow/ns.hpp"

#include "pflow/calculus.hpp"

#include <doctest.h>

#include <cmath>

using namespace pflow;

namespace {

Grid periodic_box(double side, int n) {
    return Grid(Vector2d(0, 0), side / n, n, n, Boundary::periodic);
}

VectorField taylor_green(const Grid& g, double amplitude = 1.0) {
    VectorField u(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            const int k = g.idx(i, j);
            u.x[k] = amplitude * std::sin(x) * std::cos(y);
            u.y[k] = -amplitude * std::cos(x) * std::sin(y);
        }
    return u;
}

} // namespace

TEST_SUITE_BEGIN("ns");

TEST_CASE("zero initial data stays zero") {
    Grid g = periodic_box(2 * kPi, 32);
    SimParams p;
    p.nu = 0.01;
    p.dt = 0.01;
    p.T = 0.1;
    p.n_snapshots = 2;
    const NSTrajectory traj = run_ns(VectorField(g), p, nullptr);
    CHECK(traj.snapshots.back().u.x.abs().maxCoeff() == 0.0);
}

TEST_CASE("taylor-green decays at the exact viscous rate") {
    const int n = 128;
    Grid g = periodic_box(2 * kPi, n);
    SimParams p;
    p.nu = 0.01;
    p.dt = 0.01;
    p.T = 1.0;
    p.n_snapshots = 10;
    const VectorField u0 = taylor_green(g);
    const NSTrajectory traj = run_ns(u0, p, nullptr);

    const double e0 = lp_norm(traj.snapshots.front().u, 2.0);
    const double eT = lp_norm(traj.snapshots.back().u, 2.0);
    const double expected = std::exp(-2.0 * p.nu * p.T); // amplitude factor
    CHECK(eT / e0 == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("CFL violation is rejected") {
    Grid g = periodic_box(2 * kPi, 64);
    SimParams p;
    p.nu = 0.0;
    p.dt = 0.5; // far above 0.5 h / |u| for |u| = O(1)
    p.T = 1.0;
    p.eta = g.h * g.h;
    NSState s;
    s.u = taylor_green(g);
    s.p = ScalarField(g);
    CHECK_THROWS(ns_step(s, p, nullptr));
}

TEST_CASE("eta above h^2 is rejected") {
    Grid g = periodic_box(2 * kPi, 32);
    SimParams p;
    p.eta = 10.0 * g.h * g.h;
    CHECK_THROWS(p.validate(g));
}

TEST_CASE("projection leaves the divergence at rounding level") {
    Grid g = periodic_box(2 * kPi, 64);
    SimParams p;
    p.nu = 5e-3;
    p.dt = 0.01;
    p.T = 0.1;
    p.n_snapshots = 2;
    const NSTrajectory traj = run_ns(taylor_green(g), p, nullptr);
    CHECK(projection_residual(traj.snapshots.back().u) < 1e-8);
}

TEST_CASE("unforced ledger: energy nonincreasing, terms balance") {
    Grid g = periodic_box(2 * kPi, 64);
    SimParams p;
    p.nu = 0.02;
    p.dt = 0.01;
    p.T = 0.5;
    p.n_snapshots = 5;
    const NSTrajectory traj = run_ns(taylor_green(g), p, nullptr);
    const LedgerSummary sum = summarize_ledger(traj);
    CHECK(sum.max_energy_increase_rel < 1e-3);
    CHECK(sum.max_violation_rel < 1e-3);
    CHECK(sum.final_energy < traj.ledger.front().energy);
}

TEST_CASE("nu = 0: the ledger reduces to penalization dissipation") {
    const int n = 64;
    Grid g = periodic_box(1.0, n);
    LatticeConfig cfg{0.25, 0.25, 0.0, ObstacleShape::disk()};
    const Geometry geo = lattice_centers(cfg);
    Grid open = g;
    open.boundary = Boundary::open;
    RegionMask mask = rasterize(geo, open);
    mask.grid = g;

    SimParams p;
    p.nu = 0.0;
    p.dt = 2e-3;
    p.T = 0.05;
    p.n_snapshots = 2;
    VectorField u0(g);
    u0.x.setConstant(0.05);
    // Remove the mean later: constant flow into the obstacle decays by penalization.
    const NSTrajectory traj = run_ns(u0, p, &mask);
    for (const LedgerRow& r : traj.ledger) {
        CHECK(r.visc_diss == 0.0);
        CHECK(r.penal_diss >= 0.0);
    }
    CHECK(summarize_ledger(traj).max_violation_rel < 1e-3);
}

TEST_CASE("penalized obstacle: solid velocity sinks below the penalization scale") {
    const int n = 128;
    Grid g = periodic_box(1.0, n);
    LatticeConfig cfg{0.25, 0.25, 0.0, ObstacleShape::disk()};
    const Geometry geo = lattice_centers(cfg);
    Grid open = g;
    open.boundary = Boundary::open;
    RegionMask mask = rasterize(geo, open);
    mask.grid = g;

    SimParams p;
    p.nu = 0.05; // the "large viscosity" regime of the residual estimate
    p.dt = 1e-3;
    p.T = 0.02;
    p.n_snapshots = 4;
    VectorField u0(g);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            u0.x[g.idx(i, j)] = 0.1 * std::sin(2 * kPi * g.y(j));
            u0.y[g.idx(i, j)] = 0.1 * std::sin(2 * kPi * g.x(i));
        }
    p.validate(g);
    const NSTrajectory traj = run_ns(u0, p, &mask);
    const double solid_max =
        lp_norm(traj.snapshots.back().u, std::numeric_limits<double>::infinity(),
                &mask.solid);
    CHECK(solid_max <= 10.0 * std::sqrt(p.nu * p.eta));
}

TEST_CASE("solid-velocity constant is stable under eta halving") {
    const int n = 96;
    Grid g = periodic_box(1.0, n);
    LatticeConfig cfg{0.25, 0.25, 0.0, ObstacleShape::disk()};
    const Geometry geo = lattice_centers(cfg);
    Grid open = g;
    open.boundary = Boundary::open;
    RegionMask mask = rasterize(geo, open);
    mask.grid = g;

    auto solid_ratio = [&](double eta) {
        SimParams p;
        p.nu = 0.02;
        p.dt = 1e-3;
        p.T = 0.05;
        p.eta = eta;
        p.n_snapshots = 2;
        VectorField u0(g);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                u0.x[g.idx(i, j)] = 0.1 * std::sin(2 * kPi * g.y(j));
        const NSTrajectory traj = run_ns(u0, p, &mask);
        const double s =
            lp_norm(traj.snapshots.back().u, std::numeric_limits<double>::infinity(),
                    &mask.solid);
        return s / std::sqrt(p.nu * eta);
    };
    const double h2 = g.h * g.h;
    const double c1 = solid_ratio(h2);
    const double c2 = solid_ratio(h2 / 2.0);
    CHECK(c2 < std::max(2.0 * c1, 1e-6) + 1.0); // no blowup under halving
}

TEST_CASE("grid convergence: halving h at least triples the accuracy") {
    // Smooth periodic problem, error against a fine reference. A fixed small
    // dt across resolutions isolates the spatial order from the splitting.
    auto run_at = [](int n) {
        Grid g = periodic_box(2 * kPi, n);
        SimParams p;
        p.nu = 5e-3;
        p.dt = 0.125 / 256;
        p.T = 0.125;
        p.n_snapshots = 1;
        VectorField u0 = taylor_green(g);
        // Perturb with a second harmonic so the flow is not a fixed point of
        // the advection operator alone.
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                u0.x[g.idx(i, j)] += 0.2 * std::sin(2.0 * g.y(j));
                u0.y[g.idx(i, j)] += 0.2 * std::sin(2.0 * g.x(i));
            }
        return run_ns(u0, p, nullptr).snapshots.back().u;
    };
    const VectorField ua = run_at(32), ub = run_at(64), uref = run_at(192);

    auto error_vs_ref = [&](const VectorField& u, const VectorField& ref) {
        // Compare on the coarse nodes (they are a subset of the fine nodes).
        const int skip = ref.grid.nx / u.grid.nx;
        double acc = 0.0;
        for (int j = 0; j < u.grid.ny; ++j)
            for (int i = 0; i < u.grid.nx; ++i) {
                const Vector2d d = u.at(i, j) - ref.at(i * skip, j * skip);
                acc += d.squaredNorm();
            }
        return std::sqrt(acc * u.grid.h * u.grid.h);
    };
    const double e32 = error_vs_ref(ua, uref);
    const double e64 = error_vs_ref(ub, uref);
    CHECK(e64 < e32 / 3.0);
}

TEST_SUITE_END();
