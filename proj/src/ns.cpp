#include "pflow/ns.hpp"

#include "pflow/calculus.hpp"
#include "pflow/fft2.hpp"
#include "pflow/interp.hpp"

#include <cmath>

namespace pflow {

namespace {

CMatrix to_cmatrix(const Grid& g, const ArrayXd& v) {
    CMatrix a(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) a(i, j) = v[g.idx(i, j)];
    return a;
}

void from_cmatrix(const Grid& g, const CMatrix& a, ArrayXd& v) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) v[g.idx(i, j)] = a(i, j).real();
}

// Implicit diffusion: spectral multiplier 1/(1 + nu k^2 dt).
void diffuse(VectorField& u, double nu, double dt) {
    const Grid& g = u.grid;
    const double lx = g.nx * g.h, ly = g.ny * g.h;
    CMatrix ax = to_cmatrix(g, u.x), ay = to_cmatrix(g, u.y);
    fft2(ax);
    fft2(ay);
    for (int j = 0; j < g.ny; ++j) {
        const int fy = j <= g.ny / 2 ? j : j - g.ny;
        const double ky = 2.0 * kPi * fy / ly;
        for (int i = 0; i < g.nx; ++i) {
            const int fx = i <= g.nx / 2 ? i : i - g.nx;
            const double kx = 2.0 * kPi * fx / lx;
            const double m = 1.0 / (1.0 + nu * dt * (kx * kx + ky * ky));
            ax(i, j) *= m;
            ay(i, j) *= m;
        }
    }
    ifft2(ax);
    ifft2(ay);
    from_cmatrix(g, ax, u.x);
    from_cmatrix(g, ay, u.y);
}

// Exact projection for the centered-difference divergence: invert the
// div(grad) symbol -(sin^2 + sin^2)/h^2; its kernel modes (constants and
// Nyquist checkerboards) are invisible to the centered divergence and stay.
ScalarField project(VectorField& u) {
    const Grid& g = u.grid;
    ScalarField d = div(u);
    CMatrix a = to_cmatrix(g, d.v);
    fft2(a);
    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int j = 0; j < g.ny; ++j) {
        const double sy = std::sin(2.0 * kPi * j / g.ny);
        for (int i = 0; i < g.nx; ++i) {
            const double sx = std::sin(2.0 * kPi * i / g.nx);
            const double lam = -(sx * sx + sy * sy) * inv_h2;
            if (std::abs(lam) < 1e-14 * inv_h2)
                a(i, j) = 0.0;
            else
                a(i, j) /= lam;
        }
    }
    ifft2(a);
    ScalarField phi(g);
    from_cmatrix(g, a, phi.v);
    const VectorField gphi = grad(phi);
    u.x -= gphi.x;
    u.y -= gphi.y;
    return phi;
}

} // namespace

void SimParams::validate(const Grid& grid) {
    const double h2 = grid.h * grid.h;
    if (eta == 0.0) eta = h2;
    if (!(nu >= 0.0)) throw std::invalid_argument("SimParams: nu must be >= 0");
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("SimParams: dt, T must be positive");
    if (eta > h2 * (1.0 + 1e-12))
        throw std::invalid_argument("SimParams: eta must be <= h^2 so the penalization "
                                    "error stays subordinate to the grid error");
    if (grid.boundary != Boundary::periodic)
        throw std::invalid_argument("SimParams: the penalized solver runs on a periodic box");
}

NSState ns_step(const NSState& state, const SimParams& params, const RegionMask* mask,
                StepDissipation* dissipation) {
    const Grid& g = state.u.grid;
    const double umax = state.u.magnitude().maxCoeff();
    if (umax > 0.0 && params.dt > params.cfl * g.h / umax)
        throw std::invalid_argument("ns_step: dt violates the advective CFL limit (dt = " +
                                    std::to_string(params.dt) + ", limit = " +
                                    std::to_string(params.cfl * g.h / umax) + ")");

    NSState next;
    next.time = state.time + params.dt;
    next.u = VectorField(g);

    // Semi-Lagrangian advection of both components.
    const double dt = params.dt;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vector2d x = g.pos(i, j);
            const Vector2d k1 = sample_bicubic(state.u, x);
            const Vector2d k2 = sample_bicubic(state.u, x - 0.5 * dt * k1);
            const Vector2d k3 = sample_bicubic(state.u, x - dt * (2.0 * k2 - k1));
            const Vector2d foot = x - dt / 6.0 * (k1 + 4.0 * k2 + k3);
            const Vector2d v = sample_bicubic(state.u, foot);
            const int k = g.idx(i, j);
            next.u.x[k] = v.x();
            next.u.y[k] = v.y();
        }

    if (params.nu > 0.0) {
        diffuse(next.u, params.nu, dt);
        if (dissipation) {
            const VectorField gx = grad(ScalarField(g, next.u.x));
            const VectorField gy = grad(ScalarField(g, next.u.y));
            ScalarField f(g);
            f.v = (gx.x.square() + gx.y.square() + gy.x.square() + gy.y.square()).sqrt();
            const double n = lp_norm(f, 2.0);
            dissipation->visc = params.nu * n * n * dt;
        }
    }

    if (mask) {
        if (!mask->grid.same_layout(g)) throw std::invalid_argument("ns_step: mask grid mismatch");
        const double factor = 1.0 / (1.0 + dt / params.eta);
        for (int k = 0; k < g.size(); ++k)
            if (mask->solid[k]) {
                next.u.x[k] *= factor;
                next.u.y[k] *= factor;
            }
        if (dissipation) {
            const double n = lp_norm(next.u, 2.0, &mask->solid);
            dissipation->penal = n * n / params.eta * dt;
        }
    }

    ScalarField phi = project(next.u);
    next.p = ScalarField(g);
    next.p.v = phi.v / dt;
    return next;
}

NSTrajectory run_ns(const VectorField& u0, SimParams params, const RegionMask* mask) {
    Grid g = u0.grid;
    params.validate(g);

    NSTrajectory traj;
    NSState s;
    s.time = 0.0;
    s.u = u0;
    s.p = ScalarField(g);
    traj.snapshots.push_back(s);

    auto half_energy = [&](const VectorField& u) {
        const double n2 = lp_norm(u, 2.0);
        return 0.5 * n2 * n2;
    };

    double e_prev = half_energy(s.u);
    const double snap_dt = params.T / params.n_snapshots;
    const int steps_per_snap =
        std::max(1, static_cast<int>(std::ceil(snap_dt / params.dt - 1e-9)));
    SimParams step_params = params;
    step_params.dt = snap_dt / steps_per_snap;

    for (int k = 1; k <= params.n_snapshots; ++k) {
        for (int q = 0; q < steps_per_snap; ++q) {
            StepDissipation d;
            s = ns_step(s, step_params, mask, &d);
            LedgerRow row;
            row.time = s.time;
            row.energy = half_energy(s.u);
            row.visc_diss = d.visc;
            row.penal_diss = d.penal;
            row.imbalance = row.energy - e_prev + row.visc_diss + row.penal_diss;
            e_prev = row.energy;
            traj.ledger.push_back(row);
        }
        traj.snapshots.push_back(s);
    }
    return traj;
}

LedgerSummary summarize_ledger(const NSTrajectory& traj) {
    LedgerSummary sum;
    if (traj.ledger.empty()) return sum;
    const double e0 = traj.ledger.front().energy + 1e-300;
    double e_prev = -1.0;
    for (const LedgerRow& r : traj.ledger) {
        sum.max_violation_rel = std::max(sum.max_violation_rel, r.imbalance / e0);
        if (e_prev >= 0.0)
            sum.max_energy_increase_rel =
                std::max(sum.max_energy_increase_rel, (r.energy - e_prev) / e0);
        e_prev = r.energy;
        sum.final_energy = r.energy;
    }
    return sum;
}

double projection_residual(const VectorField& u) {
    const ScalarField d = div(u);
    const VectorField gx = grad(ScalarField(u.grid, u.x));
    const VectorField gy = grad(ScalarField(u.grid, u.y));
    ScalarField f(u.grid);
    f.v = (gx.x.square() + gx.y.square() + gy.x.square() + gy.y.square()).sqrt();
    return lp_norm(d, 2.0) / lp_norm(f, 2.0);
}

} // namespace pflow
