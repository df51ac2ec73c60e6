#include "pflow/euler.hpp"

#include "pflow/biot_savart.hpp"
#include "pflow/calculus.hpp"
#include "pflow/interp.hpp"
#include "pflow/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pflow {

namespace {

Vector2d backtrace_rk3(const VectorField& u, const Vector2d& x, double dt) {
    const Vector2d k1 = sample_bicubic(u, x);
    const Vector2d k2 = sample_bicubic(u, x - 0.5 * dt * k1);
    const Vector2d k3 = sample_bicubic(u, x - dt * (2.0 * k2 - k1));
    return x - dt / 6.0 * (k1 + 4.0 * k2 + k3);
}

} // namespace

EulerState euler_initialize(const ScalarField& omega0) {
    EulerState s;
    s.time = 0.0;
    s.omega = omega0;
    s.u = biot_savart_fft(omega0);
    return s;
}

EulerState euler_step(const EulerState& state, double dt, double cfl) {
    const Grid& g = state.omega.grid;
    const double umax = state.u.magnitude().maxCoeff();
    if (umax > 0.0 && dt > cfl * g.h / umax)
        throw std::invalid_argument("euler_step: dt violates the advective CFL limit (dt = " +
                                    std::to_string(dt) + ", limit = " +
                                    std::to_string(cfl * g.h / umax) + ")");

    EulerState next;
    next.time = state.time + dt;
    next.omega = ScalarField(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vector2d foot = backtrace_rk3(state.u, g.pos(i, j), dt);
            next.omega(i, j) = sample_bicubic(state.omega, foot);
        }
    // Interpolation smears a rounding-level halo past the support each step;
    // clip it so compact support survives long runs.
    const double clip = 1e-12 * next.omega.v.abs().maxCoeff();
    for (int k = 0; k < g.size(); ++k)
        if (std::abs(next.omega.v[k]) < clip) next.omega.v[k] = 0.0;
    next.u = biot_savart_fft(next.omega);
    return next;
}

EulerTrajectory run_euler(const ScalarField& omega0, double T, int n_snapshots,
                          double dt_max, double cfl) {
    if (n_snapshots < 1) throw std::invalid_argument("run_euler: need n_snapshots >= 1");
    EulerTrajectory traj;
    EulerState s = euler_initialize(omega0);

    auto record = [&](const EulerState& st) {
        traj.conserved.time.push_back(st.time);
        traj.conserved.l1.push_back(lp_norm(st.omega, 1.0));
        traj.conserved.l2.push_back(lp_norm(st.omega, 2.0));
        traj.conserved.linf.push_back(
            lp_norm(st.omega, std::numeric_limits<double>::infinity()));
    };

    traj.snapshots.push_back(s);
    record(s);
    const double snap_dt = T / n_snapshots;
    for (int k = 1; k <= n_snapshots; ++k) {
        const double t_target = k * snap_dt;
        while (s.time < t_target - 1e-12) {
            const double umax = s.u.magnitude().maxCoeff();
            double dt = std::min(dt_max, t_target - s.time);
            if (umax > 0.0) dt = std::min(dt, cfl * s.omega.grid.h / umax);
            s = euler_step(s, dt, cfl + 1e-12);
        }
        traj.snapshots.push_back(s);
        record(s);
    }
    return traj;
}

YudovichReport yudovich_report(const EulerTrajectory& traj) {
    YudovichReport rep;
    for (const EulerState& s : traj.snapshots) {
        const VectorField gx = grad(ScalarField(s.u.grid, s.u.x));
        const VectorField gy = grad(ScalarField(s.u.grid, s.u.y));
        ScalarField frob(s.u.grid);
        frob.v = (gx.x.square() + gx.y.square() + gy.x.square() + gy.y.square()).sqrt();
        rep.time.push_back(s.time);
        rep.grad_inf.push_back(frob.v.maxCoeff());
    }

    // Smallest c with c*exp(c t) above every sample: feasibility is monotone
    // in c, so bisection applies.
    auto feasible = [&](double c) {
        for (size_t k = 0; k < rep.time.size(); ++k)
            if (c * std::exp(c * rep.time[k]) < rep.grad_inf[k]) return false;
        return true;
    };
    double lo = 1e-12, hi = 1.0;
    while (!feasible(hi) && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    rep.fitted_c0 = hi;
    return rep;
}

ScalarField euler_pressure(const EulerState& state, const BoolArray* gauge_mask) {
    const Grid& g = state.omega.grid;
    const VectorField gx = grad(ScalarField(g, state.u.x));
    const VectorField gy = grad(ScalarField(g, state.u.y));
    VectorField adv(g);
    adv.x = state.u.x * gx.x + state.u.y * gx.y;
    adv.y = state.u.x * gy.x + state.u.y * gy.y;
    ScalarField rhs = div(adv);
    rhs.v = -rhs.v;

    // Taper to the inner half; the advection term decays like |x|^-3 so the
    // clipped tail is negligible against the O(h^2) solve error.
    auto ramp = [](double t) {
        t = std::clamp(t, 0.0, 1.0);
        return ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
    };
    const double bx0 = 0.26 * g.nx, bx1 = 0.30 * g.nx;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double di = std::min(i, g.nx - 1 - i);
            const double dj = std::min(j, g.ny - 1 - j);
            const double w =
                ramp((di - bx0) / (bx1 - bx0)) * ramp((dj - bx0) / (bx1 - bx0));
            rhs(i, j) *= w;
        }

    ScalarField p = poisson_freespace(rhs);
    if (gauge_mask) {
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k < g.size(); ++k)
            if ((*gauge_mask)[k]) {
                sum += p.v[k];
                ++n;
            }
        if (n > 0) p.v -= sum / n;
    } else {
        p.v -= p.v.mean();
    }
    return p;
}

} // namespace pflow
