#pragma once

#include "pflow/grid.hpp"

#include <vector>

namespace pflow {

/// Full-plane inviscid flow in vorticity form: transport of omega along the
/// velocity recovered by the free-space Biot-Savart solve.
struct EulerState {
    double time = 0.0;
    ScalarField omega;
    VectorField u; // cached K[omega]
};

EulerState euler_initialize(const ScalarField& omega0);

/// One semi-Lagrangian step: third-order backtrace of the characteristics,
/// bicubic resampling of omega at the feet, velocity refreshed afterwards.
/// Rejects dt above the advective CFL limit.
EulerState euler_step(const EulerState& state, double dt, double cfl = 0.5);

struct ConservedSeries {
    std::vector<double> time, l1, l2, linf;
};

struct EulerTrajectory {
    std::vector<EulerState> snapshots; // n_snapshots + 1 entries including t = 0
    ConservedSeries conserved;
};

/// Runs to time T storing evenly spaced snapshots; dt adapts to the CFL limit
/// and lands exactly on snapshot times.
EulerTrajectory run_euler(const ScalarField& omega0, double T, int n_snapshots,
                          double dt_max, double cfl = 0.45);

struct YudovichReport {
    std::vector<double> time;
    std::vector<double> grad_inf; // max |grad u| per snapshot
    double fitted_c0 = 0.0;       // smallest c with c*exp(c t) >= grad_inf on [0,T]
};

YudovichReport yudovich_report(const EulerTrajectory& traj);

/// Pressure reconstruction: solves the free-space Poisson problem for
/// -div(u . grad u), the rhs tapered to the inner half of the box (it decays
/// rapidly there); gauge: zero mean over the gauge mask, or the whole grid.
ScalarField euler_pressure(const EulerState& state, const BoolArray* gauge_mask = nullptr);

} // namespace pflow
