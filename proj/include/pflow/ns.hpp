#pragma once

#include "pflow/geometry.hpp"
#include "pflow/grid.hpp"

#include <vector>

namespace pflow {

/// Time-stepping parameters for the penalized Navier-Stokes solver. The
/// scheme treats diffusion and penalization implicitly (both unconditionally
/// stable); only the advective CFL limit is enforced per step. eta <= h^2
/// keeps the penalization error subordinate to the grid error.
struct SimParams {
    double nu = 1e-3;
    double dt = 1e-3;
    double T = 1.0;
    double eta = 0.0; // penalization time scale; 0 picks h^2 at validate()
    int n_snapshots = 50;
    double cfl = 0.5;

    void validate(const Grid& grid);
};

struct NSState {
    double time = 0.0;
    VectorField u;
    ScalarField p;
};

struct LedgerRow {
    double time = 0.0;
    double energy = 0.0;     // (1/2) |u|_L2^2 after the step
    double visc_diss = 0.0;  // nu |grad u|_L2^2 * dt
    double penal_diss = 0.0; // (1/eta) |u|_L2(solid)^2 * dt
    double imbalance = 0.0;  // dE + visc + penal (<= 0 up to tolerance)
};

struct NSTrajectory {
    std::vector<NSState> snapshots;
    std::vector<LedgerRow> ledger; // one row per step
};

/// Per-step dissipation measured at the sub-step where it occurs; each term
/// undercounts the actual energy drop of its implicit sub-step, so the ledger
/// inequality dE + visc + penal <= 0 is a scheme-level identity.
struct StepDissipation {
    double visc = 0.0;  // nu |grad u|^2 dt after the diffusion sub-step
    double penal = 0.0; // (1/eta) |u|^2_solid dt after the penalization sub-step
};

/// One projection-method step: semi-Lagrangian advection, implicit spectral
/// diffusion, implicit pointwise penalization on the solid mask, then exact
/// discrete projection (centered-difference divergence symbol).
NSState ns_step(const NSState& state, const SimParams& params, const RegionMask* mask,
                StepDissipation* dissipation = nullptr);

NSTrajectory run_ns(const VectorField& u0, SimParams params, const RegionMask* mask);

struct LedgerSummary {
    double max_violation_rel = 0.0;       // max imbalance / initial energy
    double max_energy_increase_rel = 0.0; // max per-step energy growth / initial energy
    double final_energy = 0.0;
};
LedgerSummary summarize_ledger(const NSTrajectory& traj);

/// Relative divergence after projection, |div u|_2 / |grad u|_2.
double projection_residual(const VectorField& u);

} // namespace pflow
