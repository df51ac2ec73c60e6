#pragma once

#include "pflow/biot_savart.hpp"
#include "pflow/corrector.hpp"
#include "pflow/euler.hpp"
#include "pflow/geometry.hpp"
#include "pflow/ns.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pflow {

/// Admissibility of a parameter point: eps / d^((1+mu)/2) <= A nu / M0
/// (closed inequality). M0 is the L1-cap-Linf norm of the initial vorticity.
struct CompatibilityRule {
    double A = 0.0;
    double M0 = 0.0;

    bool admissible(double epsilon, double d_epsilon, double mu, double nu) const {
        return epsilon / std::pow(d_epsilon, (1.0 + mu) / 2.0) <=
               A * nu / M0 * (1.0 + 1e-12);
    }
};

double m0_norm(const ScalarField& omega0); // max(|w|_L1, |w|_Linf)

/// One (nu, eps, d, mu) run: paired Euler and penalized Navier-Stokes
/// simulations from matched initial data, the sup-in-time masked L2 error,
/// and the corrector-based energy ledger groups.
struct StudyPoint {
    double nu = 1e-3;
    double epsilon = 0.1;
    double d_epsilon = 0.5;
    double mu = 0.0;
    ObstacleShape shape;
    VorticityBlob omega0;
    Grid grid;            // periodic box; the Euler reference uses the open twin
    double T = 1.0;
    int n_snapshots = 50;
    double dt = 2e-3;
    int cell_nc = 128;
    bool no_obstacles = false; // control runs: plain NS vs Euler on the same box
};

struct DiagnosticEnergy {
    std::vector<double> time;
    std::vector<double> i1_bulk, i1_sleeve, i2, i3, j_visc, h1, h2;
    std::vector<double> w_energy, grad_w_sq;
    double k3_measured = 0.0;     // max |i1_sleeve| / (|grad W|^2 eps d^-(1+mu)/2)
    double coefficient = 0.0;     // 3 nu / 4 + k3 * eps / d^((1+mu)/2)
    bool coefficient_check = false; // coefficient < nu
};

struct StudyRecord {
    double nu = 0.0, epsilon = 0.0, d_epsilon = 0.0, mu = 0.0;
    bool admissible = false;
    bool completed = false;
    std::string note;
    double sup_error = 0.0;     // sup_t |u_ns - u_euler|_L2(fluid)
    double bound_shape = 0.0;   // sqrt(nu) / d^((1+mu)/2)
    double initial_error = 0.0; // |v_eps - u0|_L2(fluid)
    double fitted_bt = 0.0;     // filled by rate_fit
    double wall_seconds = 0.0;
    DiagnosticEnergy ledger;
};

StudyRecord run_point(const StudyPoint& point, const CompatibilityRule& rule);

struct RateFit {
    double fitted_bt = 0.0; // max sup_error / (bound_shape + initial_error)
    double slope = 0.0;     // log sup_error vs log bound_shape
    std::vector<double> residuals;
};

/// Least-squares rate fit across the admissible records of one sweep; errors
/// out on degenerate sweeps (fewer than three points or no spread).
RateFit rate_fit(std::vector<StudyRecord>& records);

struct LedgerReport {
    double k3_measured = 0.0;
    double coefficient = 0.0;
    bool coefficient_check = false;
    double max_identity_gap = 0.0; // |dE/dt + nu|gradW|^2 - (I+J+H)| / scale
};
LedgerReport ledger_report(const StudyRecord& record, double nu);

/// Calibrates the admissibility constant from a pilot run: A = 1 / (4 K3~)
/// with K3~ the measured sleeve coefficient per unit M0.
double calibrate_A(const StudyPoint& pilot);

// --------------------------------------------------------------------------
// Config-driven sweep (CLI entry).
// --------------------------------------------------------------------------
struct StudyConfig {
    VorticityBlob omega0;
    ObstacleShape shape;
    double mu = 0.0;
    std::vector<double> nu_sweep;
    std::string d_rule = "fixed:0.5";
    double T = 1.0;
    int grid_n = 256;
    Vector2d box_origin{-0.56, -0.56};
    double box_side = 1.28;
    std::optional<double> A; // absent -> calibration run first
    double theta = 0.8;      // admissibility margin: eps at theta * boundary
    std::optional<double> m0_target;
    double dt = 2e-3;
    int n_snapshots = 50;
    int cell_nc = 128;
};

StudyConfig study_config_from_json(const std::string& text);

struct StudyOutput {
    double A = 0.0;
    double M0 = 0.0;
    std::vector<StudyRecord> records;
    RateFit fit;
    std::string csv;
    std::string summary_md;
};

StudyOutput run_study(const StudyConfig& config);

std::string records_to_csv(const std::vector<StudyRecord>& records);

} // namespace pflow
