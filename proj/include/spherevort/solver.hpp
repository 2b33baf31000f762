#pragma once

#include <string>
#include <vector>

#include "spherevort/biot_savart.hpp"
#include "spherevort/field.hpp"

namespace spherevort {

// ---------------------------------------------------------------------------
// Configuration and state
// ---------------------------------------------------------------------------

enum class Backtrace { rk2, rk4 };

struct SimulationConfig {
    int n_phi = 64;
    int n_theta = 32;
    double dt = 0.05;
    double t_end = 1.0;
    QuadratureSpec quad;            // velocity quadrature (delta, rule)
    double rotation_omega = 0.0;    // frame rate; 0 = inertial
    Symmetry symmetry = Symmetry::none;
    int diagnostics_every = 1;      // steps between diagnostics rows
    Backtrace backtrace = Backtrace::rk4;
    double cfl_max = 0.5;           // dt * max|u| <= cfl_max * min spacing
    int snapshot_every = 0;         // outer steps between field snapshots; 0 = none
    std::string snapshot_prefix;    // snapshot path prefix; files get _NNNNNN.csv
};

struct DiagnosticsRow {
    double t = 0.0;
    double grad_sup = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double gauss_res = 0.0;
    double sym_res = 0.0;  // pre-enforcement antisymmetry residual
};

struct SimulationState {
    double time = 0.0;
    VorticityField field;
    std::vector<DiagnosticsRow> diagnostics;
    long long steps_taken = 0;
    double last_sym_residual = 0.0;  // pre-enforcement residual of the latest step
};

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

// One outer step of size config.dt (internally subdivided to honor the CFL
// cap): velocity frozen from the current field, characteristics traced
// backward in Cartesian coordinates, foot values interpolated with the
// clamped bicubic rule, then re-antisymmetrized when symmetry is declared.
SimulationState step(const SimulationState& state, const SimulationConfig& config);

// Same advection applied to the absolute vorticity with the rigid correction
// -Omega e3 x applied on top of the induced velocity. Requires
// config.rotation_omega != 0 semantics; with Omega = 0 it reduces to step.
SimulationState rotating_step(const SimulationState& state, const SimulationConfig& config);

// Integrates to config.t_end, recording diagnostics every
// config.diagnostics_every outer steps (always at t = 0 and t_end).
SimulationState run(const SimulationConfig& config, const VorticityField& initial);

// ---------------------------------------------------------------------------
// Rotating-frame machinery
// ---------------------------------------------------------------------------

// zeta = omega + 2 Omega x3 at nodes; applying the opposite rate undoes it up
// to one rounding per node.
VorticityField absolute_vorticity(const VorticityField& field, double omega_rate);

struct ConjugacyReport {
    std::vector<double> times;
    std::vector<double> rel_discrepancy;   // |zeta_rot - zeta_inertial(rotated)| / sup|zeta|
    std::vector<double> grad_norm_diff;    // | |grad zeta_rot| - |grad zeta| | at samples
    double max_rel_discrepancy = 0.0;
    double max_grad_norm_diff = 0.0;
};

// Twin runs from the same absolute vorticity: the inertial equation and the
// rotating one; compares the rotating solution against the rotated inertial
// solution at sample times.
ConjugacyReport conjugacy_check(const VorticityField& initial_zeta, double omega_rate,
                                double t_end, const SimulationConfig& config);

// Diagnostics CSV (t,grad_sup,l1,l2,linf,gauss_res,sym_res), %.17g cells.
void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path);

}  // namespace spherevort
